"""Versioned executable world model: affordance rules and action transitions.

Eco declarations grow the emulator (version +1 per declaration) and never see
world state; applying a regular action reads the emulator and returns only a
new state. That split is enforced by the signatures of ``eco_apply`` and
``apply``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from . import world
from .errors import ActionFailure, DimensionMismatch, DuplicateRuleWarning
from .statements import (
    DET_DEF,
    DET_THIS,
    AffordanceDecl,
    DefaultDecl,
    HoldFrame,
    KindDecl,
    Modality,
    NounPhrase,
    PortableFrame,
    PropertyDecl,
    Statement,
    WearFrame,
    pretty_print,
)
from .world import Dimension, Quantity, Taxonomy, WorldState

BUILTIN_VERBS = ("drop", "put-in", "take", "wear")

WEIGHT_PROP = "weight"  # capacity guards measure this property

PROHIBITED = "prohibited"
NO_AFFORDANCE = "no-affordance"


class Provenance(Enum):
    COMPILED = "Compiled"
    SITUATION = "Situation"


class Scope(Enum):
    SPECIFIC = "Specific"
    GENERIC = "Generic"


@dataclass(frozen=True)
class KindPattern:
    """Matches entities by kind subsumption; definite patterns match only the
    unique label-compatible entity of that kind in the current state."""

    kind: str
    adjectives: tuple = ()
    definite: bool = False


@dataclass(frozen=True)
class GroundedAction:
    verb: str
    patient: int
    target: Optional[int] = None
    agent: Optional[int] = None

    def sort_key(self) -> tuple:
        return (self.verb, self.patient, self.target or 0, self.agent or 0)


@dataclass(frozen=True)
class AffordanceRule:
    id: int
    modality: Modality
    verbs: frozenset
    agent: Optional[KindPattern]
    patient: Optional[KindPattern]
    target: Optional[KindPattern]
    slot: Optional[str] = None  # wear frames
    layer: Optional[int] = None
    limit: Optional[Quantity] = None  # capacity frames
    event: Optional[str] = None  # fired when the limit is crossed
    requires_portable: bool = False
    marks_portable: bool = False
    provenance: Provenance = Provenance.SITUATION
    installed_at: int = 0
    scope: Scope = Scope.GENERIC
    depth: int = 0
    source: str = ""

    def precedence_key(self) -> tuple:
        """Total order: Specific > Generic, deeper kind > shallower,
        Cannot > Can, later installation > earlier; rule id breaks dead ties."""
        return (
            1 if self.scope is Scope.SPECIFIC else 0,
            self.depth,
            1 if self.modality is Modality.CANNOT else 0,
            self.installed_at,
            self.id,
        )

    def signature(self) -> tuple:
        """Structural identity used for duplicate-declaration warnings."""
        return (
            self.modality,
            self.verbs,
            self.agent,
            self.patient,
            self.target,
            self.slot,
            self.layer,
            self.limit,
            self.event,
        )


@dataclass(frozen=True)
class Permit:
    rule_id: int
    event: Optional[str] = None


@dataclass(frozen=True)
class Deny:
    reason: str  # prohibited | no-affordance
    detail: str = ""


@dataclass(frozen=True)
class Emulator:
    version: int = 0
    rules: tuple = ()
    taxonomy: Taxonomy = field(default_factory=Taxonomy)
    properties: dict = field(default_factory=dict)  # name -> Dimension | None
    events: frozenset = frozenset()
    libraries: tuple = ()

    def rule(self, rule_id: int) -> AffordanceRule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(f"no rule with id {rule_id}")

    def all_verbs(self) -> list[str]:
        verbs = set(BUILTIN_VERBS)
        for r in self.rules:
            verbs |= set(r.verbs)
        return sorted(verbs)


def base_emulator() -> Emulator:
    return Emulator()


# --- compilation -------------------------------------------------------------


def _subject_pattern(np: NounPhrase, taxonomy: Taxonomy) -> tuple[KindPattern, Scope]:
    kind = taxonomy.resolve_name(np.noun)
    definite = np.det in (DET_DEF, DET_THIS)
    scope = Scope.SPECIFIC if definite else Scope.GENERIC
    return KindPattern(kind, np.adjectives, definite), scope


def compile_rule(decl: AffordanceDecl, em: Emulator) -> AffordanceRule:
    """Pure translation of an affordance declaration against the taxonomy."""
    subject, scope = _subject_pattern(decl.subject, em.taxonomy)
    rid = len(em.rules) + 1
    installed = em.version + 1
    common = dict(
        id=rid,
        modality=decl.modality,
        installed_at=installed,
        scope=scope,
        depth=em.taxonomy.depth(subject.kind),
        source=pretty_print(decl),
    )
    frame = decl.frame
    if isinstance(frame, HoldFrame):
        if frame.limit.dimension is not Dimension.MASS:
            raise DimensionMismatch("capacity limits must be masses")
        return AffordanceRule(
            verbs=frozenset({"put-in"}),
            agent=None,
            patient=KindPattern(world.ROOT_KIND),
            target=subject,
            limit=frame.limit,
            event=frame.event,
            requires_portable=True,
            **common,
        )
    if isinstance(frame, WearFrame):
        return AffordanceRule(
            verbs=frozenset({"wear"}),
            agent=None,
            patient=subject,
            target=None,
            slot=frame.slot,
            layer=frame.layer,
            requires_portable=True,
            **common,
        )
    if isinstance(frame, PortableFrame):
        return AffordanceRule(
            verbs=frozenset({"take", "drop"}),
            agent=None,
            patient=subject,
            target=None,
            marks_portable=True,
            **common,
        )
    patient = None
    agent = None
    if frame.passive:
        patient = subject
    else:
        agent = subject
        if frame.patient is not None:
            pk = em.taxonomy.resolve_name(frame.patient.noun)
            patient = KindPattern(pk, frame.patient.adjectives)
    return AffordanceRule(
        verbs=frozenset({frame.verb}),
        agent=agent,
        patient=patient,
        target=None,
        **common,
    )


def eco_apply(em: Emulator, stmt: Statement, provenance: Provenance = Provenance.SITUATION) -> Emulator:
    """Absorb one eco statement; bumps the version, leaves states untouched."""
    version = em.version + 1
    if isinstance(stmt, KindDecl):
        parent = em.taxonomy.resolve_name(stmt.parent)
        return replace(em, version=version, taxonomy=em.taxonomy.add_kind(stmt.name, parent))
    if isinstance(stmt, PropertyDecl):
        em.taxonomy.resolve_name(stmt.kind)
        props = dict(em.properties)
        props.setdefault(stmt.prop, None)
        return replace(em, version=version, properties=props)
    if isinstance(stmt, DefaultDecl):
        kind = em.taxonomy.resolve_name(stmt.kind)
        declared = em.properties.get(stmt.prop)
        if declared is not None and declared is not stmt.value.dimension:
            raise DimensionMismatch(
                f"property {stmt.prop!r} holds {declared.value}, not {stmt.value.dimension.value}"
            )
        props = dict(em.properties)
        props[stmt.prop] = stmt.value.dimension
        taxonomy = em.taxonomy.set_default(kind, stmt.prop, stmt.value)
        return replace(em, version=version, properties=props, taxonomy=taxonomy)
    if isinstance(stmt, AffordanceDecl):
        rule = replace(compile_rule(stmt, em), provenance=provenance)
        if any(r.signature() == rule.signature() for r in em.rules):
            warnings.warn(
                f"duplicate affordance declaration: {rule.source}", DuplicateRuleWarning
            )
        events = em.events | {rule.event} if rule.event else em.events
        return replace(em, version=version, rules=em.rules + (rule,), events=events)
    raise TypeError(f"not an eco statement: {stmt!r}")


# --- matching and checking ---------------------------------------------------


def _label_words(ent: world.Entity) -> set:
    return set((ent.label or ent.kind).split())


def _pattern_matches(pat: Optional[KindPattern], eid: Optional[int],
                     em: Emulator, state: WorldState) -> bool:
    if pat is None:
        return True  # unconstrained role
    if eid is None:
        return False
    ent = world.entity(state, eid)
    if not em.taxonomy.is_a(ent.kind, pat.kind):
        return False
    if not set(pat.adjectives) <= _label_words(ent):
        return False
    if pat.definite:
        candidates = [
            e
            for e in state.entities
            if em.taxonomy.is_a(e.kind, pat.kind) and set(pat.adjectives) <= _label_words(e)
        ]
        return len(candidates) == 1 and candidates[0].id == eid
    return True


def is_portable(em: Emulator, state: WorldState, eid: int) -> bool:
    """An entity is portable when the strongest portability rule covering it
    is a Can rule."""
    best = None
    for r in em.rules:
        if r.marks_portable and _pattern_matches(r.patient, eid, em, state):
            if best is None or r.precedence_key() > best.precedence_key():
                best = r
    return best is not None and best.modality is Modality.CAN


def _flagged_event(em: Emulator, state: WorldState, eid: int) -> Optional[str]:
    ent = world.entity(state, eid)
    for name in sorted(em.events):
        value = ent.props.get(name)
        if value is None:
            value = em.taxonomy.default(ent.kind, name)
        if value is True:
            return name
    return None


def _structural_deny(em: Emulator, state: WorldState, act: GroundedAction) -> Optional[Deny]:
    """Verb-shape checks that hold regardless of which rule matches."""
    if act.verb == "put-in":
        if act.target is None:
            return Deny(NO_AFFORDANCE, "put-in needs a container")
        if act.patient == act.target or world.contains_chain(state, act.target, act.patient):
            return Deny(NO_AFFORDANCE, "containment must stay acyclic")
        if world.in_parent(state, act.patient) == act.target:
            return Deny(NO_AFFORDANCE, "it is already in there")
        flag = _flagged_event(em, state, act.target)
        if flag is not None:
            ent = world.entity(state, act.target)
            return Deny(PROHIBITED, f"the {ent.kind} is {flag}")
    elif act.verb == "wear":
        if act.target is not None:
            return Deny(NO_AFFORDANCE, "wear takes no container")
        if act.agent is None:
            return Deny(NO_AFFORDANCE, "nobody is present to wear it")
        if world.worn_by(state, act.patient) is not None:
            return Deny(NO_AFFORDANCE, "it is already worn")
    elif act.verb == "take":
        if act.target is not None:
            return Deny(NO_AFFORDANCE, "take has no container argument")
        if act.agent is not None and (
            act.agent == act.patient or world.contains_chain(state, act.agent, act.patient)
        ):
            return Deny(NO_AFFORDANCE, "carrying must stay acyclic")
    elif act.verb == "drop":
        if act.target is not None:
            return Deny(NO_AFFORDANCE, "drop has no container argument")
        if world.in_parent(state, act.patient) is None and world.worn_by(state, act.patient) is None:
            return Deny(NO_AFFORDANCE, "it is not held, contained, or worn")
    return None


def _rule_guards_ok(rule: AffordanceRule, em: Emulator, state: WorldState,
                    act: GroundedAction) -> Optional[str]:
    """None when all guards pass, else a human-readable failure."""
    if rule.requires_portable and not is_portable(em, state, act.patient):
        kind = world.entity(state, act.patient).kind
        return f"the {kind} is not portable"
    if rule.slot is not None and act.agent is not None:
        for worn in world.garments_on(state, act.agent):
            if worn.slot == rule.slot and worn.layer == rule.layer:
                return f"the {rule.slot} at layer {rule.layer} is already taken"
    return None


def _over_capacity(rule: AffordanceRule, em: Emulator, state: WorldState,
                   act: GroundedAction) -> bool:
    assert rule.limit is not None and act.target is not None
    placed = world.place_in(state, act.patient, act.target)
    load = world.total_quantity(placed, act.target, WEIGHT_PROP, taxonomy=em.taxonomy)
    return not load <= rule.limit


def check_action(em: Emulator, state: WorldState, act: GroundedAction) -> "Permit | Deny":
    """Decide whether an action is afforded; Deny is a value, not an error."""
    for eid in (act.patient, act.target, act.agent):
        if eid is not None:
            world.entity(state, eid)
    denied = _structural_deny(em, state, act)
    if denied is not None:
        return denied
    matching = [
        r
        for r in em.rules
        if act.verb in r.verbs
        and _pattern_matches(r.patient, act.patient, em, state)
        and _pattern_matches(r.target, act.target, em, state)
        and _pattern_matches(r.agent, act.agent, em, state)
    ]
    best = None
    first_failure = None
    for r in sorted(matching, key=AffordanceRule.precedence_key, reverse=True):
        failure = _rule_guards_ok(r, em, state, act)
        if failure is None:
            best = r
            break
        if first_failure is None:
            first_failure = failure
    if best is None:
        return Deny(NO_AFFORDANCE, first_failure or f"nothing affords {act.verb} here")
    if best.modality is Modality.CANNOT:
        return Deny(PROHIBITED, best.source or f"rule {best.id} forbids it")
    if best.limit is not None and _over_capacity(best, em, state, act):
        if best.event is None:
            return Deny(NO_AFFORDANCE, "over capacity")
        return Permit(best.id, best.event)
    return Permit(best.id)


def apply(em: Emulator, state: WorldState, act: GroundedAction,
          step: Optional[int] = None) -> WorldState:
    """Apply one grounded action atomically; raises ActionFailure on Deny.

    Regular actions never modify the emulator.
    """
    verdict = check_action(em, state, act)
    if isinstance(verdict, Deny):
        raise ActionFailure(verdict.reason, verdict.detail)
    rule = em.rule(verdict.rule_id)
    if step is None:
        step = len(state.events)
    if act.verb == "put-in":
        assert act.target is not None
        result = world.place_in(state, act.patient, act.target)
        if verdict.event is not None:
            result = world.set_prop(result, act.target, verdict.event, True)
            parent = world.in_parent(result, act.target)
            for child in world.children_in(result, act.target):
                result = world.detach(result, child)
                if parent is not None:
                    result = world.place_in(result, child, parent)
            result = world.record_event(result, verdict.event, act.target, step)
        return result
    if act.verb == "wear":
        assert act.agent is not None and rule.slot is not None and rule.layer is not None
        return world.wear(state, act.patient, act.agent, rule.slot, rule.layer)
    if act.verb == "take":
        result = world.detach(state, act.patient)
        if act.agent is not None:
            result = world.place_in(result, act.patient, act.agent)
        return result
    if act.verb == "drop":
        return world.detach(state, act.patient)
    return state  # declared verbs are permission-only in v1


def pretty_action(em: Emulator, state: WorldState, act: GroundedAction) -> str:
    """Replayable command text: direct entity references survive re-parsing."""

    def ref(eid: int) -> str:
        return f"{world.entity(state, eid).kind} {eid}"

    if act.verb == "put-in":
        return f"Put {ref(act.patient)} in {ref(act.target)}."
    return f"{act.verb.capitalize()} {ref(act.patient)}."
