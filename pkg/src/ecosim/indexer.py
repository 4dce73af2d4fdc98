"""Indexicalization: building and extending world states from fact statements
and resolving referent noun phrases against the discourse so far."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from . import world
from .emulator import Emulator
from .errors import AmbiguousReferent, DimensionMismatch, EcosimError, NoReferent
from .statements import (
    DET_CARD,
    DET_ID,
    DET_PRON,
    Existence,
    NounPhrase,
    PropertyAssign,
    Statement,
)
from .world import WorldState

PERSON_KIND = "person"


@dataclass(frozen=True)
class Mention:
    eid: int
    at: int  # discourse clock value
    creation: bool


@dataclass(frozen=True)
class DiscourseContext:
    """Recency bookkeeping for referent resolution. Pure value."""

    mentions: tuple = ()
    it_binding: Optional[int] = None
    person_binding: Optional[int] = None
    clock: int = 0

    def tick(self) -> "DiscourseContext":
        return replace(self, clock=self.clock + 1)

    def note(self, state: WorldState, eid: int, creation: bool = False) -> "DiscourseContext":
        ent = world.entity(state, eid)
        ctx = replace(self, mentions=self.mentions + (Mention(eid, self.clock, creation),))
        if ent.kind == PERSON_KIND:
            return replace(ctx, person_binding=eid)
        return replace(ctx, it_binding=eid)

    def last_reference(self, eid: int) -> Optional[int]:
        """Clock of the most recent non-creation mention, if any."""
        best = None
        for m in self.mentions:
            if m.eid == eid and not m.creation:
                best = m.at if best is None else max(best, m.at)
        return best

    def last_mention(self, eid: int) -> Optional[int]:
        best = None
        for m in self.mentions:
            if m.eid == eid:
                best = m.at if best is None else max(best, m.at)
        return best


def _label_words(ent: world.Entity) -> set:
    return set((ent.label or ent.kind).split())


def candidates_for(np: NounPhrase, state: WorldState, *, em: Emulator) -> list[world.Entity]:
    kind = em.taxonomy.resolve_name(np.noun)
    return [
        e
        for e in state.entities
        if em.taxonomy.is_a(e.kind, kind) and set(np.adjectives) <= _label_words(e)
    ]


def resolve_referent(np: NounPhrase, state: WorldState, ctx: DiscourseContext,
                     *, em: Emulator) -> int:
    """Resolve a definite, pronominal, or direct noun phrase to an entity id.

    Definite phrases pick the unique candidate, or the uniquely most recently
    referenced one; remaining ties are an error, never a guess.
    """
    if np.det == DET_PRON:
        if np.pronoun in ("he", "she"):
            if ctx.person_binding is not None and world.has_entity(state, ctx.person_binding):
                return ctx.person_binding
            people = [e for e in state.entities if e.kind == PERSON_KIND]
            if len(people) == 1:
                return people[0].id
            raise NoReferent(f"no one for {np.pronoun!r} to refer to")
        if ctx.it_binding is not None and world.has_entity(state, ctx.it_binding):
            return ctx.it_binding
        raise NoReferent("nothing for 'it' to refer to")
    if np.det == DET_ID:
        ent = world.entity(state, np.entity_id)
        kind = em.taxonomy.resolve_name(np.noun)
        if not em.taxonomy.is_a(ent.kind, kind):
            raise NoReferent(f"entity {np.entity_id} is not a {kind}")
        return ent.id
    cands = candidates_for(np, state, em=em)
    if not cands:
        raise NoReferent(f"there is no {' '.join(np.adjectives + (np.noun,))}")
    if len(cands) == 1:
        return cands[0].id
    referenced = [(ctx.last_reference(e.id), e.id) for e in cands]
    times = [t for t, _ in referenced if t is not None]
    if times:
        latest = max(times)
        winners = [eid for t, eid in referenced if t == latest]
        if len(winners) == 1:
            return winners[0]
    raise AmbiguousReferent(
        f"{len(cands)} candidates match {' '.join(np.adjectives + (np.noun,))!r}"
    )


def resolve_indefinite(np: NounPhrase, state: WorldState, ctx: DiscourseContext,
                       *, em: Emulator, exclude: frozenset = frozenset(),
                       prefer=None) -> int:
    """Pick an entity for an indefinite command argument ("put a watermelon ...").

    Preference order: not excluded, satisfying ``prefer`` (e.g. not already
    placed where the command would put it), most recently mentioned, lowest id.
    """
    cands = [e for e in candidates_for(np, state, em=em) if e.id not in exclude]
    if not cands:
        raise NoReferent(f"there is no available {' '.join(np.adjectives + (np.noun,))}")
    if prefer is not None:
        preferred = [e for e in cands if prefer(e)]
        cands = preferred or cands

    def rank(e: world.Entity) -> tuple:
        at = ctx.last_mention(e.id)
        return (-(at if at is not None else -1), e.id)

    return min(cands, key=rank).id


def ensure_person(state: WorldState, ctx: DiscourseContext, *, em: Emulator
                  ) -> tuple[WorldState, DiscourseContext, int]:
    """Bind a person pronoun, instantiating the built-in person on first use."""
    if ctx.person_binding is not None and world.has_entity(state, ctx.person_binding):
        return state, ctx, ctx.person_binding
    people = [e for e in state.entities if e.kind == PERSON_KIND]
    if len(people) == 1:
        return state, replace(ctx, person_binding=people[0].id), people[0].id
    if people:
        raise AmbiguousReferent("several people could be meant")
    state, eid = world.add_entity(state, PERSON_KIND, taxonomy=em.taxonomy, label=PERSON_KIND)
    return state, ctx.note(state, eid, creation=True), eid


def index_fact(stmt: Statement, state: WorldState, ctx: DiscourseContext,
               *, em: Emulator) -> tuple[WorldState, DiscourseContext]:
    """Fold one fact into the state: existence creates entities, specific
    property assignment writes an own-property override."""
    ctx = ctx.tick()
    if isinstance(stmt, Existence):
        np = stmt.np
        n = np.count if np.det == DET_CARD else 1
        kind = em.taxonomy.resolve_name(np.noun)
        label = " ".join(np.adjectives + (kind,))
        for _ in range(n):
            state, eid = world.add_entity(state, kind, taxonomy=em.taxonomy, label=label)
            ctx = ctx.note(state, eid, creation=True)
        return state, ctx
    if isinstance(stmt, PropertyAssign):
        if stmt.subject.is_generic():
            raise TypeError("generic property assignments are eco statements")
        eid = resolve_referent(stmt.subject, state, ctx, em=em)
        declared = em.properties.get(stmt.prop)
        if declared is not None and declared is not stmt.value.dimension:
            raise DimensionMismatch(
                f"property {stmt.prop!r} holds {declared.value}, not {stmt.value.dimension.value}"
            )
        state = world.set_prop(state, eid, stmt.prop, stmt.value)
        return state, ctx.note(state, eid)
    raise TypeError(f"not a fact statement: {stmt!r}")


def build_initial_state(stmts, *, em: Emulator) -> tuple[WorldState, DiscourseContext]:
    """Left-fold of index_fact over an empty world; aborts on the first
    failing statement, reporting its position."""
    state, ctx = world.new_world(), DiscourseContext()
    for i, stmt in enumerate(stmts):
        try:
            state, ctx = index_fact(stmt, state, ctx, em=em)
        except EcosimError as err:
            raise type(err)(f"statement {i}: {err}") from err
    return state, ctx
