"""Immutable world model: quantities, kind taxonomy, entities, relations, states.

States are plain values. Every edit returns a fresh state; callers may share
states freely across threads. Canonical serialization (and therefore
``state_hash``) is byte-stable for equal states.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Optional, Union

from .errors import (
    ContainmentCycle,
    DimensionMismatch,
    DuplicateKind,
    UnknownEntity,
    UnknownKind,
    UnknownProperty,
)

ROOT_KIND = "thing"

MASS_UNITS = {"g": 1, "kg": 1000}


class Dimension(Enum):
    MASS = "mass"
    COUNT = "count"
    DIMENSIONLESS = "dimensionless"


@dataclass(frozen=True, order=False)
class Quantity:
    """Non-negative integer magnitude in base units (mass base unit: gram)."""

    magnitude: int
    dimension: Dimension = Dimension.MASS

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError(f"quantity magnitude must be >= 0, got {self.magnitude}")

    @classmethod
    def mass(cls, value: int, unit: str) -> "Quantity":
        if unit not in MASS_UNITS:
            raise DimensionMismatch(f"unknown mass unit {unit!r}")
        return cls(value * MASS_UNITS[unit], Dimension.MASS)

    @classmethod
    def count(cls, value: int) -> "Quantity":
        return cls(value, Dimension.COUNT)

    def _check(self, other: "Quantity") -> None:
        if self.dimension is not other.dimension:
            raise DimensionMismatch(
                f"cannot combine {self.dimension.value} with {other.dimension.value}"
            )

    def __add__(self, other: "Quantity") -> "Quantity":
        self._check(other)
        return Quantity(self.magnitude + other.magnitude, self.dimension)

    def __le__(self, other: "Quantity") -> bool:
        self._check(other)
        return self.magnitude <= other.magnitude

    def __lt__(self, other: "Quantity") -> bool:
        self._check(other)
        return self.magnitude < other.magnitude

    def pretty(self) -> str:
        """Human form; masses render in kg when they divide evenly."""
        if self.dimension is Dimension.MASS:
            if self.magnitude and self.magnitude % 1000 == 0:
                return f"{self.magnitude // 1000} kg"
            return f"{self.magnitude} g"
        return str(self.magnitude)

    def to_json(self) -> dict:
        if self.dimension is Dimension.MASS:
            return {"g": self.magnitude}
        if self.dimension is Dimension.COUNT:
            return {"count": self.magnitude}
        return {"value": self.magnitude}


PropValue = Union[Quantity, bool]


@dataclass(frozen=True)
class Kind:
    name: str
    parent: Optional[str]  # None only for the root kind
    defaults: dict = field(default_factory=dict)


class Taxonomy:
    """Single-inheritance kind tree rooted at ``thing``.

    Instances are immutable by convention: mutators return a new Taxonomy.
    """

    def __init__(self, kinds: Optional[dict] = None):
        self._kinds: dict[str, Kind] = kinds if kinds is not None else {ROOT_KIND: Kind(ROOT_KIND, None)}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Taxonomy) and self._kinds == other._kinds

    def has(self, name: str) -> bool:
        return name in self._kinds

    def kind(self, name: str) -> Kind:
        try:
            return self._kinds[name]
        except KeyError:
            raise UnknownKind(f"no kind named {name!r}") from None

    def names(self) -> list[str]:
        return sorted(self._kinds)

    def add_kind(self, name: str, parent: str) -> "Taxonomy":
        if name in self._kinds:
            raise DuplicateKind(f"kind {name!r} already declared")
        if parent not in self._kinds:
            raise UnknownKind(f"no kind named {parent!r}")
        kinds = dict(self._kinds)
        kinds[name] = Kind(name, parent)
        return Taxonomy(kinds)

    def set_default(self, name: str, prop: str, value: PropValue) -> "Taxonomy":
        k = self.kind(name)
        kinds = dict(self._kinds)
        kinds[name] = Kind(k.name, k.parent, {**k.defaults, prop: value})
        return Taxonomy(kinds)

    def is_a(self, name: str, ancestor: str) -> bool:
        k: Optional[str] = name
        while k is not None:
            if k == ancestor:
                return True
            k = self.kind(k).parent
        return False

    def depth(self, name: str) -> int:
        d = 0
        k = self.kind(name)
        while k.parent is not None:
            d += 1
            k = self.kind(k.parent)
        return d

    def default(self, name: str, prop: str) -> Optional[PropValue]:
        """Nearest ancestor default, walking from ``name`` toward the root."""
        k: Optional[str] = name
        while k is not None:
            kind = self.kind(k)
            if prop in kind.defaults:
                return kind.defaults[prop]
            k = kind.parent
        return None

    def resolve_name(self, surface: str) -> str:
        """Map a surface noun to a kind name: exact match, then plural 's' strip."""
        if surface in self._kinds:
            return surface
        if surface.endswith("s") and surface[:-1] in self._kinds:
            return surface[:-1]
        raise UnknownKind(f"no kind named {surface!r}")


class RelKind(Enum):
    IN = "In"
    WORN_BY = "Worn-By"
    AT = "At"


@dataclass(frozen=True)
class Relation:
    kind: RelKind
    subject: int
    object: int
    slot: Optional[str] = None  # Worn-By only
    layer: Optional[int] = None  # Worn-By only

    def sort_key(self) -> tuple:
        return (self.kind.value, self.subject, self.object, self.slot or "", self.layer or 0)


@dataclass(frozen=True)
class EventRecord:
    name: str
    subject: int
    step: int


@dataclass(frozen=True, eq=True)
class Entity:
    id: int
    kind: str
    props: dict = field(default_factory=dict)
    label: Optional[str] = None


@dataclass(frozen=True, eq=True)
class WorldState:
    entities: tuple = ()  # id-ordered Entity tuple
    relations: frozenset = frozenset()
    events: tuple = ()  # ordered EventRecord tuple


def new_world() -> WorldState:
    return WorldState()


def entity(state: WorldState, eid: int) -> Entity:
    for e in state.entities:
        if e.id == eid:
            return e
    raise UnknownEntity(f"no entity with id {eid}")


def has_entity(state: WorldState, eid: int) -> bool:
    return any(e.id == eid for e in state.entities)


def add_entity(
    state: WorldState,
    kind: str,
    props: Optional[dict] = None,
    *,
    taxonomy: Taxonomy,
    label: Optional[str] = None,
) -> tuple[WorldState, int]:
    """Append a new entity; ids are sequential starting at 1."""
    if not taxonomy.has(kind):
        raise UnknownKind(f"no kind named {kind!r}")
    eid = state.entities[-1].id + 1 if state.entities else 1
    ent = Entity(eid, kind, dict(props or {}), label)
    return replace(state, entities=state.entities + (ent,)), eid


def set_prop(state: WorldState, eid: int, prop: str, value: PropValue) -> WorldState:
    ent = entity(state, eid)
    updated = Entity(ent.id, ent.kind, {**ent.props, prop: value}, ent.label)
    return replace(
        state, entities=tuple(updated if e.id == eid else e for e in state.entities)
    )


def effective_prop(
    state: WorldState, eid: int, prop: str, *, taxonomy: Taxonomy
) -> Optional[PropValue]:
    """Own property if present, else nearest kind-ancestor default."""
    ent = entity(state, eid)
    if prop in ent.props:
        return ent.props[prop]
    return taxonomy.default(ent.kind, prop)


def in_parent(state: WorldState, eid: int) -> Optional[int]:
    for r in state.relations:
        if r.kind is RelKind.IN and r.subject == eid:
            return r.object
    return None


def contains_chain(state: WorldState, inner: int, outer: int) -> bool:
    """True when ``inner`` is (transitively) inside ``outer``."""
    p = in_parent(state, inner)
    while p is not None:
        if p == outer:
            return True
        p = in_parent(state, p)
    return False


def children_in(state: WorldState, container: int) -> list[int]:
    return sorted(r.subject for r in state.relations if r.kind is RelKind.IN and r.object == container)


def worn_by(state: WorldState, garment: int) -> Optional[Relation]:
    for r in state.relations:
        if r.kind is RelKind.WORN_BY and r.subject == garment:
            return r
    return None


def garments_on(state: WorldState, person: int) -> list[Relation]:
    return sorted(
        (r for r in state.relations if r.kind is RelKind.WORN_BY and r.object == person),
        key=Relation.sort_key,
    )


def detach(state: WorldState, eid: int) -> WorldState:
    """Remove any In / Worn-By relation where ``eid`` is the subject."""
    kept = frozenset(
        r
        for r in state.relations
        if not (r.kind in (RelKind.IN, RelKind.WORN_BY) and r.subject == eid)
    )
    return replace(state, relations=kept)


def place_in(state: WorldState, patient: int, target: int) -> WorldState:
    """Move ``patient`` into ``target``; rejects self-containment and cycles."""
    entity(state, patient)
    entity(state, target)
    if patient == target or contains_chain(state, target, patient):
        raise ContainmentCycle(f"placing {patient} in {target} would create a cycle")
    state = detach(state, patient)
    return replace(
        state, relations=state.relations | {Relation(RelKind.IN, patient, target)}
    )


def wear(state: WorldState, garment: int, person: int, slot: str, layer: int) -> WorldState:
    entity(state, garment)
    entity(state, person)
    state = detach(state, garment)
    return replace(
        state,
        relations=state.relations | {Relation(RelKind.WORN_BY, garment, person, slot, layer)},
    )


def record_event(state: WorldState, name: str, subject: int, step: int) -> WorldState:
    return replace(state, events=state.events + (EventRecord(name, subject, step),))


def effective_weight(state: WorldState, eid: int, prop: str = "weight", *, taxonomy: Taxonomy) -> Quantity:
    """Own (or inherited) mass plus the recursive mass of In-contents.

    This is the "weight of a container" used by capacity guards: tare weight
    plus everything inside, so nesting a loaded box inside a bag counts the
    box and its contents.
    """
    own = effective_prop(state, eid, prop, taxonomy=taxonomy)
    if own is None:
        own = Quantity(0, Dimension.MASS)
    if not isinstance(own, Quantity):
        raise DimensionMismatch(f"property {prop!r} of entity {eid} is not a quantity")
    total = own
    for child in children_in(state, eid):
        total = total + effective_weight(state, child, prop, taxonomy=taxonomy)
    return total


def total_quantity(
    state: WorldState, container: int, prop: str, *, taxonomy: Taxonomy, registry: Optional[dict] = None
) -> Quantity:
    """Sum a property over the direct In-children of ``container``.

    Mass-valued properties use the recursive effective weight of each child;
    other quantities sum the child's own/inherited value.
    """
    entity(state, container)
    if registry is not None and prop not in registry:
        raise UnknownProperty(f"no property named {prop!r}")
    dim = registry.get(prop) if registry else Dimension.MASS
    if dim is None:
        dim = Dimension.MASS
    total = Quantity(0, dim)
    for child in children_in(state, container):
        if dim is Dimension.MASS:
            total = total + effective_weight(state, child, prop, taxonomy=taxonomy)
        else:
            value = effective_prop(state, child, prop, taxonomy=taxonomy)
            if isinstance(value, Quantity):
                total = total + value
    return total


def _prop_json(value: PropValue) -> Any:
    if isinstance(value, Quantity):
        return value.to_json()
    return value


def to_canonical_dict(state: WorldState) -> dict:
    return {
        "entities": [
            {
                "id": e.id,
                "kind": e.kind,
                "label": e.label,
                "props": {k: _prop_json(v) for k, v in sorted(e.props.items())},
            }
            for e in state.entities
        ],
        "relations": [
            {
                "kind": r.kind.value,
                "subject": r.subject,
                "object": r.object,
                **({"slot": r.slot, "layer": r.layer} if r.kind is RelKind.WORN_BY else {}),
            }
            for r in sorted(state.relations, key=Relation.sort_key)
        ],
        "events": [
            {"name": ev.name, "subject": ev.subject, "step": ev.step} for ev in state.events
        ],
    }


def canonical_json(state: WorldState) -> str:
    """Byte-stable serialization: sorted keys, sorted relations, compact separators."""
    return json.dumps(to_canonical_dict(state), sort_keys=True, separators=(",", ":"))


def state_hash(state: WorldState) -> str:
    return hashlib.sha256(canonical_json(state).encode("utf-8")).hexdigest()
