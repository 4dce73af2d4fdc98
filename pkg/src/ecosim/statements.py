"""Statement ASTs for the controlled-English DSL, plus classification and
canonical pretty-printing.

Every statement pretty-prints to text that re-parses to a structurally equal
AST; source spans are carried for diagnostics but excluded from equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .world import Quantity

Span = tuple


def _span_field():
    return field(default=(0, 0), compare=False)


class Modality(Enum):
    CAN = "can"
    CANNOT = "cannot"


class Role(Enum):
    ECO = "Eco"
    FACT = "Fact"
    DO = "Do"
    QUERY = "Query"
    GOAL = "Goal"


# Determiner classes, normalized: "a"/"an" both parse to INDEF.
DET_DEF = "def"
DET_THIS = "this"
DET_INDEF = "indef"
DET_ALL = "all"
DET_BARE = "bare"
DET_CARD = "card"
DET_PRON = "pron"
DET_ID = "id"

VOWELS = "aeiou"


def indef_article(word: str) -> str:
    return "an" if word[:1] in VOWELS else "a"


def pluralize(noun: str) -> str:
    if noun.endswith("s"):
        return noun
    if noun.endswith(("x", "sh", "ch")):
        return noun + "es"
    return noun + "s"


@dataclass(frozen=True)
class NounPhrase:
    noun: str = ""  # surface noun; "" for pure pronouns
    det: str = DET_DEF
    adjectives: tuple = ()
    count: Optional[int] = None  # cardinal determiner
    pronoun: Optional[str] = None  # he | she | it
    plural: bool = False
    entity_id: Optional[int] = None  # "watermelon 2" style direct reference

    def pretty(self) -> str:
        if self.det == DET_PRON:
            return self.pronoun or "it"
        core = " ".join(self.adjectives + (self.noun,))
        if self.det == DET_ID:
            return f"{core} {self.entity_id}"
        if self.det == DET_CARD:
            return f"{self.count} {core}"
        if self.det == DET_ALL:
            return f"all {core}"
        if self.det == DET_BARE:
            return core
        if self.det == DET_THIS:
            return f"this {core}"
        if self.det == DET_INDEF:
            first = (self.adjectives + (self.noun,))[0]
            return f"{indef_article(first)} {core}"
        return f"the {core}"

    def is_generic(self) -> bool:
        return self.det in (DET_ALL, DET_INDEF, DET_BARE) and self.entity_id is None


# --- Eco declarations ---------------------------------------------------


@dataclass(frozen=True)
class KindDecl:
    name: str
    parent: str
    plural_style: bool = field(default=False, compare=False)
    span: Span = _span_field()


@dataclass(frozen=True)
class PropertyDecl:
    kind: str
    prop: str
    span: Span = _span_field()


@dataclass(frozen=True)
class DefaultDecl:
    """Generic property assignment: writes a kind default, not world state."""

    kind: str
    prop: str
    value: Quantity
    span: Span = _span_field()


@dataclass(frozen=True)
class HoldFrame:
    limit: Quantity
    event: str


@dataclass(frozen=True)
class WearFrame:
    slot: str
    layer: int


@dataclass(frozen=True)
class PortableFrame:
    pass


@dataclass(frozen=True)
class VerbFrame:
    verb: str
    patient: Optional[NounPhrase] = None
    passive: bool = False  # passive frames bind the subject as patient


Frame = Union[HoldFrame, WearFrame, PortableFrame, VerbFrame]


@dataclass(frozen=True)
class AffordanceDecl:
    modality: Modality
    subject: NounPhrase
    frame: Frame
    span: Span = _span_field()

    def is_generic(self) -> bool:
        return self.subject.is_generic()


# --- Facts ----------------------------------------------------------------


@dataclass(frozen=True)
class Existence:
    np: NounPhrase
    span: Span = _span_field()


@dataclass(frozen=True)
class PropertyAssign:
    """Specific property assignment on a resolvable referent."""

    prop: str
    subject: NounPhrase
    value: Quantity
    span: Span = _span_field()


# --- Commands ---------------------------------------------------------------


@dataclass(frozen=True)
class SimpleCommand:
    verb: str  # put-in | take | drop | wear | declared verb
    patient: NounPhrase
    target: Optional[NounPhrase] = None
    agent: Optional[NounPhrase] = None


@dataclass(frozen=True)
class Command:
    clauses: tuple  # one or more SimpleCommand, in surface order
    span: Span = _span_field()


# --- Queries ---------------------------------------------------------------


@dataclass(frozen=True)
class FlagQuery:
    np: NounPhrase
    flag: str
    span: Span = _span_field()


@dataclass(frozen=True)
class WornQuery:
    np: NounPhrase
    span: Span = _span_field()


@dataclass(frozen=True)
class InQuery:
    np: NounPhrase
    container: NounPhrase
    span: Span = _span_field()


@dataclass(frozen=True)
class ValueQuery:
    prop: str
    np: NounPhrase
    total: bool = False
    span: Span = _span_field()


@dataclass(frozen=True)
class CanQuery:
    clause: SimpleCommand
    span: Span = _span_field()


@dataclass(frozen=True)
class WhatIfQuery:
    commands: tuple  # Command statements to run on a fork
    inner: "Query"
    span: Span = _span_field()


Query = Union[FlagQuery, WornQuery, InQuery, ValueQuery, CanQuery, WhatIfQuery]


# --- Goals -------------------------------------------------------------------


@dataclass(frozen=True)
class FlagAtom:
    np: NounPhrase
    flag: str


@dataclass(frozen=True)
class InAtom:
    np: NounPhrase
    container: NounPhrase


@dataclass(frozen=True)
class WornAtom:
    np: NounPhrase


@dataclass(frozen=True)
class ContainsAtom:
    container: NounPhrase
    count: int
    kind_np: NounPhrase


@dataclass(frozen=True)
class TotalAtom:
    prop: str
    container: NounPhrase
    op: str  # at-least | at-most | exactly | over | under
    value: Quantity


GoalAtom = Union[FlagAtom, InAtom, WornAtom, ContainsAtom, TotalAtom]


@dataclass(frozen=True)
class GoalSpec:
    atoms: tuple  # conjunction of GoalAtom
    span: Span = _span_field()


Statement = Union[
    KindDecl,
    PropertyDecl,
    DefaultDecl,
    AffordanceDecl,
    Existence,
    PropertyAssign,
    Command,
    FlagQuery,
    WornQuery,
    InQuery,
    ValueQuery,
    CanQuery,
    WhatIfQuery,
    GoalSpec,
]


def classify(stmt: Statement) -> Role:
    """Partition statements into the five execution roles."""
    if isinstance(stmt, (KindDecl, PropertyDecl, DefaultDecl, AffordanceDecl)):
        return Role.ECO
    if isinstance(stmt, (Existence, PropertyAssign)):
        return Role.FACT
    if isinstance(stmt, Command):
        return Role.DO
    if isinstance(stmt, (FlagQuery, WornQuery, InQuery, ValueQuery, CanQuery, WhatIfQuery)):
        return Role.QUERY
    if isinstance(stmt, GoalSpec):
        return Role.GOAL
    raise TypeError(f"not a statement: {stmt!r}")


THIRD_PERSON = {"put-in": "puts", "take": "takes", "drop": "drops", "wear": "wears"}

CONSONANTS = "bcdfghjkmnpqrtvz"  # doubled before -ing (pop -> popping)


def gerund(event: str) -> str:
    if event.endswith("e"):
        return event[:-1] + "ing"
    if (len(event) >= 3 and event[-1] in CONSONANTS
            and event[-2] in VOWELS and event[-3] not in VOWELS):
        return event + event[-1] + "ing"
    return event + "ing"


def _sentence(text: str, mark: str = ".") -> str:
    return text[0].upper() + text[1:] + mark


def _clause_text(clause: SimpleCommand, imperative: bool) -> str:
    verb = clause.verb
    if imperative:
        if verb == "put-in":
            body = f"put {clause.patient.pretty()} in {clause.target.pretty()}"
        elif verb == "wear":
            body = f"wear {clause.patient.pretty()}"
        else:
            body = f"{verb} {clause.patient.pretty()}"
        return body
    v3 = THIRD_PERSON.get(verb, verb + "s")
    if verb == "put-in":
        return f"{clause.agent.pretty()} {v3} {clause.patient.pretty()} in {clause.target.pretty()}"
    return f"{clause.agent.pretty()} {v3} {clause.patient.pretty()}"


def _command_text(stmt: Command) -> str:
    if stmt.clauses[0].agent is not None:
        # shared-agent conjunctions repeat only the verb phrase
        parts = [_clause_text(stmt.clauses[0], imperative=False)]
        for c in stmt.clauses[1:]:
            text = _clause_text(c, imperative=False)
            prefix = f"{c.agent.pretty()} "
            parts.append(text[len(prefix):] if text.startswith(prefix) else text)
        return " and ".join(parts)
    return " and ".join(_clause_text(c, imperative=True) for c in stmt.clauses)


def _atom_text(atom: GoalAtom) -> str:
    if isinstance(atom, FlagAtom):
        return f"{atom.np.pretty()} is {atom.flag}"
    if isinstance(atom, InAtom):
        return f"{atom.np.pretty()} is in {atom.container.pretty()}"
    if isinstance(atom, WornAtom):
        return f"{atom.np.pretty()} is worn"
    if isinstance(atom, ContainsAtom):
        return (
            f"{atom.container.pretty()} contains {atom.count} "
            + " ".join(atom.kind_np.adjectives + (atom.kind_np.noun,))
        )
    ops = {"at-least": "at least", "at-most": "at most", "exactly": "exactly",
           "over": "over", "under": "under"}
    return (
        f"the total {atom.prop} in {atom.container.pretty()} is {ops[atom.op]} {atom.value.pretty()}"
    )


def pretty_print(stmt: Statement) -> str:
    """Canonical surface form; ``parse(pretty_print(s))`` equals ``s``."""
    if isinstance(stmt, KindDecl):
        if stmt.plural_style:
            return _sentence(f"{pluralize(stmt.name)} are a kind of {stmt.parent}")
        return _sentence(f"{indef_article(stmt.name)} {stmt.name} is a kind of {stmt.parent}")
    if isinstance(stmt, PropertyDecl):
        return _sentence(
            f"{indef_article(stmt.kind)} {stmt.kind} has {indef_article(stmt.prop)} {stmt.prop}"
        )
    if isinstance(stmt, DefaultDecl):
        return _sentence(
            f"the {stmt.prop} of {indef_article(stmt.kind)} {stmt.kind} is {stmt.value.pretty()}"
        )
    if isinstance(stmt, AffordanceDecl):
        subj = stmt.subject.pretty()
        copula = "are" if stmt.subject.det in (DET_ALL, DET_BARE) else "is"
        if isinstance(stmt.frame, PortableFrame):
            adverb = "portable" if stmt.modality is Modality.CAN else "not portable"
            return _sentence(f"{subj} {copula} {adverb}")
        modal = stmt.modality.value
        if isinstance(stmt.frame, HoldFrame):
            return _sentence(
                f"{subj} {modal} hold up to {stmt.frame.limit.pretty()} before {gerund(stmt.frame.event)}"
            )
        if isinstance(stmt.frame, WearFrame):
            return _sentence(
                f"{subj} {modal} be worn on the {stmt.frame.slot} at layer {stmt.frame.layer}"
            )
        frame = stmt.frame
        if frame.passive:
            past = {"take": "taken", "wear": "worn"}.get(frame.verb, frame.verb + "ed")
            return _sentence(f"{subj} {modal} be {past}")
        body = f"{subj} {modal} {frame.verb}"
        if frame.patient is not None:
            body += f" {frame.patient.pretty()}"
        return _sentence(body)
    if isinstance(stmt, Existence):
        np = stmt.np
        if np.det == DET_CARD:
            return _sentence(f"there are {np.pretty()}")
        if np.plural:
            return _sentence(f"there are {' '.join(np.adjectives + (np.noun,))}")
        return _sentence(f"there is {np.pretty()}")
    if isinstance(stmt, PropertyAssign):
        return _sentence(f"the {stmt.prop} of {stmt.subject.pretty()} is {stmt.value.pretty()}")
    if isinstance(stmt, Command):
        return _sentence(_command_text(stmt))
    if isinstance(stmt, FlagQuery):
        return _sentence(f"does {stmt.np.pretty()} {stmt.flag}", "?")
    if isinstance(stmt, WornQuery):
        copula = "are" if stmt.np.plural else "is"
        return _sentence(f"{copula} {stmt.np.pretty()} worn", "?")
    if isinstance(stmt, InQuery):
        return _sentence(f"is {stmt.np.pretty()} in {stmt.container.pretty()}", "?")
    if isinstance(stmt, ValueQuery):
        if stmt.total:
            return _sentence(f"what is the total {stmt.prop} in {stmt.np.pretty()}", "?")
        return _sentence(f"what is the {stmt.prop} of {stmt.np.pretty()}", "?")
    if isinstance(stmt, CanQuery):
        c = stmt.clause
        agent = c.agent.pretty() if c.agent else "he"
        if c.verb == "put-in":
            body = f"can {agent} put {c.patient.pretty()} in {c.target.pretty()}"
        else:
            body = f"can {agent} {c.verb} {c.patient.pretty()}"
        return _sentence(body, "?")
    if isinstance(stmt, WhatIfQuery):
        cmds = "; ".join(_command_text(c) for c in stmt.commands)
        return _sentence(f"what if {cmds}", "?") + " " + pretty_print(stmt.inner)
    if isinstance(stmt, GoalSpec):
        return "Goal: " + " and ".join(_atom_text(a) for a in stmt.atoms) + "."
    raise TypeError(f"not a statement: {stmt!r}")
