"""Tokenizer and recursive-descent parser for the controlled-English DSL.

The grammar is documented in docs/grammar.md. The parser is total: any input
either yields one Statement or raises ParseError with the span of the first
offending token. Content slots (kind/property/verb names, adjectives) are
open at parse time; they are resolved against the taxonomy later.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from .errors import IllegalCharacter, ParseError
from .statements import (
    DET_ALL,
    DET_BARE,
    DET_CARD,
    DET_DEF,
    DET_ID,
    DET_INDEF,
    DET_PRON,
    DET_THIS,
    AffordanceDecl,
    CanQuery,
    Command,
    DefaultDecl,
    Existence,
    FlagQuery,
    GoalSpec,
    HoldFrame,
    InAtom,
    InQuery,
    KindDecl,
    Modality,
    ContainsAtom,
    FlagAtom,
    NounPhrase,
    PortableFrame,
    PropertyAssign,
    PropertyDecl,
    SimpleCommand,
    Statement,
    TotalAtom,
    ValueQuery,
    VerbFrame,
    WearFrame,
    WhatIfQuery,
    WornAtom,
    WornQuery,
)
from .world import MASS_UNITS, Quantity

WORD_CHARS = set("abcdefghijklmnopqrstuvwxyz")
PUNCT_CHARS = set(".?;:,")

PRONOUNS = ("he", "she", "it")
ARTICLES = ("a", "an")
IMPERATIVE_VERBS = ("put", "take", "drop", "wear")

# narrative (3rd person / past) verb forms, mapped to base verbs
NARRATIVE_FORMS = {
    "put": "put",
    "puts": "put",
    "takes": "take",
    "took": "take",
    "drops": "drop",
    "dropped": "drop",
    "wears": "wear",
    "wore": "wear",
}

PARTICIPLES = {"worn": "wear", "taken": "take", "dropped": "drop"}

NUMBER_WORDS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12,
    "twenty": 20,
}


@dataclass(frozen=True)
class Token:
    kind: str  # word | num | unit | punct | eof
    value: object
    start: int  # byte offsets into the utf-8 encoding
    end: int


def tokenize(text: str) -> list[Token]:
    """Lowercased word tokens, numbers with attached units, punctuation.

    '#' starts a comment running to end of line.
    """
    toks: list[Token] = []
    pos = 0  # byte offset
    i = 0
    n = len(text)

    def advance(chunk: str) -> int:
        return len(chunk.encode("utf-8"))

    while i < n:
        ch = text[i]
        if ch == "#":
            while i < n and text[i] != "\n":
                pos += advance(text[i])
                i += 1
            continue
        if ch.isspace():
            pos += advance(ch)
            i += 1
            continue
        low = ch.lower()
        if low in WORD_CHARS:
            start = pos
            j = i
            while j < n and (
                text[j].lower() in WORD_CHARS
                or (text[j] == "-" and j + 1 < n and text[j + 1].lower() in WORD_CHARS)
            ):
                j += 1
            raw = text[i:j]
            word = raw.lower()
            end = start + advance(raw)
            if toks and toks[-1].kind == "num" and word in MASS_UNITS:
                toks.append(Token("unit", word, start, end))
            else:
                toks.append(Token("word", word, start, end))
            i = j
            pos = end
            continue
        if ch in "0123456789":
            start = pos
            j = i
            while j < n and text[j] in "0123456789":
                j += 1
            value = int(text[i:j])
            end = start + (j - i)
            toks.append(Token("num", value, start, end))
            i = j
            pos = end
            continue
        if ch in PUNCT_CHARS:
            toks.append(Token("punct", ch, pos, pos + 1))
            pos += 1
            i += 1
            continue
        raise IllegalCharacter(f"illegal character {ch!r}", (pos, pos + advance(ch)))
    return toks


def _strip_gerund(word: str) -> Optional[str]:
    if not word.endswith("ing") or len(word) <= 4:
        return None
    stem = word[:-3]
    # undouble the final consonant ("popping" -> "pop"), but not -ll/-ss
    # ("falling" -> "fall", "passing" -> "pass")
    if (len(stem) >= 3 and stem[-1] == stem[-2]
            and stem[-1] not in "aeiouls"):
        stem = stem[:-1]
    return stem


class _Parser:
    def __init__(self, toks: list[Token], length: int):
        self.toks = toks
        self.i = 0
        self._eof = Token("eof", None, length, length)

    # -- stream helpers ------------------------------------------------

    def cur(self) -> Token:
        return self.toks[self.i] if self.i < len(self.toks) else self._eof

    def peek(self, k: int = 1) -> Token:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else self._eof

    def at_word(self, *values: str) -> bool:
        t = self.cur()
        return t.kind == "word" and t.value in values

    def eat_word(self, *values: str) -> Optional[str]:
        if self.at_word(*values):
            t = self.cur()
            self.i += 1
            return t.value  # type: ignore[return-value]
        return None

    def fail(self, message: str, expected: frozenset = frozenset()):
        t = self.cur()
        raise ParseError(message, (t.start, t.end), expected)

    def expect_word(self, *values: str) -> str:
        got = self.eat_word(*values)
        if got is None:
            self.fail("unexpected token", frozenset(values))
        return got

    def expect_punct(self, ch: str) -> None:
        t = self.cur()
        if t.kind != "punct" or t.value != ch:
            self.fail("unexpected token", frozenset({ch}))
        self.i += 1

    def any_word(self, what: str = "a word") -> str:
        t = self.cur()
        if t.kind != "word":
            self.fail(f"expected {what}", frozenset({"<word>"}))
        self.i += 1
        return t.value  # type: ignore[return-value]

    def done(self) -> bool:
        return self.i >= len(self.toks)

    # -- small vocabularies ---------------------------------------------

    def cardinal(self) -> Optional[int]:
        t = self.cur()
        if t.kind == "num":
            self.i += 1
            return t.value  # type: ignore[return-value]
        if t.kind == "word" and t.value in NUMBER_WORDS:
            self.i += 1
            return NUMBER_WORDS[t.value]  # type: ignore[index]
        return None

    def quantity(self) -> Quantity:
        t = self.cur()
        value = self.cardinal()
        if value is None:
            self.fail("expected a number", frozenset({"<number>"}))
        u = self.cur()
        if u.kind == "unit" or (u.kind == "word" and u.value in MASS_UNITS):
            self.i += 1
            return Quantity.mass(value, u.value)  # type: ignore[arg-type]
        self.fail("expected a mass unit", frozenset(MASS_UNITS))

    # -- noun phrases -----------------------------------------------------

    def np_words(self, stops: frozenset, what: str = "a noun") -> list[str]:
        words: list[str] = []
        while True:
            t = self.cur()
            if t.kind != "word" or t.value in stops:
                break
            words.append(t.value)  # type: ignore[arg-type]
            self.i += 1
        if not words:
            self.fail(f"expected {what}", frozenset({"<noun>"}))
        return words

    def parse_np(self, stops: frozenset = frozenset(), plural: bool = False) -> NounPhrase:
        pron = self.eat_word(*PRONOUNS)
        if pron is not None:
            return NounPhrase(det=DET_PRON, pronoun=pron)
        det = DET_BARE
        if self.eat_word(*ARTICLES):
            det = DET_INDEF
        elif self.eat_word("the"):
            det = DET_DEF
        elif self.eat_word("this"):
            det = DET_THIS
        elif self.eat_word("all"):
            det = DET_ALL
        count = None
        if det in (DET_BARE, DET_DEF):
            count = self.cardinal()
        words = self.np_words(stops)
        noun = words[-1]
        adjs = tuple(words[:-1])
        if count is not None:
            return NounPhrase(noun, DET_CARD, adjs, count=count, plural=True)
        if self.cur().kind == "num":  # direct entity reference: "watermelon 2"
            eid = self.cur().value
            self.i += 1
            return NounPhrase(noun, DET_ID, adjs, entity_id=eid)  # type: ignore[arg-type]
        if det == DET_ALL:
            plural = False  # rendering of all-phrases never consults the flag
        return NounPhrase(noun, det, adjs, plural=plural)

    def np_list(self, stops: frozenset) -> list[NounPhrase]:
        nps = [self.parse_np(stops | {"and"})]
        while self.at_word("and") and not self._verb_follows_and():
            self.expect_word("and")
            nps.append(self.parse_np(stops | {"and"}))
        return nps

    def _verb_follows_and(self) -> bool:
        nxt = self.peek()
        return nxt.kind == "word" and (
            nxt.value in NARRATIVE_FORMS or nxt.value in IMPERATIVE_VERBS
        )

    # -- statements ---------------------------------------------------------

    def statement(self) -> Statement:
        start = self.cur()
        if start.kind != "word":
            self.fail("expected a statement", frozenset({"<word>"}))
        w = start.value
        if w in ARTICLES:
            stmt = self.article_lead()
        elif w == "all":
            stmt = self.subject_lead(self.parse_np(frozenset({"are", "can", "cannot", "is"})))
        elif w in ("the", "this"):
            stmt = self.the_lead()
        elif w == "there":
            stmt = self.existence()
        elif w in IMPERATIVE_VERBS:
            stmt = self.command(terminated=True)
        elif w in PRONOUNS:
            stmt = self.command(terminated=True)
        elif w == "does":
            stmt = self.does_query()
        elif w in ("is", "are"):
            stmt = self.is_query()
        elif w == "can":
            stmt = self.can_query()
        elif w == "what":
            stmt = self.what_lead()
        elif w == "goal":
            stmt = self.goal()
        else:
            stmt = self.bare_lead()
        if not self.done():
            self.fail("trailing input after statement")
        return stmt

    def article_lead(self) -> Statement:
        self.expect_word(*ARTICLES)
        words = self.np_words(frozenset({"is", "are", "has", "can", "cannot"}), "a kind name")
        noun, adjs = words[-1], tuple(words[:-1])
        if self.eat_word("is"):
            if self.at_word(*ARTICLES) and self.peek().kind == "word" and self.peek().value == "kind":
                self.expect_word(*ARTICLES)
                self.expect_word("kind")
                self.expect_word("of")
                parent = self.any_word("a kind name")
                self.expect_punct(".")
                return KindDecl(noun, parent)
            return self.copula_frame(NounPhrase(noun, DET_INDEF, adjs))
        if self.eat_word("has"):
            self.expect_word(*ARTICLES)
            prop = self.any_word("a property name")
            self.expect_punct(".")
            return PropertyDecl(noun, prop)
        subject = NounPhrase(noun, DET_INDEF, adjs)
        return self.modal_frame(subject)

    def subject_lead(self, subject: NounPhrase) -> Statement:
        if self.at_word("is", "are"):
            if subject.det in (DET_ALL, DET_BARE) and self.peek().kind == "word" \
                    and self.peek().value == "a" and self.peek(2).value == "kind":
                self.expect_word("is", "are")
                self.expect_word("a")
                self.expect_word("kind")
                self.expect_word("of")
                parent = self.any_word("a kind name")
                self.expect_punct(".")
                return KindDecl(subject.noun, parent, plural_style=True)
            self.expect_word("is", "are")
            return self.copula_frame(subject)
        return self.modal_frame(subject)

    def copula_frame(self, subject: NounPhrase) -> Statement:
        # copula already consumed: "... is/are [not] portable."
        modality = Modality.CANNOT if self.eat_word("not") else Modality.CAN
        self.expect_word("portable")
        self.expect_punct(".")
        return AffordanceDecl(modality, subject, PortableFrame())

    def modal_frame(self, subject: NounPhrase) -> Statement:
        modal = self.expect_word("can", "cannot")
        modality = Modality.CAN if modal == "can" else Modality.CANNOT
        if self.eat_word("hold"):
            self.expect_word("up")
            self.expect_word("to")
            limit = self.quantity()
            self.expect_word("before")
            g = self.any_word("an event gerund")
            event = _strip_gerund(g)
            if event is None:
                self.fail("expected an '-ing' event name", frozenset({"<gerund>"}))
            self.expect_punct(".")
            return AffordanceDecl(modality, subject, HoldFrame(limit, event))
        if self.eat_word("be"):
            participle = self.any_word("a past participle")
            if participle == "taken":
                self.expect_punct(".")
                return AffordanceDecl(modality, subject, PortableFrame())
            if participle == "worn" and self.at_word("on"):
                self.expect_word("on")
                self.expect_word("the")
                slot = self.any_word("a body slot")
                self.expect_word("at")
                self.expect_word("layer")
                layer = self.cardinal()
                if layer is None:
                    self.fail("expected a layer number", frozenset({"<number>"}))
                self.expect_punct(".")
                return AffordanceDecl(modality, subject, WearFrame(slot, layer))
            verb = PARTICIPLES.get(participle)
            if verb is None:
                verb = participle[:-2] if participle.endswith("ed") else participle
            self.expect_punct(".")
            return AffordanceDecl(modality, subject, VerbFrame(verb, passive=True))
        verb = self.any_word("a verb")
        patient = None
        if self.cur().kind == "word":
            patient = self.parse_np()
        self.expect_punct(".")
        return AffordanceDecl(modality, subject, VerbFrame(verb, patient))

    def the_lead(self) -> Statement:
        det = self.expect_word("the", "this")
        words = self.np_words(frozenset({"of", "is", "can", "cannot"}))
        if self.at_word("of"):
            if len(words) != 1:
                self.fail("expected a single property name before 'of'")
            prop = words[0]
            self.expect_word("of")
            subject = self.parse_np(frozenset({"is"}))
            self.expect_word("is")
            value = self.quantity()
            self.expect_punct(".")
            if subject.is_generic():
                return DefaultDecl(subject.noun, prop, value)
            return PropertyAssign(prop, subject, value)
        subject = NounPhrase(words[-1], DET_THIS if det == "this" else DET_DEF, tuple(words[:-1]))
        return self.modal_frame(subject)

    def existence(self) -> Statement:
        self.expect_word("there")
        copula = self.expect_word("is", "are")
        if copula == "is":
            self.expect_word(*ARTICLES)
            words = self.np_words(frozenset())
            self.expect_punct(".")
            return Existence(NounPhrase(words[-1], DET_INDEF, tuple(words[:-1])))
        count = self.cardinal()
        words = self.np_words(frozenset())
        self.expect_punct(".")
        if count is not None:
            return Existence(NounPhrase(words[-1], DET_CARD, tuple(words[:-1]), count=count, plural=True))
        return Existence(NounPhrase(words[-1], DET_BARE, tuple(words[:-1]), plural=True))

    # -- commands -----------------------------------------------------------

    def command(self, terminated: bool) -> Command:
        clauses = list(self.command_clauses())
        if terminated:
            self.expect_punct(".")
        return Command(tuple(clauses))

    def command_clauses(self) -> list[SimpleCommand]:
        agent = None
        pron = self.eat_word(*PRONOUNS)
        if pron is not None:
            agent = NounPhrase(det=DET_PRON, pronoun=pron)
            clauses = self.narrative_clauses(agent)
        else:
            clauses = self.imperative_clauses()
        return clauses

    def imperative_clauses(self) -> list[SimpleCommand]:
        clauses: list[SimpleCommand] = []
        while True:
            verb = self.any_word("a verb")
            clauses.extend(self.verb_phrase(verb, agent=None))
            if self.at_word("and") and self._verb_follows_and():
                self.expect_word("and")
                continue
            return clauses

    def narrative_clauses(self, agent: NounPhrase) -> list[SimpleCommand]:
        clauses: list[SimpleCommand] = []
        while True:
            form = self.any_word("a verb")
            verb = NARRATIVE_FORMS.get(form)
            if verb is None:
                verb = form[:-1] if form.endswith("s") else form
            clauses.extend(self.verb_phrase(verb, agent=agent))
            if self.at_word("and") and self._verb_follows_and():
                self.expect_word("and")
                continue
            return clauses

    def verb_phrase(self, verb: str, agent: Optional[NounPhrase]) -> list[SimpleCommand]:
        if verb == "put":
            if self.eat_word("on"):
                return [SimpleCommand("wear", np, agent=agent) for np in self.np_list(frozenset())]
            patients = self.np_list(frozenset({"in"}))
            self.expect_word("in")
            target = self.parse_np()
            return [SimpleCommand("put-in", np, target, agent) for np in patients]
        if verb == "wear":
            return [SimpleCommand("wear", np, agent=agent) for np in self.np_list(frozenset())]
        patients = self.np_list(frozenset({"in"}))
        if self.at_word("in"):
            self.expect_word("in")
            target = self.parse_np()
            return [SimpleCommand(verb, np, target, agent) for np in patients]
        return [SimpleCommand(verb, np, agent=agent) for np in patients]

    # -- queries --------------------------------------------------------------

    _QUERY_DETS = {"the": DET_DEF, "this": DET_THIS, "a": DET_INDEF, "an": DET_INDEF}

    def does_query(self) -> Statement:
        self.expect_word("does")
        pron = self.eat_word(*PRONOUNS)
        if pron is not None:
            np = NounPhrase(det=DET_PRON, pronoun=pron)
            flag = self.any_word("a verb")
            self.expect_punct("?")
            return FlagQuery(np, flag)
        det = self.expect_word(*self._QUERY_DETS)
        words = self.np_words(frozenset())
        if len(words) < 2:
            self.fail("expected a noun and a verb")
        np = NounPhrase(words[-2], self._QUERY_DETS[det], tuple(words[:-2]))
        self.expect_punct("?")
        return FlagQuery(np, words[-1])

    def is_query(self) -> Statement:
        copula = self.expect_word("is", "are")
        plural = copula == "are"
        pron = self.eat_word(*PRONOUNS)
        if pron is not None:
            np = NounPhrase(det=DET_PRON, pronoun=pron)
            if self.eat_word("in"):
                container = self.parse_np()
                self.expect_punct("?")
                return InQuery(np, container)
            predicate = self.any_word("a predicate")
            self.expect_punct("?")
            if predicate == "worn":
                return WornQuery(np)
            return FlagQuery(np, predicate)
        np = self.parse_np(frozenset({"in", "worn"}))
        if self.eat_word("in"):
            container = self.parse_np()
            self.expect_punct("?")
            return InQuery(np, container)
        if self.eat_word("worn"):
            self.expect_punct("?")
            return WornQuery(dataclasses.replace(np, plural=plural))
        if self.cur().kind == "word":
            flag = self.any_word("a flag adjective")
            self.expect_punct("?")
            return FlagQuery(np, flag)
        # the flag was absorbed as the phrase's final word: "is the bag burst?"
        if not np.adjectives:
            self.fail("expected a noun and a predicate")
        self.expect_punct("?")
        core = NounPhrase(np.adjectives[-1], np.det, np.adjectives[:-1])
        return FlagQuery(core, np.noun)

    def can_query(self) -> Statement:
        self.expect_word("can")
        agent = self.parse_np(frozenset(NARRATIVE_FORMS) | frozenset(IMPERATIVE_VERBS))
        verb = self.any_word("a verb")
        base = NARRATIVE_FORMS.get(verb, verb)
        clauses = self.verb_phrase(base, agent=agent)
        if len(clauses) != 1:
            self.fail("expected a single action in a can-query")
        self.expect_punct("?")
        return CanQuery(clauses[0])

    def what_lead(self) -> Statement:
        self.expect_word("what")
        if self.eat_word("is"):
            self.expect_word("the")
            if self.eat_word("total"):
                prop = self.any_word("a property name")
                self.expect_word("in")
                np = self.parse_np()
                self.expect_punct("?")
                return ValueQuery(prop, np, total=True)
            prop = self.any_word("a property name")
            self.expect_word("of")
            np = self.parse_np()
            self.expect_punct("?")
            return ValueQuery(prop, np, total=False)
        self.expect_word("if")
        commands = [Command(tuple(self.command_clauses()))]
        while True:
            t = self.cur()
            if t.kind == "punct" and t.value == ";":
                self.i += 1
                commands.append(Command(tuple(self.command_clauses())))
                continue
            break
        self.expect_punct("?")
        inner = self.statement_as_query()
        return WhatIfQuery(tuple(commands), inner)

    def statement_as_query(self) -> Statement:
        t = self.cur()
        if t.kind == "word" and t.value == "does":
            return self.does_query()
        if t.kind == "word" and t.value in ("is", "are"):
            return self.is_query()
        if t.kind == "word" and t.value == "can":
            return self.can_query()
        if t.kind == "word" and t.value == "what":
            q = self.what_lead()
            if isinstance(q, ValueQuery):
                return q
            self.fail("nested what-if queries are not allowed")
        self.fail("expected a query", frozenset({"does", "is", "are", "can", "what"}))

    # -- goals ------------------------------------------------------------------

    def goal(self) -> Statement:
        self.expect_word("goal")
        self.expect_punct(":")
        atoms = [self.goal_atom()]
        while self.eat_word("and"):
            atoms.append(self.goal_atom())
        self.expect_punct(".")
        return GoalSpec(tuple(atoms))

    def goal_atom(self):
        if self.at_word("the") and self.peek().kind == "word" and self.peek().value == "total":
            self.expect_word("the")
            self.expect_word("total")
            prop = self.any_word("a property name")
            self.expect_word("in")
            container = self.parse_np(frozenset({"is"}))
            self.expect_word("is")
            if self.eat_word("at"):
                bound = self.expect_word("least", "most")
                op = "at-least" if bound == "least" else "at-most"
            elif self.eat_word("exactly"):
                op = "exactly"
            elif self.eat_word("over"):
                op = "over"
            elif self.eat_word("under"):
                op = "under"
            else:
                self.fail("expected a comparison", frozenset({"at", "exactly", "over", "under"}))
            value = self.quantity()
            return TotalAtom(prop, container, op, value)
        np = self.parse_np(frozenset({"is", "contains"}))
        if self.eat_word("contains"):
            count = self.cardinal()
            if count is None:
                if self.eat_word(*ARTICLES):
                    count = 1
                else:
                    self.fail("expected a count", frozenset({"<number>", "a", "an"}))
            words = self.np_words(frozenset({"and"}))
            return ContainsAtom(np, count, NounPhrase(words[-1], DET_BARE, tuple(words[:-1]), plural=True))
        self.expect_word("is")
        if self.eat_word("in"):
            return InAtom(np, self.parse_np(frozenset({"and"})))
        if self.eat_word("worn"):
            return WornAtom(np)
        flag = self.any_word("a flag adjective")
        return FlagAtom(np, flag)

    # -- bare-noun leads -----------------------------------------------------------

    def bare_lead(self) -> Statement:
        j = self.i
        subjectish = False
        while j < len(self.toks):
            t = self.toks[j]
            if t.kind != "word":
                break
            if t.value in ("is", "are", "can", "cannot"):
                subjectish = True
                break
            j += 1
        if subjectish:
            subject = self.parse_np(frozenset({"is", "are", "can", "cannot"}), plural=True)
            return self.subject_lead(subject)
        return self.command(terminated=True)


def parse_utterance(text: str) -> Statement:
    """Parse exactly one utterance into a Statement."""
    length = len(text.encode("utf-8"))
    toks = tokenize(text)
    if not toks:
        raise ParseError("empty utterance", (0, 0))
    return _Parser(toks, length).statement()


def parse_program(text: str) -> list[tuple[int, str, Statement]]:
    """Parse a multi-line source: one statement per line, '#' comments,
    blank lines ignored. Returns (line number, line text, statement) triples;
    ParseError gains the 1-based line number via its ``line`` attribute.
    """
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        try:
            out.append((lineno, stripped, parse_utterance(stripped)))
        except ParseError as err:
            err.line = lineno  # type: ignore[attr-defined]
            raise
    return out
