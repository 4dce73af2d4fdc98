"""Scenario execution: grounding commands, deriving affordance sets, running
mixed eco/fact/do sequences, and answering queries on live or forked states."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional

from . import world
from .emulator import (
    Deny,
    Emulator,
    GroundedAction,
    Permit,
    apply,
    check_action,
    eco_apply,
)
from .errors import ActionFailure, EcosimError, NoReferent, UnknownProperty
from .indexer import (
    DiscourseContext,
    ensure_person,
    resolve_indefinite,
    resolve_referent,
)
from .statements import (
    DET_CARD,
    DET_DEF,
    DET_ID,
    DET_PRON,
    DET_THIS,
    AffordanceDecl,
    CanQuery,
    Command,
    FlagQuery,
    InQuery,
    NounPhrase,
    Role,
    SimpleCommand,
    Statement,
    ValueQuery,
    WhatIfQuery,
    WornQuery,
    classify,
    pretty_print,
)
from .world import Quantity, WorldState

PERSON_KIND = "person"


@dataclass(frozen=True)
class Answer:
    kind: str  # yes | no | value | blocked
    text: str
    value: Optional[Quantity] = None
    detail: Optional[str] = None

    @classmethod
    def polar(cls, truth: bool, detail: Optional[str] = None) -> "Answer":
        return cls("yes" if truth else "no", "yes" if truth else "no", detail=detail)

    @classmethod
    def of_value(cls, q: Quantity) -> "Answer":
        return cls("value", q.pretty(), q)

    @classmethod
    def blocked(cls, step: int, reason: str) -> "Answer":
        return cls("blocked", f"blocked at step {step}: {reason}")


@dataclass(frozen=True)
class StepRecord:
    index: int
    role: str
    text: str
    emulator_version: int
    state_hash: str
    actions: tuple = ()  # pretty-printed commands actually applied this step
    events: tuple = ()
    failure: Optional[str] = None
    answer: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "step": self.index,
            "role": self.role,
            "text": self.text,
            "emulator_version": self.emulator_version,
            "state_hash": self.state_hash,
            "actions": list(self.actions),
            "events": [
                {"name": e.name, "subject": e.subject, "step": e.step} for e in self.events
            ],
            "failure": self.failure,
            "answer": self.answer,
        }


@dataclass(frozen=True)
class Trace:
    steps: tuple
    final_state: WorldState
    final_emulator: Emulator

    def to_json(self) -> dict:
        return {
            "steps": [s.to_json() for s in self.steps],
            "final_state_hash": world.state_hash(self.final_state),
            "final_emulator_version": self.final_emulator.version,
        }


@dataclass(frozen=True)
class Scenario:
    """An ordered mix of eco, fact, and do steps (plus queries/goals)."""

    statements: tuple

    def roles(self) -> list[Role]:
        return [classify(s) for s in self.statements]


# --- command grounding -------------------------------------------------------


def _bind_agent(clause: SimpleCommand, state: WorldState, ctx: DiscourseContext,
                *, em: Emulator) -> tuple[WorldState, DiscourseContext, Optional[int]]:
    if clause.agent is not None:
        if clause.agent.det == DET_PRON and clause.agent.pronoun in ("he", "she"):
            return ensure_person(state, ctx, em=em)
        eid = resolve_referent(clause.agent, state, ctx, em=em)
        return state, ctx, eid
    if em.taxonomy.has(PERSON_KIND):
        people = [e for e in state.entities if em.taxonomy.is_a(e.kind, PERSON_KIND)]
        if len(people) == 1:
            return state, ctx, people[0].id
    return state, ctx, None


def _prefer_for(verb: str, target: Optional[int], state: WorldState):
    if verb == "put-in" and target is not None:
        return lambda e: world.in_parent(state, e.id) != target
    if verb == "wear":
        return lambda e: world.worn_by(state, e.id) is None
    return None


def ground_clause(clause: SimpleCommand, state: WorldState, ctx: DiscourseContext,
                  *, em: Emulator) -> tuple[WorldState, DiscourseContext, list[GroundedAction]]:
    """Resolve one command clause to grounded actions; cardinal patients
    expand to one action per distinct entity."""
    state, ctx, agent = _bind_agent(clause, state, ctx, em=em)
    target = None
    if clause.target is not None:
        if clause.target.det in (DET_DEF, DET_THIS, DET_ID, DET_PRON):
            target = resolve_referent(clause.target, state, ctx, em=em)
        else:
            target = resolve_indefinite(clause.target, state, ctx, em=em)
    np = clause.patient
    patients: list[int] = []
    if np.det == DET_CARD:
        chosen: set = set()
        for _ in range(np.count if np.count is not None else 1):
            eid = resolve_indefinite(
                np, state, ctx, em=em, exclude=frozenset(chosen),
                prefer=_prefer_for(clause.verb, target, state),
            )
            chosen.add(eid)
            patients.append(eid)
    elif np.det in (DET_DEF, DET_THIS, DET_ID, DET_PRON):
        patients.append(resolve_referent(np, state, ctx, em=em))
    else:  # indefinite and bare phrases pick a suitable entity
        patients.append(
            resolve_indefinite(
                np, state, ctx, em=em, prefer=_prefer_for(clause.verb, target, state)
            )
        )
    for eid in patients:
        ctx = ctx.note(state, eid)
    if target is not None:
        ctx = ctx.note(state, target)
    return state, ctx, [GroundedAction(clause.verb, p, target, agent) for p in patients]


def ground_command(cmd: Command, state: WorldState, ctx: DiscourseContext,
                   *, em: Emulator) -> tuple[WorldState, DiscourseContext, list[GroundedAction]]:
    actions: list[GroundedAction] = []
    for clause in cmd.clauses:
        state, ctx, acts = ground_clause(clause, state, ctx, em=em)
        actions.extend(acts)
    return state, ctx, actions


# --- affordance derivation ---------------------------------------------------


def derive_affordances(em: Emulator, state: WorldState) -> tuple:
    """All grounded actions the emulator permits in this state, in canonical
    (verb, patient, target) order."""
    agent = None
    if em.taxonomy.has(PERSON_KIND):
        people = [e for e in state.entities if em.taxonomy.is_a(e.kind, PERSON_KIND)]
        if len(people) == 1:
            agent = people[0].id
    found = []
    for verb in em.all_verbs():
        for p in state.entities:
            if verb == "put-in":
                for t in state.entities:
                    if t.id == p.id:
                        continue
                    act = GroundedAction(verb, p.id, t.id, agent)
                    if isinstance(check_action(em, state, act), Permit):
                        found.append(act)
            else:
                act = GroundedAction(verb, p.id, None, agent)
                if isinstance(check_action(em, state, act), Permit):
                    found.append(act)
    return tuple(sorted(found, key=GroundedAction.sort_key))


# --- queries -------------------------------------------------------------------


def _resolve(np: NounPhrase, state: WorldState, ctx: Optional[DiscourseContext],
             *, em: Emulator) -> int:
    return resolve_referent(np, state, ctx or DiscourseContext(), em=em)


def _flag_true(em: Emulator, state: WorldState, eid: int, flag: str) -> bool:
    names = [flag]
    if flag.endswith("e"):
        names.append(flag[:-1])  # "explode" asks about the "explod(e)" event flag
    for name in names:
        value = world.effective_prop(state, eid, name, taxonomy=em.taxonomy)
        if value is True:
            return True
    return False


def evaluate_query(em: Emulator, state: WorldState, q: Statement,
                   ctx: Optional[DiscourseContext] = None) -> Answer:
    """Answer a query against a state; what-if queries fork internally."""
    if isinstance(q, FlagQuery):
        eid = _resolve(q.np, state, ctx, em=em)
        return Answer.polar(_flag_true(em, state, eid, q.flag))
    if isinstance(q, WornQuery):
        eid = _resolve(q.np, state, ctx, em=em)
        return Answer.polar(world.worn_by(state, eid) is not None)
    if isinstance(q, InQuery):
        eid = _resolve(q.np, state, ctx, em=em)
        container = _resolve(q.container, state, ctx, em=em)
        return Answer.polar(world.in_parent(state, eid) == container)
    if isinstance(q, ValueQuery):
        eid = _resolve(q.np, state, ctx, em=em)
        if q.total:
            value = world.total_quantity(
                state, eid, q.prop, taxonomy=em.taxonomy, registry=em.properties
            )
            return Answer.of_value(value)
        if q.prop not in em.properties:
            raise UnknownProperty(f"no property named {q.prop!r}")
        if q.prop == "weight":
            return Answer.of_value(world.effective_weight(state, eid, taxonomy=em.taxonomy))
        value = world.effective_prop(state, eid, q.prop, taxonomy=em.taxonomy)
        if not isinstance(value, Quantity):
            raise NoReferent(f"the {q.prop} of entity {eid} is not set")
        return Answer.of_value(value)
    if isinstance(q, CanQuery):
        fork_ctx = ctx or DiscourseContext()
        _, _, acts = ground_clause(q.clause, state, fork_ctx, em=em)
        verdicts = [check_action(em, state, a) for a in acts]
        if all(isinstance(v, Permit) for v in verdicts):
            return Answer.polar(True)
        deny = next(v for v in verdicts if isinstance(v, Deny))
        return Answer.polar(False, detail=f"{deny.reason}: {deny.detail}" if deny.detail else deny.reason)
    if isinstance(q, WhatIfQuery):
        return run_hypothetical(em, state, ctx or DiscourseContext(), q.commands, q.inner)
    raise TypeError(f"not a query: {q!r}")


def run_hypothetical(em: Emulator, state: WorldState, ctx: DiscourseContext,
                     commands, inner: Statement, action_base: int = 0) -> Answer:
    """Run commands on a fork of (state, ctx) and answer the inner query on
    the result; the caller's state is never touched."""
    fork_state, fork_ctx = state, ctx
    step = 0
    for cmd in commands:
        try:
            fork_state, fork_ctx, acts = ground_command(cmd, fork_state, fork_ctx, em=em)
            for act in acts:
                step += 1
                fork_state = apply(em, fork_state, act, step=action_base + step - 1)
        except ActionFailure as err:
            return Answer.blocked(step, str(err))
        except EcosimError as err:
            return Answer.blocked(step + 1, str(err))
    return evaluate_query(em, fork_state, inner, fork_ctx)


# --- execution -----------------------------------------------------------------


def execute_step(em: Emulator, state: WorldState, ctx: DiscourseContext,
                 stmt: Statement, index: int, *, depth_limit: int = 8,
                 action_base: int = 0,
                 ) -> tuple[Emulator, WorldState, DiscourseContext, StepRecord]:
    """Dispatch one utterance by role. Failures are captured in the record.

    ``action_base`` is the world timestep: the number of regular actions
    applied so far. Eco statements advance the emulator version instead,
    so removing one never renumbers events.
    """
    from . import planner  # local import: planner builds on this module

    role = classify(stmt)
    events_before = len(state.events)
    failure = None
    answer = None
    applied: list = []
    try:
        if role is Role.ECO:
            if isinstance(stmt, AffordanceDecl) and stmt.subject.det in (DET_DEF, DET_THIS):
                # "This bag can ..." introduces its referent when absent.
                try:
                    resolve_referent(stmt.subject, state, ctx, em=em)
                except NoReferent:
                    kind = em.taxonomy.resolve_name(stmt.subject.noun)
                    label = " ".join(stmt.subject.adjectives + (kind,))
                    state, eid = world.add_entity(state, kind, taxonomy=em.taxonomy, label=label)
                    ctx = ctx.tick().note(state, eid, creation=True)
            em = eco_apply(em, stmt)
        elif role is Role.FACT:
            from .indexer import index_fact

            state, ctx = index_fact(stmt, state, ctx, em=em)
        elif role is Role.DO:
            ctx = ctx.tick()
            state, ctx, acts = ground_command(stmt, state, ctx, em=em)
            for act in acts:
                label = pretty_action_text(em, state, act)
                state = apply(em, state, act, step=action_base + len(applied))
                applied.append(label)
        elif role is Role.QUERY:
            answer = evaluate_query(em, state, stmt, ctx).text
        elif role is Role.GOAL:
            outcome = planner.plan(em, state, stmt, depth_limit=depth_limit)
            if isinstance(outcome, planner.Plan):
                steps = "; ".join(
                    pretty_action_text(em, state, a) for a in outcome.actions
                )
                answer = f"plan ({outcome.length} steps): {steps}" if steps else "plan (0 steps)"
            else:
                answer = outcome.reason
    except EcosimError as err:
        failure = f"{type(err).__name__}: {err}"
    record = StepRecord(
        index=index,
        role=role.value,
        text=pretty_print(stmt),
        emulator_version=em.version,
        state_hash=world.state_hash(state),
        actions=tuple(applied),
        events=state.events[events_before:],
        failure=failure,
        answer=answer,
    )
    return em, state, ctx, record


def pretty_action_text(em: Emulator, state: WorldState, act: GroundedAction) -> str:
    from .emulator import pretty_action

    return pretty_action(em, state, act)


def run_scenario(prelude: Emulator, statements, *, halt_on_error: bool = True,
                 depth_limit: int = 8) -> Trace:
    """Left-fold of execute_step from an empty world under ``prelude``."""
    if isinstance(statements, Scenario):
        statements = statements.statements
    em, state, ctx = prelude, world.new_world(), DiscourseContext()
    records = []
    actions = 0
    for i, stmt in enumerate(statements):
        em, state, ctx, record = execute_step(
            em, state, ctx, stmt, i, depth_limit=depth_limit, action_base=actions
        )
        records.append(record)
        actions += len(record.actions)
        if record.failure is not None and halt_on_error:
            break
    return Trace(tuple(records), state, em)


def what_if(session: "Session", commands, query: Statement) -> Answer:
    """Answer a query on a fork of the session; the session itself is unchanged."""
    return run_hypothetical(
        session.emulator, session.state, session.ctx, commands, query,
        action_base=session.actions_applied,
    )


class Session:
    """A single owner of one (emulator, state, context) chain.

    Operations on one session are serialized by ``lock``; distinct sessions
    are independent.
    """

    def __init__(self, prelude: Emulator, *, depth_limit: int = 8):
        self.emulator = prelude
        self.state = world.new_world()
        self.ctx = DiscourseContext()
        self.records: list[StepRecord] = []
        self.actions_applied = 0
        self.depth_limit = depth_limit
        self.lock = threading.Lock()
        self._undo: list[tuple] = []

    @property
    def step_index(self) -> int:
        return len(self.records)

    def submit(self, text: str) -> StepRecord:
        from .parser import parse_utterance

        stmt = parse_utterance(text)
        return self.submit_statement(stmt)

    def submit_statement(self, stmt: Statement) -> StepRecord:
        self._undo.append(
            (self.emulator, self.state, self.ctx, len(self.records), self.actions_applied)
        )
        em, state, ctx, record = execute_step(
            self.emulator, self.state, self.ctx, stmt, self.step_index,
            depth_limit=self.depth_limit, action_base=self.actions_applied,
        )
        self.emulator, self.state, self.ctx = em, state, ctx
        self.records.append(record)
        self.actions_applied += len(record.actions)
        return record

    def undo(self) -> bool:
        if not self._undo:
            return False
        self.emulator, self.state, self.ctx, n, self.actions_applied = self._undo.pop()
        del self.records[n:]
        return True

    def affordances(self) -> tuple:
        return derive_affordances(self.emulator, self.state)

    def whatif(self, command_texts, query_text: str) -> Answer:
        from .parser import parse_utterance

        commands = []
        for text in command_texts:
            stmt = parse_utterance(text if text.rstrip().endswith(".") else text + ".")
            if not isinstance(stmt, Command):
                raise EcosimError(f"not a command: {text!r}")
            commands.append(stmt)
        query = parse_utterance(query_text)
        if classify(query) is not Role.QUERY:
            raise EcosimError(f"not a query: {query_text!r}")
        return what_if(self, commands, query)

    def trace(self) -> Trace:
        return Trace(tuple(self.records), self.state, self.emulator)
