"""Shortest-plan search: breadth-first over derived affordances with
duplicate-state pruning, plus goal evaluation and plan validation."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from . import world
from .emulator import Emulator, apply
from .errors import ActionFailure, NoReferent
from .indexer import DiscourseContext, resolve_referent
from .simulator import derive_affordances
from .statements import (
    ContainsAtom,
    FlagAtom,
    GoalSpec,
    InAtom,
    TotalAtom,
    WornAtom,
)
from .world import WorldState

DEFAULT_DEPTH_LIMIT = 8


@dataclass(frozen=True)
class Plan:
    actions: tuple
    length: int
    expanded: int  # nodes expanded during search, for diagnostics


@dataclass(frozen=True)
class NoPlan:
    reason: str
    expanded: int


def check_goal(em: Emulator, state: WorldState, goal: GoalSpec) -> bool:
    """Pure conjunction of goal atoms; referents resolve by kind uniqueness."""
    ctx = DiscourseContext()

    def rid(np) -> int:
        return resolve_referent(np, state, ctx, em=em)

    for atom in goal.atoms:
        if isinstance(atom, FlagAtom):
            eid = rid(atom.np)
            value = world.effective_prop(state, eid, atom.flag, taxonomy=em.taxonomy)
            if value is not True:
                return False
        elif isinstance(atom, InAtom):
            if world.in_parent(state, rid(atom.np)) != rid(atom.container):
                return False
        elif isinstance(atom, WornAtom):
            if world.worn_by(state, rid(atom.np)) is None:
                return False
        elif isinstance(atom, ContainsAtom):
            container = rid(atom.container)
            kind = em.taxonomy.resolve_name(atom.kind_np.noun)
            inside = [
                c
                for c in world.children_in(state, container)
                if em.taxonomy.is_a(world.entity(state, c).kind, kind)
            ]
            if len(inside) < atom.count:
                return False
        elif isinstance(atom, TotalAtom):
            total = world.total_quantity(
                state, rid(atom.container), atom.prop, taxonomy=em.taxonomy
            )
            m, want = total.magnitude, atom.value.magnitude
            ok = {
                "at-least": m >= want,
                "at-most": m <= want,
                "exactly": m == want,
                "over": m > want,
                "under": m < want,
            }[atom.op]
            if not ok:
                return False
        else:
            raise TypeError(f"unknown goal atom: {atom!r}")
    return True


def plan(em: Emulator, s0: WorldState, goal: GoalSpec,
         depth_limit: int = DEFAULT_DEPTH_LIMIT) -> "Plan | NoPlan":
    """Breadth-first search for a shortest Do-action sequence reaching the goal.

    Duplicate states are pruned by state hash; equal-length candidates are
    resolved by the canonical affordance order, so results are deterministic.
    """
    expanded = 0
    if check_goal(em, s0, goal):
        return Plan((), 0, expanded)
    seen = {world.state_hash(s0)}
    queue = deque([(s0, ())])
    while queue:
        state, path = queue.popleft()
        if len(path) >= depth_limit:
            continue
        expanded += 1
        for act in derive_affordances(em, state):
            try:
                nxt = apply(em, state, act, step=len(path))
            except ActionFailure:
                continue  # unreachable for derived affordances; stay safe
            h = world.state_hash(nxt)
            if h in seen:
                continue
            seen.add(h)
            new_path = path + (act,)
            if check_goal(em, nxt, goal):
                return Plan(new_path, len(new_path), expanded)
            queue.append((nxt, new_path))
    return NoPlan(f"no plan within depth {depth_limit}", expanded)


def validate_plan(em: Emulator, s0: WorldState, the_plan: Plan, goal: GoalSpec) -> bool:
    """True iff every step applies cleanly from s0 and the goal holds at the end."""
    state = s0
    for i, act in enumerate(the_plan.actions):
        try:
            state = apply(em, state, act, step=i)
        except (ActionFailure, NoReferent):
            return False
    try:
        return check_goal(em, state, goal)
    except NoReferent:
        return False
