from __future__ import annotations

from collections import deque

import pytest

from conftest import make_market_session

from ecosim import world
from ecosim.emulator import GroundedAction, apply
from ecosim.errors import ActionFailure
from ecosim.library import load_prelude
from ecosim.parser import parse_utterance
from ecosim.planner import NoPlan, Plan, check_goal, plan, validate_plan


def goal_of(text: str):
    return parse_utterance(text if text.startswith("Goal") else f"Goal: {text}.")


def bfs_oracle(em, s0, goal, depth_limit=8):
    """Independent shortest-path search: enumerate every verb x entity tuple,
    attempt apply, and keep visited states by canonical serialization."""

    def universe(state):
        people = [e for e in state.entities
                  if em.taxonomy.has("person") and em.taxonomy.is_a(e.kind, "person")]
        agent = people[0].id if len(people) == 1 else None
        for verb in em.all_verbs():
            for p in state.entities:
                if verb == "put-in":
                    for t in state.entities:
                        if t.id != p.id:
                            yield GroundedAction(verb, p.id, t.id, agent)
                else:
                    yield GroundedAction(verb, p.id, None, agent)

    if check_goal(em, s0, goal):
        return 0
    seen = {world.canonical_json(s0)}
    queue = deque([(s0, 0)])
    while queue:
        state, depth = queue.popleft()
        if depth >= depth_limit:
            continue
        for act in universe(state):
            try:
                nxt = apply(em, state, act, step=depth)
            except ActionFailure:
                continue
            key = world.canonical_json(nxt)
            if key in seen:
                continue
            seen.add(key)
            if check_goal(em, nxt, goal):
                return depth + 1
            queue.append((nxt, depth + 1))
    return None


def prune_free_bfs(em, s0, goal, depth_limit=5):
    """BFS without duplicate pruning; exponential, for small instances only."""
    from ecosim.simulator import derive_affordances

    if check_goal(em, s0, goal):
        return 0
    queue = deque([(s0, 0)])
    while queue:
        state, depth = queue.popleft()
        if depth >= depth_limit:
            continue
        for act in derive_affordances(em, state):
            nxt = apply(em, state, act, step=depth)
            if check_goal(em, nxt, goal):
                return depth + 1
            queue.append((nxt, depth + 1))
    return None


# --- check_goal -----------------------------------------------------------


def test_goal_false_on_fresh_bag(market_session):
    s = market_session
    assert not check_goal(s.emulator, s.state, goal_of("the bag is burst"))


def test_total_goal_sees_post_event_spill(market_session):
    s = market_session
    s.submit("Put three watermelons in the bag.")
    # burst spilled the contents, so the total is back to zero
    assert not check_goal(
        s.emulator, s.state, goal_of("the total weight in the bag is at least 20 kg")
    )
    assert check_goal(s.emulator, s.state, goal_of("the bag is burst"))


def test_conjunction_goal(market_session):
    s = market_session
    s.submit("Put a watermelon in the bag.")
    g = goal_of("the bag contains 1 watermelons and the total weight in the bag is at least 9 kg")
    assert check_goal(s.emulator, s.state, g)
    g2 = goal_of("the bag contains 2 watermelons and the total weight in the bag is at least 9 kg")
    assert not check_goal(s.emulator, s.state, g2)


# --- plan ---------------------------------------------------------------------


def test_goal_already_true_gives_empty_plan(market_session):
    s = market_session
    s.submit("Put three watermelons in the bag.")
    out = plan(s.emulator, s.state, goal_of("the bag is burst"))
    assert isinstance(out, Plan) and out.length == 0 and out.actions == ()


def test_burst_plan_is_three_puts(market_session):
    s = market_session
    goal = goal_of("the bag is burst")
    out = plan(s.emulator, s.state, goal)
    assert isinstance(out, Plan)
    assert out.length == 3 == bfs_oracle(s.emulator, s.state, goal)
    assert all(a.verb == "put-in" and a.target == 1 for a in out.actions)
    assert len({a.patient for a in out.actions}) == 3
    assert validate_plan(s.emulator, s.state, out, goal)


def test_unreachable_goal_is_noplan(market_session):
    s = market_session
    out = plan(s.emulator, s.state, goal_of("the bag contains 4 watermelons"), depth_limit=6)
    assert isinstance(out, NoPlan)
    assert "depth 6" in out.reason


def test_plan_determinism(market_session):
    s = market_session
    goal = goal_of("the bag is burst")
    a = plan(s.emulator, s.state, goal)
    b = plan(s.emulator, s.state, goal)
    assert a == b


def test_pruning_safety_matches_prune_free_search(market_session):
    s = market_session
    for text in ["the bag is burst", "the bag contains 2 watermelons",
                 "the total weight in the bag is at least 9 kg"]:
        goal = goal_of(text)
        pruned = plan(s.emulator, s.state, goal, depth_limit=4)
        free = prune_free_bfs(s.emulator, s.state, goal, depth_limit=4)
        assert isinstance(pruned, Plan) and pruned.length == free


def test_validate_plan_rejects_denied_and_truncated(market_session):
    s = market_session
    goal = goal_of("the bag is burst")
    out = plan(s.emulator, s.state, goal)
    bogus = Plan((GroundedAction("put-in", 1, 2),), 1, 0)
    assert not validate_plan(s.emulator, s.state, bogus, goal)
    truncated = Plan(out.actions[:-1], out.length - 1, 0)
    assert not validate_plan(s.emulator, s.state, truncated, goal)


def test_validate_plan_accepts_early_goal_suffix(market_session):
    s = market_session
    goal = goal_of("the bag contains 1 watermelons")
    out = plan(s.emulator, s.state, goal)
    assert isinstance(out, Plan) and out.length == 1
    longer = Plan(out.actions + (GroundedAction("take", 3),), 2, 0)
    assert validate_plan(s.emulator, s.state, longer, goal)


def test_wear_goal_plans_through_clothing():
    from conftest import make_clothing_session

    s = make_clothing_session(dressed=False)
    goal = goal_of("the jacket is worn")
    out = plan(s.emulator, s.state, goal)
    assert isinstance(out, Plan) and out.length == 1
    assert out.actions[0].verb == "wear"
    assert validate_plan(s.emulator, s.state, out, goal)
