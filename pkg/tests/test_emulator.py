from __future__ import annotations

import itertools
import random

import pytest

from ecosim import world
from ecosim.emulator import (
    AffordanceRule,
    Deny,
    Emulator,
    GroundedAction,
    KindPattern,
    Permit,
    Provenance,
    Scope,
    apply,
    check_action,
    compile_rule,
    eco_apply,
    is_portable,
)
from ecosim.errors import ActionFailure, DimensionMismatch, DuplicateKind, DuplicateRuleWarning, UnknownKind
from ecosim.indexer import DiscourseContext, index_fact
from ecosim.library import load_prelude
from ecosim.parser import parse_utterance
from ecosim.statements import Modality
from ecosim.world import Quantity


@pytest.fixture()
def em():
    return load_prelude(["core", "market"])


def setup_bag_and_melons(em, n_melons=3, capacity="20 kg"):
    state, ctx = world.new_world(), DiscourseContext()
    state, ctx = index_fact(parse_utterance("There is a bag."), state, ctx, em=em)
    em = eco_apply(em, parse_utterance(f"This bag can hold up to {capacity} before bursting."))
    state, ctx = index_fact(parse_utterance(f"There are {n_melons} watermelons."), state, ctx, em=em)
    return em, state, ctx


# --- compile_rule ---------------------------------------------------------


def test_hold_compiles_capacity_and_event(em):
    decl = parse_utterance("This bag can hold up to 20 kg before bursting.")
    rule = compile_rule(decl, em)
    assert rule.limit == Quantity.mass(20, "kg")
    assert rule.event == "burst"
    assert rule.verbs == frozenset({"put-in"})
    assert rule.scope is Scope.SPECIFIC
    assert rule.target == KindPattern("bag", (), definite=True)


def test_portable_compiles_take_drop(em):
    decl = parse_utterance("All watermelons are portable.")
    rule = compile_rule(decl, em)
    assert rule.verbs == frozenset({"take", "drop"})
    assert rule.marks_portable
    assert rule.scope is Scope.GENERIC


def test_cannot_rule_has_no_effects(em):
    decl = parse_utterance("A person cannot eat a bag.")
    rule = compile_rule(decl, em)
    assert rule.modality is Modality.CANNOT
    assert rule.limit is None and rule.event is None and rule.slot is None


def test_compile_is_deterministic(em):
    decl = parse_utterance("This bag can hold up to 20 kg before bursting.")
    assert compile_rule(decl, em) == compile_rule(decl, em)


def test_compile_unknown_kind(em):
    with pytest.raises(UnknownKind):
        compile_rule(parse_utterance("All unicorns are portable."), em)


# --- eco_apply ----------------------------------------------------------------


def test_eco_apply_bumps_version_once(em):
    v = em.version
    em2 = eco_apply(em, parse_utterance("This bag can hold up to 20 kg before bursting."))
    assert em2.version == v + 1
    assert len(em2.rules) == len(em.rules) + 1
    assert em.version == v  # input emulator untouched


def test_version_counts_eco_applies(em):
    decls = [
        "A pumpkin is a kind of thing.",
        "All pumpkins are portable.",
        "The weight of a pumpkin is 5 kg.",
    ]
    v = em.version
    for k, text in enumerate(decls, start=1):
        em = eco_apply(em, parse_utterance(text))
        assert em.version == v + k


def test_duplicate_generic_decl_warns_but_increments(em):
    em2 = eco_apply(em, parse_utterance("All bags are not portable."))
    with pytest.warns(DuplicateRuleWarning):
        em3 = eco_apply(em2, parse_utterance("All bags are not portable."))
    assert em3.version == em2.version + 1


def test_kind_decl_extends_taxonomy(em):
    em2 = eco_apply(em, parse_utterance("A satchel is a kind of container."))
    assert em2.taxonomy.is_a("satchel", "container")
    assert em2.taxonomy.is_a("satchel", "thing")
    with pytest.raises(DuplicateKind):
        eco_apply(em2, parse_utterance("A satchel is a kind of thing."))


def test_default_decl_dimension_mismatch(em):
    from ecosim.statements import DefaultDecl

    bad = DefaultDecl("watermelon", "weight", Quantity.count(3))
    with pytest.raises(DimensionMismatch):
        eco_apply(em, bad)  # weight is registered as a mass


# --- check_action -----------------------------------------------------------------


def test_permit_within_capacity(em):
    em, state, _ = setup_bag_and_melons(em)
    verdict = check_action(em, state, GroundedAction("put-in", 2, 1))
    assert verdict == Permit(rule_id=verdict.rule_id)
    assert verdict.event is None


def test_third_melon_triggers_burst_clause(em):
    em, state, _ = setup_bag_and_melons(em)
    state = apply(em, state, GroundedAction("put-in", 2, 1))
    state = apply(em, state, GroundedAction("put-in", 3, 1))
    # arithmetic oracle: 18000 + 9000 = 27000 > 20000
    total = world.total_quantity(state, 1, "weight", taxonomy=em.taxonomy)
    assert total.magnitude + 9000 == 27_000 > 20_000
    verdict = check_action(em, state, GroundedAction("put-in", 4, 1))
    assert isinstance(verdict, Permit) and verdict.event == "burst"


def test_no_affordance_for_bag_into_melon(em):
    em, state, _ = setup_bag_and_melons(em)
    verdict = check_action(em, state, GroundedAction("put-in", 1, 2))
    assert isinstance(verdict, Deny) and verdict.reason == "no-affordance"


def test_prohibited_after_burst(em):
    em, state, _ = setup_bag_and_melons(em, n_melons=4)
    for melon in (2, 3, 4):
        state = apply(em, state, GroundedAction("put-in", melon, 1))
    assert world.effective_prop(state, 1, "burst", taxonomy=em.taxonomy) is True
    verdict = check_action(em, state, GroundedAction("put-in", 5, 1))
    assert isinstance(verdict, Deny) and verdict.reason == "prohibited"
    with pytest.raises(ActionFailure) as exc:
        apply(em, state, GroundedAction("put-in", 5, 1))
    assert exc.value.reason == "prohibited"


# --- apply -------------------------------------------------------------------------


def test_apply_replay_totals_then_burst(em):
    em, state, _ = setup_bag_and_melons(em)
    totals = []
    for melon in (2, 3, 4):
        state = apply(em, state, GroundedAction("put-in", melon, 1))
        totals.append(world.total_quantity(state, 1, "weight", taxonomy=em.taxonomy).magnitude)
    # replay oracle: 9000, 18000, then burst spills everything
    assert totals == [9000, 18000, 0]
    assert world.effective_prop(state, 1, "burst", taxonomy=em.taxonomy) is True
    assert [e.name for e in state.events] == ["burst"]


def test_denied_apply_leaves_input_unchanged(em):
    em, state, _ = setup_bag_and_melons(em)
    before = world.canonical_json(state)
    with pytest.raises(ActionFailure):
        apply(em, state, GroundedAction("put-in", 1, 2))
    assert world.canonical_json(state) == before


def test_apply_never_returns_emulator(em):
    em, state, _ = setup_bag_and_melons(em)
    result = apply(em, state, GroundedAction("put-in", 2, 1))
    assert isinstance(result, world.WorldState)


def test_eco_apply_signature_takes_no_state():
    import inspect

    params = inspect.signature(eco_apply).parameters
    assert "state" not in params and "world_state" not in params


# --- precedence --------------------------------------------------------------------


def test_specific_capacity_beats_generic(em):
    # core's generic 1000 kg container rule loses to the bag's 20 kg rule
    em, state, _ = setup_bag_and_melons(em)
    state = apply(em, state, GroundedAction("put-in", 2, 1))
    state = apply(em, state, GroundedAction("put-in", 3, 1))
    verdict = check_action(em, state, GroundedAction("put-in", 4, 1))
    assert verdict.event == "burst"  # 27 kg trips 20 kg, not 1000 kg


def test_cannot_beats_can_at_equal_specificity(em):
    em2 = eco_apply(em, parse_utterance("A person can eat a watermelon."))
    em2 = eco_apply(em2, parse_utterance("A person cannot eat a watermelon."))
    state, ctx = world.new_world(), DiscourseContext()
    state, ctx = index_fact(parse_utterance("There is a person."), state, ctx, em=em2)
    state, ctx = index_fact(parse_utterance("There is a watermelon."), state, ctx, em=em2)
    verdict = check_action(em2, state, GroundedAction("eat", 2, None, 1))
    assert isinstance(verdict, Deny) and verdict.reason == "prohibited"


def test_cannot_is_not_displaced_by_later_can(em):
    # modality outranks installation order: re-permitting does not undo a ban
    em2 = eco_apply(em, parse_utterance("All crates are not portable."))
    state, ctx = world.new_world(), DiscourseContext()
    state, ctx = index_fact(parse_utterance("There is a crate."), state, ctx, em=em2)
    assert not is_portable(em2, state, 1)
    with pytest.warns(DuplicateRuleWarning):
        em3 = eco_apply(em2, parse_utterance("All crates are portable."))
    assert not is_portable(em3, state, 1)


def test_later_installation_wins_full_ties(em):
    # two same-shape capacity rules: the most recent revision governs
    em2 = eco_apply(em, parse_utterance("All crates can hold up to 10 kg before breaking."))
    em2 = eco_apply(em2, parse_utterance("All crates can hold up to 5 kg before cracking."))
    state, ctx = world.new_world(), DiscourseContext()
    for text in ["There is a crate.", "There is a watermelon."]:
        state, ctx = index_fact(parse_utterance(text), state, ctx, em=em2)
    verdict = check_action(em2, state, GroundedAction("put-in", 2, 1))
    assert isinstance(verdict, Permit) and verdict.event == "crack"  # 9 kg > 5 kg limit


def random_rule(rng: random.Random, rid: int) -> AffordanceRule:
    return AffordanceRule(
        id=rid,
        modality=rng.choice([Modality.CAN, Modality.CANNOT]),
        verbs=frozenset({"take"}),
        agent=None,
        patient=KindPattern("thing"),
        target=None,
        provenance=rng.choice([Provenance.COMPILED, Provenance.SITUATION]),
        installed_at=rng.randrange(0, 5),
        scope=rng.choice([Scope.SPECIFIC, Scope.GENERIC]),
        depth=rng.randrange(0, 4),
    )


def test_precedence_key_total_and_antisymmetric():
    rng = random.Random(13)
    rules = [random_rule(rng, i + 1) for i in range(60)]
    for a, b in itertools.combinations(rules, 2):
        ka, kb = a.precedence_key(), b.precedence_key()
        assert (ka > kb) != (kb > ka)  # antisymmetric and total: ids break ties
        # ordering axioms the key must respect
        if a.scope is Scope.SPECIFIC and b.scope is Scope.GENERIC:
            assert ka > kb
        elif a.scope is b.scope and a.depth != b.depth:
            assert (ka > kb) == (a.depth > b.depth)
        elif (a.scope is b.scope and a.depth == b.depth
              and a.modality is Modality.CANNOT and b.modality is Modality.CAN):
            assert ka > kb
