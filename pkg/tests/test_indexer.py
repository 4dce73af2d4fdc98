from __future__ import annotations

from collections import Counter

import pytest

from ecosim import world
from ecosim.errors import AmbiguousReferent, NoReferent, UnknownKind
from ecosim.indexer import (
    DiscourseContext,
    build_initial_state,
    index_fact,
    resolve_referent,
)
from ecosim.library import load_prelude
from ecosim.parser import parse_utterance
from ecosim.world import Quantity


@pytest.fixture()
def em():
    return load_prelude(["core", "market"])


def fact(text: str):
    return parse_utterance(text)


def fold(em, texts):
    state, ctx = world.new_world(), DiscourseContext()
    for t in texts:
        state, ctx = index_fact(fact(t), state, ctx, em=em)
    return state, ctx


# --- index_fact ---------------------------------------------------------


def test_count_semantics(em):
    state, _ = fold(em, ["There are three watermelons."])
    assert len(state.entities) == 3
    assert {e.kind for e in state.entities} == {"watermelon"}


def test_kind_default_weight_applies_to_instances(em):
    # market declares 9 kg; conversion oracle: 9 * 1000 g
    state, _ = fold(em, ["There is a watermelon."])
    assert world.effective_prop(state, 1, "weight", taxonomy=em.taxonomy).magnitude == 9 * 1000


def test_specific_assignment_writes_own_property_only(em):
    state, _ = fold(em, ["There is a bag.", "There is a watermelon.",
                         "The weight of the bag is 500 g."])
    bag, melon = state.entities[0], state.entities[1]
    assert bag.props["weight"] == Quantity.mass(500, "g")
    assert "weight" not in melon.props  # untouched instance keeps inherited default


def test_generic_default_never_writes_instance_props(em):
    from ecosim.emulator import eco_apply

    state, ctx = fold(em, ["There is a watermelon."])
    before = world.canonical_json(state)
    em2 = eco_apply(em, parse_utterance("The weight of a watermelon is 12 kg."))
    assert world.canonical_json(state) == before  # eco change left the state alone
    assert world.effective_prop(state, 1, "weight", taxonomy=em2.taxonomy).magnitude == 12_000


def test_unknown_kind_aborts_with_statement_index(em):
    with pytest.raises(UnknownKind) as exc:
        build_initial_state([fact("There is a unicorn.")], em=em)
    assert "statement 0" in str(exc.value)


# --- referent resolution ------------------------------------------------------


def test_unique_candidate_resolves(em):
    state, ctx = fold(em, ["There is a bag."])
    np = parse_utterance("Take the bag.").clauses[0].patient
    assert resolve_referent(np, state, ctx, em=em) == 1


def test_pronoun_binds_to_last_mention(em):
    state, ctx = fold(em, ["There is a bag."])
    np = parse_utterance("Does it burst?").np
    assert resolve_referent(np, state, ctx, em=em) == 1


def test_two_unreferenced_bags_are_ambiguous(em):
    state, ctx = fold(em, ["There is a bag.", "There is a bag."])
    np = parse_utterance("Take the bag.").clauses[0].patient
    # enumeration oracle: two kind-matching candidates, neither referenced
    candidates = [e for e in state.entities if e.kind == "bag"]
    assert len(candidates) == 2
    with pytest.raises(AmbiguousReferent):
        resolve_referent(np, state, ctx, em=em)


def test_reference_disambiguates_later_definites(em):
    state, ctx = fold(em, ["There is a bag.", "There is a bag."])
    np = parse_utterance("Take the bag.").clauses[0].patient
    ctx = ctx.tick().note(state, 2)  # an explicit reference to bag 2
    assert resolve_referent(np, state, ctx, em=em) == 2


def test_label_adjectives_filter(em):
    em2 = load_prelude(["clothing"], base=em)
    state, ctx = fold(em2, ["There is a white t-shirt.", "There is a red t-shirt."])
    np = parse_utterance("Take the red t-shirt.").clauses[0].patient
    assert resolve_referent(np, state, ctx, em=em2) == 2


def test_no_referent(em):
    state, ctx = fold(em, ["There is a bag."])
    np = parse_utterance("Take the watermelon.").clauses[0].patient
    with pytest.raises(NoReferent):
        resolve_referent(np, state, ctx, em=em)


def test_resolution_soundness_ids_exist(em):
    state, ctx = fold(em, ["There is a bag.", "There are 2 watermelons."])
    for text in ["Take the bag.", "Take a watermelon."]:
        np = parse_utterance(text).clauses[0].patient
        from ecosim.indexer import resolve_indefinite

        if np.det == "indef":
            eid = resolve_indefinite(np, state, ctx, em=em)
        else:
            eid = resolve_referent(np, state, ctx, em=em)
        assert world.has_entity(state, eid)


# --- build_initial_state ----------------------------------------------------------


def test_empty_fold_is_empty_world(em):
    state, _ = build_initial_state([], em=em)
    assert state == world.new_world()


def test_fold_equals_sequential_replay(em):
    texts = ["There is a bag.", "There are three watermelons.",
             "The weight of the bag is 500 g."]
    folded, _ = build_initial_state([fact(t) for t in texts], em=em)
    replayed, _ = fold(em, texts)  # manual one-at-a-time oracle
    assert world.canonical_json(folded) == world.canonical_json(replayed)
    assert world.effective_prop(folded, 2, "weight", taxonomy=em.taxonomy).magnitude == 9000


def test_permuted_creation_order_same_kind_multiset(em):
    a, _ = build_initial_state(
        [fact("There is a bag."), fact("There are 2 watermelons.")], em=em
    )
    b, _ = build_initial_state(
        [fact("There are 2 watermelons."), fact("There is a bag.")], em=em
    )
    assert world.canonical_json(a) != world.canonical_json(b)  # ids differ
    # multiset oracle: same kinds regardless of order
    assert Counter(e.kind for e in a.entities) == Counter(e.kind for e in b.entities)


def test_determinism_byte_identical(em):
    texts = ["There is a bag.", "There are three watermelons."]
    a, _ = build_initial_state([fact(t) for t in texts], em=em)
    b, _ = build_initial_state([fact(t) for t in texts], em=em)
    assert world.canonical_json(a) == world.canonical_json(b)


def test_ids_monotone_never_reused(em):
    state, ctx = fold(em, ["There is a bag.", "There are 2 watermelons."])
    ids = [e.id for e in state.entities]
    assert ids == sorted(ids) == [1, 2, 3]
    state = world.detach(state, 2)
    state2, ctx = index_fact(fact("There is a crate."), state, ctx, em=em)
    assert [e.id for e in state2.entities] == [1, 2, 3, 4]
