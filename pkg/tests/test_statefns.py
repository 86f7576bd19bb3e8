"""State-function semantics and feature-pool preprocessing rules."""

import random

import pytest

from loopmark.errors import PreprocessingError
from loopmark.features import BetaConfig, generate_features, model_states_from_trajectories
from loopmark.statefns import (
    DECREASE,
    INCREASE,
    PHI_PRESETS,
    FunctionTable,
    Progressor,
    SignedDescriptor,
    preprocess,
    preprocess_pool,
)


def test_signed_descriptor_semantics():
    pos = SignedDescriptor("f", positive=True)
    neg = SignedDescriptor("f", positive=False)
    assert pos.holds(3) and not pos.holds(0)
    assert neg.holds(0) and not neg.holds(3)
    assert pos.polarity == "positive" and neg.polarity == "negative"
    assert str(neg) == "(not f)"


def test_progressor_semantics():
    down = Progressor("f", DECREASE)
    up = Progressor("f", INCREASE)
    assert down.holds(3, 2) and not down.holds(2, 2) and not down.holds(2, 3)
    assert up.holds(2, 3) and not up.holds(3, 3) and not up.holds(3, 2)


def test_synthetic_table_accessors():
    table = FunctionTable.synthetic(
        [[(1, 0), (2, 1)], [(0, 5)]], names=("a", "b")
    )
    assert table.num_trajectories == 2
    assert table.length(0) == 2 and table.length(1) == 1
    assert table.value(0, 1, 0) == 2
    assert table.holds(0, 0, 0) and not table.holds(0, 0, 1)
    assert table.column(1) == ((0, 1), (5,))
    small = table.restrict([1])
    assert small.names == ("b",)
    assert small.column(0) == ((0, 1), (5,))
    assert small.index == {"b": 0}


def test_synthetic_table_rejects_bad_input():
    with pytest.raises(PreprocessingError, match="ragged"):
        FunctionTable.synthetic([[(1, 0), (2,)]])
    with pytest.raises(PreprocessingError, match="duplicate"):
        FunctionTable.synthetic([[(1, 0)]], names=("a", "a"))


def test_unknown_rule_rejected():
    table = FunctionTable.synthetic([[(1,), (2,)]])
    with pytest.raises(PreprocessingError, match="unknown preprocessing rule"):
        preprocess(table, {5})


def test_rule1_drops_feature_constant_on_a_trajectory():
    # f0 constant on trajectory 0 only; f1 constant nowhere
    table = FunctionTable.synthetic(
        [[(2, 0), (2, 1)], [(2, 1), (3, 0)]], names=("f0", "f1")
    )
    result = preprocess(table, {1})
    assert result.kept == (1,)
    assert result.removed[1] == [("f0", None)]


def test_rule2_drops_feature_constant_after_init():
    # f0: changes once from init and then freezes; f1 keeps moving;
    # f2 is constant throughout (rule 1 territory, not rule 2)
    table = FunctionTable.synthetic(
        [[(0, 1, 2), (1, 2, 2), (1, 3, 2)]], names=("f0", "f1", "f2")
    )
    result = preprocess(table, {2})
    assert result.kept == (1, 2)
    assert result.removed[2] == [("f0", None)]


def test_rule3_keeps_cheapest_of_equal_profiles():
    table = FunctionTable.synthetic(
        [[(1, 5, 0), (2, 9, 0)]],
        names=("cheap", "costly", "zero"),
        complexities=(1, 3, 1),
    )
    result = preprocess(table, {3})
    assert result.kept == (0, 2)
    assert result.removed[3] == [("costly", "cheap")]


def test_rule3_breaks_complexity_ties_by_name():
    table = FunctionTable.synthetic(
        [[(1, 5), (2, 9)]], names=("b", "a"), complexities=(2, 2)
    )
    result = preprocess(table, {3})
    assert [table.names[k] for k in result.kept] == ["a"]
    assert result.removed[3] == [("b", "a")]


def test_rule4_drops_complement_profiles():
    table = FunctionTable.synthetic(
        [[(1, 0, 2), (0, 3, 0)]],
        names=("pos", "negated", "pos2"),
        complexities=(1, 2, 1),
    )
    # pos and pos2 have profile (T, F); negated has the mirror (F, T)
    result = preprocess(table, {4})
    assert [table.names[k] for k in result.kept] == ["pos", "pos2"]
    assert result.removed[4] == [("negated", "pos")]


def test_rule4_keeps_both_when_no_mirror():
    table = FunctionTable.synthetic(
        [[(1, 1), (0, 1)]], names=("a", "b")
    )  # profiles (T, F) and (T, T): not mirrors
    result = preprocess(table, {4})
    assert result.kept == (0, 1)
    assert result.removed[4] == []


def test_presets_are_nested_on_random_tables():
    rng = random.Random(20250815)
    for _ in range(25):
        table = FunctionTable.synthetic(
            [
                [
                    tuple(rng.randint(0, 2) for _ in range(6))
                    for _ in range(rng.randint(2, 5))
                ]
                for _ in range(rng.randint(1, 3))
            ],
            complexities=tuple(rng.randint(1, 4) for _ in range(6)),
        )
        kept = {
            phi: set(preprocess(table, rules).kept)
            for phi, rules in PHI_PRESETS.items()
        }
        assert kept["phi4"] <= kept["phi3"] <= kept["phi2"] <= kept["phi1"]


def test_preprocess_pool_end_to_end(example_set):
    states = [
        s
        for states in model_states_from_trajectories(
            example_set.trajectories, example_set.domain
        )
        for s in states
    ]
    config = BetaConfig(max_complexity=5, time_limit=60, feature_limit=300)
    pool = generate_features(example_set.domain, states, config)
    result = preprocess_pool(
        pool.features, example_set.trajectories, example_set.domain, "phi4"
    )
    assert 0 < len(result.kept) < len(pool.features)
    assert result.table.names == tuple(
        pool.features[k].canon for k in result.kept
    )
    with pytest.raises(PreprocessingError, match="unknown preprocessing preset"):
        preprocess_pool(
            pool.features, example_set.trajectories, example_set.domain, "phi9"
        )


def test_removed_entries_name_surviving_witnesses(example_set):
    states = [
        s
        for states in model_states_from_trajectories(
            example_set.trajectories, example_set.domain
        )
        for s in states
    ]
    config = BetaConfig(max_complexity=5, time_limit=60, feature_limit=300)
    pool = generate_features(example_set.domain, states, config)
    result = preprocess_pool(
        pool.features, example_set.trajectories, example_set.domain, "phi4"
    )
    # A rule-3/4 witness survives the profile-merging stage (rules 3+4).
    # Rules 1/2 may drop it later for trajectory-constancy reasons, so the
    # witness set is the {3,4}-stage survivor set, not the final pool.
    stage = preprocess_pool(
        pool.features, example_set.trajectories, example_set.domain, "phi2"
    )
    stage_survivors = set(stage.table.names)
    for rule in (3, 4):
        removals = result.removed.get(rule, ())
        assert removals, f"expected rule {rule} to fire on this pool"
        for _, witness in removals:
            assert witness in stage_survivors
