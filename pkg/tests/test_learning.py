import numpy as np
import pytest

from fabricsnn.learning import (
    LearningConfig,
    TableEvaluator,
    check_realizable,
    improve_margins,
    learn,
    table_error,
)
from fabricsnn.netlist import TruthTable, WeightAssignment
from fabricsnn.oracle import exhaustive_assignments
from fabricsnn.solver import evaluate_truth_table


def rows(**overrides):
    base = {f"{i:03b}": "00" for i in range(8)}
    base.update(overrides)
    return base


def test_table_error_counts_bits(target_table):
    assert table_error(target_table, target_table) == 0
    flipped = dict(target_table.rows)
    flipped["010"] = "01"  # both bits differ from "10"
    assert table_error(TruthTable(flipped), target_table) == 2
    inverted = TruthTable(
        {p: "".join("1" if c == "0" else "0" for c in v)
         for p, v in target_table.rows.items()}
    )
    assert table_error(inverted, target_table) == 16


def test_check_realizable_accepts_stock_table(target_table):
    assert check_realizable(target_table) == []


def test_check_realizable_flags_zero_row():
    violations = check_realizable(TruthTable(rows(**{"000": "01"})))
    assert any("zero-input" in v for v in violations)


def test_check_realizable_flags_monotonicity():
    table = TruthTable(rows(**{"010": "10", "110": "00"}))
    violations = check_realizable(table)
    assert any("monotonicity" in v and "010" in v and "110" in v for v in violations)


def test_learn_is_deterministic(reference_network, target_table):
    config = LearningConfig(seed=3, restarts=4, max_iters=200)
    a = learn(reference_network, target_table, config)
    b = learn(reference_network, target_table, config)
    assert a.assignment == b.assignment
    assert a.error == b.error
    assert a.min_margin == b.min_margin
    assert [r.iterations for r in a.restarts] == [r.iterations for r in b.restarts]


def test_learn_error_matches_reevaluation(reference_network, target_table):
    result = learn(reference_network, target_table,
                   LearningConfig(seed=5, restarts=3, max_iters=100))
    realized = evaluate_truth_table(reference_network, result.assignment).table
    assert table_error(realized, target_table) == result.error


def test_learn_finds_stock_table(learned_result, target_table, reference_network):
    assert learned_result.error == 0
    realized = evaluate_truth_table(
        reference_network, learned_result.assignment
    ).table
    assert dict(realized.rows) == dict(target_table.rows)


def test_learn_reproduces_shipped_weights(learned_result, shipped_weights):
    assert learned_result.assignment == shipped_weights


def test_learn_attaches_realizability_notes(reference_network):
    target = TruthTable(rows(**{"000": "11"}))
    result = learn(reference_network, target,
                   LearningConfig(seed=1, restarts=1, max_iters=10))
    assert any("pre-check" in note for note in result.notes)
    assert result.error > 0


def test_learn_self_consistency_sample(reference_network):
    """Targets realized by a random draw are recovered (small sample here;
    the acceptance suite runs the full 100-trial version)."""
    rng = np.random.default_rng(2)
    hits = 0
    trials = 10
    for t in range(trials):
        drawn = WeightAssignment(
            {e.id: int(rng.integers(0, 3)) for e in reference_network.edges}
        )
        target = evaluate_truth_table(reference_network, drawn).table
        result = learn(reference_network, target,
                       LearningConfig(seed=100 + t, restarts=10, max_iters=500))
        hits += result.error == 0
    assert hits >= trials - 1


def test_learn_matches_exhaustive_on_subnet(target_table):
    from test_oracle import one_output_subnet

    net = one_output_subnet()
    agreements = 0
    for seed in range(10):
        result = learn(net, target_table,
                       LearningConfig(seed=seed, restarts=6, max_iters=200))
        best = exhaustive_assignments(net, [e.id for e in net.edges], target_table)
        assert result.error >= best.error  # can never beat the optimum
        agreements += result.error == best.error
    assert agreements >= 9


def test_annealing_strategy_reaches_zero(reference_network, target_table):
    config = LearningConfig(seed=4, restarts=4, max_iters=120,
                            strategy="annealing")
    result = learn(reference_network, target_table, config)
    assert result.error <= 1
    again = learn(reference_network, target_table, config)
    assert again.assignment == result.assignment


def test_improve_margins_monotone(reference_network, target_table, learned_result):
    config = LearningConfig(seed=1, restarts=1, max_iters=500)
    improved = improve_margins(
        reference_network, learned_result.assignment, target_table, config
    )
    assert improved.error == 0
    assert improved.min_margin >= learned_result.min_margin
    realized = evaluate_truth_table(reference_network, improved.assignment).table
    assert dict(realized.rows) == dict(target_table.rows)


def test_improve_margins_requires_error_zero(reference_network, target_table):
    all_zero = WeightAssignment({e.id: 0 for e in reference_network.edges})
    with pytest.raises(ValueError, match="error-0"):
        improve_margins(reference_network, all_zero, target_table,
                        LearningConfig(seed=1))


def test_improve_margins_flags_local_optimum(reference_network, target_table,
                                             learned_result):
    config = LearningConfig(seed=1, restarts=1, max_iters=500)
    once = improve_margins(reference_network, learned_result.assignment,
                           target_table, config)
    again = improve_margins(reference_network, once.assignment, target_table, config)
    assert again.assignment == once.assignment
    assert again.iterations == 0
    assert any("no margin-improving swap" in note for note in again.notes)


def test_margin_definition_positive_iff_correct(reference_network, target_table,
                                                learned_result):
    ev = TableEvaluator(reference_network, target_table)
    selection = np.array(
        [learned_result.assignment.selected[eid] for eid in ev.edge_ids],
        dtype=np.int64,
    )
    error, margin = ev.score(selection)
    assert error == 0 and margin > 0
    bad = np.zeros(len(ev.edge_ids), dtype=np.int64)
    error_bad, margin_bad = ev.score(bad)
    assert error_bad > 0 and margin_bad < 0


def test_learning_requires_grounded_mode(reference_network, target_table):
    from dataclasses import replace

    floating = replace(reference_network, grounding_mode="floating_zeros")
    with pytest.raises(ValueError, match="grounded"):
        learn(floating, target_table, LearningConfig(seed=0))


def test_config_validation():
    with pytest.raises(ValueError):
        LearningConfig(seed=0, restarts=0)
    with pytest.raises(ValueError):
        LearningConfig(seed=0, max_iters=0)
    with pytest.raises(ValueError):
        LearningConfig(seed=0, strategy="magic")
