import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robustopt.graph import DirectedGraph
from robustopt.influence import (InfluenceInstance, InfluenceObjective, baseline_individual, baseline_perturbed,
                                 baseline_uniform_greedy, influence_value, perturbed_distribution, robust_influence,
                                 single_solution_metrics)
from robustopt.rng import Stream
from robustopt.submodular import check_monotone_submodular, greedy_oracle

from test_graph import random_graph


def test_influence_value_examples():
    path = DirectedGraph(3, [[0, 1], [1, 2]])
    assert influence_value(path, ()) == 0
    assert influence_value(path, (0,)) == pytest.approx(1.0)
    assert influence_value(path, (1,)) == pytest.approx(2 / 3)
    assert influence_value(DirectedGraph.complete(6), (4,)) == 1.0
    with pytest.raises(ValueError):
        influence_value(path, (3,))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 29), st.integers(0, 29))
def test_influence_monotone(seed, a, b):
    g = random_graph(seed)
    assert influence_value(g, (a, b)) >= influence_value(g, (a,))


def test_objective_matches_bfs_and_is_submodular():
    g = random_graph(3, n=10, density=0.15)
    f = InfluenceObjective(g)
    for S in [(), (0,), (2, 5), (1, 3, 9)]:
        assert f.value(S) == pytest.approx(influence_value(g, S))
        gains = f.marginal_gains(S)
        for j in range(10):
            if j not in S:
                assert gains[j] == pytest.approx(influence_value(g, S + (j,)) - influence_value(g, S), abs=1e-6)
    assert check_monotone_submodular(f, 10)


def two_star(n_leaves=4):
    """Two stars on disjoint nodes; graph 0 keeps hub 0's edges, graph 1 keeps hub 1's."""
    n = 2 + 2 * n_leaves
    e0 = [(0, 2 + i) for i in range(n_leaves)]
    e1 = [(1, 2 + n_leaves + i) for i in range(n_leaves)]
    base = DirectedGraph(n, e0 + e1)
    return InfluenceInstance(base, [DirectedGraph(n, e0), DirectedGraph(n, e1)], 1.0, 0)


def test_two_star_robust_run():
    inst = two_star()
    run = robust_influence(inst, k=1, T=200)
    picks = {S[0] for S in run.solutions}
    assert picks == {0, 1}
    # a hub reaches 5 of 10 nodes in its own graph and only itself in the other
    assert run.bottleneck == pytest.approx((0.5 + 0.1) / 2, abs=0.02)
    uniform = inst.bottleneck([baseline_uniform_greedy(inst, 1)]) / inst.node_count
    assert uniform <= run.bottleneck


def test_single_graph_cases():
    g = random_graph(4)
    inst = InfluenceInstance(g, [g], 1.0, 0)
    run = robust_influence(inst, k=2, T=5)
    expected = greedy_oracle(inst.objectives, [1.0], 2)
    assert all(S == expected for S in run.solutions)
    assert baseline_individual(inst, 2) == [expected]
    assert baseline_uniform_greedy(inst, 2) == expected


def test_identical_subgraphs_give_identical_sets():
    g = random_graph(5)
    inst = InfluenceInstance(g, [g, g, g], 1.0, 0)
    sets = baseline_individual(inst, 2)
    assert sets[0] == sets[1] == sets[2] == baseline_uniform_greedy(inst, 2)


def test_denormalized_bottleneck():
    inst = InfluenceInstance.sample(DirectedGraph.complete(20), 5, 0.1, seed=2)
    run = robust_influence(inst, 2, 20)
    assert inst.bottleneck(run.solutions) == inst.node_count * run.bottleneck


def test_sampling_deterministic_and_subset():
    base = DirectedGraph.complete(15)
    a = InfluenceInstance.sample(base, 4, 0.2, seed=9)
    b = InfluenceInstance.sample(base, 4, 0.2, seed=9)
    edges = {tuple(e) for e in base.edges}
    for ga, gb in zip(a.subgraphs, b.subgraphs):
        assert np.array_equal(ga.edges, gb.edges)
        assert {tuple(e) for e in ga.edges} <= edges


@given(st.integers(0, 2**32), st.integers(2, 20), st.floats(0, 1.5))
def test_perturbed_distribution_valid(seed, m, d):
    w = perturbed_distribution(m, d, Stream(seed))
    assert np.all(w >= 0) and abs(w.sum() - 1) < 1e-9


def test_perturbed_matches_requested_distance():
    w = perturbed_distribution(10, 0.4, Stream(1))
    assert np.abs(w - 0.1).sum() == pytest.approx(0.4, abs=1e-9)


def test_perturbed_zero_drift_is_uniform_greedy():
    inst = InfluenceInstance.sample(DirectedGraph.complete(20), 3, 0.1, seed=4)
    run = robust_influence(inst, 2, 10, eta=0.0)
    sets = baseline_perturbed(inst, 2, run, seed=1)
    assert sets == [baseline_uniform_greedy(inst, 2)] * 10


def test_robust_beats_uniform_within_slack():
    for seed in range(3):
        inst = InfluenceInstance.sample(DirectedGraph.complete(30), 8, 0.03, seed=seed)
        T = 60
        run = robust_influence(inst, 2, T)
        uniform = inst.bottleneck([baseline_uniform_greedy(inst, 2)])
        slack = math.sqrt(2 * math.log(8) / T) * inst.node_count
        assert inst.bottleneck(run.solutions) >= uniform - slack


def test_single_solution_metrics_trivial():
    inst = InfluenceInstance.sample(DirectedGraph.complete(12), 3, 0.2, seed=1)
    run = robust_influence(inst, 2, 1)
    assert single_solution_metrics(run, inst).best_single_ratio == pytest.approx(1.0)
    g = random_graph(6, n=12)
    same = InfluenceInstance(g, [g], 1.0, 0)
    run = robust_influence(same, 2, 6)
    m = single_solution_metrics(run, same)
    assert m.best_single_ratio == pytest.approx(1.0)
    assert 0 < m.exhaustive_ratio <= 1.0 + 1e-12
