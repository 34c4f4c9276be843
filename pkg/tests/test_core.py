import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from robustopt import (CorruptedStateError, ExactFiniteOracle, FunctionLosses, FunctionOracle, LossRangeError, MixtureLoss,
                       MwuConfig, OracleFailure, Sense, Simplex, TableLosses, average_solution,
                       bottleneck_of_distribution, eta_default, eta_gamma, exact_finite_oracle, minimax_value,
                       mwu_weights, regret_bound, run_improper_robust, run_infinite_robust, simplex_projection)
from robustopt.core import EuclideanBall, check_weights

from conftest import random_table


def exact_run(table, T, eta=None, sense=Sense.LOSS, seed=0):
    losses = TableLosses(table)
    oracle = exact_finite_oracle(range(len(table)), losses, sense)
    return run_improper_robust(losses, oracle, MwuConfig(T=T, eta=eta, sense=sense, seed=seed))


# step sizes and bounds

@pytest.mark.parametrize("m,T,expected", [(1, 10, 0.0), (4, 50, 0.11774), (10, 200, 0.07587)])
def test_eta_default(m, T, expected):
    assert eta_default(m, T) == pytest.approx(expected, abs=5e-6)


def test_eta_gamma():
    assert eta_gamma(4, 50, 0.5) == pytest.approx(eta_default(4, 50), rel=1e-12)
    # sqrt(ln 4 / 2) * 50**-0.1 = 0.56301
    assert eta_gamma(4, 50, 0.1) == pytest.approx(0.5630095, abs=1e-6)
    assert eta_gamma(2, 1, 1.0) == pytest.approx(0.5887, abs=5e-5)


def test_regret_bound():
    assert regret_bound(1, 100) == 0
    assert regret_bound(4, 50) == pytest.approx(0.2355, abs=5e-5)
    mult, add = regret_bound(4, 50, eta=0.1)
    assert mult == pytest.approx(1.1)
    assert add == pytest.approx(0.2773, abs=5e-5)


# weights

def test_mwu_weights_examples():
    assert np.allclose(mwu_weights(np.zeros(5), 0.7), np.full(5, 0.2))
    assert np.allclose(mwu_weights([1.0, 0.0], math.log(2), Sense.LOSS), [2 / 3, 1 / 3])
    assert np.allclose(mwu_weights([1.0, 0.0], math.log(2), Sense.REWARD), [1 / 3, 2 / 3])


def test_mwu_weights_rejects_non_finite():
    with pytest.raises(CorruptedStateError):
        mwu_weights([0.0, np.nan], 0.1)


@given(arrays(float, st.integers(1, 10), elements=st.floats(0, 1e6)), st.floats(0, 50),
       st.sampled_from([Sense.LOSS, Sense.REWARD]))
def test_mwu_weights_are_distributions(cum, eta, sense):
    w = mwu_weights(cum, eta, sense)
    assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-9


def test_check_weights():
    with pytest.raises(ValueError):
        check_weights([0.5, 0.6])
    with pytest.raises(ValueError):
        check_weights([1.0], m=2)


# oracle and run

def test_exact_oracle_examples():
    table = {"a": (0.0, 1.0), "b": (1.0, 0.0)}
    losses = FunctionLosses([lambda x: table[x][0], lambda x: table[x][1]])
    oracle = ExactFiniteOracle(["a", "b"], losses)
    assert oracle.solve([1, 0]) == "a"
    assert oracle.solve([0.5, 0.5]) == "a"
    assert ExactFiniteOracle(["a"], losses).solve([0.2, 0.8]) == "a"
    with pytest.raises(ValueError):
        ExactFiniteOracle([], losses)


def test_single_objective_run_is_constant():
    table = np.array([[0.7], [0.2], [0.5]])
    run = exact_run(table, 5)
    assert run.solutions == [1] * 5
    assert run.bottleneck == pytest.approx(0.2)


def test_regret_bound_on_random_table():
    table = random_table(11, 8, 4)
    run = exact_run(table, 1000)
    assert run.bottleneck <= minimax_value(table) + regret_bound(4, 1000) + 1e-9


def test_approximate_oracle_bound():
    # a deliberately sloppy oracle: among solutions within factor alpha of the best expected loss it picks the worst
    table = random_table(12, 8, 4) * 0.5 + 0.25
    losses = TableLosses(table)
    alpha = 1.25

    def sloppy(w):
        expected = table @ w
        ok = np.nonzero(expected <= alpha * expected.min())[0]
        return int(ok[np.argmax(expected[ok])])

    run = run_improper_robust(losses, FunctionOracle(sloppy, alpha=alpha), MwuConfig(T=1000))
    assert run.bottleneck <= alpha * minimax_value(table) + regret_bound(4, 1000) + 1e-9


def test_run_result_invariants():
    table = random_table(3, 6, 3)
    run = exact_run(table, 50)
    assert np.array_equal(run.loss_table, table[run.solutions])
    assert run.bottleneck == pytest.approx(table[run.solutions].mean(axis=0).max())
    assert np.allclose(run.weights.sum(axis=1), 1, atol=1e-9)
    assert run.prefix_bottlenecks()[-1] == pytest.approx(run.bottleneck)


def test_run_is_deterministic():
    table = random_table(4, 10, 5)
    a, b = exact_run(table, 200, seed=9), exact_run(table, 200, seed=9)
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.loss_table, b.loss_table)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 6), st.integers(2, 8))
def test_reward_loss_duality(seed, m, n):
    table = random_table(seed, n, m)
    loss = exact_run(1 - table, 100, sense=Sense.LOSS)
    reward = exact_run(table, 100, sense=Sense.REWARD)
    assert np.allclose(loss.weights, reward.weights, atol=1e-12, rtol=0)


def test_dominant_objective_weight_non_decreasing():
    table = np.array([[0.9, 0.1, 0.2], [0.8, 0.3, 0.1], [0.95, 0.5, 0.4]])
    run = exact_run(table, 100)
    assert np.all(np.diff(run.weights[:, 0]) >= -1e-15)


def test_oracle_failure_reports_round():
    calls = []

    def flaky(w):
        calls.append(1)
        if len(calls) == 4:
            raise RuntimeError("boom")
        return 0

    with pytest.raises(OracleFailure) as info:
        run_improper_robust(TableLosses([[0.1, 0.2]]), FunctionOracle(flaky), MwuConfig(T=10))
    assert info.value.round_index == 3


def test_out_of_range_loss_aborts():
    with pytest.raises(LossRangeError):
        run_improper_robust(TableLosses([[0.1, 1.5]]), FunctionOracle(lambda w: 0), MwuConfig(T=3))


# distributions

def test_bottleneck_of_distribution():
    losses = TableLosses([[0.2, 0.8], [0.6, 0.4]])
    assert bottleneck_of_distribution([0, 1], losses, Sense.LOSS) == pytest.approx(0.6)
    assert bottleneck_of_distribution([0, 1], losses, Sense.REWARD) == pytest.approx(0.4)
    assert bottleneck_of_distribution([0], TableLosses([[0.3]])) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        bottleneck_of_distribution([], losses)


def test_average_solution():
    v = np.array([0.3, 1.2])
    assert np.array_equal(average_solution([v]), v)
    assert np.allclose(average_solution([[0, 1], [1, 0]]), [0.5, 0.5])
    assert np.allclose(average_solution([v] * 7), v)
    with pytest.raises(ValueError):
        average_solution([[1, 2], [1, 2, 3]])


# projections and the gradient adversary

def test_simplex_projection_examples():
    assert np.allclose(simplex_projection([2, 0]), [1, 0])
    assert np.allclose(simplex_projection([3.3] * 4), [0.25] * 4)
    v = np.array([0.2, 0.5, 0.3])
    assert np.allclose(simplex_projection(v), v)


vectors = arrays(float, 6, elements=st.floats(-10, 10))


@given(vectors, vectors)
def test_simplex_projection_non_expansive(u, v):
    pu, pv = simplex_projection(u), simplex_projection(v)
    assert np.all(pu >= 0) and abs(pu.sum() - 1) < 1e-9
    assert np.allclose(simplex_projection(pu), pu, atol=1e-12)
    assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-9


@given(vectors)
def test_ball_projection(v):
    p = EuclideanBall(6, 2.0).project(v)
    assert np.linalg.norm(p) <= 2.0 + 1e-12


def test_pgd_single_round_and_zero_gradient():
    table = random_table(5, 6, 3)
    losses = TableLosses(table)
    problem = MixtureLoss(losses, exact_finite_oracle(range(6), losses))
    run = run_infinite_robust(problem, Simplex(3), T=1)
    assert np.allclose(run.params[0], np.full(3, 1 / 3))

    zero = MixtureLoss(TableLosses(np.zeros((6, 3))), exact_finite_oracle(range(6), TableLosses(np.zeros((6, 3)))))
    run = run_infinite_robust(zero, Simplex(3), T=20)
    assert np.allclose(run.params, run.params[0])


def test_pgd_matches_mwu_on_finite_instance():
    table = random_table(6, 12, 4)
    losses = TableLosses(table)
    oracle = exact_finite_oracle(range(12), losses)
    pgd = run_infinite_robust(MixtureLoss(losses, oracle), Simplex(4), T=2000)
    mwu = run_improper_robust(losses, oracle, MwuConfig(T=2000))
    assert abs(pgd.bottleneck(losses) - mwu.bottleneck) <= 0.05
