import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from ddprior.correlation import CorrelationMode
from ddprior.estimator import (PSEUDO_ROW, build_b_general, build_b_mdd, build_context,
                               estimate_node, mp_independent, pooled_estimates,
                               prop3_diagnostic, solve_weights, weight_matrix)
from ddprior.exceptions import PreconditionError, PriorSpecError, SolverError
from ddprior.network import CountTable, proportions
from ddprior.prior import DdPrior, MddPrior, mdd_covariance_model, mdd_to_dd


def brute_force(B):
    """Minimise a'Ba on sum(a) = 1 by parametrising the affine constraint set."""
    d = len(B)
    a0 = np.full(d, 1.0 / d)
    N = linalg.null_space(np.ones((1, d)))
    z = np.linalg.lstsq(N.T @ B @ N, -N.T @ B @ a0, rcond=None)[0]
    a = a0 + N @ z
    return a, float(a @ B @ a)


def random_counts(rng, rows, n_x=2, high=8, p_empty=0.2):
    m = rng.integers(0, high, size=(rows, n_x))
    m[rng.random(rows) < p_empty] = 0
    return CountTable("X", m)


# -- the constrained solver -------------------------------------------------

def test_solver_matches_brute_force_on_random_pd():
    rng = np.random.default_rng(0)
    for _ in range(200):
        d = rng.integers(1, 7)
        A = rng.normal(size=(d, d + 2))
        B = A @ A.T + 1e-3 * np.eye(d)
        sol = solve_weights(B)
        a, mse = brute_force(B)
        np.testing.assert_allclose(sol.weights, a, atol=1e-8)
        assert sol.mse == pytest.approx(mse, abs=1e-8)
        assert sol.unique and sol.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_singular_b_gives_minimum_norm_optimum():
    B = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 2.0]])
    sol = solve_weights(B)
    assert not sol.unique
    _, mse = brute_force(B)
    assert sol.mse == pytest.approx(mse, abs=1e-12)
    # the two duplicated entries share their weight equally under minimum norm
    assert sol.weights[0] == pytest.approx(sol.weights[1], abs=1e-12)


def test_solver_rejects_bad_matrices():
    with pytest.raises(SolverError, match="symmetric"):
        solve_weights(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(SolverError, match="definite"):
        solve_weights(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(SolverError, match="non-finite"):
        solve_weights(np.array([[np.nan]]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_optimality_condition(d, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d))
    B = A @ A.T + 0.1 * np.eye(d)
    sol = solve_weights(B)
    np.testing.assert_allclose(B @ sol.weights, sol.mse, rtol=1e-9, atol=1e-12)
    # no feasible perturbation improves the objective
    e = rng.normal(size=d)
    e -= e.mean()
    assert (sol.weights + 1e-3 * e) @ B @ (sol.weights + 1e-3 * e) >= sol.mse - 1e-14


# -- B construction ---------------------------------------------------------

def test_general_b_agrees_with_scaled_mdd_form():
    prior = MddPrior.symmetric(2.5, [0.2, 0.3, 0.5], (0.2, 0.5, 0.3), (2, 2))
    cov = mdd_covariance_model(prior, CorrelationMode.EXACT_QUADRATURE)
    props = proportions(CountTable("X", np.array([[3, 1, 0], [0, 0, 0], [2, 2, 2], [1, 0, 4]])))
    for f in range(4):
        scaled = build_b_mdd(build_context(f, props), cov)
        general = build_b_general(build_context(f, props, cov.means), cov)
        np.testing.assert_allclose(general.matrix, cov.sigma_ff * scaled.matrix, atol=1e-14)
        assert scaled.labels[-1] == PSEUDO_ROW and 1 not in scaled.labels


def test_pseudo_row_only_when_no_data():
    prior = MddPrior.symmetric(2.0, [0.5, 0.5], (0.25, 0.5, 0.25), (2,))
    est = estimate_node(CountTable("X", np.zeros((2, 2), dtype=int)), prior)
    np.testing.assert_allclose(est.theta, 0.5)
    np.testing.assert_allclose(est.weights[:, -1], 1.0)


# -- collapses to the classical estimators ----------------------------------

@pytest.mark.parametrize("mode", list(CorrelationMode))
def test_residual_only_prior_is_independent_mean_posterior(mode):
    rng = np.random.default_rng(1)
    for _ in range(20):
        counts = random_counts(rng, 8, n_x=3)
        mu = rng.dirichlet(np.ones(3))
        prior = MddPrior.symmetric(2.0, mu, (0, 0, 1), (2, 2, 2))
        est = estimate_node(counts, prior, mode)
        np.testing.assert_allclose(est.theta, mp_independent(counts, 2.0, mu), atol=1e-10)


def test_constant_only_prior_is_fully_pooled():
    rng = np.random.default_rng(2)
    for _ in range(20):
        counts = random_counts(rng, 8)
        prior = MddPrior.symmetric(3.0, [0.4, 0.6], (1, 0, 0), (2, 2, 2))
        est = estimate_node(counts, prior)
        np.testing.assert_allclose(est.theta, pooled_estimates(counts, 3.0, [0.4, 0.6]),
                                   atol=1e-10)


@pytest.mark.parametrize("w", [0, 1, 2])
def test_single_parent_prior_pools_on_that_parent(w):
    rng = np.random.default_rng(3 + w)
    sizes = (2, 3, 2)
    for _ in range(20):
        counts = random_counts(rng, 12)
        pi_w = np.zeros(3)
        pi_w[w] = 1.0
        prior = MddPrior(2.0, [0.5, 0.5], 0.0, pi_w, 0.0, sizes)
        est = estimate_node(counts, prior)
        np.testing.assert_allclose(
            est.theta, pooled_estimates(counts, 2.0, [0.5, 0.5], w, sizes), atol=1e-10)


# -- behaviour --------------------------------------------------------------

def test_minimum_mse_nonincreasing_in_counts():
    rng = np.random.default_rng(4)
    for _ in range(100):
        pi = rng.dirichlet(np.ones(3))
        prior = MddPrior.symmetric(rng.uniform(0.5, 10), [0.5, 0.5], pi, (2, 2))
        cov = mdd_covariance_model(prior)
        n = rng.integers(0, 6, size=4)
        f, g = rng.integers(0, 4, size=2)
        _, before = weight_matrix(n, cov)
        n2 = n.copy()
        n2[g] += 1
        _, after = weight_matrix(n2, cov)
        assert after[f].mse <= before[f].mse + 1e-12


def test_weights_sum_to_one_and_ignore_empty_rows():
    counts = CountTable("X", np.array([[3, 2], [0, 0], [1, 4], [5, 5]]))
    est = estimate_node(counts, MddPrior.symmetric(2.0, [0.5, 0.5], (0.2, 0.5, 0.3), (2, 2)))
    np.testing.assert_allclose(est.weights.sum(axis=1), 1.0)
    np.testing.assert_array_equal(est.weights[:, 1], 0.0)
    np.testing.assert_allclose(est.theta.sum(axis=1), 1.0)


def test_adjust_clamps_and_flags():
    # row 00 puts negative weight on row 11 (all ones), pulling its column 1 below zero
    counts = CountTable("X", np.array([[20, 0], [24, 0], [38, 0], [0, 29]]))
    prior = MddPrior.symmetric(2.0, [0.5, 0.5], (0.0, 1.0, 0.0), (2, 2))
    raw = estimate_node(counts, prior)
    assert (raw.raw < 0).any() or (raw.raw > 1).any()
    adj = estimate_node(counts, prior, adjust=True)
    assert adj.clamped.any()
    assert adj.theta.min() >= 0 and adj.theta.max() <= 1
    renorm = estimate_node(counts, prior, adjust=True, renormalize=True)
    np.testing.assert_allclose(renorm.theta.sum(axis=1), 1.0)


def test_general_dd_prior_by_simulation_matches_mdd():
    prior = MddPrior.symmetric(2.0, [0.4, 0.6], (0.25, 0.5, 0.25), (2, 2))
    counts = CountTable("X", np.array([[3, 2], [0, 1], [1, 4], [2, 0]]))
    exact = estimate_node(counts, prior, CorrelationMode.EXACT_QUADRATURE)
    sim = estimate_node(counts, mdd_to_dd(prior), seed=7, mc_samples=400_000)
    np.testing.assert_allclose(sim.theta, exact.theta, atol=5e-3)
    assert sim.info["covariance"] == "mc"


def test_general_dd_with_unequal_means():
    prior = DdPrior([0.5, 0.5], [np.array([[2.0, 0.2], [0.2, 2.0]])], np.full((2, 2), 0.5))
    counts = CountTable("X", np.array([[4, 1], [1, 4]]))
    est = estimate_node(counts, prior, seed=1, mc_samples=50_000)
    assert est.theta[0, 0] > 0.5 > est.theta[1, 0]
    with pytest.raises(ValueError, match="seed"):
        estimate_node(counts, prior)


def test_shape_mismatch_rejected():
    prior = MddPrior.symmetric(2.0, [0.5, 0.5], (0, 0, 1), (2,))
    with pytest.raises(PriorSpecError):
        estimate_node(CountTable("X", np.zeros((3, 2), dtype=int)), prior)


# -- weight decay for large counts ------------------------------------------

def test_prop3_diagnostic_bounded():
    prior = MddPrior.symmetric(2.0, [0.5, 0.5], (0.0, 1.0, 0.0), (2, 2))
    rep = prop3_diagnostic(prior, [10, 0, 10, 10], 0, factors=(1, 10, 100))
    gaps = [r["scaled_gap"] for r in rep]
    assert max(gaps) / min(gaps) <= 3
    assert [r["a_f"] for r in rep] == sorted(r["a_f"] for r in rep)


def test_prop3_preconditions():
    with pytest.raises(PreconditionError):
        prop3_diagnostic(MddPrior.symmetric(2.0, [0.5, 0.5], (1, 0, 0), (2,)), [5, 5], 0)
    with pytest.raises(PreconditionError):
        prop3_diagnostic(MddPrior.symmetric(2.0, [0.5, 0.5], (0, 0, 1), (2,)), [0, 5], 0)


def test_beats_random_feasible_weights():
    rng = np.random.default_rng(9)
    prior = MddPrior.symmetric(2.0, [0.5, 0.5], (0.2, 0.5, 0.3), (2, 2, 2))
    cov = mdd_covariance_model(prior)
    props = proportions(CountTable("X", rng.integers(1, 6, size=(8, 2))))
    B = build_b_mdd(build_context(3, props), cov).matrix
    best = solve_weights(B).mse
    trial = rng.normal(size=(1000, len(B)))
    trial += (1 - trial.sum(axis=1, keepdims=True)) / len(B)
    assert np.all(np.einsum("ki,ij,kj->k", trial, B, trial) >= best - 1e-14)


def test_active_target_row_decouples_in_b():
    prior = MddPrior.symmetric(3.0, [0.3, 0.7], (0.2, 0.5, 0.3), (2, 2))
    props = proportions(CountTable("X", np.array([[2, 3], [0, 0], [1, 1], [4, 0]])))
    b = build_b_mdd(build_context(0, props), mdd_covariance_model(prior)).matrix
    np.testing.assert_allclose(b[0, 1:], 0.0, atol=1e-15)
    np.testing.assert_allclose(b[1:, 0], 0.0, atol=1e-15)


def test_large_own_count_approaches_sample_proportion():
    prior = MddPrior.symmetric(2.0, [0.5, 0.5], (0.2, 0.5, 0.3), (2, 2))
    scaled = []
    for n_f in (100, 1000, 10000):
        m = np.array([[n_f // 4, n_f - n_f // 4], [1, 4], [3, 2], [0, 5]])
        est = estimate_node(CountTable("X", m), prior)
        scaled.append(abs(est.theta[0, 0] - 0.25) * n_f)
    assert max(scaled) < 5 and scaled[-1] <= 1.5 * scaled[0]
