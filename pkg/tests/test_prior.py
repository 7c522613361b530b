import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddprior.correlation import CorrelationMode, rho
from ddprior.exceptions import PriorSpecError
from ddprior.prior import (DdPrior, MddPrior, gamma_matrix, gamma_of_fg, mc_covariance_model,
                           mdd_covariance_model, mdd_to_dd, row_codes, sample_prior)

MU = [0.3, 0.7]


def test_row_codes_mixed_radix():
    np.testing.assert_array_equal(row_codes((2, 3))[:4], [[0, 0], [0, 1], [0, 2], [1, 0]])
    assert row_codes(()).shape == (1, 0)


@pytest.mark.parametrize("kwargs", [
    dict(alpha=0.0), dict(mu=[0.5, 0.6]), dict(mu=[1.0, 0.0]), dict(mu=[1.0]),
    dict(pi0=0.5, pi2=0.6), dict(pi0=-0.1, pi2=1.1),
])
def test_mdd_validation(kwargs):
    base = dict(alpha=2.0, mu=[0.5, 0.5], pi0=0.0, pi_w=[0.0, 0.0], pi2=1.0,
                parent_sizes=(2, 2))
    with pytest.raises(PriorSpecError):
        MddPrior(**{**base, **kwargs})


def test_dd_validation():
    with pytest.raises(PriorSpecError, match="shape"):
        DdPrior([1, 1], [np.ones((3, 2))], np.ones((2, 2)), (2,))
    with pytest.raises(PriorSpecError, match="positive total"):
        DdPrior([0, 0], [], np.zeros((1, 2)))
    with pytest.raises(PriorSpecError, match="nonnegative"):
        DdPrior([1, -1], [], np.ones((1, 2)))


def test_symmetric_split_and_root_folding():
    p = MddPrior.symmetric(2.0, MU, (0.2, 0.6, 0.2), (2, 3, 2))
    np.testing.assert_allclose(p.pi_w, [0.2, 0.2, 0.2])
    root = MddPrior.symmetric(2.0, MU, (0.2, 0.6, 0.2), ())
    assert root.pi2 == pytest.approx(0.8) and root.n_rows == 1
    flat = MddPrior.flat(3, (0, 0, 1), (2,))
    assert flat.alpha == 3 and np.allclose(flat.mu, 1 / 3)


def test_mdd_rows_are_dirichlet_alpha_mu():
    p = MddPrior.symmetric(3.0, MU, (0.25, 0.5, 0.25), (2, 2))
    dd = mdd_to_dd(p)
    np.testing.assert_allclose(dd.row_alpha(), np.tile(3.0 * np.array(MU), (4, 1)))
    np.testing.assert_allclose(dd.means(), p.means())
    assert dd.n_components == 2 * (1 + 4 + 4)


def test_gamma_matrix_matches_pairwise_definition():
    p = MddPrior(2.0, MU, 0.1, [0.2, 0.3, 0.15], 0.25, (2, 3, 2))
    gam = gamma_matrix(p)
    codes = row_codes(p.parent_sizes)
    for f in range(len(codes)):
        for g in range(len(codes)):
            assert gam[f, g] == pytest.approx(gamma_of_fg(p, codes[f], codes[g]), abs=1e-15)
    assert np.allclose(np.diag(gam), 1.0)
    # rows differing on every parent share only the constant term
    assert gam[0, -1] == pytest.approx(0.1)


def test_covariance_model_structure():
    p = MddPrior.symmetric(2.0, MU, (0.25, 0.5, 0.25), (2, 2))
    cov = mdd_covariance_model(p, CorrelationMode.EXACT_QUADRATURE)
    var = np.array(MU) * (1 - np.array(MU)) / 3.0
    np.testing.assert_allclose(np.einsum("xff->xf", cov.cov), np.repeat(var[:, None], 4, 1))
    np.testing.assert_allclose(cov.correlation()[0], cov.rho, atol=1e-14)
    assert cov.rho[0, 1] == pytest.approx(rho(2.0, 0.5, "exact"))
    assert cov.sigma_ff == pytest.approx(var.sum())
    assert np.all(np.linalg.eigvalsh(cov.rho) > -1e-12)


def test_sampling_is_reproducible_and_chunk_invariant():
    p = MddPrior.symmetric(2.0, MU, (0.25, 0.5, 0.25), (2, 2))
    a = sample_prior(p, seed=11, count=10, chunk_size=4)
    b = sample_prior(p, seed=11, count=20, chunk_size=4, workers=3)
    np.testing.assert_array_equal(a.theta, b.theta[:10])
    c = sample_prior(p, seed=12, count=10, chunk_size=4)
    assert not np.allclose(a.theta, c.theta)
    np.testing.assert_allclose(a.theta.sum(axis=2), 1.0)
    assert a.rng.startswith("numpy.PCG64") and len(a) == 10


def test_zero_shapes_consume_no_randomness():
    p = MddPrior.symmetric(2.0, MU, (0.0, 0.0, 1.0), (2, 2))
    got = sample_prior(p, seed=5, count=7).theta
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(5, spawn_key=(0,))))
    eta = rng.standard_gamma(2.0 * np.array(MU), size=(7, 4, 2))
    np.testing.assert_array_equal(got, eta / eta.sum(axis=2, keepdims=True))


def _check_moments(theta, alpha):
    """Row means and variances within 4 SE of the Dirichlet values for shapes ``alpha``."""
    total = alpha.sum(axis=1, keepdims=True)
    mean = alpha / total
    var = mean * (1 - mean) / (total + 1)
    n = len(theta)
    se_mean = theta.std(axis=0) / np.sqrt(n)
    dev = theta - theta.mean(axis=0)
    m4 = (dev ** 4).mean(axis=0)
    v = (dev ** 2).mean(axis=0)
    se_var = np.sqrt((m4 - v ** 2) / n)
    assert np.all(np.abs(theta.mean(axis=0) - mean) < 4 * se_mean)
    assert np.all(np.abs(v - var) < 4 * se_var)


def test_sampled_moments_match_dirichlet():
    p = MddPrior.symmetric(2.0, MU, (0.25, 0.5, 0.25), (2, 2))
    _check_moments(sample_prior(p, seed=1, count=200_000).theta, mdd_to_dd(p).row_alpha())


def test_general_dd_rows_have_their_own_dirichlet_moments():
    p = DdPrior([0.2, 0.5, 0.1], [np.array([[1.0, 0.0, 0.3], [0.0, 2.0, 0.3]])],
                np.array([[0.5, 0.5, 0.5], [0.0, 0.2, 1.0]]))
    _check_moments(sample_prior(p, seed=4, count=200_000).theta, p.row_alpha())


def test_mc_covariance_agrees_with_exact_model():
    p = MddPrior.symmetric(2.0, MU, (0.25, 0.5, 0.25), (2, 2))
    exact = mdd_covariance_model(p, CorrelationMode.EXACT_QUADRATURE)
    mc = mc_covariance_model(p, seed=3, samples=200_000)
    z = np.abs(mc.cov - exact.cov) / mc.cov_se
    assert z.max() < 4.5
    assert mc.kind == "mc" and mc.info["samples"] == 200_000 and not mc.is_mdd


def test_mc_requires_enough_samples():
    p = MddPrior.symmetric(2.0, MU, (0, 0, 1), ())
    with pytest.raises(ValueError):
        mc_covariance_model(p, seed=0, samples=100)
    with pytest.raises(ValueError):
        sample_prior(p, seed=None, count=3)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4).filter(lambda v: sum(v) > 0.1))
def test_gamma_in_unit_interval(weights):
    w = np.array(weights) / sum(weights)
    p = MddPrior(1.5, MU, w[0], w[1:3], w[3], (2, 3))
    gam = gamma_matrix(p)
    assert np.all(gam >= -1e-15) and np.all(gam <= 1 + 1e-15)
    np.testing.assert_allclose(gam, gam.T)


def test_residual_only_rows_are_uncorrelated():
    p = MddPrior.symmetric(2.0, MU, (0, 0, 1), (2, 2))
    theta = sample_prior(p, seed=2, count=100_000).theta[:, :, 0]
    corr = np.corrcoef(theta.T)
    off = corr[~np.eye(4, dtype=bool)]
    assert np.abs(off).max() < 4 / np.sqrt(100_000)
