"""Dependent Dirichlet priors for one CP-table.

A DD prior builds each unnormalised cell as a sum of independent Gamma
variables,

    eta[f, x] = eta0[x] + sum_w eta_w[f_w, x] + eta2[f, x],

and normalises per row.  Rows sharing a parent value (or sharing the
constant term) share Gamma components and are therefore correlated, while
every row is still marginally Dirichlet.  The multiplicative subfamily
(:class:`MddPrior`) ties all shapes to ``alpha * mu[x] * pi``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .correlation import DEFAULT_ANCHOR, CorrelationMode, rho
from .exceptions import PriorSpecError

__all__ = [
    "DdPrior",
    "MddPrior",
    "CovarianceModel",
    "PriorSamples",
    "row_codes",
    "mdd_to_dd",
    "gamma_of_fg",
    "gamma_matrix",
    "mdd_covariance_model",
    "sample_prior",
    "mc_covariance_model",
    "RNG_ALGORITHM",
    "DEFAULT_CHUNK",
]

RNG_ALGORITHM = "numpy.PCG64/SeedSequence(seed, spawn_key=(chunk,))"
DEFAULT_CHUNK = 8192
_SUM_TOL = 1e-12


def row_codes(parent_sizes: Sequence[int]) -> np.ndarray:
    """Parent codes of every row, last parent varying fastest."""
    parent_sizes = tuple(int(s) for s in parent_sizes)
    if not parent_sizes:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices(parent_sizes).reshape(len(parent_sizes), -1)
    return grids.T.copy()


@dataclass
class DdPrior:
    """General DD prior: Gamma shapes for the constant, per-parent and residual terms.

    Attributes
    ----------
    alpha0 : (n_x,) array
    alpha_w : list of (n_values_w, n_x) arrays, one per parent, in parent order
    alpha2 : (n_rows, n_x) array
    """

    alpha0: np.ndarray
    alpha_w: list
    alpha2: np.ndarray
    parent_sizes: tuple = ()
    node: str | None = None

    def __post_init__(self):
        self.alpha0 = np.asarray(self.alpha0, dtype=float)
        self.alpha_w = [np.asarray(a, dtype=float) for a in self.alpha_w]
        self.alpha2 = np.asarray(self.alpha2, dtype=float)
        if not self.parent_sizes:
            self.parent_sizes = tuple(a.shape[0] for a in self.alpha_w)
        self.parent_sizes = tuple(int(s) for s in self.parent_sizes)
        n_x = self.alpha0.shape[0]
        n_rows = int(np.prod(self.parent_sizes, dtype=np.int64))
        if len(self.alpha_w) != len(self.parent_sizes):
            raise PriorSpecError("need one alpha_w table per parent")
        for size, a in zip(self.parent_sizes, self.alpha_w):
            if a.shape != (size, n_x):
                raise PriorSpecError(f"alpha_w table has shape {a.shape}, expected {(size, n_x)}")
        if self.alpha2.shape != (n_rows, n_x):
            raise PriorSpecError(f"alpha2 has shape {self.alpha2.shape}, expected {(n_rows, n_x)}")
        for a in [self.alpha0, self.alpha2, *self.alpha_w]:
            if not np.all(np.isfinite(a)) or np.any(a < 0):
                raise PriorSpecError("Gamma shapes must be finite and nonnegative")
        if np.any(self.row_alpha().sum(axis=1) <= 0):
            raise PriorSpecError("every row needs a positive total shape")

    @property
    def n_x(self) -> int:
        return self.alpha0.shape[0]

    @property
    def n_rows(self) -> int:
        return self.alpha2.shape[0]

    @property
    def n_components(self) -> int:
        return self.n_x * (1 + sum(self.parent_sizes) + self.n_rows)

    def row_alpha(self) -> np.ndarray:
        """Dirichlet parameters alpha[f, x] of each row."""
        codes = row_codes(self.parent_sizes)
        total = self.alpha0[None, :] + self.alpha2
        for w, a in enumerate(self.alpha_w):
            total = total + a[codes[:, w]]
        return total

    def means(self) -> np.ndarray:
        a = self.row_alpha()
        return a / a.sum(axis=1, keepdims=True)


@dataclass
class MddPrior:
    """Multiplicative DD prior: shapes ``alpha * mu[x] * pi_term``.

    ``pi_w`` holds one weight per parent; ``pi0 + sum(pi_w) + pi2 = 1``.
    """

    alpha: float
    mu: np.ndarray
    pi0: float
    pi_w: np.ndarray
    pi2: float
    parent_sizes: tuple = ()
    node: str | None = None

    def __post_init__(self):
        self.alpha = float(self.alpha)
        self.mu = np.asarray(self.mu, dtype=float)
        self.pi_w = np.atleast_1d(np.asarray(self.pi_w, dtype=float))
        self.pi0 = float(self.pi0)
        self.pi2 = float(self.pi2)
        self.parent_sizes = tuple(int(s) for s in self.parent_sizes)
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise PriorSpecError(f"alpha must be positive, got {self.alpha}")
        if self.mu.ndim != 1 or len(self.mu) < 2:
            raise PriorSpecError("mu needs one entry per category (at least two)")
        if np.any(self.mu <= 0) or np.any(self.mu >= 1):
            raise PriorSpecError("mu entries must lie strictly between 0 and 1")
        if abs(self.mu.sum() - 1.0) > _SUM_TOL:
            raise PriorSpecError(f"mu must sum to 1, sums to {self.mu.sum()!r}")
        if len(self.pi_w) != len(self.parent_sizes):
            raise PriorSpecError(
                f"{len(self.pi_w)} parent weights for {len(self.parent_sizes)} parents")
        pis = np.concatenate([[self.pi0], self.pi_w, [self.pi2]])
        if np.any(pis < 0) or not np.all(np.isfinite(pis)):
            raise PriorSpecError("pi components must be nonnegative")
        if abs(pis.sum() - 1.0) > _SUM_TOL:
            raise PriorSpecError(f"pi components must sum to 1, sum to {pis.sum()!r}")

    @classmethod
    def symmetric(cls, alpha, mu, pi, parent_sizes, node=None) -> "MddPrior":
        """Split ``pi1`` evenly over the parents; ``pi = (pi0, pi1, pi2)``.

        With no parents the parent share has nothing to attach to and is
        moved into the residual term (a single row is Dirichlet either way).
        """
        pi0, pi1, pi2 = (float(v) for v in pi)
        parent_sizes = tuple(parent_sizes)
        k = len(parent_sizes)
        if k == 0:
            return cls(alpha, mu, pi0, [], pi1 + pi2, (), node)
        return cls(alpha, mu, pi0, np.full(k, pi1 / k), pi2, parent_sizes, node)

    @classmethod
    def flat(cls, n_x, pi, parent_sizes, node=None) -> "MddPrior":
        """Uniform Dirichlet rows: alpha = n_x and mu = 1/n_x."""
        return cls.symmetric(n_x, np.full(n_x, 1.0 / n_x), pi, parent_sizes, node)

    @property
    def n_x(self) -> int:
        return len(self.mu)

    @property
    def n_rows(self) -> int:
        return int(np.prod(self.parent_sizes, dtype=np.int64))

    @property
    def pi1(self) -> float:
        return float(self.pi_w.sum())

    @property
    def sigma_ff(self) -> float:
        """Sum over x of the prior variance of theta[x|f]; equal for every row."""
        return float(np.sum(self.mu * (1.0 - self.mu)) / (self.alpha + 1.0))

    def means(self) -> np.ndarray:
        return np.broadcast_to(self.mu, (self.n_rows, self.n_x)).copy()


def mdd_to_dd(spec: MddPrior) -> DdPrior:
    am = spec.alpha * spec.mu
    alpha_w = [np.broadcast_to(am * p, (size, spec.n_x)).copy()
               for p, size in zip(spec.pi_w, spec.parent_sizes)]
    alpha2 = np.broadcast_to(am * spec.pi2, (spec.n_rows, spec.n_x)).copy()
    return DdPrior(am * spec.pi0, alpha_w, alpha2, spec.parent_sizes, spec.node)


def gamma_of_fg(spec: MddPrior, f: Sequence[int], g: Sequence[int]) -> float:
    """Shared share of prior mass between rows ``f`` and ``g`` (parent code tuples)."""
    f = tuple(int(v) for v in f)
    g = tuple(int(v) for v in g)
    if len(f) != len(spec.parent_sizes) or len(g) != len(spec.parent_sizes):
        raise ValueError("row assignments must give one code per parent")
    shared = sum(p for p, a, b in zip(spec.pi_w, f, g) if a == b)
    return spec.pi0 + shared + (spec.pi2 if f == g else 0.0)


def gamma_matrix(spec: MddPrior) -> np.ndarray:
    """gamma for every pair of rows, shape ``(n_rows, n_rows)``."""
    codes = row_codes(spec.parent_sizes)
    agree = codes[:, None, :] == codes[None, :, :]
    gam = spec.pi0 + agree.astype(float) @ spec.pi_w if len(spec.pi_w) else \
        np.full((len(codes), len(codes)), spec.pi0)
    gam = gam + spec.pi2 * np.eye(len(codes))
    np.fill_diagonal(gam, 1.0)
    return gam


@dataclass
class CovarianceModel:
    """Prior means and same-column covariances of a CP-table.

    ``cov[x, f, g] = Cov(theta[x|f], theta[x|g])``.  MDD models additionally
    carry the row correlation matrix ``rho`` and the common row variance
    total ``sigma_ff``; Monte Carlo models carry standard errors instead.
    """

    means: np.ndarray
    cov: np.ndarray
    rho: np.ndarray | None = None
    sigma_ff: float | None = None
    alpha: float | None = None
    cov_se: np.ndarray | None = None
    means_se: np.ndarray | None = None
    kind: str = "mdd"
    info: dict = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return self.means.shape[0]

    @property
    def is_mdd(self) -> bool:
        return self.rho is not None and self.sigma_ff is not None and self.alpha is not None

    def row_cov(self) -> np.ndarray:
        """sigma[f, g] = sum over x of cov[x, f, g]."""
        return self.cov.sum(axis=0)

    def correlation(self) -> np.ndarray:
        """Per-column correlation matrices, shape ``(n_x, n_rows, n_rows)``."""
        sd = np.sqrt(np.einsum("xff->xf", self.cov))
        return self.cov / (sd[:, :, None] * sd[:, None, :])


def mdd_covariance_model(spec: MddPrior,
                         mode: CorrelationMode | str = CorrelationMode.QUADRATIC_APPROX,
                         anchor: CorrelationMode | str = DEFAULT_ANCHOR) -> CovarianceModel:
    mode = CorrelationMode.parse(mode)
    gam = gamma_matrix(spec)
    values, inverse = np.unique(np.round(gam, 14), return_inverse=True)
    rho_values = np.array([rho(spec.alpha, v, mode, anchor) for v in values])
    rho_mat = rho_values[inverse.reshape(gam.shape)]
    rho_mat = 0.5 * (rho_mat + rho_mat.T)
    var_x = spec.mu * (1.0 - spec.mu) / (spec.alpha + 1.0)
    cov = var_x[:, None, None] * rho_mat[None, :, :]
    return CovarianceModel(spec.means(), cov, rho=rho_mat, sigma_ff=spec.sigma_ff,
                           alpha=spec.alpha, kind="mdd",
                           info={"mode": mode.value, "anchor": CorrelationMode.parse(anchor).value})


@dataclass
class PriorSamples:
    """Sampled CP-tables ``theta[s, f, x]`` with their seed provenance."""

    theta: np.ndarray
    seed: int
    chunk_size: int
    rng: str = RNG_ALGORITHM

    def __len__(self):
        return self.theta.shape[0]

    def __getitem__(self, i):
        return self.theta[i]

    def __iter__(self):
        return iter(self.theta)


def _as_dd(spec) -> DdPrior:
    return mdd_to_dd(spec) if isinstance(spec, MddPrior) else spec


def _draw_chunk(spec: DdPrior, codes: np.ndarray, seed: int, chunk: int, size: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))
    # one row of draws per sample, components in fixed order (constant, parents, residual),
    # so any prefix of a chunk is the same whatever the requested count
    blocks = [spec.alpha0[None, :], *spec.alpha_w, spec.alpha2]
    shapes = np.concatenate([b.ravel() for b in blocks])
    draws = rng.standard_gamma(shapes, size=(size, len(shapes)))
    offsets = np.cumsum([0] + [b.size for b in blocks])
    parts = [draws[:, a:b].reshape((size,) + blk.shape)
             for a, b, blk in zip(offsets[:-1], offsets[1:], blocks)]
    eta = np.broadcast_to(parts[0], (size, spec.n_rows, spec.n_x)).copy()
    for w, draw in enumerate(parts[1:-1]):
        eta += draw[:, codes[:, w], :]
    eta += parts[-1]
    totals = eta.sum(axis=2, keepdims=True)
    if not np.all(totals > 0):
        raise FloatingPointError("a sampled row has zero Gamma total (shapes too small)")
    return eta / totals


def _chunks(count, chunk_size):
    return [(k, min(chunk_size, count - k * chunk_size))
            for k in range(-(-count // chunk_size))]


def sample_prior(spec: DdPrior | MddPrior, seed: int, count: int,
                 chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> PriorSamples:
    """Draw ``count`` CP-tables from a DD prior.

    Sample ``i`` comes from chunk ``i // chunk_size``, whose generator is seeded
    from ``(seed, chunk)`` alone, so the output does not depend on ``workers``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if seed is None:
        raise ValueError("a seed is required")
    spec = _as_dd(spec)
    codes = row_codes(spec.parent_sizes)
    jobs = _chunks(count, chunk_size)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _draw_chunk(spec, codes, seed, *job), jobs))
    else:
        parts = [_draw_chunk(spec, codes, seed, k, n) for k, n in jobs]
    return PriorSamples(np.concatenate(parts, axis=0), int(seed), chunk_size)


def mc_covariance_model(spec: DdPrior | MddPrior, seed: int, samples: int = 200_000,
                        chunk_size: int = DEFAULT_CHUNK) -> CovarianceModel:
    """Estimate means and same-column covariances of a DD prior by simulation.

    Two passes over the same seeded chunks: the first fixes the means, the
    second accumulates centred cross products and their squares, giving a
    standard error for every covariance entry.
    """
    if samples < 10_000:
        raise ValueError("mc_covariance_model needs at least 10^4 samples")
    spec = _as_dd(spec)
    codes = row_codes(spec.parent_sizes)
    jobs = _chunks(samples, chunk_size)

    total = np.zeros((spec.n_rows, spec.n_x))
    total_sq = np.zeros((spec.n_rows, spec.n_x))
    for k, n in jobs:
        theta = _draw_chunk(spec, codes, seed, k, n)
        total += theta.sum(axis=0)
        total_sq += (theta ** 2).sum(axis=0)
    means = total / samples
    means_se = np.sqrt(np.maximum(total_sq / samples - means ** 2, 0.0) / samples)

    shape = (spec.n_x, spec.n_rows, spec.n_rows)
    prod = np.zeros(shape)
    prod_sq = np.zeros(shape)
    for k, n in jobs:
        d = _draw_chunk(spec, codes, seed, k, n) - means
        outer = np.einsum("sfx,sgx->sxfg", d, d)
        prod += outer.sum(axis=0)
        prod_sq += (outer ** 2).sum(axis=0)
    cov = prod / (samples - 1)
    second = prod_sq / samples
    cov_se = np.sqrt(np.maximum(second - (prod / samples) ** 2, 0.0) / samples)
    return CovarianceModel(means, cov, cov_se=cov_se, means_se=means_se, kind="mc",
                           info={"seed": int(seed), "samples": int(samples),
                                 "chunk_size": chunk_size, "rng": RNG_ALGORITHM})
