"""Optimal linear estimators of CP-table entries.

For a target row ``f`` the estimate is a weighted sum over the solve set
``F^c``: the active rows (``n_g > 0``) contribute their (mean-shifted)
sample proportions and the pseudo-row ``f*`` contributes the prior mean of
row ``f``.  The weights sum to one and minimise ``a' B a`` where ``B`` holds
the expected cross products of the errors.  One weight vector serves every
column ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .correlation import DEFAULT_ANCHOR, CorrelationMode
from .exceptions import PreconditionError, PriorSpecError, SolverError
from .network import CountTable, ProportionTable, proportions
from .prior import (CovarianceModel, DdPrior, MddPrior, mc_covariance_model,
                    mdd_covariance_model, row_codes)

__all__ = [
    "PSEUDO_ROW",
    "EstimationContext",
    "BMatrix",
    "WeightSolution",
    "EstimateTable",
    "build_context",
    "build_b_mdd",
    "build_b_general",
    "solve_weights",
    "weight_matrix",
    "estimate_node",
    "mp_independent",
    "pooled_estimates",
    "prop3_diagnostic",
    "covariance_for",
]

PSEUDO_ROW = "f*"
SINGULAR_CONDITION = 1e12


@dataclass
class EstimationContext:
    """Solve set for one target row.

    ``rows`` lists the active row indices; the pseudo-row is always the last
    entry of the solve set, so ``d = len(rows) + 1``.  ``p_star[i]`` is the
    shifted proportion vector of solve-set member ``i``.
    """

    target: int
    rows: np.ndarray
    n: np.ndarray
    p_star: np.ndarray

    @property
    def d(self) -> int:
        return len(self.rows) + 1

    @property
    def labels(self) -> list:
        return [int(r) for r in self.rows] + [PSEUDO_ROW]


@dataclass
class BMatrix:
    matrix: np.ndarray
    labels: list
    scaled: bool = False


@dataclass
class WeightSolution:
    """Weights over the solve set, the achieved ``a' B a`` and solver diagnostics."""

    weights: np.ndarray
    labels: list
    mse: float
    multiplier: float
    condition: float
    residual: float
    unique: bool = True

    def as_dict(self) -> dict:
        return dict(zip(self.labels, (float(w) for w in self.weights)))


@dataclass
class EstimateTable:
    """Estimates ``theta[f, x]`` for a node plus the weights behind them.

    ``weights[f]`` is a length ``n_rows + 1`` vector: entry ``g`` is the
    weight given to row ``g`` when estimating row ``f`` (zero for inactive
    rows) and the last entry is the pseudo-row weight.
    """

    node: str
    theta: np.ndarray
    raw: np.ndarray
    weights: np.ndarray
    solutions: list
    clamped: np.ndarray
    info: dict = field(default_factory=dict)


def build_context(target: int, props: ProportionTable,
                  means: np.ndarray | None = None) -> EstimationContext:
    """Solve set and shifted proportions for ``target``.

    ``means[g, x]`` are prior means; proportions of active rows are moved to
    share the target's prior mean.  Without ``means`` (constant means, as in
    MDD priors) the pseudo-row proportions must be supplied later, so the
    last row of ``p_star`` is NaN.
    """
    rows = props.active_rows
    n = props.n[rows].astype(float)
    p = props.p[rows]
    if means is None:
        pseudo = np.full((1, props.p.shape[1]), np.nan)
        p_star = np.vstack([p, pseudo])
    else:
        means = np.asarray(means, dtype=float)
        shifted = p - means[rows] + means[target]
        p_star = np.vstack([shifted, means[target][None, :]])
    return EstimationContext(int(target), rows, n, p_star)


def build_b_mdd(ctx: EstimationContext, cov: CovarianceModel, scaled: bool = True) -> BMatrix:
    """B for an MDD prior from row correlations; ``scaled`` drops sigma_ff."""
    if not cov.is_mdd:
        raise PriorSpecError("build_b_mdd needs an MDD covariance model")
    f = ctx.target
    r = cov.rho
    rows = ctx.rows
    d = ctx.d
    b = np.empty((d, d))
    r_fg = r[f, rows]
    b[:-1, :-1] = 1.0 + r[np.ix_(rows, rows)] - r_fg[:, None] - r_fg[None, :]
    b[:-1, :-1] += np.diag(cov.alpha / ctx.n)
    b[:-1, -1] = b[-1, :-1] = 1.0 - r_fg
    b[-1, -1] = 1.0
    if not scaled:
        b *= cov.sigma_ff
    return BMatrix(b, ctx.labels, scaled)


def build_b_general(ctx: EstimationContext, cov: CovarianceModel) -> BMatrix:
    """B from arbitrary prior means and same-column covariances (unscaled)."""
    f = ctx.target
    rows = ctx.rows
    sig = cov.row_cov()
    mu = cov.means
    var_xgg = np.einsum("xgg->gx", cov.cov)[rows]
    within = np.sum(mu[rows] * (1.0 - mu[rows]) - var_xgg, axis=1)
    d = ctx.d
    b = np.empty((d, d))
    s_gf = sig[rows, f]
    b[:-1, :-1] = sig[f, f] + sig[np.ix_(rows, rows)] - s_gf[:, None] - s_gf[None, :]
    b[:-1, :-1] += np.diag(within / ctx.n)
    b[:-1, -1] = b[-1, :-1] = sig[f, f] - s_gf
    b[-1, -1] = sig[f, f]
    return BMatrix(b, ctx.labels, False)


def solve_weights(B: BMatrix | np.ndarray, labels: Sequence | None = None) -> WeightSolution:
    """Minimise ``a' B a`` subject to ``sum(a) = 1``.

    Well-conditioned ``B`` goes through a Cholesky solve of ``B a = 1``
    followed by normalisation.  When ``B`` is singular or its condition
    number exceeds 1e12 the optimum is not unique; the minimum-norm solution
    of the bordered system ``[[B, 1], [1', 0]]`` is returned and ``unique``
    is False.  The optimality condition ``B a = c 1`` is checked before
    returning.
    """
    if isinstance(B, BMatrix):
        labels = B.labels if labels is None else labels
        mat = np.asarray(B.matrix, dtype=float)
    else:
        mat = np.asarray(B, dtype=float)
    d = mat.shape[0]
    if mat.ndim != 2 or mat.shape != (d, d) or d < 1:
        raise SolverError("B must be a non-empty square matrix")
    if labels is None:
        labels = list(range(d))
    if not np.all(np.isfinite(mat)):
        raise SolverError("B has non-finite entries")
    norm = float(np.max(np.abs(mat))) or 1.0
    if np.max(np.abs(mat - mat.T)) > 1e-12 * norm:
        raise SolverError("B is not symmetric")
    mat = 0.5 * (mat + mat.T)
    eig = np.linalg.eigvalsh(mat)
    if eig[0] < -1e-9 * norm:
        raise SolverError(f"B is not nonnegative definite (smallest eigenvalue {eig[0]:.3g})")
    ones = np.ones(d)
    condition = float(eig[-1] / eig[0]) if eig[0] > 0 else np.inf
    unique = condition <= SINGULAR_CONDITION
    if unique:
        x = linalg.cho_solve(linalg.cho_factor(mat), ones)
        a = x / x.sum()
    else:
        kkt = np.zeros((d + 1, d + 1))
        kkt[:d, :d] = mat
        kkt[:d, d] = kkt[d, :d] = 1.0
        rhs = np.zeros(d + 1)
        rhs[d] = 1.0
        a = (np.linalg.pinv(kkt, rcond=1e-13) @ rhs)[:d]
    ba = mat @ a
    mse = float(a @ ba)
    c = mse
    residual = float(np.max(np.abs(ba - c)))
    if abs(a.sum() - 1.0) > 1e-10 or residual > 1e-8 * norm:
        raise SolverError(
            f"optimality check failed: sum(a)-1={a.sum() - 1:.3g}, residual={residual:.3g}")
    return WeightSolution(a, list(labels), mse, c, condition, residual, unique)


def covariance_for(prior, mode=CorrelationMode.QUADRATIC_APPROX, anchor=DEFAULT_ANCHOR,
                   seed=None, mc_samples=200_000) -> CovarianceModel:
    """Covariance model for an MDD prior, a general DD prior, or pass-through."""
    if isinstance(prior, CovarianceModel):
        return prior
    if isinstance(prior, MddPrior):
        return mdd_covariance_model(prior, mode, anchor)
    if isinstance(prior, DdPrior):
        if seed is None:
            raise ValueError("a seed is required to simulate covariances of a general DD prior")
        return mc_covariance_model(prior, seed, mc_samples)
    raise TypeError(f"unsupported prior {type(prior).__name__}")


def weight_matrix(n: np.ndarray, cov: CovarianceModel) -> tuple[np.ndarray, list]:
    """Optimal weights for every target row given row counts ``n``.

    Returns ``W`` of shape ``(n_rows, n_rows + 1)`` (see :class:`EstimateTable`)
    and the per-row :class:`WeightSolution` objects.  The weights depend on the
    counts only, not on the observed proportions.
    """
    n = np.asarray(n)
    n_rows = len(n)
    n_x = cov.means.shape[1]
    props = ProportionTable("", np.zeros((n_rows, n_x)), n)
    W = np.zeros((n_rows, n_rows + 1))
    solutions = []
    for f in range(n_rows):
        ctx = build_context(f, props, None if cov.is_mdd else cov.means)
        B = build_b_mdd(ctx, cov) if cov.is_mdd else build_b_general(ctx, cov)
        sol = solve_weights(B)
        W[f, ctx.rows] = sol.weights[:-1]
        W[f, -1] = sol.weights[-1]
        solutions.append(sol)
    return W, solutions


def _apply_weights(W, props: ProportionTable, means: np.ndarray) -> np.ndarray:
    """theta[f, x] = sum_g W[f, g] p*[g, x] + W[f, f*] mu[f, x]."""
    p = np.where(props.active[:, None], props.p, 0.0)
    mean_shift = means[None, :, :] - means[:, None, :]          # mu[f] - mu[g]
    shifted = (p[None, :, :] + mean_shift) * props.active[None, :, None]
    return np.einsum("fg,fgx->fx", W[:, :-1], shifted) + W[:, -1:] * means


def estimate_node(counts: CountTable, prior,
                  mode: CorrelationMode | str = CorrelationMode.QUADRATIC_APPROX,
                  adjust: bool = False, renormalize: bool = False,
                  anchor: CorrelationMode | str = DEFAULT_ANCHOR,
                  seed: int | None = None, mc_samples: int = 200_000) -> EstimateTable:
    """Optimal linear estimates for every row of one CP-table.

    ``prior`` is an :class:`MddPrior`, a :class:`DdPrior` (covariances by
    simulation, ``seed`` required) or a ready :class:`CovarianceModel`.
    With ``adjust`` each estimate outside [0, 1] is moved to the nearer
    bound and flagged; ``renormalize`` then rescales adjusted rows to sum to one.
    """
    cov = covariance_for(prior, mode, anchor, seed, mc_samples)
    if cov.means.shape != counts.counts.shape:
        raise PriorSpecError(
            f"prior covers a {cov.means.shape} table, counts are {counts.counts.shape}")
    props = proportions(counts)
    W, solutions = weight_matrix(props.n, cov)
    raw = _apply_weights(W, props, cov.means)
    theta = raw.copy()
    clamped = np.zeros(raw.shape, dtype=bool)
    if adjust:
        clamped = (raw < 0.0) | (raw > 1.0)
        theta = np.clip(raw, 0.0, 1.0)
        if renormalize:
            rows = clamped.any(axis=1)
            theta[rows] /= theta[rows].sum(axis=1, keepdims=True)
    info = {"covariance": cov.kind, **cov.info,
            "nonunique_rows": [f for f, s in enumerate(solutions) if not s.unique]}
    return EstimateTable(counts.node, theta, raw, W, solutions, clamped, info)


def mp_independent(counts: CountTable, alpha: float, mu: Sequence[float]) -> np.ndarray:
    """Mean posterior under independent Dirichlet rows: (m + alpha mu) / (n + alpha)."""
    m = counts.counts.astype(float)
    mu = np.asarray(mu, dtype=float)
    return (m + alpha * mu) / (m.sum(axis=1, keepdims=True) + alpha)


def pooled_estimates(counts: CountTable, alpha: float, mu: Sequence[float],
                     pool="all", parent_sizes: Sequence[int] = ()) -> np.ndarray:
    """Mean posterior after pooling counts over rows.

    ``pool="all"`` pools every row (the marginal of X).  An integer ``pool``
    pools the rows that agree with the target on that parent.
    """
    m = counts.counts.astype(float)
    mu = np.asarray(mu, dtype=float)
    if pool == "all":
        m_x = m.sum(axis=0)
        row = (m_x + alpha * mu) / (m_x.sum() + alpha)
        return np.broadcast_to(row, m.shape).copy()
    w = int(pool)
    codes = row_codes(parent_sizes)
    if codes.shape[0] != m.shape[0]:
        raise ValueError("parent_sizes do not match the count table")
    out = np.empty_like(m)
    for value in np.unique(codes[:, w]):
        members = codes[:, w] == value
        m_x = m[members].sum(axis=0)
        out[members] = (m_x + alpha * mu) / (m_x.sum() + alpha)
    return out


def prop3_diagnostic(prior: MddPrior, n: Sequence[int], target: int,
                     factors: Sequence[float] = (1, 10, 100),
                     grow_others: bool = False,
                     mode=CorrelationMode.QUADRATIC_APPROX, anchor=DEFAULT_ANCHOR) -> list[dict]:
    """Track the target weight as its count grows.

    For each factor the target count becomes ``n[target] * factor`` (other
    counts too when ``grow_others``).  The report lists ``(1 - a_f) * n_f``
    and ``max_g |a_g| * n_f``; both stay bounded when the prior satisfies
    0 < mu < 1 and puts positive mass on the residual term or on every parent.
    """
    if not isinstance(prior, MddPrior):
        raise PreconditionError("prop3_diagnostic needs an MDD prior")
    if np.any(prior.mu <= 0) or np.any(prior.mu >= 1):
        raise PreconditionError("requires 0 < mu_x < 1")
    if not (prior.pi2 > 0 or (len(prior.pi_w) and np.all(prior.pi_w > 0))):
        raise PreconditionError("requires pi2 > 0 or pi_w > 0 for every parent")
    n = np.asarray(n, dtype=float)
    if n[target] <= 0:
        raise PreconditionError("target row needs a positive count")
    cov = mdd_covariance_model(prior, mode, anchor)
    report = []
    for factor in factors:
        counts = n * factor if grow_others else n.copy()
        counts[target] = n[target] * factor
        W, _ = weight_matrix(counts, cov)
        a = W[target]
        others = np.delete(a, target)
        n_f = counts[target]
        report.append({
            "factor": float(factor),
            "n_f": float(n_f),
            "a_f": float(a[target]),
            "scaled_gap": float((1.0 - a[target]) * n_f),
            "scaled_max_other": float(np.max(np.abs(others)) * n_f),
        })
    return report
