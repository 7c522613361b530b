"""Choosing pi for symmetric MDD priors.

Two tools: the MSE-ratio, which prices using one pi when another is true,
and an empirical-Bayes fit of pi by regressing unbiased pairwise correlation
estimates on the fraction of parents two rows agree on.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .correlation import DEFAULT_ANCHOR, CorrelationMode
from .exceptions import PreconditionError, PriorSpecError
from .estimator import build_b_mdd, build_context, solve_weights
from .network import BeliefNet, ProportionTable
from .prior import MddPrior, mdd_covariance_model, row_codes

__all__ = [
    "PiVector",
    "Scenario",
    "MseRatioPoint",
    "RegressionSample",
    "PiFit",
    "FIGURE1_SELECTIONS",
    "figure1_scenario",
    "simplex_lattice",
    "mse_ratio",
    "mse_ratio_grid",
    "rho_hat_pairs",
    "fit_pi",
    "pool_across_tables",
]


@dataclass(frozen=True)
class PiVector:
    pi0: float
    pi1: float
    pi2: float

    def __post_init__(self):
        values = (self.pi0, self.pi1, self.pi2)
        if min(values) < 0 or abs(sum(values) - 1.0) > 1e-12:
            raise PriorSpecError(f"pi must lie in the simplex, got {values}")

    def __iter__(self):
        return iter((self.pi0, self.pi1, self.pi2))

    @classmethod
    def of(cls, value) -> "PiVector":
        return value if isinstance(value, cls) else cls(*(float(v) for v in value))


FIGURE1_SELECTIONS = (PiVector(0.0, 0.0, 1.0), PiVector(0.0, 1.0, 0.0),
                      PiVector(0.25, 0.5, 0.25))


@dataclass
class Scenario:
    """Row counts and marginal hyperparameters for MSE-ratio comparisons."""

    parent_sizes: tuple
    n: np.ndarray
    alpha: float
    mu: np.ndarray
    target: int = 0

    def __post_init__(self):
        self.parent_sizes = tuple(int(s) for s in self.parent_sizes)
        rows = int(np.prod(self.parent_sizes, dtype=np.int64))
        n = np.asarray(self.n, dtype=float)
        self.n = np.full(rows, float(n)) if n.ndim == 0 else n
        if self.n.shape != (rows,):
            raise ValueError(f"need {rows} row counts, got {self.n.shape}")
        self.mu = np.asarray(self.mu, dtype=float)

    def prior(self, pi) -> MddPrior:
        return MddPrior.symmetric(self.alpha, self.mu, tuple(PiVector.of(pi)), self.parent_sizes)


def figure1_scenario() -> Scenario:
    """Four binary parents, three observations in each of the 16 rows, flat binary rows."""
    return Scenario((2, 2, 2, 2), 3, 2.0, [0.5, 0.5])


@dataclass
class MseRatioPoint:
    pi_select: PiVector
    pi_true: PiVector
    ratio: float
    target: int


def _scaled_b(scenario: Scenario, pi, target, mode, anchor):
    cov = mdd_covariance_model(scenario.prior(pi), mode, anchor)
    n_x = len(scenario.mu)
    props = ProportionTable("", np.zeros((len(scenario.n), n_x)), scenario.n)
    ctx = build_context(target, props)
    return build_b_mdd(ctx, cov)


def mse_ratio(pi_select, pi_true, scenario: Scenario, target: int | None = None,
              mode=CorrelationMode.QUADRATIC_APPROX, anchor=DEFAULT_ANCHOR) -> MseRatioPoint:
    """MSE of the weights optimal for ``pi_select`` under ``pi_true``, over the minimum MSE."""
    pi_select, pi_true = PiVector.of(pi_select), PiVector.of(pi_true)
    target = scenario.target if target is None else target
    b_select = _scaled_b(scenario, pi_select, target, mode, anchor)
    b_true = _scaled_b(scenario, pi_true, target, mode, anchor)
    a = solve_weights(b_select).weights
    best = solve_weights(b_true)
    ratio = float(a @ b_true.matrix @ a) / best.mse
    return MseRatioPoint(pi_select, pi_true, ratio, target)


def simplex_lattice(step: float) -> list[PiVector]:
    """All (pi0, pi1, pi2) on the simplex with coordinates in multiples of ``step``.

    Ordered by pi2, then by pi0, matching plots with pi2 on the horizontal axis.
    """
    k = round(1.0 / step)
    if k < 1 or abs(k * step - 1.0) > 1e-9:
        raise ValueError("step must divide 1")
    points = []
    for i2 in range(k + 1):
        for i0 in range(k + 1 - i2):
            i1 = k - i0 - i2
            points.append(PiVector(i0 / k, i1 / k, i2 / k))
    return points


def mse_ratio_grid(pi_select, scenario: Scenario, step: float = 0.1,
                   mode=CorrelationMode.QUADRATIC_APPROX, anchor=DEFAULT_ANCHOR,
                   check_exchangeable: bool = True) -> list[MseRatioPoint]:
    pi_select = PiVector.of(pi_select)
    points = [mse_ratio(pi_select, p, scenario, mode=mode, anchor=anchor)
              for p in simplex_lattice(step)]
    if check_exchangeable and np.all(scenario.n == scenario.n[0]) and len(scenario.n) > 1:
        # symmetric prior with equal counts: every target row is equivalent
        probe = points[len(points) // 2]
        other = mse_ratio(pi_select, probe.pi_true, scenario,
                          target=len(scenario.n) - 1 - scenario.target, mode=mode, anchor=anchor)
        if not math.isclose(other.ratio, probe.ratio, rel_tol=1e-9):
            raise AssertionError("MSE-ratio differs between exchangeable target rows")
    return points


@dataclass
class RegressionSample:
    rho_hat: float
    c: float
    node: str | None = None
    pair: tuple = ()


def rho_hat_pairs(props: ProportionTable, alpha: float, mu: Sequence[float],
                  parent_sizes: Sequence[int], node: str | None = None) -> list[RegressionSample]:
    """Unbiased correlation estimates for every pair of distinct active rows.

    The per-column estimate ``(alpha+1)/(mu(1-mu)) (p_f - mu)(p_g - mu)`` is
    averaged over all columns; each term is unbiased so the average is too.
    ``c`` is the fraction of parents on which the two rows agree.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0) or np.any(mu >= 1):
        raise PriorSpecError("rho_hat needs 0 < mu_x < 1")
    rows = props.active_rows
    if len(rows) < 2:
        raise PreconditionError("need at least two active rows")
    codes = row_codes(parent_sizes)
    k = codes.shape[1]
    dev = (props.p - mu) / np.sqrt(mu * (1.0 - mu))
    samples = []
    for f, g in itertools.combinations(rows, 2):
        value = (alpha + 1.0) * float(np.mean(dev[f] * dev[g]))
        c = float(np.mean(codes[f] == codes[g])) if k else 0.0
        samples.append(RegressionSample(value, c, node, (int(f), int(g))))
    return samples


@dataclass
class PiFit:
    pi: PiVector
    path: str
    rss: float
    n_samples: int
    degenerate: bool = False
    candidates: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"pi0": self.pi.pi0, "pi1": self.pi.pi1, "pi2": self.pi.pi2,
                "path": self.path, "rss": self.rss, "n_samples": self.n_samples,
                "degenerate": self.degenerate,
                "rho_hat": "column average"}


def _rss(y, c, pi0, pi1):
    r = y - pi0 - pi1 * c
    return float(r @ r)


def _clip01(v):
    return min(max(v, 0.0), 1.0)


def _pi_from(pi0, pi1):
    pi0, pi1 = _clip01(pi0), _clip01(pi1)
    pi2 = 1.0 - pi0 - pi1
    if pi2 < 0:  # rounding on the pi0 + pi1 = 1 edge
        pi1 = 1.0 - pi0
        pi2 = 0.0
    return PiVector(pi0, pi1, pi2)


def fit_pi(samples: Sequence[RegressionSample]) -> PiFit:
    """Least-squares line ``rho_hat = pi0 + pi1 c`` restricted to pi in the simplex.

    The unconstrained fit is kept when feasible.  Otherwise the best of the
    three edge fits wins: (i) pi0 = 0, (ii) pi1 = 0, (iii) pi0 + pi1 = 1,
    each a one-parameter least squares clamped to [0, 1].  Ties go to the
    earlier edge.
    """
    if not samples:
        raise PreconditionError("no regression samples")
    y = np.array([s.rho_hat for s in samples], dtype=float)
    c = np.array([s.c for s in samples], dtype=float)
    n = len(y)
    degenerate = len(np.unique(c)) < 2
    candidates = {}

    if n >= 2 and not degenerate:
        slope, intercept = np.polyfit(c, y, 1)
        if intercept >= 0 and slope >= 0 and intercept + slope <= 1:
            pi = _pi_from(intercept, slope)
            return PiFit(pi, "unconstrained", _rss(y, c, pi.pi0, pi.pi1), n, False,
                         {"unconstrained": (float(intercept), float(slope))})
        candidates["unconstrained"] = (float(intercept), float(slope))

    ccc = float(c @ c)
    pi1 = _clip01(float(c @ y) / ccc) if ccc > 0 else 0.0
    edge_i = _pi_from(0.0, pi1)
    edge_ii = _pi_from(_clip01(float(y.mean())), 0.0)
    one_minus = 1.0 - c
    omm = float(one_minus @ one_minus)
    pi0 = _clip01(float(one_minus @ (y - c)) / omm) if omm > 0 else 0.0
    edge_iii = _pi_from(pi0, 1.0 - pi0)

    best = None
    for name, pi in (("i", edge_i), ("ii", edge_ii), ("iii", edge_iii)):
        rss = _rss(y, c, pi.pi0, pi.pi1)
        candidates[name] = (pi.pi0, pi.pi1, rss)
        if best is None or rss < best[2]:
            best = (name, pi, rss)
    name, pi, rss = best
    return PiFit(pi, f"boundary-{name}", rss, n, degenerate, candidates)


def pool_across_tables(net: BeliefNet, props: Mapping[str, ProportionTable],
                       hyper: Mapping[str, tuple] | None = None) -> list[RegressionSample]:
    """Regression samples from every parented node of ``net``.

    ``hyper`` maps node name to ``(alpha, mu)``; missing nodes use the flat
    row prior alpha = |X|, mu = 1/|X|.  Tables with fewer than two active
    rows contribute nothing.
    """
    hyper = hyper or {}
    parented = [node for node in net.nodes if node.parents]
    if not parented:
        raise PreconditionError("no pairable rows: no node has a parent")
    pooled = []
    for node in parented:
        table = props[node.name]
        if table.active.sum() < 2:
            continue
        k = len(node.domain)
        alpha, mu = hyper.get(node.name, (float(k), np.full(k, 1.0 / k)))
        pooled.extend(rho_hat_pairs(table, alpha, mu, net.parent_sizes(node.name), node.name))
    return pooled
