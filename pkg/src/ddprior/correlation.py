"""Row correlations of MDD priors from ratios of Gamma sums.

``zeta(l1, l2, l3)`` is ``E[U V]`` with ``U = e1/(e1+e2)``, ``V = e1/(e1+e3)``
for independent Gamma variables of shapes ``l1, l2, l3``.  The correlation
between two CP-table entries in the same column is

    rho(alpha, gamma) = (alpha+1)/(alpha*gamma+1) * zeta(alpha*gamma, alpha*(1-gamma), alpha*(1-gamma))

where ``gamma`` is the share of hyperparameter mass the two rows have in
common.  Three evaluation modes are offered, see :class:`CorrelationMode`.
The quadratic mode interpolates between the exact endpoints using
rho(alpha, 0.5) as its single anchor value.
"""

from __future__ import annotations

import enum
import functools
import math

import numpy as np
from scipy import integrate

from .exceptions import QuadratureError

__all__ = [
    "CorrelationMode",
    "zeta_exact",
    "zeta_approx",
    "rho",
    "rho_half",
    "rho_approx_error_bound",
    "DEFAULT_TOL",
    "DEFAULT_ANCHOR",
]

DEFAULT_TOL = 1e-8
_QUAD_LIMIT = 200


class CorrelationMode(str, enum.Enum):
    EXACT_QUADRATURE = "exact"
    ZETA_APPROX = "zeta-approx"
    QUADRATIC_APPROX = "quadratic"

    @classmethod
    def parse(cls, value) -> "CorrelationMode":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace("_", "-")
        aliases = {
            "exact": cls.EXACT_QUADRATURE, "exact-quadrature": cls.EXACT_QUADRATURE,
            "zeta-approx": cls.ZETA_APPROX, "zeta": cls.ZETA_APPROX,
            "quadratic": cls.QUADRATIC_APPROX, "quadratic-approx": cls.QUADRATIC_APPROX,
        }
        try:
            return aliases[text]
        except KeyError:
            raise ValueError(f"unknown correlation mode {value!r}") from None


DEFAULT_ANCHOR = CorrelationMode.ZETA_APPROX


def _check_shapes(*shapes):
    for s in shapes:
        if not math.isfinite(s) or s < 0:
            raise ValueError(f"Gamma shapes must be finite and >= 0, got {shapes}")


def _integrate_pieces(head, tail, shape, tol, knot=None):
    """Sum of adaptive quadratures of a Gamma(shape)-weighted integrand over (0, inf).

    The range is split at ``shape`` and at ``knot`` (where the integrand bends
    sharply).  For shape < 1, ``head`` is the integrand after the substitution
    u = t**shape, which absorbs the t**(shape-1) density singularity; otherwise
    ``tail`` is used throughout.  QUADPACK maps the last piece onto (0, 1].
    """
    edges = [0.0, shape, math.inf]
    if knot is not None and 0.0 < knot < shape:
        # geometric breakpoints keep each piece within two decades of t
        inner = [knot]
        while shape < 1.0 and inner[-1] * 100.0 < shape:
            inner.append(inner[-1] * 100.0)
        edges[1:1] = inner
    elif knot is not None and knot > shape:
        edges.insert(2, knot)
    total = err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= shape and shape < 1.0:
            v, e = integrate.quad(head, a ** shape, b ** shape, epsabs=tol / 4, epsrel=0.0,
                                  limit=_QUAD_LIMIT)
        else:
            v, e = integrate.quad(tail, a, b, epsabs=tol / 4, epsrel=0.0, limit=_QUAD_LIMIT)
        total += v
        err += e
    return total, err


def _gamma_expectation(rest, shape, tol):
    """E[rest(e)] for e ~ Gamma(shape, 1)."""
    log_norm = math.lgamma(shape + 1.0)
    log_gamma = math.lgamma(shape)
    inv = 1.0 / shape
    c = shape - 1.0

    def head(u):
        t = u ** inv
        return math.exp(-t - log_norm) * rest(t)

    def tail(t):
        return math.exp(c * math.log(t) - t - log_gamma) * rest(t) if t > 0.0 else 0.0

    return _integrate_pieces(head, tail, shape, tol)


def _ratio_mean(t, shape, tol):
    """E[t / (t + e)] for e ~ Gamma(shape); equals 1 when shape is 0."""
    if shape == 0.0:
        return 1.0, 0.0
    if t == 0.0:
        return 0.0, 0.0
    # inlined integrands: this is the innermost loop
    log_norm = math.lgamma(shape + 1.0)
    log_gamma = math.lgamma(shape)
    inv = 1.0 / shape
    c = shape - 1.0
    exp, log = math.exp, math.log

    def head(u):
        s = u ** inv
        return t / (t + s) * exp(-s - log_norm)

    def tail(s):
        return t / (t + s) * exp(c * log(s) - s - log_gamma) if s > 0.0 else 0.0

    return _integrate_pieces(head, tail, shape, tol, knot=t)


def zeta_exact(l1: float, l2: float, l3: float, tol: float = DEFAULT_TOL) -> float:
    """E[UV] by nested adaptive quadrature.

    U and V are conditionally independent given ``e1 = t``, so

        zeta = integral of pdf_l1(t) * g_l2(t) * g_l3(t) dt,   g_l(t) = E[t/(t + e_l)]

    The outer integral runs over t; each ``g`` is itself an adaptive
    quadrature over the density of the second Gamma variable.

    Raises
    ------
    QuadratureError
        If the combined error estimate exceeds ``tol``.
    """
    _check_shapes(l1, l2, l3)
    if not tol > 0:
        raise ValueError("tol must be positive")
    if l1 == 0.0:
        return 0.0
    if l2 == 0.0 and l3 == 0.0:
        return 1.0

    # inner noise must sit well below the outer tolerance or QUADPACK reports roundoff
    inner_tol = tol * 1e-2
    inner_err = [0.0]
    same = l2 == l3

    def conditional(t):
        g2, e2 = _ratio_mean(t, l2, inner_tol)
        if same:
            g3, e3 = g2, e2
        else:
            g3, e3 = _ratio_mean(t, l3, inner_tol)
        inner_err[0] = max(inner_err[0], e2 + e3)
        return g2 * g3

    value, err = _gamma_expectation(conditional, l1, tol / 2)
    # each g lies in [0, 1], so inner errors propagate with factor at most one
    total_err = err + inner_err[0]
    if not math.isfinite(value) or total_err > tol:
        raise QuadratureError(
            f"zeta({l1}, {l2}, {l3}): error estimate {total_err:.3g} exceeds tol {tol:.3g}"
        )
    return min(max(value, 0.0), 1.0)


def zeta_approx(l1: float, l2: float, l3: float) -> float:
    """Closed-form approximation to :func:`zeta_exact`.

    No error bound is claimed; see ``tests/test_correlation.py`` for the
    measured deviation against quadrature.
    """
    _check_shapes(l1, l2, l3)
    total = 2.0 * l1 + l2 + l3
    if total == 0.0:
        raise ZeroDivisionError("zeta_approx undefined when all shapes are zero")
    l1s = l1 * total / (total + 1.0)
    return (l1s * (l1s + 1.0) / (2.0 * l1s + l2 + l3)
            * (1.0 / (l1s + l2 + 1.0) + 1.0 / (l1s + l3 + 1.0)))


def _rho_from_zeta(alpha, gamma, zeta_fn):
    z = zeta_fn(alpha * gamma, alpha * (1.0 - gamma), alpha * (1.0 - gamma))
    return (alpha + 1.0) / (alpha * gamma + 1.0) * z


@functools.lru_cache(maxsize=None)
def _rho_half_cached(alpha: float, source: CorrelationMode) -> float:
    zeta_fn = zeta_exact if source is CorrelationMode.EXACT_QUADRATURE else zeta_approx
    return _rho_from_zeta(alpha, 0.5, zeta_fn)


def rho_half(alpha: float,
             source: CorrelationMode | str = CorrelationMode.EXACT_QUADRATURE) -> float:
    """rho(alpha, 0.5) from quadrature or from the zeta approximation, cached per alpha."""
    source = CorrelationMode.parse(source)
    if source is CorrelationMode.QUADRATIC_APPROX:
        raise ValueError("the quadratic approximation needs an anchor, it cannot be one")
    return _rho_half_cached(float(alpha), source)


def rho(alpha: float, gamma: float,
        mode: CorrelationMode | str = CorrelationMode.QUADRATIC_APPROX,
        anchor: CorrelationMode | str = DEFAULT_ANCHOR) -> float:
    """Correlation of theta[x|f] and theta[x|g] under an MDD prior.

    ``anchor`` selects how rho(alpha, 0.5) is obtained for the quadratic
    approximation: from the zeta approximation (default; this reproduces the
    published alpha table and worked examples) or from exact quadrature.
    The endpoints are exact in every mode: rho(alpha, 0) = 0, rho(alpha, 1) = 1.
    """
    mode = CorrelationMode.parse(mode)
    alpha = float(alpha)
    gamma = float(gamma)
    if not alpha > 0 or not math.isfinite(alpha):
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not 0.0 <= gamma <= 1.0:
        # tolerate rounding from sums of pi components
        if -1e-12 <= gamma < 0.0:
            gamma = 0.0
        elif 1.0 < gamma <= 1.0 + 1e-12:
            gamma = 1.0
        else:
            raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    if gamma == 0.0:
        return 0.0
    if gamma == 1.0:
        return 1.0
    if mode is CorrelationMode.EXACT_QUADRATURE:
        return _rho_from_zeta(alpha, gamma, zeta_exact)
    if mode is CorrelationMode.ZETA_APPROX:
        return _rho_from_zeta(alpha, gamma, zeta_approx)
    return gamma - (1.0 - 4.0 * (gamma - 0.5) ** 2) * (0.5 - rho_half(alpha, anchor))


def rho_approx_error_bound(alpha: float, step: float = 0.01,
                           anchor: CorrelationMode | str = CorrelationMode.EXACT_QUADRATURE
                           ) -> float:
    """Largest |quadratic approximation - exact rho| over a gamma grid of spacing ``step``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not 0 < step <= 0.01:
        raise ValueError("grid step must lie in (0, 0.01]")
    grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    diffs = [
        rho(alpha, g, CorrelationMode.QUADRATIC_APPROX, anchor)
        - rho(alpha, g, CorrelationMode.EXACT_QUADRATURE)
        for g in grid
    ]
    return float(np.max(np.abs(diffs)))
