"""Three ways to evaluate the row correlation rho(alpha, gamma).

Exact nested quadrature, a closed-form approximation to the inner expectation,
and a quadratic interpolation through a single anchor at gamma = 1/2.  The
quadratic form is what the estimators use by default; this script shows how
far the three drift apart and what that does to a set of weights.
"""

import numpy as np

from ddprior import CorrelationMode, MddPrior, mdd_covariance_model, rho, weight_matrix

EXACT, ZETA, QUAD = CorrelationMode

print("alpha  gamma   exact    zeta-approx  quadratic")
for alpha in (2, 5, 20):
    for gamma in (0.25, 0.5, 0.75):
        row = [rho(alpha, gamma, m) for m in (EXACT, ZETA, QUAD)]
        print(f"{alpha:>5}  {gamma:.2f}   " + "   ".join(f"{v:.4f}" for v in row))

print("\nat gamma = 0.5 the quadratic form equals its anchor, so its error there is")
print("the anchor's error; elsewhere the parabola adds at most a few thousandths")

prior = MddPrior.symmetric(2.0, [0.5, 0.5], (0.0, 1.0, 0.0), (2, 2))
n = np.array([10, 0, 10, 10])
print("\nweights for row 00 given counts (10, 0, 10, 10):")
print("mode          a_00     a_10     a_11     a_prior")
for mode in (EXACT, ZETA, QUAD):
    W, _ = weight_matrix(n, mdd_covariance_model(prior, mode))
    print(f"{mode.value:<12}" + "".join(f"{W[0, j]:>9.4f}" for j in (0, 2, 3, 4)))
