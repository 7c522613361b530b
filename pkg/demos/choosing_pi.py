"""How costly is a wrong guess of the mixing proportions, and can data pick them?

First the MSE-ratio: the loss from using weights tuned for one pi when another
is true, over a lattice of true values.  Then an empirical-Bayes fit of pi
from a simulated network with many children sharing three parents.
"""

import numpy as np

from ddprior import BeliefNet, Dataset, MddPrior, NodeSpec, sample_prior
from ddprior.cli import fit_pi_for
from ddprior.selection import FIGURE1_SELECTIONS, figure1_scenario, mse_ratio_grid

scenario = figure1_scenario()
print("16 rows, 3 observations each, alpha = 2\n")
print("selected pi            worst ratio   at true pi        mean ratio")
for sel in FIGURE1_SELECTIONS:
    grid = mse_ratio_grid(sel, scenario, 0.1)
    worst = max(grid, key=lambda p: p.ratio)
    mean = np.mean([p.ratio for p in grid])
    print(f"{str(tuple(sel)):<22} {worst.ratio:>10.3f}   {str(tuple(worst.pi_true)):<17} {mean:.3f}")

# the mixed choice has the smallest average penalty; committing to an extreme costs more

true_pi = (0.25, 0.5, 0.25)
binary = ("0", "1")
net = BeliefNet(tuple([NodeSpec(r, binary) for r in "ABC"]
                      + [NodeSpec(f"X{i}", binary, ("A", "B", "C")) for i in range(20)]))
prior = MddPrior.symmetric(2.0, [0.5, 0.5], true_pi, (2, 2, 2))
rng = np.random.default_rng(0)

fits = []
for rep in range(20):
    theta = sample_prior(prior, seed=rep, count=20).theta[:, :, 1]
    rows = []
    for f, parents in enumerate(np.ndindex(2, 2, 2)):
        draws = rng.random((20, 100)) < theta[:, f, None]
        for i in range(100):
            rows.append(tuple(map(str, parents)) + tuple("1" if d else "0" for d in draws[:, i]))
    fits.append(tuple(fit_pi_for(net, Dataset(net.names, rows)).pi))

fits = np.array(fits)
print(f"\ngenerating pi {true_pi}")
print(f"fitted pi, mean of 20 datasets: {np.round(fits.mean(axis=0), 3)}")
print(f"spread (sd):                     {np.round(fits.std(axis=0), 3)}")
