"""Infidelity of the reconstruction as the number of shots grows.

Each probability is replaced by a binomial estimate, so the fitted comb is
off by an amount that shrinks with the shot count. The slope of the log-log
fit of median infidelity against shots comes out close to -1.
"""

import numpy as np

from combtomo.cli import loglog_slope, scaling_rows
from combtomo.comb import CombDims, random_comb

truth = random_comb(CombDims.from_lists([2, 2], [2, 2], [2, 2]), seed=10)
shots = [10**3, 10**4, 10**5]
rows = scaling_rows(truth, shots, seeds=[0, 1, 2])

medians = []
for s in shots:
    inf = [1 - f for s2, _, f, _ in rows if s2 == s]
    medians.append(float(np.median(inf)))
    print(f"shots {s:>7}: median 1-F = {medians[-1]:.3e}")
print(f"log-log slope {loglog_slope(shots, medians):.3f}")
