"""How much does truncating a comb's Choi matrix to rank R cost?

Given only the purity P of a normalized d-dimensional state, the bound gives
the worst Hilbert-Schmidt distance between the state and its best rank-R
approximation. A random-search oracle over spectra with the same purity shows
how close the bound is to the true worst case.
"""

from combtomo.linalg import random_density
from combtomo.lowrank import optimal_rank_r, purity_of, simplex_worst_case_oracle, suggest_rank, purity_rank_bound
import numpy as np

dim = 16
print(" purity rank    bound   oracle  branch")
for p in (0.1, 0.25, 0.4, 0.7):
    for r in (1, 2, 4):
        res = purity_rank_bound(p, r, dim)
        found, _ = simplex_worst_case_oracle(p, r, dim, samples=20_000, seed=1)
        print(f"{p:7.2f} {r:4d} {res.bound:8.5f} {found:8.5f}  {res.branch.value}")

rng = np.random.default_rng(0)
rho = random_density(dim, rng, rank=3)
p = purity_of(np.linalg.eigvalsh(rho))
for r in (1, 2, 3):
    _, d = optimal_rank_r(rho, r)
    print(f"rank-3 state, purity {p:.3f}: rank {r} truncation distance {d:.3e} <= bound {purity_rank_bound(p, r, dim).bound:.3e}")
print(f"smallest rank with bound below 1e-2 at purity 0.5: {suggest_rank(0.5, dim, 1e-2)}")
