"""The Extended Plackett-Luce distribution.

Stage t picks an item for rank rho(t) with probability proportional to its
support among the items still free. rho = (1, ..., K) is the usual
Plackett-Luce model.
"""
import math
from itertools import permutations

import numpy as np

from eplbayes import Dataset, epl_log_prob, observed_data_log_lik, pl_log_prob, sample_epl_orderings

p = np.array([2.0, 1.0, 1.0])
rho = (3, 1, 2)
print(f"P(o = (1,2,3) | rho={rho}, p={p.tolist()}) = {math.exp(epl_log_prob((1, 2, 3), rho, p)):.6f}  (1/6)")

total = sum(math.exp(epl_log_prob(o, rho, p)) for o in permutations((1, 2, 3)))
print(f"sum over all 6 orderings = {total:.15f}")

o = (2, 3, 1)
print(f"PL and forward-order EPL agree: {pl_log_prob(o, p):.6f} {epl_log_prob(o, (1, 2, 3), p):.6f}")

rng = np.random.default_rng(0)
draws = sample_epl_orderings(rho, p, 120000, rng)
print(f"empirical frequency of (1,2,3): {np.mean(np.all(draws == [1, 2, 3], axis=1)):.4f}")

data = Dataset(draws[:500])
print("\nlog-likelihood of 500 draws under each reference order (true one is (3,1,2)):")
for r in [(1, 2, 3), (1, 3, 2), (3, 1, 2), (3, 2, 1)]:
    print(f"  {r}: {observed_data_log_lik(data, r, p):9.2f}")
print("support is only identified up to scale:",
      math.isclose(observed_data_log_lik(data, rho, p), observed_data_log_lik(data, rho, 10 * p)))
