"""Reference orders: the top-or-bottom space and its binary code.

A reference order says which rank is filled at each stage of the ranking
process. Only orders that always fill the best or the worst free rank are
allowed; each one is a string of top (1) / bottom (0) flags.
"""
from eplbayes.perm import (
    ReferenceOrder,
    applicable_swaps,
    code_to_rho,
    enumerate_constrained_space,
    is_constrained,
    rho_to_code,
)

rho = (5, 1, 4, 3, 2)
code = rho_to_code(rho)
print(f"rho = {rho}")
print(f"  W = {code.w}   (1 = top pick, 0 = bottom pick)")
print(f"  F = {code.f}   tops handed out before each stage")
print(f"  B = {code.b}   bottoms handed out before each stage")
print(f"decoded back: {code_to_rho(code.w)}")

print("\n(2, 1, 3) allowed?", is_constrained((2, 1, 3)))

print("\nThe 8 reference orders for K = 4, in code order:")
for r in enumerate_constrained_space(4):
    print(f"  {r.bits}  {r.rho}  swaps allowed at stages {applicable_swaps(r.rho)}")

print("\nSpace sizes:", {k: len(enumerate_constrained_space(k)) for k in range(1, 9)})
print("index of (5, 1, 4, 3, 2):", ReferenceOrder(rho).index)
