"""Cantor set resistance: exact level-n values against the closed form.

R_n(1^n, 2^n) = 2 sum_{k<=n} (2 lam)^k, so at lam = 1/4 the limit is 2.
"""
from fractions import Fraction

from fracnet import build, effective_resistance, from_augtree
from fracnet.reduction import cantor_resistance

lam = Fraction(1, 4)
tree = build("cantor3", 12)
print(" n  R_n (rational)           closed form")
for n in range(1, 13):
    net = from_augtree(tree, lam, level=n, exact=True)
    r = effective_resistance(net, [tree.vertex_id((1,) * n)], [tree.vertex_id((2,) * n)]).resistance
    print(f"{n:2d}  {str(r):24s} {cantor_resistance(lam, n)}")
print("limit:", cantor_resistance(0.25))
