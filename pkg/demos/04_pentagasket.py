"""Pentagasket: the two-dimensional shorting map and the cutting envelope."""
from fractions import Fraction

from fracnet import fixed_point_exists, fixed_point_threshold, level_resistance_series
from fracnet.reduction import pentagasket_cone_completion, pentagasket_envelope, pentagasket_rho

print("threshold (sqrt(161) - 9) / 40 =", fixed_point_threshold("pentagasket"))
for lam in (0.08, 0.1):
    r = fixed_point_exists("pentagasket", lam)
    print(f"lam={lam}: fixed point {r.exists} ({r.method})")

mu = Fraction(1)
print("\nrho(1) =", pentagasket_rho(mu))
print("cone completion at mu1 = 1:", pentagasket_cone_completion(mu))

lam = 0.05
A = level_resistance_series("pentagasket", lam, 1, 3, 6).values
B = level_resistance_series("pentagasket", lam, 1, 2, 6).values
env = pentagasket_envelope(lam, 6)
print(f"\nlam={lam}:  n  A_n        bound      B_n        bound")
for n, (a, b, (ua, ub)) in enumerate(zip(A, B, env), 1):
    print(f"        {n}  {a:.3e}  {float(ua):.3e}  {b:.3e}  {float(ub):.3e}")
