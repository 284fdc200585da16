"""Sierpinski gasket: where does R_n(1^n, 2^n) stop tending to zero?

The shorting fixed point exists exactly for lam > 1/5.  The finite-level
series show the transition, but near lam = 1/5 the ratios R_n / R_{n-1}
approach one slowly, which limits what a level-9 bisection can resolve.
"""
import math

from fracnet import fixed_point_threshold, lambda_star_bisect, level_resistance_series

print("fixed-point threshold:", fixed_point_threshold("sg3"))
print("\n lam    class       last ratios")
for lam in (0.1, 0.15, 0.18, 0.2, 0.22, 0.25, 0.3):
    s = level_resistance_series("sg3", lam, 1, 2, 9)
    print(f"{lam:5.2f}  {s.classification:10s}  {[round(q, 3) for q in s.ratios[-3:]]}")

br = lambda_star_bisect("sg3", [(1, 2), (1, 3), (2, 3)], lam_lo=0.1, lam_hi=0.4, n_max=9)
print(f"\nbracket [{br.lo:.4f}, {br.hi:.4f}], undecided band {br.undecided}")
print(f"beta3 estimate {math.log(br.estimate) / math.log(0.5):.3f} (log5/log2 = {math.log(5) / math.log(2):.4f})")
