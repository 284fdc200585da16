"""Finite-level checks behind the Besov-space picture on SG.

1. Increments of the Dirichlet minimizer along kappa-rays decay at a rate
   near sqrt(lam / r^alpha); the fitted rate depends on which levels enter
   the fit, so every window is shown.
2. The Gagliardo quadrature of a test function and the graph energy of its
   harmonic extension stay within a bounded ratio across levels.
"""
import math

import numpy as np

from fracnet import effective_resistance, from_augtree, gagliardo_compare, geodesic_decay_check
from fracnet.critical import get_tree

lam, n = 0.15, 8
tree = get_tree("sg3", n)
net = from_augtree(tree, lam, level=n)
f = effective_resistance(net, [tree.vertex_id((1,) * n)], [tree.vertex_id((2,) * n)]).potentials
fit = geodesic_decay_check(tree, f, lam)
print("D_k:", np.round(fit.increments, 5))
print(f"bound sqrt(3 lam) = {math.sqrt(3 * lam):.4f}; default window {fit.window} -> rate {fit.rate:.4f}")
logs = np.log(fit.increments)
for lo, hi in [(1, 8), (1, 7), (2, 7), (2, 8), (3, 7)]:
    ks = np.arange(lo, hi + 1)
    print(f"  levels {lo}..{hi}: {math.exp(np.polyfit(ks, logs[lo - 1:hi], 1)[0]):.4f}")

funcs = {"x": lambda p: p[:, 0], "y": lambda p: p[:, 1], "radial": lambda p: np.sqrt((p ** 2).sum(1))}
print("\nGagliardo / energy ratios at lam = 0.15")
for name, u in funcs.items():
    print(f"  {name:6s}", [round(gagliardo_compare("sg3", lam, u, k), 3) for k in (4, 5, 6)])
