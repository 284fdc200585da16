"""Deep-level SG resistances through self-similar tracing.

X_d is three copies of X_{d-1} (conductances scaled by 1/(3 lam)) under a
new root, plus the horizontal edges joining the copies at their shared
corners.  Keeping only the root and the corner chains (a^m) of each copy,
the traced Laplacian of X_d comes from that of X_{d-1} with a dense
Schur complement of fixed size O(d).  This reaches d = 20 in seconds and
shows how slowly R_d / R_{d-1} moves near the threshold 1/5.
"""
import numpy as np

from fracnet import build, effective_resistance, from_augtree
from fracnet.catalog import get_fractal


def schur(L, keep):
    elim = np.setdiff1d(np.arange(L.shape[0]), keep)
    A, B, C = L[np.ix_(keep, keep)], L[np.ix_(keep, elim)], L[np.ix_(elim, elim)]
    return A - B @ np.linalg.solve(C, B.T)


def chain_traces(cat, lam, depth):
    """Yield (d, L_d): X_d traced to [root, then (a, a^2, ..., a^d) for each symbol a]."""
    N = cat.n_maps
    g = 1.0 / (N * lam)
    junc = {(i, a, j, b) for i, a, j, b in cat.junctions} | {(j, b, i, a) for i, a, j, b in cat.junctions}
    L = np.zeros((1, 1))
    for d in range(1, depth + 1):
        sz = L.shape[0]
        M = np.zeros((1 + N * sz, 1 + N * sz))

        def vid(i, a=None, m=0):
            base = 1 + (i - 1) * sz
            return base if m == 0 else base + 1 + (a - 1) * (d - 1) + (m - 1)

        def edge(x, y, c):
            M[x, x] += c
            M[y, y] += c
            M[x, y] -= c
            M[y, x] -= c

        for i in range(1, N + 1):
            o = vid(i)
            M[o:o + sz, o:o + sz] += g * L
            edge(0, o, g)
        for i, a, j, b in junc:
            if i < j:
                edge(vid(i), vid(j), g)
                for m in range(1, d):
                    edge(vid(i, a, m), vid(j, b, m), g ** (m + 1))
        keep = [0]
        for a in range(1, N + 1):
            keep += [vid(a)] + [vid(a, a, m) for m in range(1, d)]
        L = schur(M, np.array(keep))
        yield d, L


def corner_resistance(L, d, i, j):
    x, y = 1 + (i - 1) * d + (d - 1), 1 + (j - 1) * d + (d - 1)
    S = schur(L, np.array([x, y]))
    return -1.0 / S[0, 1]


cat = get_fractal("sg3")
tree = build("sg3", 6)
for d, L in chain_traces(cat, 0.2, 6):
    net = from_augtree(tree, 0.2, level=d)
    direct = effective_resistance(net, [tree.vertex_id((1,) * d)], [tree.vertex_id((2,) * d)]).resistance
    assert abs(direct - corner_resistance(L, d, 1, 2)) < 1e-10 * direct
print("traced values agree with the sparse solver for d <= 6\n")

print(" lam   R_20      q_10    q_20")
for lam in (0.15, 0.18, 0.2, 0.22, 0.25):
    R = [corner_resistance(L, d, 1, 2) for d, L in chain_traces(cat, lam, 20)]
    q = np.array(R[1:]) / np.array(R[:-1])
    print(f"{lam:4.2f}  {R[-1]:.3e}  {q[8]:.4f}  {q[18]:.4f}")
