"""Brute-force references for the tests.

These avoid the package's solver and adjacency code paths: dense linear
algebra for resistances, all-pairs point-cloud distances for cell contact.
"""
import itertools
import random
from fractions import Fraction

import numpy as np
from scipy.spatial.distance import cdist

from fracnet.network import Network


def dense_resistance(net: Network, E, F) -> float:
    """R(E, F) by a dense Dirichlet solve; assumes one connected component."""
    n = net.n_vertices
    L = np.zeros((n, n))
    for a, b, w in net.edge_list():
        w = float(w)
        L[a, b] -= w
        L[b, a] -= w
        L[a, a] += w
        L[b, b] += w
    fixed = list(E) + list(F)
    vals = np.array([1.0] * len(E) + [0.0] * len(F))
    free = [v for v in range(n) if v not in set(fixed)]
    f = np.zeros(n)
    f[fixed] = vals
    if free:
        f[free] = np.linalg.solve(L[np.ix_(free, free)], -L[np.ix_(free, fixed)] @ vals)
    return 1.0 / float(f @ L @ f)


def touching_cells(spec, k: int, depth: int = 3, slack: float = 1e-9) -> set[tuple[int, int]]:
    """Level-k word codes (equal ratios) whose point clouds lie within gamma r^k."""
    N = spec.n_maps
    base = np.array([m.fixed_point() for m in spec.maps])
    for _ in range(depth):
        base = np.concatenate([m(base) for m in spec.maps])
    words = list(itertools.product(range(1, N + 1), repeat=k))
    clouds = [spec.apply_word(w, base) for w in words]
    thr = spec.gamma * spec.r_min ** k + slack
    out = set()
    for i, j in itertools.combinations(range(len(words)), 2):
        if cdist(clouds[i], clouds[j]).min() <= thr:
            out.add((i, j))
    return out


def random_network(rng: random.Random, n_min: int = 3, n_max: int = 40, exact: bool = True,
                   extra: float = 0.3) -> Network:
    """Connected network: random spanning tree plus a few chords."""
    n = rng.randint(n_min, n_max)
    edges = {}

    def weight():
        if exact:
            return Fraction(rng.randint(1, 5), rng.randint(1, 3))
        return rng.uniform(0.1, 10.0)

    for v in range(1, n):
        edges[(rng.randrange(v), v)] = weight()
    for _ in range(rng.randint(0, int(extra * n) + 1)):
        a, b = rng.sample(range(n), 2)
        edges[(min(a, b), max(a, b))] = weight()
    return Network.from_edges(n, [(a, b, c) for (a, b), c in edges.items()], exact=exact)
