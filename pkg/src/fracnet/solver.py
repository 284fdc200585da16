"""Dirichlet problems, effective resistance and Schur traces on finite networks.

Float networks are solved by sparse LU on the reduced Laplacian with
iterative refinement (and a Jacobi-preconditioned CG polish if refinement
stalls).  Exact networks go through star-mesh elimination in rational
arithmetic, which is also the engine behind :func:`schur_trace`.
"""
from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu

from .network import Network

INFINITE_RESISTANCE = math.inf
RATIONAL_BIT_LIMIT = 4096


class DanglingInterior(ValueError):
    """An interior vertex has no path to the boundary set."""


class SolverFailure(RuntimeError):
    """The float solve could not reach the requested residual."""


class _RationalBlowup(Exception):
    pass


@dataclass
class DirichletSolution:
    potentials: np.ndarray | None
    energy: object
    resistance: object
    residual_norm: float
    exact: bool = False


@dataclass(frozen=True)
class DirichletProblem:
    net: Network
    set_one: tuple[int, ...]
    set_zero: tuple[int, ...]

    def solve(self, **kw) -> DirichletSolution:
        return effective_resistance(self.net, self.set_one, self.set_zero, **kw)


def effective_resistance(net: Network, set_one: Iterable[int], set_zero: Iterable[int],
                         tol: float = 1e-12) -> DirichletSolution:
    """R(E, F) = 1 / min{energy(f) : f = 1 on E, 0 on F}.

    Overlapping terminal sets give resistance 0 without a solve; terminal
    sets with no common component give ``INFINITE_RESISTANCE``.
    """
    E = sorted({int(x) for x in set_one})
    F = sorted({int(x) for x in set_zero})
    if not E or not F:
        raise ValueError("terminal sets must be nonempty")
    zero = Fraction(0) if net.exact else 0.0
    if set(E) & set(F):
        return DirichletSolution(None, math.inf, zero, 0.0, net.exact)
    comp = net.components()
    if not set(comp[E]) & set(comp[F]):
        pot = np.zeros(net.n_vertices)
        pot[np.isin(comp, comp[E])] = 1.0
        return DirichletSolution(pot, zero, INFINITE_RESISTANCE, 0.0, net.exact)
    if net.exact:
        try:
            return _exact_resistance(net, E, F)
        except _RationalBlowup:
            warnings.warn("rational elimination exceeded the bit-length limit; falling back to float",
                          RuntimeWarning, stacklevel=2)
            net = net.to_float()
    fixed = np.array(E + F)
    vals = np.concatenate([np.ones(len(E)), np.zeros(len(F))])
    pot, resid = dirichlet(net, fixed, vals, tol=tol)
    en = _float_energy(net, pot)
    return DirichletSolution(pot, en, 1.0 / en if en > 0 else INFINITE_RESISTANCE, resid)


def _float_energy(net: Network, f: np.ndarray) -> float:
    d = f[net.u] - f[net.v]
    return float(np.dot(net.c, d * d))


def prune_dangling(net: Network, fixed: np.ndarray):
    """Strip non-fixed degree-1 vertices repeatedly.

    Returns (alive edge mask, removal records). A pruned vertex carries no
    current, so its harmonic value equals that of the neighbor it hung on.
    """
    n = net.n_vertices
    u, v = net.u, net.v
    alive = np.ones(u.size, dtype=bool)
    is_fixed = np.zeros(n, dtype=bool)
    is_fixed[fixed] = True
    records = []
    while True:
        deg = np.bincount(u[alive], minlength=n) + np.bincount(v[alive], minlength=n)
        leaf = (deg == 1) & ~is_fixed
        if not leaf.any():
            break
        hit = alive & (leaf[u] | leaf[v])
        eu, ev = u[hit], v[hit]
        # an edge joining two leaves is an isolated component; keep one side
        both = leaf[eu] & leaf[ev]
        child = np.where(leaf[eu], eu, ev)
        anchor = np.where(leaf[eu], ev, eu)
        records.append((child[~both], anchor[~both]))
        records.append((ev[both], eu[both]))
        alive &= ~hit
    return alive, records


def dirichlet(net: Network, fixed: np.ndarray, values: np.ndarray, tol: float = 1e-12):
    """Harmonic extension of ``values`` on ``fixed`` (float).

    Returns (potentials, residual) where residual is max over free vertices
    of |sum_y c(x,y)(f(x)-f(y))| / m(x).  Free vertices in components without
    a fixed vertex get 0.
    """
    n = net.n_vertices
    fixed = np.asarray(fixed, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    f = np.zeros(n)
    f[fixed] = values
    comp = net.components()
    reach = np.isin(comp, comp[fixed])
    alive, records = prune_dangling(net, fixed)
    free = reach.copy()
    free[fixed] = False
    for child, _ in records:
        free[child] = False
    idx = np.flatnonzero(free)
    if idx.size:
        w = np.asarray(net.c, dtype=float)[alive]
        uu, vv = net.u[alive], net.v[alive]
        C = sp.coo_matrix((np.concatenate([w, w]), (np.concatenate([uu, vv]), np.concatenate([vv, uu]))),
                          shape=(n, n)).tocsr()
        m = np.asarray(C.sum(axis=1)).ravel()
        Lfull = (sp.diags(m) - C).tocsr()
        A = Lfull[idx][:, idx].tocsc()
        b = -(Lfull[idx][:, fixed] @ values)
        x = _refined_solve(A, b, m[idx], tol)
        f[idx] = x
    for child, anchor in reversed(records):
        f[child] = f[anchor]
    f[~reach] = 0.0
    return f, _harmonic_residual(net, f, fixed, reach)


def _harmonic_residual(net: Network, f: np.ndarray, fixed: np.ndarray, reach: np.ndarray) -> float:
    L = net.laplacian()
    m = net.total_conductance()
    free = reach.copy()
    free[fixed] = False
    free &= m > 0
    if not free.any():
        return 0.0
    r = (L @ f)[free] / m[free]
    return float(np.abs(r).max())


def _refined_solve(A, b, m, tol):
    def scaled(x):
        return float((np.abs(b - A @ x) / m).max())

    lu = splu(A, permc_spec="MMD_AT_PLUS_A")
    x = lu.solve(b)
    for _ in range(6):
        if scaled(x) <= tol:
            return x
        x = x + lu.solve(b - A @ x)
    if scaled(x) > tol:
        d = A.diagonal()
        M = sp.diags(1.0 / d)
        x2, info = cg(A, b, x0=x, M=M, rtol=1e-16, atol=0.0, maxiter=2000)
        if scaled(x2) < scaled(x):
            x = x2
    return x


# --- exact / generic elimination -------------------------------------------

def _bits_ok(w) -> bool:
    return not isinstance(w, Fraction) or (
        w.numerator.bit_length() <= RATIONAL_BIT_LIMIT and w.denominator.bit_length() <= RATIONAL_BIT_LIMIT)


def _eliminate(adj: list[dict[int, object]], interior: Iterable[int], order: Sequence[int] | None = None,
               check_bits: bool = False):
    """Star-mesh eliminate ``interior`` vertices in place.

    Eliminating z replaces its star by the mesh c'(a,b) += c(a,z) c(z,b) / m(z).
    Default order is minimum degree (ties by vertex id).  Returns the records
    (z, [(nbr, c)], m) needed for back-substitution.
    """
    todo = set(interior)
    records = []

    def drop(z):
        nbrs = adj[z]
        if not nbrs:
            raise DanglingInterior(f"vertex {z} has no path to the boundary")
        m = sum(nbrs.values())
        items = sorted(nbrs.items())
        for a, _ in items:
            del adj[a][z]
        for i, (a, wa) in enumerate(items):
            for b, wb in items[i + 1:]:
                w = wa * wb / m
                if check_bits and not _bits_ok(w):
                    raise _RationalBlowup
                adj[a][b] = adj[a].get(b, 0) + w
                adj[b][a] = adj[a][b]
        adj[z] = {}
        records.append((z, items, m))
        return [a for a, _ in items]

    if order is not None:
        for z in order:
            drop(z)
            todo.discard(z)
        return records
    heap = [(len(adj[z]), z) for z in todo]
    heapq.heapify(heap)
    while heap:
        d, z = heapq.heappop(heap)
        if z not in todo or d != len(adj[z]):
            continue
        todo.discard(z)
        for a in drop(z):
            if a in todo:
                heapq.heappush(heap, (len(adj[a]), a))
    return records


def _exact_resistance(net: Network, E: list[int], F: list[int]) -> DirichletSolution:
    comp = net.components()
    reach = np.isin(comp, comp[E + F])
    adj = net.adjacency()
    terminals = set(E) | set(F)
    interior = [z for z in np.flatnonzero(reach).tolist() if z not in terminals]
    records = _eliminate(adj, interior, check_bits=True)
    en = Fraction(0)
    Fs = set(F)
    for a in E:
        for b, w in adj[a].items():
            if b in Fs:
                en += w
    f = [Fraction(0)] * net.n_vertices
    for a in E:
        f[a] = Fraction(1)
    for z, items, m in reversed(records):
        f[z] = sum((w * f[a] for a, w in items), Fraction(0)) / m
    pot = np.empty(net.n_vertices, dtype=object)
    pot[:] = f
    res = 1 / en if en else INFINITE_RESISTANCE
    return DirichletSolution(pot, en, res, 0.0, exact=True)


def schur_trace(net: Network, boundary: Sequence[int]) -> Network:
    """The equivalent network on ``boundary`` (local completion).

    Labels of the result are the original vertex ids, in the given order.
    """
    bnd = list(dict.fromkeys(int(b) for b in boundary))
    if len(bnd) < 2:
        raise ValueError("boundary needs at least two vertices")
    comp = net.components()
    bset = set(bnd)
    interior = [z for z in range(net.n_vertices) if z not in bset]
    if interior:
        dangling = ~np.isin(comp[interior], comp[bnd])
        if dangling.any():
            raise DanglingInterior(f"vertex {interior[int(np.argmax(dangling))]} has no path to the boundary")
    adj = net.adjacency()
    try:
        _eliminate(adj, interior, check_bits=net.exact)
    except _RationalBlowup:
        warnings.warn("rational elimination exceeded the bit-length limit; falling back to float",
                      RuntimeWarning, stacklevel=2)
        return schur_trace(net.to_float(), bnd)
    return _collect(adj, bnd, net.exact, labels=tuple(bnd))


def _collect(adj, keep: list[int], exact: bool, labels) -> Network:
    pos = {v: i for i, v in enumerate(keep)}
    edges = []
    for a in keep:
        for b, w in adj[a].items():
            if b in pos and a < b and w != 0:
                edges.append((pos[a], pos[b], w))
    return Network.from_edges(len(keep), edges, exact=exact, labels=labels)


def level_by_level_trace(net: Network, tree, target_level: int, keep: Iterable[int] = ()) -> Network:
    """Eliminate levels n, n-1, ..., target_level + 1 of an X_n network.

    Vertices listed in ``keep`` survive.  The result is labeled by original
    ids; use ``relabel`` to map ids into it.
    """
    n_level = int(tree.level[net.n_vertices - 1])
    keep = set(int(k) for k in keep)
    adj = net.adjacency()
    try:
        for k in range(n_level, target_level, -1):
            ids = [z for z in range(int(tree.offsets[k]), int(tree.offsets[k + 1])) if z not in keep]
            _eliminate(adj, ids, check_bits=net.exact)
    except _RationalBlowup:
        warnings.warn("rational elimination exceeded the bit-length limit; falling back to float",
                      RuntimeWarning, stacklevel=2)
        return level_by_level_trace(net.to_float(), tree, target_level, keep)
    retained = [z for z in range(net.n_vertices) if tree.level[z] <= target_level or z in keep]
    return _collect(adj, retained, net.exact, labels=tuple(retained))


def relabel(net: Network, ids: Iterable[int]) -> list[int]:
    """Positions of original vertex ids in a traced network."""
    pos = {lab: i for i, lab in enumerate(net.labels)}
    return [pos[int(i)] for i in ids]
