"""Conductance networks over float or exact rational weights."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .augtree import AugmentedTree
from .ifs import InvalidInput


@dataclass(frozen=True, eq=False)
class Network:
    """An undirected network; each unordered edge stored once with u < v.

    Exact networks keep their conductances as ``Fraction`` objects in an
    object array; float networks use float64.
    """

    n_vertices: int
    u: np.ndarray
    v: np.ndarray
    c: np.ndarray
    labels: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.shape != self.c.shape:
            raise InvalidInput("edge arrays differ in length")
        if np.any(self.u == self.v):
            raise InvalidInput("self-loops are not allowed")
        if self.u.size and (min(self.u.min(), self.v.min()) < 0
                            or max(self.u.max(), self.v.max()) >= self.n_vertices):
            raise InvalidInput("edge endpoint out of range")
        if self.u.size and not all(w > 0 for w in (self.c if self.exact else self.c.tolist())):
            raise InvalidInput("conductances must be strictly positive")

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable[tuple[int, int, object]],
                   exact: bool | None = None, labels: Sequence | None = None) -> "Network":
        """Build from (u, v, conductance) triples; parallel edges are merged."""
        acc: dict[tuple[int, int], object] = {}
        for a, b, w in edges:
            a, b = int(a), int(b)
            if a == b:
                raise InvalidInput("self-loops are not allowed")
            key = (a, b) if a < b else (b, a)
            acc[key] = acc[key] + w if key in acc else w
        keys = sorted(acc)
        vals = [acc[k] for k in keys]
        if exact is None:
            exact = bool(vals) and all(isinstance(w, (int, Fraction)) for w in vals)
        u = np.array([k[0] for k in keys], dtype=np.int64)
        v = np.array([k[1] for k in keys], dtype=np.int64)
        if exact:
            c = np.empty(len(vals), dtype=object)
            c[:] = [Fraction(w) for w in vals]
        else:
            c = np.array([float(w) for w in vals], dtype=float)
        return cls(int(n_vertices), u, v, c, tuple(labels) if labels is not None else None)

    @property
    def exact(self) -> bool:
        return self.c.dtype == object

    @property
    def n_edges(self) -> int:
        return int(self.u.size)

    def edge_list(self) -> list[tuple[int, int, object]]:
        return list(zip(self.u.tolist(), self.v.tolist(), self.c.tolist()))

    def to_float(self) -> "Network":
        if not self.exact:
            return self
        return Network(self.n_vertices, self.u, self.v, np.array([float(w) for w in self.c]), self.labels)

    def laplacian(self) -> sp.csr_matrix:
        """Float graph Laplacian L = D - C."""
        if "L" not in self._cache:
            n = self.n_vertices
            w = np.asarray(self.c, dtype=float)
            C = sp.coo_matrix((np.concatenate([w, w]), (np.concatenate([self.u, self.v]),
                                                         np.concatenate([self.v, self.u]))), shape=(n, n)).tocsr()
            deg = np.asarray(C.sum(axis=1)).ravel()
            self._cache["L"] = (sp.diags(deg) - C).tocsr()
            self._cache["m"] = deg
        return self._cache["L"]

    def total_conductance(self) -> np.ndarray:
        """m(x) = sum_y c(x, y) (float)."""
        self.laplacian()
        return self._cache["m"]

    def adjacency(self) -> list[dict[int, object]]:
        """Neighbor dicts {y: c(x, y)} per vertex, in the network's weight kind."""
        adj: list[dict[int, object]] = [dict() for _ in range(self.n_vertices)]
        for a, b, w in self.edge_list():
            adj[a][b] = w
            adj[b][a] = w
        return adj

    def components(self) -> np.ndarray:
        if "comp" not in self._cache:
            n = self.n_vertices
            A = sp.coo_matrix((np.ones(self.n_edges), (self.u, self.v)), shape=(n, n))
            self._cache["comp"] = connected_components(A, directed=False)[1]
        return self._cache["comp"]

    def scaled(self, factor) -> "Network":
        return Network(self.n_vertices, self.u, self.v, self.c * factor, self.labels)

    def without_edge(self, a: int, b: int) -> "Network":
        a, b = min(a, b), max(a, b)
        keep = ~((self.u == a) & (self.v == b))
        if keep.all():
            raise InvalidInput(f"no edge ({a}, {b})")
        return Network(self.n_vertices, self.u[keep], self.v[keep], self.c[keep], self.labels)

    def shorted(self, a: int, b: int) -> "Network":
        """Merge vertex b into a (b keeps its id but becomes isolated)."""
        edges = []
        for x, y, w in self.edge_list():
            x = a if x == b else x
            y = a if y == b else y
            if x != y:
                edges.append((x, y, w))
        return Network.from_edges(self.n_vertices, edges, exact=self.exact, labels=self.labels)

    def to_json(self) -> dict:
        def fmt(w):
            if isinstance(w, Fraction):
                return f"{w.numerator}/{w.denominator}"
            return repr(float(w))

        return {
            "vertices": self.n_vertices,
            "weight_kind": "rational" if self.exact else "float",
            "edges": [[a, b, fmt(w)] for a, b, w in self.edge_list()],
            "labels": list(self.labels) if self.labels is not None else None,
        }

    @classmethod
    def from_json(cls, doc: dict | str) -> "Network":
        if isinstance(doc, str):
            doc = json.loads(doc)
        exact = doc.get("weight_kind") == "rational"
        parse = Fraction if exact else float
        edges = [(a, b, parse(w)) for a, b, w in doc["edges"]]
        return cls.from_edges(doc["vertices"], edges, exact=exact, labels=doc.get("labels"))


def energy(net: Network, f) -> object:
    """Graph energy (1/2) sum_{x~y} c(x,y) (f(x) - f(y))^2 = sum over edges."""
    if net.exact:
        vals = list(f)
        return sum((w * (vals[a] - vals[b]) ** 2 for a, b, w in net.edge_list()), Fraction(0))
    f = np.asarray(f, dtype=float)
    d = f[net.u] - f[net.v]
    return float(np.dot(net.c, d * d))


def _exact_scalar(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise InvalidInput("rational mode needs an exact (Fraction) lambda")


def from_augtree(tree: AugmentedTree, lam, level: int | None = None, exact: bool = False) -> Network:
    """Conductances of the lambda-NRW on X_level.

    Vertical edge (x, x^-): r_x^alpha lam^-|x|; horizontal edge at level k:
    r^(alpha k) lam^-k, where |x| is the level of x.
    """
    if not 0 < lam < 1:
        raise InvalidInput(f"lambda={lam} outside (0, 1)")
    level = tree.max_level if level is None else level
    if level > tree.max_level:
        raise InvalidInput(f"tree only has levels up to {tree.max_level}")
    spec = tree.spec
    n = tree.size(level)
    v_e, h_e = tree.edges(level)
    child = v_e[:, 0]
    hlev = tree.level[h_e[:, 0]]
    clev = tree.level[child]
    if exact:
        ra = spec.exact_ratio_alpha
        if ra is None:
            raise InvalidInput("rational mode needs exact r_i^alpha (catalog fractals)")
        lam = _exact_scalar(lam)
        r_alpha = min(ra)
        vw = [_word_ratio_alpha(tree, int(x), ra) / lam ** int(k) for x, k in zip(child, clev)]
        hw = [(r_alpha / lam) ** int(k) for k in hlev]
        c = np.empty(len(vw) + len(hw), dtype=object)
        c[:] = vw + hw
    else:
        vw = tree.ratio[child] ** spec.alpha * float(lam) ** (-clev.astype(float))
        hw = (spec.r_alpha / float(lam)) ** hlev.astype(float)
        c = np.concatenate([vw, hw]).astype(float)
    e = np.concatenate([v_e, h_e])
    lo, hi = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
    return Network(n, lo.astype(np.int64), hi.astype(np.int64), c)


def _word_ratio_alpha(tree: AugmentedTree, vid: int, ra) -> Fraction:
    if len(set(ra)) == 1:
        return ra[0] ** int(tree.lengths[tree.level[vid]][vid - tree.offsets[tree.level[vid]]])
    out = Fraction(1)
    for s in tree.word(vid):
        out *= ra[s - 1]
    return out
