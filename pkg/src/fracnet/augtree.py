"""The augmented tree X_n: word levels J_0..J_n with vertical and horizontal edges.

Vertex ids are dense integers, level-major and lexicographic within a level,
so ``X_m`` is always the id prefix ``range(tree.offsets[m + 1])``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .catalog import CatalogFractal, get_fractal
from .ifs import (
    RATIO_RTOL,
    BoundaryPoint,
    IfsSpec,
    InvalidInput,
    Stream,
    diameter_bound,
    format_word,
)


class AmbiguousAdjacency(RuntimeError):
    """A cell pair sits inside the geometric ambiguity band; increase depth."""


class InsufficientPrecision(ValueError):
    """A finite symbolic prefix is too short for the requested level."""


class Unsupported(ValueError):
    """Operation needs a catalog fractal."""


def resolve(fractal: CatalogFractal | IfsSpec | str) -> tuple[IfsSpec, CatalogFractal | None]:
    """Normalize a catalog id / entry / raw spec to (spec, catalog entry or None)."""
    if isinstance(fractal, str):
        fractal = get_fractal(fractal)
    if isinstance(fractal, CatalogFractal):
        return fractal.spec, fractal
    return fractal, None


@dataclass(frozen=True, eq=False)
class AugmentedTree:
    spec: IfsSpec
    catalog: CatalogFractal | None
    max_level: int
    mode: str
    codes: tuple[np.ndarray, ...]      # per level, base-N packed words
    lengths: tuple[np.ndarray, ...]    # per level, word lengths
    offsets: np.ndarray                # offsets[k] = first id of level k
    parent: np.ndarray                 # parent id, -1 at the root
    level: np.ndarray
    ratio: np.ndarray                  # r_x
    horizontal: np.ndarray             # (M, 2) ids, same level, a < b
    _index: dict = field(default_factory=dict, repr=False)

    @property
    def n_vertices(self) -> int:
        return int(self.offsets[-1])

    def size(self, level: int | None = None) -> int:
        """Number of vertices of X_level."""
        level = self.max_level if level is None else level
        return int(self.offsets[level + 1])

    def level_ids(self, k: int) -> np.ndarray:
        return np.arange(self.offsets[k], self.offsets[k + 1])

    @property
    def vertical_edges(self) -> np.ndarray:
        """(child, parent) pairs."""
        child = np.arange(1, self.n_vertices)
        return np.stack([child, self.parent[1:]], axis=1)

    def edges(self, level: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Vertical and horizontal edges of X_level."""
        m = self.size(level)
        v = self.vertical_edges[: max(m - 1, 0)]
        h = self.horizontal[self.horizontal[:, 1] < m]
        return v, h

    def degrees(self) -> np.ndarray:
        v, h = self.edges()
        both = np.concatenate([v.ravel(), h.ravel()])
        return np.bincount(both, minlength=self.n_vertices)

    @property
    def degree_bound(self) -> int:
        return int(self.degrees().max()) if self.n_vertices > 1 else 0

    def word(self, vid: int) -> tuple[int, ...]:
        k = int(self.level[vid])
        j = vid - int(self.offsets[k])
        return unpack(int(self.codes[k][j]), int(self.lengths[k][j]), self.spec.n_maps)

    def vertex_id(self, word: Sequence[int]) -> int:
        word = tuple(word)
        N = self.spec.n_maps
        if self.spec.equal_ratios:
            k = len(word)
            if k > self.max_level or any(not 1 <= s <= N for s in word):
                raise KeyError(f"word {format_word(word)} is not a vertex of X_{self.max_level}")
            code = 0
            for s in word:
                code = code * N + s - 1
            return int(self.offsets[k]) + code
        if not self._index:
            for vid in range(self.n_vertices):
                self._index[self.word(vid)] = vid
        try:
            return self._index[word]
        except KeyError:
            raise KeyError(f"word {format_word(word)} is not a vertex of X_{self.max_level}") from None

    def level_prefix(self, stream: Stream | Sequence[int], k: int) -> tuple[int, ...]:
        """The J_k-prefix of a symbolic stream or a finite prefix."""
        if k == 0:
            return ()
        rs = self.spec.ratios
        threshold = self.spec.r_min ** k * (1 + RATIO_RTOL)
        if isinstance(stream, Stream):
            if self.spec.equal_ratios:
                return stream.take(k)
            src = stream.take(k * 64)
        else:
            src = tuple(stream)
        rho = 1.0
        for pos, s in enumerate(src):
            rho *= rs[s - 1]
            if rho <= threshold:
                return tuple(src[: pos + 1])
        raise InsufficientPrecision(
            f"prefix {format_word(src)} too short to select a level-{k} word")

    def to_json(self) -> dict:
        """The ``graph dump`` document."""
        v, h = self.edges()
        return {
            "levels": [int(self.offsets[k + 1] - self.offsets[k]) for k in range(self.max_level + 1)],
            "vertical": v.tolist(),
            "horizontal": h.tolist(),
            "words": {str(i): format_word(self.word(i)) for i in range(self.n_vertices)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def unpack(code: int, length: int, N: int) -> tuple[int, ...]:
    out = []
    for _ in range(length):
        out.append(code % N + 1)
        code //= N
    return tuple(reversed(out))


def _digit(codes: np.ndarray, lengths: np.ndarray, pos: int, N: int) -> np.ndarray:
    shift = np.maximum(lengths - 1 - pos, 0)
    return (codes // (N ** shift.astype(np.int64))) % N


def _build_levels(spec: IfsSpec, n: int):
    """Per-level packed words, parent indices (within previous level) and ratios."""
    N = spec.n_maps
    rs = spec.ratios
    codes = [np.zeros(1, dtype=np.int64)]
    lengths = [np.zeros(1, dtype=np.int64)]
    ratios = [np.ones(1)]
    parents = [np.full(1, -1, dtype=np.int64)]
    for k in range(1, n + 1):
        if spec.equal_ratios:
            c = np.arange(N ** k, dtype=np.int64)
            codes.append(c)
            lengths.append(np.full(c.size, k, dtype=np.int64))
            ratios.append(np.full(c.size, rs[0] ** k))
            parents.append(c // N)
            continue
        threshold = spec.r_min ** k * (1 + RATIO_RTOL)
        pc, pl, pr = codes[-1], lengths[-1], ratios[-1]
        origin = np.arange(pc.size)
        out_c, out_l, out_r, out_o = [], [], [], []
        while pc.size:
            if int(pl.max()) + 1 > int(62 / np.log2(N)):
                raise InvalidInput("word length exceeds packed-code capacity")
            cc = (pc[:, None] * N + np.arange(N)[None, :]).ravel()
            cl = np.repeat(pl + 1, N)
            cr = (pr[:, None] * rs[None, :]).ravel()
            co = np.repeat(origin, N)
            done = cr <= threshold
            out_c.append(cc[done]); out_l.append(cl[done]); out_r.append(cr[done]); out_o.append(co[done])
            pc, pl, pr, origin = cc[~done], cl[~done], cr[~done], co[~done]
        c = np.concatenate(out_c); ln = np.concatenate(out_l)
        r = np.concatenate(out_r); o = np.concatenate(out_o)
        maxlen = int(ln.max())
        aligned = c * (N ** (maxlen - ln))
        order = np.lexsort((ln, aligned))
        codes.append(c[order]); lengths.append(ln[order]); ratios.append(r[order]); parents.append(o[order])
    return codes, lengths, ratios, parents


def build(fractal: CatalogFractal | IfsSpec | str, n: int, mode: str = "auto",
          depth: int = 4) -> AugmentedTree:
    """Build X_n.

    ``mode`` is ``exact-catalog`` (catalog adjacency predicate), ``geometric``
    (point-cloud distances against gamma * r^k) or ``auto`` (exact when the
    fractal is a catalog entry).
    """
    if n < 0:
        raise InvalidInput("level must be >= 0")
    spec, cat = resolve(fractal)
    if mode == "auto":
        mode = "exact-catalog" if cat is not None else "geometric"
    if mode == "exact-catalog" and cat is None:
        raise Unsupported("exact-catalog mode needs a catalog fractal")
    if mode not in ("exact-catalog", "geometric"):
        raise InvalidInput(f"unknown build mode {mode!r}")

    codes, lengths, ratios, parents = _build_levels(spec, n)
    sizes = np.array([c.size for c in codes])
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    parent = np.concatenate([parents[0]] + [p + offsets[k - 1] for k, p in enumerate(parents) if k > 0])
    level = np.repeat(np.arange(n + 1), sizes)
    ratio = np.concatenate(ratios)

    horiz = []
    geo = _GeometricAdjacency(spec, depth) if mode == "geometric" else None
    for k in range(1, n + 1):
        if geo is None:
            pairs = cat.exact_adjacency(k)   # codes == in-level index for equal ratios
        else:
            pairs = geo.level_pairs(k, codes[k], lengths[k])
        horiz.append(pairs + offsets[k])
    horizontal = (np.concatenate(horiz) if horiz else np.zeros((0, 2), dtype=np.int64)).astype(np.int64)
    if horizontal.size:
        horizontal = horizontal[np.lexsort((horizontal[:, 1], horizontal[:, 0]))]
    return AugmentedTree(spec, cat, n, mode, tuple(codes), tuple(lengths), offsets,
                         parent, level, ratio, horizontal.reshape(-1, 2))


class _GeometricAdjacency:
    """Horizontal edges from depth-``depth`` point clouds.

    Cell pairs are refined subcell by subcell, discarding subcell pairs whose
    enclosing balls are already farther apart than the decision threshold;
    the surviving subcells' corner points give the point-cloud distance.
    """

    def __init__(self, spec: IfsSpec, depth: int):
        self.spec = spec
        self.depth = depth
        self.D = diameter_bound(spec)
        d = spec.ambient_dim
        self.lin = np.array([m.ratio * m.rotation for m in spec.maps])      # (N, d, d)
        self.trans = np.array([m.translation for m in spec.maps])           # (N, d)
        self.fixed = np.array([m.fixed_point() for m in spec.maps])          # (N, d)
        cloud = _cloud(spec, min(depth + 2, 6))
        self.center = cloud.mean(axis=0)
        rmax = float(spec.ratios.max())
        self.radius = float(np.sqrt(((cloud - self.center) ** 2).sum(1)).max()) + rmax ** min(depth + 2, 6) * self.D
        self.dim = d

    def _affines(self, codes, lengths):
        N = self.spec.n_maps
        A = np.broadcast_to(np.eye(self.dim), (codes.size, self.dim, self.dim)).copy()
        t = np.zeros((codes.size, self.dim))
        for pos in range(int(lengths.max()) if codes.size else 0):
            active = lengths > pos
            dg = _digit(codes, lengths, pos, N)[active]
            t[active] += np.einsum("wij,wj->wi", A[active], self.trans[dg])
            A[active] = A[active] @ self.lin[dg]
        return A, t

    def level_pairs(self, k: int, codes: np.ndarray, lengths: np.ndarray) -> np.ndarray:
        from scipy.spatial import cKDTree

        spec = self.spec
        thr = spec.gamma * spec.r_min ** k
        A, t = self._affines(codes, lengths)
        scale = np.abs(np.linalg.det(A)) ** (1.0 / self.dim)
        centers = np.einsum("wij,j->wi", A, self.center) + t
        slack_w = 2 * scale * spec.r_min ** self.depth * self.D
        reach = 2 * scale.max() * self.radius + thr + slack_w.max()
        cand = cKDTree(centers).query_pairs(reach, output_type="ndarray")
        if cand.size == 0:
            return np.zeros((0, 2), dtype=np.int64)
        slack = np.maximum(slack_w[cand[:, 0]], slack_w[cand[:, 1]])
        dist = self._pair_distance(A, t, scale, cand, thr - slack, thr + slack)
        ambiguous = (dist > thr - slack) & (dist <= thr + slack)
        if np.any(ambiguous):
            a, b = cand[np.argmax(ambiguous)]
            N = spec.n_maps
            wa = format_word(unpack(int(codes[a]), int(lengths[a]), N))
            wb = format_word(unpack(int(codes[b]), int(lengths[b]), N))
            raise AmbiguousAdjacency(
                f"cells {wa} and {wb} at level {k}: distance {dist[np.argmax(ambiguous)]:.3e} "
                f"within {slack[np.argmax(ambiguous)]:.1e} of gamma*r^n={thr:.3e}; increase depth")
        return cand[dist <= thr - slack]

    def _pair_distance(self, A, t, scale, cand, decided, cutoff):
        """Point-cloud distance per candidate pair, or any value <= ``decided``.

        Corner points of a subcell belong to the deeper cloud, so their
        distances are upper bounds; pairs already below ``decided`` stop early.
        """
        N = self.spec.n_maps
        pid = np.arange(cand.shape[0])
        Aa, ta, sa = A[cand[:, 0]], t[cand[:, 0]], scale[cand[:, 0]]
        Ab, tb, sb = A[cand[:, 1]], t[cand[:, 1]], scale[cand[:, 1]]
        best = np.full(cand.shape[0], np.inf)
        ia, ib = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
        ia, ib = ia.ravel(), ib.ravel()
        for step in range(self.depth + 1):
            pa = np.einsum("pij,kj->pki", Aa, self.fixed) + ta[:, None, :]
            pb = np.einsum("pij,kj->pki", Ab, self.fixed) + tb[:, None, :]
            d = np.sqrt(((pa[:, :, None, :] - pb[:, None, :, :]) ** 2).sum(-1)).reshape(pid.size, -1).min(1)
            np.minimum.at(best, pid, d)
            live = best[pid] > decided[pid]
            if step == self.depth or not live.any():
                break
            pid, Aa, ta, sa, Ab, tb, sb = (pid[live], Aa[live], ta[live], sa[live],
                                           Ab[live], tb[live], sb[live])
            # split both cells of every live pair into N x N subcell pairs
            P = pid.size
            rep = lambda x: np.repeat(x, N * N, axis=0)
            ja, jb = np.tile(ia, P), np.tile(ib, P)
            na_t = rep(ta) + np.einsum("pij,pj->pi", rep(Aa), self.trans[ja])
            na_A = rep(Aa) @ self.lin[ja]
            nb_t = rep(tb) + np.einsum("pij,pj->pi", rep(Ab), self.trans[jb])
            nb_A = rep(Ab) @ self.lin[jb]
            na_s = rep(sa) * self.spec.ratios[ja]
            nb_s = rep(sb) * self.spec.ratios[jb]
            npid = rep(pid)
            ca = np.einsum("pij,j->pi", na_A, self.center) + na_t
            cb = np.einsum("pij,j->pi", nb_A, self.center) + nb_t
            lower = np.sqrt(((ca - cb) ** 2).sum(1)) - (na_s + nb_s) * self.radius
            keep = lower <= np.minimum(cutoff[npid], best[npid])
            pid, Aa, ta, sa, Ab, tb, sb = (npid[keep], na_A[keep], na_t[keep], na_s[keep],
                                           nb_A[keep], nb_t[keep], nb_s[keep])
            if pid.size == 0:
                break
        return best


def _cloud(spec: IfsSpec, depth: int) -> np.ndarray:
    pts = np.array([m.fixed_point() for m in spec.maps])
    for _ in range(depth):
        pts = np.concatenate([m(pts) for m in spec.maps])
        if pts.shape[0] > 50000:
            break
    return pts


# --- kappa selections -------------------------------------------------------

TieRule = str | Callable[[list[Stream]], Stream]


@dataclass(frozen=True)
class KappaSelection:
    """Per boundary point, the selected word id at every level 0..n."""

    points: tuple[BoundaryPoint, ...]
    ids: tuple[tuple[int, ...], ...]   # ids[p][k]
    streams: tuple[Stream, ...]        # the representation chosen per point

    def at_level(self, k: int) -> list[int]:
        return sorted({ids[k] for ids in self.ids})


def _choose(reps: list[Stream], tie_rule: TieRule, horizon: int) -> Stream:
    if callable(tie_rule):
        return tie_rule(reps)
    if tie_rule == "lexicographic-min":
        return min(reps, key=lambda s: s.take(horizon))
    if tie_rule == "lexicographic-max":
        return max(reps, key=lambda s: s.take(horizon))
    raise InvalidInput(f"unknown tie rule {tie_rule!r}")


def kappa_select(tree: AugmentedTree, points: Sequence[BoundaryPoint | Stream | Sequence[int]],
                 tie_rule: TieRule = "lexicographic-min") -> KappaSelection:
    """Geodesic rays kappa_k(xi), k = 0..n, for each point.

    A point with several codings (catalog junction points) is resolved by
    ``tie_rule``: ``lexicographic-min``, ``lexicographic-max`` or a callable
    picking one of the streams.  Finite prefixes must reach level n.
    """
    if isinstance(points, (BoundaryPoint, Stream)):
        points = [points]
    pts, all_ids, chosen = [], [], []
    n = tree.max_level
    for p in points:
        if isinstance(p, BoundaryPoint):
            reps = []
            for s in p.representations:
                alts = tree.catalog.alternate_representations(s) if tree.catalog else [s]
                reps.extend(a for a in alts if a not in reps)
            stream = _choose(reps, tie_rule, horizon=4 * n + 8)
            bp = p
        elif isinstance(p, Stream):
            stream = p
            bp = BoundaryPoint(str(p), (p,))
        else:
            stream = tuple(p)
            bp = BoundaryPoint(format_word(stream), ())
        ids = tuple(tree.vertex_id(tree.level_prefix(stream, k)) for k in range(n + 1))
        pts.append(bp)
        all_ids.append(ids)
        chosen.append(stream if isinstance(stream, Stream) else Stream(stream, (1,)))
    return KappaSelection(tuple(pts), tuple(all_ids), tuple(chosen))


def boundary_words(fractal: CatalogFractal | AugmentedTree | str) -> list[tuple[str, Stream]]:
    """The catalog boundary points V_0 as (point id, stream)."""
    if isinstance(fractal, AugmentedTree):
        fractal = fractal.catalog
    elif isinstance(fractal, str):
        fractal = get_fractal(fractal)
    if not isinstance(fractal, CatalogFractal):
        raise Unsupported("boundary words are only known for catalog fractals")
    return [(p.name, p.representations[0]) for p in fractal.boundary]


def graph_distances(tree: AugmentedTree, sources: Sequence[int]) -> np.ndarray:
    """Unweighted graph distances in X_n from each source (rows)."""
    v, h = tree.edges()
    e = np.concatenate([v, h])
    n = tree.n_vertices
    adj = coo_matrix((np.ones(e.shape[0]), (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
    return shortest_path(adj, directed=False, unweighted=True, indices=list(sources))


def kappa_distance_check(tree: AugmentedTree, sel1: KappaSelection, sel2: KappaSelection) -> list[int]:
    """Per level, the max graph distance between the two selections' words."""
    if len(sel1.ids) != len(sel2.ids):
        raise InvalidInput("selections cover different point sets")
    out = []
    for k in range(tree.max_level + 1):
        worst = 0
        for a, b in zip(sel1.ids, sel2.ids):
            if a[k] != b[k]:
                worst = max(worst, int(graph_distances(tree, [a[k]])[0, b[k]]))
        out.append(worst)
    return out
