"""Built-in self-similar sets with exact cell adjacency.

Catalog ids: ``cantor3``, ``sg2``, ``sg3``, ``sgN:<N>``, ``pentagasket``,
``cantor_x_interval``.  Every entry has equal contraction ratios, so the
level-n word set is all of {1..N}^n and a word is packed as its base-N code
(digit = symbol - 1, most significant first).

Exact adjacency for the p.c.f. entries comes from the level-1 junction table:
S_i(p_a) = S_j(p_b) means cells ``w i a^k`` and ``w j b^k`` touch for every
prefix w and k >= 0, and no other level-n cells meet.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .ifs import BoundaryPoint, IfsSpec, InvalidInput, Similitude, Stream

DEFAULT_GAMMA = 0.5


@dataclass(frozen=True, eq=False)
class CatalogFractal:
    """A catalog entry: the IFS plus the combinatorics the experiments need."""

    id: str
    spec: IfsSpec
    boundary: tuple[BoundaryPoint, ...]
    connected: bool
    # representative i^inf pairs (lambda_3*) and V_0 pairs (lambda_1*) up to symmetry
    symbol_pairs: tuple[tuple[int, int], ...]
    boundary_pairs: tuple[tuple[int, int], ...]
    junctions: tuple[tuple[int, int, int, int], ...] = ()
    adjacency: Callable[[int], np.ndarray] | None = field(default=None, repr=False)

    @property
    def n_maps(self) -> int:
        return self.spec.n_maps

    def exact_adjacency(self, n: int) -> np.ndarray:
        """Level-n touching pairs as an (M, 2) array of word codes, a < b."""
        if n <= 0:
            return np.zeros((0, 2), dtype=np.int64)
        if self.adjacency is not None:
            pairs = self.adjacency(n)
        else:
            pairs = junction_adjacency(n, self.n_maps, self.junctions)
        return _canonical_pairs(pairs)

    def alternate_representations(self, stream: Stream) -> list[Stream]:
        """All codings of the point ``stream`` (itself included)."""
        out = [stream]
        if not self.junctions or len(set(stream.period)) != 1:
            return out
        a = stream.period[0]
        prefix = stream.prefix
        while prefix and prefix[-1] == a:
            prefix = prefix[:-1]
        if not prefix:
            return out
        i = prefix[-1]
        for (i2, a2, j, b) in _symmetric_junctions(self.junctions):
            if (i2, a2) == (i, a):
                out.append(Stream(prefix[:-1] + (j,), (b,)))
        return out

    def symbol_stream_pairs(self, which: str = "symbols", all_pairs: bool = False):
        """Pairs of boundary points for the lambda_3* ('symbols') or lambda_1* ('boundary') scan."""
        if which == "symbols":
            pairs = (list(itertools.combinations(range(1, self.n_maps + 1), 2))
                     if all_pairs else self.symbol_pairs)
        elif which == "boundary":
            ids = [int(p.name) for p in self.boundary]
            pairs = list(itertools.combinations(ids, 2)) if all_pairs else self.boundary_pairs
        else:
            raise InvalidInput(f"unknown pair family {which!r}")
        return [(point_of_symbol(i), point_of_symbol(j)) for i, j in pairs]


def point_of_symbol(i: int) -> BoundaryPoint:
    return BoundaryPoint(str(i), (Stream.constant(i),))


def _symmetric_junctions(junctions):
    out = set()
    for i, a, j, b in junctions:
        out.add((i, a, j, b))
        out.add((j, b, i, a))
    return sorted(out)


def _canonical_pairs(pairs: np.ndarray) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    pairs = np.sort(pairs, axis=1)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    return np.unique(pairs, axis=0)


def junction_adjacency(n: int, N: int, junctions) -> np.ndarray:
    """Touching level-n cells of a p.c.f. set from its junction table."""
    codes = np.arange(N ** n, dtype=np.int64)
    chunks = []
    for k in range(n):
        Nk = N ** k
        rep = (Nk - 1) // (N - 1)
        digit = (codes // Nk) % N
        suffix = codes % Nk
        for i, a, j, b in _symmetric_junctions(junctions):
            mask = (digit == i - 1) & (suffix == (a - 1) * rep)
            x = codes[mask]
            y = x + (j - i) * Nk + (b - a) * rep
            chunks.append(np.stack([x, y], axis=1))
    if not chunks:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(chunks)


def _cantor_interval_adjacency(n: int) -> np.ndarray:
    # symbol s -> column (s-1)//3 in {0,1}, row (s-1)%3 in {0,1,2}
    codes = np.arange(6 ** n, dtype=np.int64)
    col = np.zeros_like(codes)
    row = np.zeros_like(codes)
    rest = codes.copy()
    for k in range(n):
        d = rest % 6
        rest //= 6
        col += (d // 3) * 2 ** k
        row += (d % 3) * 3 ** k
    key = col * 3 ** n + row
    inverse = np.empty_like(codes)
    inverse[key] = codes
    up = row < 3 ** n - 1
    return np.stack([codes[up], inverse[key[up] + 1]], axis=1)


def _no_adjacency(n: int) -> np.ndarray:
    return np.zeros((0, 2), dtype=np.int64)


def sierpinski(N: int, gamma: float | None = None) -> CatalogFractal:
    """SG_N in R^{N-1}: S_i(x) = (x - e_{i-1}) / 2 + e_{i-1}, e_0 = 0."""
    if N < 2:
        raise InvalidInput("sgN needs N >= 2")
    d = N - 1
    corners = np.vstack([np.zeros(d), np.eye(d)])
    maps = tuple(Similitude.homothety(0.5, c) for c in corners)
    spec = IfsSpec(maps, gamma=gamma or DEFAULT_GAMMA, catalog_id=f"sg{N}" if N in (2, 3) else f"sgN:{N}",
                   exact_ratio_alpha=(Fraction(1, N),) * N)
    junctions = tuple((i, j, j, i) for i, j in itertools.combinations(range(1, N + 1), 2))
    return CatalogFractal(
        id=spec.catalog_id,
        spec=spec,
        boundary=tuple(point_of_symbol(i) for i in range(1, N + 1)),
        connected=True,
        symbol_pairs=((1, 2),),
        boundary_pairs=((1, 2),),
        junctions=junctions,
    )


def cantor3(gamma: float | None = None) -> CatalogFractal:
    maps = (Similitude.homothety(1 / 3, [0.0]), Similitude.homothety(1 / 3, [1.0]))
    spec = IfsSpec(maps, gamma=gamma or DEFAULT_GAMMA, catalog_id="cantor3",
                   exact_ratio_alpha=(Fraction(1, 2),) * 2)
    return CatalogFractal(
        id="cantor3",
        spec=spec,
        boundary=(point_of_symbol(1), point_of_symbol(2)),
        connected=False,
        symbol_pairs=((1, 2),),
        boundary_pairs=((1, 2),),
        adjacency=_no_adjacency,
    )


PENTAGASKET_RATIO = (3 - math.sqrt(5)) / 2


def pentagasket(gamma: float | None = None) -> CatalogFractal:
    """Five maps S_i(z) = r (z - p_i) + p_i with p_k = exp(2 pi i k / 5)."""
    centers = [cmath.exp(2j * math.pi * k / 5) for k in range(1, 6)]
    maps = tuple(Similitude.homothety(PENTAGASKET_RATIO, [c.real, c.imag]) for c in centers)
    spec = IfsSpec(maps, gamma=gamma or DEFAULT_GAMMA, catalog_id="pentagasket",
                   exact_ratio_alpha=(Fraction(1, 5),) * 5)
    # cells i and i+1 meet at S_i(p_{i+2}) = S_{i+1}(p_{i-1})
    junctions = tuple(
        (i, (i + 1) % 5 + 1, i % 5 + 1, (i - 2) % 5 + 1) for i in range(1, 6)
    )
    return CatalogFractal(
        id="pentagasket",
        spec=spec,
        boundary=tuple(point_of_symbol(i) for i in range(1, 6)),
        connected=True,
        symbol_pairs=((1, 2), (1, 3)),
        boundary_pairs=((1, 2), (1, 3)),
        junctions=junctions,
    )


def cantor_x_interval(gamma: float | None = None) -> CatalogFractal:
    """Cantor middle-third set times [0, 1]: S_i(x) = x / 3 + p_i."""
    offsets = [(0, 0), (0, 1 / 3), (0, 2 / 3), (2 / 3, 0), (2 / 3, 1 / 3), (2 / 3, 2 / 3)]
    maps = tuple(Similitude(1 / 3, np.eye(2), np.array(p)) for p in offsets)
    spec = IfsSpec(maps, gamma=gamma or DEFAULT_GAMMA, catalog_id="cantor_x_interval",
                   exact_ratio_alpha=(Fraction(1, 6),) * 6)
    # corners 1^inf=(0,0), 3^inf=(0,1), 4^inf=(1,0), 6^inf=(1,1)
    return CatalogFractal(
        id="cantor_x_interval",
        spec=spec,
        boundary=tuple(point_of_symbol(i) for i in (1, 3, 4, 6)),
        connected=False,
        symbol_pairs=((1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (2, 5)),
        boundary_pairs=((1, 3), (1, 4), (1, 6)),
        adjacency=_cantor_interval_adjacency,
    )


CATALOG_IDS = ("cantor3", "sg2", "sg3", "sgN:<N>", "pentagasket", "cantor_x_interval")


def get_fractal(catalog_id: str, gamma: float | None = None) -> CatalogFractal | IfsSpec:
    """Look up a catalog entry by id (``sgN:4`` etc. for general gaskets)."""
    if catalog_id == "cantor3":
        return cantor3(gamma)
    if catalog_id == "sg2":
        return sierpinski(2, gamma)
    if catalog_id == "sg3":
        return sierpinski(3, gamma)
    if catalog_id.startswith("sgN:"):
        try:
            N = int(catalog_id.split(":", 1)[1])
        except ValueError:
            raise InvalidInput(f"bad gasket id {catalog_id!r}") from None
        return sierpinski(N, gamma)
    if catalog_id == "pentagasket":
        return pentagasket(gamma)
    if catalog_id == "cantor_x_interval":
        return cantor_x_interval(gamma)
    raise InvalidInput(f"unknown fractal {catalog_id!r}; choose from {', '.join(CATALOG_IDS)}")
