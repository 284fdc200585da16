"""Iterated function systems of contractive similitudes.

An :class:`IfsSpec` holds the maps S_1..S_N, the horizontal-edge threshold
``gamma`` and (for built-in fractals) a catalog id.  Words over the alphabet
{1..N} are plain tuples of ints; :func:`level_words` enumerates the level sets
J_n = {x : r_x <= r^n < r_{x^-}} of the modified symbolic space.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

# relative slack for r_x <= r^n comparisons with irrational ratios
RATIO_RTOL = 1e-10


class InvalidInput(ValueError):
    """Raised for malformed IFS data or arguments outside their domain."""


@dataclass(frozen=True, eq=False)
class Similitude:
    """x -> ratio * rotation @ x + translation."""

    ratio: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.atleast_2d(np.asarray(self.rotation, dtype=float))
        t = np.atleast_1d(np.asarray(self.translation, dtype=float))
        if not 0.0 < self.ratio < 1.0:
            raise InvalidInput(f"similitude ratio {self.ratio} outside (0, 1)")
        if rot.shape != (t.size, t.size):
            raise InvalidInput("rotation / translation dimension mismatch")
        if not np.allclose(rot @ rot.T, np.eye(t.size), atol=1e-12, rtol=0):
            raise InvalidInput("rotation matrix is not orthogonal")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", t)

    @property
    def dim(self) -> int:
        return self.translation.size

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        """Apply to an array of points with shape (..., d)."""
        pts = np.asarray(pts, dtype=float)
        return self.ratio * pts @ self.rotation.T + self.translation

    def fixed_point(self) -> np.ndarray:
        a = np.eye(self.dim) - self.ratio * self.rotation
        return np.linalg.solve(a, self.translation)

    @classmethod
    def homothety(cls, ratio: float, center: Sequence[float]) -> "Similitude":
        """x -> ratio * (x - center) + center."""
        c = np.atleast_1d(np.asarray(center, dtype=float))
        return cls(ratio, np.eye(c.size), (1.0 - ratio) * c)


def moran_exponent(ratios: Sequence[float], tol: float = 1e-14) -> float:
    """Solve sum_i r_i^a = 1 for a by bisection.

    The map a -> sum r_i^a is strictly decreasing, so the root is bracketed
    on [0, A] with A doubled until the sum drops below one.
    """
    rs = np.asarray(list(ratios), dtype=float)
    if rs.size == 0:
        raise InvalidInput("empty ratio list")
    if np.any(rs <= 0) or np.any(rs >= 1):
        raise InvalidInput("ratios must lie in (0, 1)")

    def excess(a: float) -> float:
        return float(np.sum(rs ** a)) - 1.0

    lo, hi = 0.0, 1.0
    while excess(hi) > 0:
        lo, hi = hi, 2 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Word:
    symbols: tuple[int, ...]
    level: int
    ratio_product: float

    def __str__(self) -> str:
        return format_word(self.symbols)


@dataclass(frozen=True)
class Stream:
    """Eventually periodic infinite word ``prefix + period^infinity``."""

    prefix: tuple[int, ...]
    period: tuple[int, ...]

    def __post_init__(self):
        if not self.period:
            raise InvalidInput("stream period must be nonempty")

    @classmethod
    def constant(cls, i: int) -> "Stream":
        return cls((), (i,))

    def take(self, k: int) -> tuple[int, ...]:
        if k <= len(self.prefix):
            return self.prefix[:k]
        reps = -(-(k - len(self.prefix)) // len(self.period))
        return (self.prefix + self.period * reps)[:k]

    def __str__(self) -> str:
        return f"{format_word(self.prefix) if self.prefix else ''}({format_word(self.period)})^inf"


@dataclass(frozen=True)
class BoundaryPoint:
    """A point of K given by all of its symbolic representations."""

    name: str
    representations: tuple[Stream, ...]


def format_word(symbols: Sequence[int]) -> str:
    if not symbols:
        return "ϑ"
    if max(symbols) < 10:
        return "".join(str(s) for s in symbols)
    return ".".join(str(s) for s in symbols)


@dataclass(frozen=True, eq=False)
class IfsSpec:
    """An IFS plus the data the augmented tree needs.

    ``exact_ratio_alpha`` optionally carries r_i^alpha as exact rationals
    (available for the equal-ratio catalog fractals); it enables the
    rational weight mode of the network.
    """

    maps: tuple[Similitude, ...]
    gamma: float = 0.5
    catalog_id: str | None = None
    exact_ratio_alpha: tuple[Fraction, ...] | None = None
    alpha: float = field(init=False)

    def __post_init__(self):
        maps = tuple(self.maps)
        if len(maps) < 2:
            raise InvalidInput("an IFS needs at least two maps")
        if len({m.dim for m in maps}) != 1:
            raise InvalidInput("maps act on different dimensions")
        if not self.gamma > 0:
            raise InvalidInput("gamma must be positive")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "alpha", moran_exponent(self.ratios))

    @property
    def n_maps(self) -> int:
        return len(self.maps)

    @property
    def ambient_dim(self) -> int:
        return self.maps[0].dim

    @property
    def ratios(self) -> np.ndarray:
        return np.array([m.ratio for m in self.maps])

    @property
    def r_min(self) -> float:
        return float(self.ratios.min())

    @property
    def equal_ratios(self) -> bool:
        rs = self.ratios
        return bool(np.all(rs == rs[0]))

    @property
    def r_alpha(self) -> float:
        """r^alpha for the minimal ratio r (the per-level horizontal weight)."""
        return self.r_min ** self.alpha

    def ratio_product(self, word: Sequence[int]) -> float:
        rs = self.ratios
        return float(np.prod([rs[s - 1] for s in word])) if word else 1.0

    def fixed_point(self, i: int) -> np.ndarray:
        """Fixed point of S_i (the point i^infinity), 1-based."""
        if not 1 <= i <= self.n_maps:
            raise InvalidInput(f"symbol {i} outside 1..{self.n_maps}")
        return self.maps[i - 1].fixed_point()

    def apply_word(self, word: Sequence[int], pts: np.ndarray) -> np.ndarray:
        """S_x(pts) = S_{i1} o ... o S_{ik}(pts)."""
        out = np.asarray(pts, dtype=float)
        for s in reversed(word):
            out = self.maps[s - 1](out)
        return out

    def stream_point(self, word: Sequence[int]) -> np.ndarray:
        """Approximate pi(word...) by S_word(fixed point of S_1)."""
        return self.apply_word(word, self.fixed_point(1))

    def to_json(self) -> dict:
        return {
            "maps": [
                {
                    "ratio": m.ratio,
                    "rotation": m.rotation.tolist(),
                    "translation": m.translation.tolist(),
                }
                for m in self.maps
            ],
            "gamma": self.gamma,
            "catalog_id": self.catalog_id,
        }


def spec_from_json(doc: dict | str) -> IfsSpec:
    """Load ``{"maps": [...], "gamma": .., "catalog_id": ..}``.

    A document that names a catalog id and carries no maps resolves to the
    built-in fractal.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        if not doc.get("maps") and doc.get("catalog_id"):
            from .catalog import get_fractal

            return get_fractal(doc["catalog_id"], gamma=doc.get("gamma")).spec
        maps = tuple(
            Similitude(
                float(m["ratio"]),
                np.asarray(m.get("rotation", np.eye(len(m["translation"]))), dtype=float),
                np.asarray(m["translation"], dtype=float),
            )
            for m in doc["maps"]
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise InvalidInput(f"malformed IFS document: {exc}") from exc
    return IfsSpec(maps, gamma=float(doc.get("gamma", 0.5)), catalog_id=doc.get("catalog_id"))


def level_words(spec: IfsSpec, n: int) -> list[Word]:
    """The level set J_n as a lexicographically sorted list of words."""
    if n < 0:
        raise InvalidInput("level must be >= 0")
    if n == 0:
        return [Word((), 0, 1.0)]
    rs = spec.ratios
    threshold = spec.r_min ** n * (1 + RATIO_RTOL)
    out: list[Word] = []
    for parent in level_words(spec, n - 1):
        stack = [(parent.symbols, parent.ratio_product)]
        while stack:
            w, rw = stack.pop()
            for i in range(1, spec.n_maps + 1):
                child, rc = w + (i,), rw * rs[i - 1]
                if rc <= threshold:
                    out.append(Word(child, n, rc))
                else:
                    stack.append((child, rc))
    out.sort(key=lambda w: w.symbols)
    return out


def in_level(spec: IfsSpec, word: Sequence[int], n: int) -> bool:
    """The J_n membership test r_x <= r^n < r_{x^-}."""
    if n == 0:
        return len(word) == 0
    if not word:
        return False
    t = spec.r_min ** n
    return (spec.ratio_product(word) <= t * (1 + RATIO_RTOL)
            and spec.ratio_product(word[:-1]) > t * (1 + RATIO_RTOL))


def cell_points(spec: IfsSpec, word: Sequence[int], depth: int = 4) -> np.ndarray:
    """Finite approximation of the cell S_x(K).

    Images S_x S_w(p_i) of all fixed points p_i over all words w of length
    ``depth``; duplicates removed.
    """
    if depth < 0:
        raise InvalidInput("depth must be >= 0")
    pts = np.array([m.fixed_point() for m in spec.maps])
    for _ in range(depth):
        pts = np.concatenate([m(pts) for m in spec.maps])
    pts = spec.apply_word(word, pts)
    return _unique_rows(pts)


def _unique_rows(pts: np.ndarray, decimals: int = 12) -> np.ndarray:
    _, idx = np.unique(np.round(pts, decimals), axis=0, return_index=True)
    return pts[np.sort(idx)]


def diameter_bound(spec: IfsSpec, depth: int = 6) -> float:
    """Upper bound on diam(K) from the depth-``depth`` point cloud.

    Every point of K lies within r_max^depth * diam(K) of the cloud, so
    diam(K) <= diam(cloud) / (1 - 2 r_max^depth).
    """
    rmax = float(spec.ratios.max())
    depth = max(depth, 1)
    while 2 * rmax ** depth >= 0.5:
        depth += 1
    pts = cell_points(spec, (), depth)
    if pts.shape[0] > 3000:
        # hull vertices carry the diameter; thin the cloud to its extreme points
        from scipy.spatial import ConvexHull

        pts = pts[ConvexHull(pts).vertices] if pts.shape[1] > 1 else pts[[pts.argmin(), pts.argmax()]]
    diffs = pts[:, None, :] - pts[None, :, :]
    d = float(np.sqrt((diffs ** 2).sum(-1)).max())
    return d / (1 - 2 * rmax ** depth)
