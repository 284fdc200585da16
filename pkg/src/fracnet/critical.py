"""Level-n resistance series, zero/positive classification and critical ratios.

The limiting resistance R(Phi, Psi) = lim R_n is never observed directly; a
series R_1..R_n is classified as ZERO (geometric decay), POSITIVE (plateau or
growth) or UNDECIDED, and bisection over lambda brackets the transition.
Brackets are evidence, not proofs.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .augtree import AugmentedTree, KappaSelection, build, kappa_select, resolve
from .catalog import CatalogFractal, get_fractal, point_of_symbol
from .ifs import BoundaryPoint, InvalidInput, Stream
from .network import energy, from_augtree
from .solver import dirichlet, effective_resistance

ZERO, POSITIVE, UNDECIDED = "ZERO", "POSITIVE", "UNDECIDED"
LAMBDA3, LAMBDA1 = "all-zero-sup", "all-positive-inf"


class BadBracket(ValueError):
    """The bisection endpoints do not straddle a transition."""


@dataclass(frozen=True)
class ClassifyConfig:
    decay_margin: float = 0.05
    stabilize_tol: float = 0.02
    window: int = 3
    # a ZERO call is withdrawn when the Aitken limit exceeds this fraction of R_n
    aitken_guard: float | None = 0.5

    def __post_init__(self):
        if not (self.decay_margin > 0 and self.stabilize_tol > 0 and self.window >= 1):
            raise InvalidInput("classification tolerances must be positive")
        if self.aitken_guard is not None and not self.aitken_guard > 0:
            raise InvalidInput("aitken_guard must be positive or None")


def aitken(x0: float, x1: float, x2: float) -> float | None:
    """Aitken delta-squared limit, or None when the sequence is not contracting."""
    d1, d2 = x1 - x0, x2 - x1
    den = d2 - d1
    if den == 0 or d1 * d2 <= 0 or abs(d2) >= abs(d1):
        return None
    return x2 - d2 * d2 / den


def classify(values: Sequence[float], config: ClassifyConfig = ClassifyConfig()):
    """(classification, decay rate or None, limit or None) of a series R_1..R_n.

    ZERO: the last W ratios R_k/R_{k-1} are below 1 - decay_margin, and the
    Aitken extrapolation of the last three values is below aitken_guard * R_n
    (a geometric tail towards a positive limit also has ratios below one).
    POSITIVE: the last W relative changes are below stabilize_tol, or the
    last W ratios are all >= 1 (a nondecreasing positive tail cannot tend to 0).
    """
    v = [float(x) for x in values]
    W = config.window
    if len(v) < W + 1:
        return UNDECIDED, None, None
    tail = v[-(W + 1):]
    if any(math.isinf(x) for x in tail):
        return POSITIVE, None, math.inf
    if tail[-1] == 0:
        return ZERO, 0.0, 0.0
    q = [b / a for a, b in zip(tail, tail[1:])]
    if all(r < 1 - config.decay_margin for r in q):
        lim = aitken(*v[-3:])
        if config.aitken_guard is None or lim is None or lim < config.aitken_guard * v[-1]:
            return ZERO, float(np.prod(q) ** (1 / W)), None
        return UNDECIDED, None, None
    stable = all(abs(b - a) < config.stabilize_tol * abs(b) for a, b in zip(tail, tail[1:]))
    if stable or all(r >= 1 for r in q):
        lim = aitken(*v[-3:])
        if lim is None:
            lim = v[-1] if stable else math.inf
        return POSITIVE, None, lim
    return UNDECIDED, None, None


@dataclass
class ResistanceSeries:
    fractal: str
    lam: float
    pair: tuple[str, str]
    values: list[float]
    classification: str
    decay_rate: float | None = None
    limit: float | None = None

    @property
    def ratios(self) -> list[float]:
        return [b / a if a else math.inf for a, b in zip(self.values, self.values[1:])]

    def to_json(self) -> dict:
        return {
            "fractal": self.fractal, "lambda": self.lam, "pair": list(self.pair),
            "R": self.values, "ratios": self.ratios, "classification": self.classification,
            "decay_rate": self.decay_rate, "limit": self.limit,
        }


PointSet = BoundaryPoint | Stream | Sequence


def _as_points(p) -> list:
    if isinstance(p, (BoundaryPoint, Stream)):
        return [p]
    if isinstance(p, int):
        return [point_of_symbol(p)]
    if isinstance(p, str):
        return [point_of_symbol(int(p))]
    return [point_of_symbol(x) if isinstance(x, int) else x for x in p]


def _label(points) -> str:
    return "+".join(p.name if isinstance(p, BoundaryPoint) else str(p) for p in points)


@functools.lru_cache(maxsize=16)
def _cached_tree(fractal_id: str, n: int) -> AugmentedTree:
    return build(fractal_id, n)


def get_tree(fractal, n: int) -> AugmentedTree:
    """X_n, memoized for catalog ids."""
    if isinstance(fractal, AugmentedTree):
        if fractal.max_level < n:
            raise InvalidInput(f"tree has only {fractal.max_level} levels")
        return fractal
    if isinstance(fractal, str):
        return _cached_tree(fractal, n)
    if isinstance(fractal, CatalogFractal) and fractal.spec.gamma == get_fractal(fractal.id).spec.gamma:
        return _cached_tree(fractal.id, n)
    return build(fractal, n)


def _fractal_id(fractal) -> str:
    if isinstance(fractal, AugmentedTree):
        fractal = fractal.catalog or fractal.spec
    if isinstance(fractal, str):
        return fractal
    if isinstance(fractal, CatalogFractal):
        return fractal.id
    return fractal.catalog_id or "custom"


def resistance_values(tree: AugmentedTree, lam, sel: KappaSelection, n_one: int, n_max: int,
                      n_min: int = 1) -> list[float]:
    """R_n between the kappa_n images of point groups [0, n_one) and [n_one, ...)."""
    out = []
    for n in range(n_min, n_max + 1):
        net = from_augtree(tree, lam, level=n)
        E = {ids[n] for ids in sel.ids[:n_one]}
        F = {ids[n] for ids in sel.ids[n_one:]}
        out.append(float(effective_resistance(net, E, F).resistance))
    return out


def level_resistance_series(fractal, lam: float, phi: PointSet, psi: PointSet, n_max: int,
                            tie_rule="lexicographic-min",
                            config: ClassifyConfig = ClassifyConfig()) -> ResistanceSeries:
    """R_n(kappa_n(Phi), kappa_n(Psi)) for n = 1..n_max, classified."""
    if n_max < 2:
        raise InvalidInput("n_max must be >= 2")
    tree = get_tree(fractal, n_max)
    P, Q = _as_points(phi), _as_points(psi)
    sel = kappa_select(tree, P + Q, tie_rule=tie_rule)
    vals = resistance_values(tree, lam, sel, len(P), n_max)
    cls, rate, lim = classify(vals, config)
    return ResistanceSeries(_fractal_id(fractal), float(lam), (_label(P), _label(Q)), vals, cls, rate, lim)


def kappa_independence_check(fractal, lam: float, phi: PointSet, psi: PointSet, n_max: int,
                             rules: tuple = ("lexicographic-min", "lexicographic-max")) -> list[float]:
    """Per level, the max relative deviation of R_n across tie rules."""
    runs = [level_resistance_series(fractal, lam, phi, psi, n_max, tie_rule=r).values for r in rules]
    arr = np.array(runs)
    ref = np.abs(arr).max(axis=0)
    dev = (arr.max(axis=0) - arr.min(axis=0)) / np.where(ref > 0, ref, 1.0)
    return dev.tolist()


# --- bisection ------------------------------------------------------------

@dataclass
class Evidence:
    lam: float
    aggregate: str
    series: list[ResistanceSeries]


@dataclass
class Bracket:
    """[lo, hi] = [highest aggregate-ZERO lambda, lowest aggregate-POSITIVE lambda]."""

    which: str
    lo: float
    hi: float
    undecided: tuple[float, float] | None
    converged: bool
    evidence: list[Evidence] = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def estimate(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, lam: float) -> bool:
        return self.lo <= lam <= self.hi

    def to_json(self) -> dict:
        return {
            "which": self.which, "lo": self.lo, "hi": self.hi, "width": self.width,
            "estimate": self.estimate,
            "undecided_band": list(self.undecided) if self.undecided else None,
            "undecided_width": (self.undecided[1] - self.undecided[0]) if self.undecided else 0.0,
            "converged": self.converged,
            "evidence": [{"lambda": e.lam, "aggregate": e.aggregate,
                          "series": [s.to_json() for s in e.series]} for e in self.evidence],
        }


def aggregate(classes: Iterable[str], which: str) -> str:
    """Combine per-pair classes for the lambda_3* or lambda_1* predicate."""
    cs = list(classes)
    if which == LAMBDA3:
        if all(c == ZERO for c in cs):
            return ZERO
        return POSITIVE if POSITIVE in cs else UNDECIDED
    if which == LAMBDA1:
        if all(c == POSITIVE for c in cs):
            return POSITIVE
        return ZERO if ZERO in cs else UNDECIDED
    raise InvalidInput(f"unknown predicate {which!r}")


class _Evaluator:
    def __init__(self, fractal, pairs, which, n_max, config, tie_rule):
        self.tree = get_tree(fractal, n_max)
        self.fid = _fractal_id(fractal)
        self.pairs = [(_as_points(a), _as_points(b)) for a, b in pairs]
        if not self.pairs:
            raise InvalidInput("no point pairs given")
        self.which, self.n_max, self.config = which, n_max, config
        self.sels = [kappa_select(self.tree, P + Q, tie_rule=tie_rule) for P, Q in self.pairs]
        self.seen: dict[float, Evidence] = {}

    def __call__(self, lam: float) -> Evidence:
        if lam not in self.seen:
            series = []
            for (P, Q), sel in zip(self.pairs, self.sels):
                vals = resistance_values(self.tree, lam, sel, len(P), self.n_max)
                cls, rate, lim = classify(vals, self.config)
                series.append(ResistanceSeries(self.fid, lam, (_label(P), _label(Q)), vals, cls, rate, lim))
            agg = aggregate((s.classification for s in series), self.which)
            self.seen[lam] = Evidence(lam, agg, series)
        return self.seen[lam]


def lambda_star_bisect(fractal, pairs, which: str = LAMBDA3, lam_lo: float = 0.05, lam_hi: float = 0.45,
                       n_max: int = 8, bisect_tol: float = 0.005,
                       config: ClassifyConfig = ClassifyConfig(), tie_rule="lexicographic-min",
                       max_evals: int = 60) -> Bracket:
    """Bracket the ZERO -> POSITIVE transition of the aggregate predicate.

    ``pairs`` is a list of (Phi, Psi) point groups (ints are symbols i^inf).
    lam_lo must be aggregate-ZERO and lam_hi must not be.  Each step bisects
    the widest gap between neighboring evaluated lambdas whose classes differ.
    The bracket runs from the highest ZERO to the lowest POSITIVE lambda; any
    UNDECIDED lambdas inside it form the reported undecided band.
    """
    if not 0 < lam_lo < lam_hi < 1:
        raise InvalidInput("need 0 < lam_lo < lam_hi < 1")
    ev = _Evaluator(fractal, pairs, which, n_max, config, tie_rule)
    a_lo, a_hi = ev(lam_lo).aggregate, ev(lam_hi).aggregate
    if a_lo != ZERO or a_hi == ZERO:
        raise BadBracket(f"classes at the endpoints are {a_lo} / {a_hi}; need ZERO at lam_lo and "
                         "POSITIVE or UNDECIDED at lam_hi (widen the range or raise --levels)")

    def state():
        pts = sorted(ev.seen)
        pos = [x for x in pts if ev.seen[x].aggregate == POSITIVE]
        hi = pos[0] if pos else lam_hi
        zeros = [x for x in pts if x < hi and ev.seen[x].aggregate == ZERO]
        lo = zeros[-1]
        inside = [x for x in pts if lo <= x <= hi]
        gaps = [(b - a, a, b) for a, b in zip(inside, inside[1:])
                if ev.seen[a].aggregate != ev.seen[b].aggregate]
        und = [x for x in inside if ev.seen[x].aggregate == UNDECIDED]
        return lo, hi, gaps, (und[0], und[-1]) if und else None

    while len(ev.seen) < max_evals:
        lo, hi, gaps, _ = state()
        if hi - lo <= bisect_tol:
            break
        g, a, b = max(gaps)
        if g <= bisect_tol:
            break
        ev(0.5 * (a + b))
    lo, hi, _, und = state()
    converged = hi - lo <= bisect_tol and ev.seen[hi].aggregate == POSITIVE
    evidence = [ev.seen[x] for x in sorted(ev.seen)]
    return Bracket(which, lo, hi, und, converged, evidence)


# --- exponent report ----------------------------------------------------------

DEFAULT_GRID = tuple(round(0.05 * k, 2) for k in range(1, 10))


@dataclass
class CriticalEstimate:
    lam: float | None           # None: unresolved on the tested grid
    beta: float | None
    bracket: Bracket | None
    note: str

    def to_json(self) -> dict:
        return {"lambda": self.lam, "beta": _json_num(self.beta), "note": self.note,
                "bracket": self.bracket.to_json() if self.bracket else None}


def _json_num(x):
    if x is None:
        return None
    if math.isinf(x):
        return "inf"
    return x


@dataclass
class ExponentReport:
    fractal: str
    r: float
    connected: bool
    lambda3: CriticalEstimate
    lambda1: CriticalEstimate
    beta2: float | None
    beta2_note: str
    grid: tuple[float, ...]
    n_max: int

    @property
    def beta3(self):
        return self.lambda3.beta

    @property
    def beta1(self):
        return self.lambda1.beta

    def to_json(self) -> dict:
        return {
            "fractal": self.fractal, "r": self.r, "connected": self.connected, "levels": self.n_max,
            "grid": list(self.grid),
            "lambda3": self.lambda3.to_json(), "lambda1": self.lambda1.to_json(),
            "beta3": _json_num(self.beta3), "beta1": _json_num(self.beta1),
            "beta2": _json_num(self.beta2), "beta2_note": self.beta2_note,
        }


def beta_of(lam: float, r: float) -> float:
    """beta = log lambda / log r; lambda -> 0 gives +inf."""
    if lam == 0:
        return math.inf
    return math.log(lam) / math.log(r)


def _critical(fractal, pairs, which, grid, n_max, r, config, bisect_tol) -> CriticalEstimate:
    ev = _Evaluator(fractal, pairs, which, n_max, config, "lexicographic-min")
    classes = [(lam, ev(lam).aggregate) for lam in grid]
    zeros = [lam for lam, c in classes if c == ZERO]
    if not zeros:
        # no lambda on the grid has all pairs at zero resistance
        return CriticalEstimate(0.0, math.inf, None, "no aggregate-ZERO lambda on the grid; lambda* taken as 0")
    pos = [lam for lam, c in classes if c == POSITIVE and lam > zeros[0]]
    if not pos:
        undec = [lam for lam, c in classes if c != ZERO and lam > zeros[0]]
        if not undec:
            return CriticalEstimate(None, None, None, "aggregate ZERO on the whole grid; lambda* above the grid")
        hi = undec[-1]
    else:
        hi = pos[0]
    lo = max(z for z in zeros if z < hi)
    br = lambda_star_bisect(fractal, pairs, which, lo, hi, n_max, bisect_tol, config)
    lam = br.estimate
    note = "converged" if br.converged else "bracket limited by the UNDECIDED band"
    return CriticalEstimate(lam, beta_of(lam, r), br, note)


def exponent_report(fractal, n_max: int = 8, grid: Sequence[float] | None = None,
                    config: ClassifyConfig = ClassifyConfig(), bisect_tol: float = 0.005,
                    all_pairs: bool = False) -> ExponentReport:
    """lambda_3*, lambda_1* and the beta exponents of a catalog fractal.

    The grid is restricted to lambda < r^alpha, where the walk is transient.
    beta_2* equals beta_3* when K is connected; for the disconnected catalog
    entries it is set from their known case analysis (infinite) and marked so.
    """
    if isinstance(fractal, AugmentedTree):
        spec, cat, src = fractal.spec, fractal.catalog, fractal
    else:
        spec, cat = resolve(fractal)
        src = cat
    if cat is None:
        raise InvalidInput("exponent reports need a catalog fractal (boundary sets are not known otherwise)")
    r = spec.r_min
    cutoff = spec.r_alpha
    grid = tuple(g for g in (grid or DEFAULT_GRID) if g < cutoff)
    if len(grid) < 2:
        raise InvalidInput("need at least two grid lambdas below r^alpha")
    sym = [(a.name, b.name) for a, b in cat.symbol_stream_pairs("symbols", all_pairs)]
    bnd = [(a.name, b.name) for a, b in cat.symbol_stream_pairs("boundary", all_pairs)]
    l3 = _critical(src, [(int(a), int(b)) for a, b in sym], LAMBDA3, grid, n_max, r, config, bisect_tol)
    l1 = _critical(src, [(int(a), int(b)) for a, b in bnd], LAMBDA1, grid, n_max, r, config, bisect_tol)
    if cat.connected:
        beta2, note = l3.beta, "equals beta3 (K connected)"
    elif cat.id in ("cantor3", "cantor_x_interval"):
        beta2, note = math.inf, "infinite by the catalog case analysis (K disconnected)"
    else:
        beta2, note = None, "unresolved (K disconnected)"
    return ExponentReport(cat.id, r, cat.connected, l3, l1, beta2, note, grid, n_max)


# --- finite-level harmonic analysis -------------------------------------------------

def harmonic_extend_finite(tree: AugmentedTree, lam: float, boundary_values, level: int | None = None):
    """Extend values on J_level harmonically to X_level (float).

    Returns (potentials on X_level, residual).  Free vertices satisfy
    P f = f, so the result obeys the discrete maximum principle.
    """
    n = tree.max_level if level is None else level
    net = from_augtree(tree, lam, level=n)
    ids = tree.level_ids(n)
    vals = np.asarray(boundary_values, dtype=float)
    if vals.shape != ids.shape:
        raise InvalidInput(f"expected {ids.size} boundary values on J_{n}, got {vals.size}")
    return dirichlet(net, ids, vals)


@dataclass
class DecayFit:
    increments: list[float]      # D_k: max |f(x) - f(x^-)| over x in J_k, k = 1..n
    rate: float                  # fitted per-level ratio
    bound_rate: float            # sqrt(lambda / r^alpha)
    window: tuple[int, int]

    def within(self, slack: float) -> bool:
        return self.rate <= self.bound_rate + slack


def geodesic_decay_check(tree: AugmentedTree, f, lam: float, rays: KappaSelection | None = None,
                         level: int | None = None) -> DecayFit:
    """Fit the per-level decay of f's increments along kappa-rays.

    D_k is the sup over rays of |f(x_k) - f(x_{k-1})|; all rays (every word
    of J_n) are used unless ``rays`` is given.  The rate is exp of the
    least-squares slope of log D_k over the interior levels 2..n-1: level 1
    (next to the root) and level n (carrying the Dirichlet data) are
    boundary layers.
    """
    n = tree.max_level if level is None else level
    f = np.asarray(f, dtype=float)
    if rays is None:
        child = np.arange(1, tree.size(n))
    else:
        child = np.unique([ids[k] for ids in rays.ids for k in range(1, n + 1)])
    lv = tree.level[child]
    diff = np.abs(f[child] - f[tree.parent[child]])
    D = [float(diff[lv == k].max()) if np.any(lv == k) else 0.0 for k in range(1, n + 1)]
    bound = math.sqrt(lam / tree.spec.r_alpha)
    lo, hi = (2, n - 1) if n >= 4 else (1, n)
    ks = np.arange(lo, hi + 1)
    d = np.array(D[lo - 1:hi])
    if np.all(d == 0):
        return DecayFit(D, 0.0, bound, (lo, hi))
    d = np.maximum(d, np.finfo(float).tiny)
    slope = np.polyfit(ks, np.log(d), 1)[0]
    return DecayFit(D, float(math.exp(slope)), bound, (lo, hi))


def anchor_points(tree: AugmentedTree, level: int | None = None) -> np.ndarray:
    """xi_x = S_x(p_1) for every x in J_level."""
    n = tree.max_level if level is None else level
    spec = tree.spec
    p1 = spec.fixed_point(1)
    return np.array([spec.apply_word(tree.word(int(v)), p1) for v in tree.level_ids(n)])


def gagliardo_compare(fractal, lam: float, u: Callable[[np.ndarray], np.ndarray], n: int) -> float:
    """Gagliardo quadrature of u over J_n divided by the energy of its harmonic extension.

    Quadrature: sum over x != y of |u(xi_x) - u(xi_y)|^2 |xi_x - xi_y|^-(alpha+beta)
    r_x^alpha r_y^alpha with beta = log lambda / log r.  Constant u gives 1.
    """
    tree = get_tree(fractal, n)
    spec = tree.spec
    xi = anchor_points(tree, n)
    vals = np.asarray(u(xi), dtype=float).ravel()
    if np.ptp(vals) == 0:
        return 1.0
    beta = beta_of(lam, spec.r_min)
    w = tree.ratio[tree.level_ids(n)] ** spec.alpha
    diff = xi[:, None, :] - xi[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    np.fill_diagonal(dist, np.inf)
    du = (vals[:, None] - vals[None, :]) ** 2
    quad = float(np.sum(du * dist ** (-(spec.alpha + beta)) * w[:, None] * w[None, :]))
    f, _ = harmonic_extend_finite(tree, lam, vals, n)
    en = energy(from_augtree(tree, lam, level=n), f)
    return quad / en
