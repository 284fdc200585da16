"""Monte Carlo for the lambda-NRW: hitting distribution at a deep level.

Walkers start at a vertex (the root by default) and move with
P(x, y) = c(x, y) / m(x) until they first reach the escape level m.  The
level-n ancestor of the exit vertex stands in for the cell containing the
limit point Z_inf, whose law is the normalized Hausdorff measure
nu(S_x K) = r_x^alpha.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .augtree import AugmentedTree, build
from .ifs import InvalidInput, format_word
from .network import Network, from_augtree

STEP_BUDGET = 10 ** 7
CHUNK = 20000


def transition_row(net: Network, x: int) -> tuple[np.ndarray, np.ndarray]:
    """Neighbors of x and their probabilities c(x, y) / m(x)."""
    adj = net.adjacency()[x]
    if not adj:
        raise InvalidInput(f"vertex {x} has no neighbors")
    nbrs = np.array(sorted(adj), dtype=np.int64)
    w = np.array([float(adj[y]) for y in nbrs])
    return nbrs, w / w.sum()


def step(net: Network, x: int, rng: np.random.Generator) -> int:
    """One move of the walk from x."""
    nbrs, p = transition_row(net, x)
    return int(nbrs[rng.choice(nbrs.size, p=p)])


@dataclass(frozen=True)
class WalkConfig:
    lam: float
    samples: int
    target_level: int
    escape_level: int | None = None     # default target + 6
    start: tuple[int, ...] = ()
    seed: int = 0
    step_budget: int = STEP_BUDGET

    def __post_init__(self):
        if self.samples < 1:
            raise InvalidInput("sample count must be >= 1")
        if not 0 < self.lam < 1:
            raise InvalidInput(f"lambda={self.lam} outside (0, 1)")
        if self.target_level < 0:
            raise InvalidInput("target level must be >= 0")

    @property
    def m(self) -> int:
        m = self.target_level + 6 if self.escape_level is None else self.escape_level
        if m < self.target_level + 4:
            raise InvalidInput("escape level must be at least target + 4")
        return m


@dataclass
class HittingHistogram:
    target_level: int
    words: list[str]
    counts: np.ndarray
    expected: np.ndarray          # nu(S_x K) = r_x^alpha
    total: int
    budget_exceeded: int
    steps: int
    chi2: float = field(default=float("nan"))
    p_value: float = field(default=float("nan"))

    @property
    def frequencies(self) -> np.ndarray:
        hit = self.counts.sum()
        return self.counts / hit if hit else self.counts.astype(float)

    def to_json(self) -> dict:
        return {
            "target_level": self.target_level,
            "total": self.total,
            "budget_exceeded": self.budget_exceeded,
            "steps": self.steps,
            "histogram": [{"word": w, "count": int(c), "expected": float(e)}
                          for w, c, e in zip(self.words, self.counts, self.expected)],
            "chi2": self.chi2,
            "p_value": self.p_value,
        }


def _tables(net: Network):
    """Padded neighbor ids and cumulative transition probabilities."""
    L = net.laplacian().tocsr()
    A = (-L).tocsr()
    A.setdiag(0)
    A.eliminate_zeros()
    deg = np.diff(A.indptr)
    width = int(deg.max())
    n = net.n_vertices
    nbr = np.zeros((n, width), dtype=np.int64)
    cum = np.ones((n, width))
    for v in range(n):
        s, e = A.indptr[v], A.indptr[v + 1]
        w = A.data[s:e]
        nbr[v, : e - s] = A.indices[s:e]
        nbr[v, e - s:] = A.indices[e - 1] if e > s else v
        cum[v, : e - s] = np.cumsum(w) / w.sum()
    cum[:, -1] = 1.0
    return nbr, cum


def _run_chunk(args):
    nbr, cum, level, start, m, size, budget, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    pos = np.full(size, start, dtype=np.int64)
    active = np.flatnonzero(level[pos] < m)
    steps = 0
    t = 0
    while active.size and t < budget:
        x = pos[active]
        u = rng.random(active.size)
        j = (cum[x] < u[:, None]).sum(axis=1)
        pos[active] = nbr[x, j]
        steps += active.size
        active = active[level[pos[active]] < m]
        t += 1
    done = level[pos] >= m
    return pos, done, steps


def hitting_histogram(fractal, cfg: WalkConfig, jobs: int = 1, tree: AugmentedTree | None = None
                      ) -> HittingHistogram:
    """Empirical law of the level-n cell at first passage to level m, with a chi-square test."""
    m, n = cfg.m, cfg.target_level
    tree = tree if tree is not None and tree.max_level >= m else build(fractal, m)
    net = from_augtree(tree, cfg.lam, level=m)
    nbr, cum = _tables(net)
    level = tree.level[: tree.size(m)]
    start = tree.vertex_id(cfg.start)
    # level-n ancestor of every level-m vertex
    anc = tree.level_ids(m)
    for _ in range(m - n):
        anc = tree.parent[anc]
    leaf0 = int(tree.offsets[m])
    target_ids = tree.level_ids(n)
    slot = np.full(tree.n_vertices, -1, dtype=np.int64)
    slot[target_ids] = np.arange(target_ids.size)

    n_chunks = -(-cfg.samples // CHUNK)
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_chunks)
    sizes = [min(CHUNK, cfg.samples - k * CHUNK) for k in range(n_chunks)]
    work = [(nbr, cum, level, start, m, s, cfg.step_budget, sd) for s, sd in zip(sizes, seeds)]
    if jobs > 1 and n_chunks > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_chunk, work))
    else:
        results = [_run_chunk(w) for w in work]

    counts = np.zeros(target_ids.size, dtype=np.int64)
    exceeded, steps = 0, 0
    for pos, done, st in results:
        exceeded += int((~done).sum())
        steps += st
        cells = slot[anc[pos[done] - leaf0]]
        counts += np.bincount(cells, minlength=target_ids.size)
    expected = tree.ratio[target_ids] ** tree.spec.alpha
    expected = expected / expected.sum()
    words = [format_word(tree.word(int(v))) for v in target_ids]
    hist = HittingHistogram(n, words, counts, expected, cfg.samples, exceeded, steps)
    hit = int(counts.sum())
    if hit and target_ids.size > 1:
        res = stats.chisquare(counts, expected * hit)
        hist.chi2, hist.p_value = float(res.statistic), float(res.pvalue)
    return hist


def escape_fraction(fractal, lam: float, m: int, budgets, samples: int = 2000, seed: int = 0) -> list[float]:
    """Fraction of walks from the root reaching level m within each step budget."""
    tree = build(fractal, m)
    net = from_augtree(tree, lam, level=m)
    nbr, cum = _tables(net)
    level = tree.level
    out = []
    for b in budgets:
        _, done, _ = _run_chunk((nbr, cum, level, 0, m, samples, int(b), np.random.SeedSequence(seed)))
        out.append(float(done.mean()))
    return out
