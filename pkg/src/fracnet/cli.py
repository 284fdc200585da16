"""Command-line front end.

Subcommands: ``fractal list``, ``graph build``, ``resist``, ``scan``,
``exponents``, ``oracle``, ``walk``, ``energy-compare``.  Output is JSON
(schema "fr-1") with floats at 17 significant digits; exit codes are
0 ok, 2 invalid input, 3 UNDECIDED-only scan, 4 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import pickle
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import critical, reduction, walk
from .augtree import AmbiguousAdjacency, AugmentedTree, InsufficientPrecision, Unsupported, build, kappa_select
from .catalog import CATALOG_IDS, CatalogFractal, get_fractal, point_of_symbol
from .ifs import InvalidInput, IfsSpec, spec_from_json
from .network import from_augtree
from .solver import DanglingInterior, SolverFailure, effective_resistance

SCHEMA = "fr-1"
EXIT_OK, EXIT_INVALID, EXIT_UNDECIDED, EXIT_SOLVER = 0, 2, 3, 4
_FLOAT = "\x00f:"


class UndecidedOnly(Exception):
    def __init__(self, doc):
        self.doc = doc


# --- output -------------------------------------------------------------------

def _prep(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        text = format(x, ".17g")
        if not any(c in text for c in ".en"):
            text += ".0"
        return _FLOAT + text
    if isinstance(obj, dict):
        return {str(k): _prep(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_prep(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc: dict) -> str:
    """JSON with every float written to 17 significant digits."""
    text = json.dumps(_prep(doc), indent=2, sort_keys=True)
    return re.sub(r'"\\u0000f:([^"]*)"', r"\1", text)


def _emit(args, doc: dict, start: float):
    doc = {"schema": SCHEMA, **doc}
    if not args.deterministic:
        doc["wall_time_ms"] = (time.perf_counter() - start) * 1e3
    text = dumps(doc) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# --- inputs -------------------------------------------------------------------

def _fractal(args) -> CatalogFractal | IfsSpec:
    if getattr(args, "spec", None):
        try:
            doc = json.loads(Path(args.spec).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read spec {args.spec}: {exc}") from exc
        return spec_from_json(doc)
    if not getattr(args, "fractal", None):
        raise InvalidInput("give --fractal <id> or --spec <file.json>")
    return get_fractal(args.fractal)


def _tree(fr, n: int, mode: str = "auto") -> AugmentedTree:
    """build(), memoized on disk under $FR_CACHE_DIR keyed by (spec hash, n)."""
    cache = os.environ.get("FR_CACHE_DIR")
    if not cache:
        return build(fr, n, mode=mode)
    spec = fr.spec if isinstance(fr, CatalogFractal) else fr
    key = hashlib.sha256(json.dumps(spec.to_json(), sort_keys=True).encode()).hexdigest()[:20]
    path = Path(cache) / f"tree-{key}-{mode}-{n}.pkl"
    if path.exists():
        with path.open("rb") as fh:
            return pickle.load(fh)
    tree = build(fr, n, mode=mode)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        pickle.dump(tree, fh)
    return tree


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"pair must look like 1,2 (got {text!r})") from None
    return a, b


def _lam(text: str):
    try:
        return Fraction(text) if "/" in text else float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lambda {text!r}") from None


def _config(args) -> critical.ClassifyConfig:
    return critical.ClassifyConfig(args.decay_margin, args.stabilize_tol, args.window)


def _check_pair(fr, pair):
    N = fr.spec.n_maps if isinstance(fr, CatalogFractal) else fr.n_maps
    if not all(1 <= s <= N for s in pair) or pair[0] == pair[1]:
        raise InvalidInput(f"pair {pair} must name two distinct symbols in 1..{N}")


# --- subcommands ---------------------------------------------------------------

def cmd_fractal_list(args):
    out = []
    for cid in ("cantor3", "sg2", "sg3", "pentagasket", "cantor_x_interval"):
        f = get_fractal(cid)
        out.append({"id": cid, "maps": f.n_maps, "ratio": f.spec.r_min, "alpha": f.spec.alpha,
                    "r_alpha": f.spec.r_alpha, "connected": f.connected})
    return {"fractals": out, "parametric": ["sgN:<N>"], "ids": list(CATALOG_IDS)}


def cmd_graph_build(args):
    fr = _fractal(args)
    tree = _tree(fr, args.level, args.mode)
    doc = {"mode": tree.mode, "degree_bound": tree.degree_bound, "graph": tree.to_json()}
    if args.lam is not None:
        doc["network"] = from_augtree(tree, args.lam, exact=isinstance(args.lam, Fraction)).to_json()
    return doc


def cmd_resist(args):
    fr = _fractal(args)
    _check_pair(fr, args.pair)
    tree = _tree(fr, args.level)
    exact = args.weights == "rational"
    lam = Fraction(args.lam).limit_denominator(10 ** 12) if exact else float(args.lam)
    net = from_augtree(tree, lam, exact=exact)
    sel = kappa_select(tree, [point_of_symbol(args.pair[0]), point_of_symbol(args.pair[1])])
    sol = effective_resistance(net, [sel.ids[0][-1]], [sel.ids[1][-1]], tol=args.tol)
    if not exact and sol.residual_norm > args.tol:
        raise SolverFailure(f"residual {sol.residual_norm:.3g} above tolerance {args.tol:g}")
    doc = {"fractal": _fid(fr), "lambda": lam, "level": args.level, "pair": list(args.pair),
           "resistance": sol.resistance, "energy": sol.energy, "residual_norm": sol.residual_norm,
           "vertices": net.n_vertices, "edges": net.n_edges}
    if exact:
        doc["resistance_float"] = float(sol.resistance)
    return doc


def _fid(fr) -> str:
    return fr.id if isinstance(fr, CatalogFractal) else (fr.catalog_id or "custom")


def _series_job(job):
    fr, lam, pairs, n, cfg = job
    return [critical.level_resistance_series(fr, lam, a, b, n, config=cfg) for a, b in pairs]


def _csv_rows(series_list):
    for s in series_list:
        for n, r in enumerate(s.values, start=1):
            yield [s.fractal, format(s.lam, ".17g"), n, format(r, ".17g"), s.classification]


def _write_csv(path, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fractal", "lambda", "n", "R_n", "classification"])
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def cmd_scan(args):
    fr = _fractal(args)
    pairs = args.pair or [(1, 2)]
    for p in pairs:
        _check_pair(fr, p)
    cfg = _config(args)
    if args.lambdas:
        lams = [float(x) for x in args.lambdas.split(",")]
        jobs = [(fr, lam, pairs, args.levels, cfg) for lam in lams]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_series_job, jobs))
        else:
            results = [_series_job(j) for j in jobs]
        flat = [s for group in results for s in group]
        which = critical.LAMBDA1 if args.which == "lambda1" else critical.LAMBDA3
        doc = {"fractal": _fid(fr), "levels": args.levels,
               "scan": [{"lambda": lam, "aggregate": critical.aggregate((s.classification for s in g), which),
                         "series": [s.to_json() for s in g]} for lam, g in zip(lams, results)]}
        if args.csv:
            _write_csv(args.csv, _csv_rows(flat))
        if all(s.classification == critical.UNDECIDED for s in flat):
            raise UndecidedOnly(doc)
        return doc
    which = critical.LAMBDA1 if args.which == "lambda1" else critical.LAMBDA3
    tree = _tree(fr, args.levels)
    try:
        br = critical.lambda_star_bisect(tree, pairs, which, args.lambda_lo, args.lambda_hi, args.levels,
                                         args.bisect_tol, cfg)
    except critical.BadBracket as exc:
        ev = critical._Evaluator(tree, pairs, which, args.levels, cfg, "lexicographic-min")
        ends = [ev(args.lambda_lo).aggregate, ev(args.lambda_hi).aggregate]
        if all(c == critical.UNDECIDED for c in ends):
            raise UndecidedOnly({"fractal": _fid(fr), "error": str(exc), "endpoints": ends}) from None
        raise
    r = tree.spec.r_min
    doc = {"fractal": _fid(fr), "levels": args.levels, "bracket": br.to_json(),
           "beta_estimate": critical.beta_of(br.estimate, r),
           "beta_bracket": [critical.beta_of(br.hi, r), critical.beta_of(br.lo, r)]}
    if args.csv:
        _write_csv(args.csv, _csv_rows(s for e in br.evidence for s in e.series))
    return doc


def cmd_exponents(args):
    fr = _fractal(args)
    if not isinstance(fr, CatalogFractal):
        raise Unsupported("exponents needs a catalog fractal")
    grid = [float(x) for x in args.grid.split(",")] if args.grid else None
    tree = _tree(fr, args.levels)
    rep = critical.exponent_report(tree, args.levels, grid, _config(args), args.bisect_tol, args.all_pairs)
    if args.csv:
        ests = [rep.lambda3, rep.lambda1]
        series = [s for e in ests if e.bracket for ev in e.bracket.evidence for s in ev.series]
        _write_csv(args.csv, _csv_rows(series))
    return rep.to_json()


def cmd_oracle(args):
    fid = args.fractal
    if fid is None:
        raise InvalidInput("oracle needs --fractal")
    get_fractal(fid)
    doc = reduction.closed_form_R(fid, args.lam, args.level)
    doc.pop("fractal")
    doc.pop("lambda")
    if fid in reduction.FIXED_POINT_PROBLEMS:
        res = reduction.fixed_point_exists(fid, float(args.lam))
        doc["fixed_point"] = {"exists": res.exists, "mu": list(res.mu) if res.mu else None,
                              "method": res.method}
        doc["fixed_point_threshold"] = reduction.fixed_point_threshold(fid)
    return {"fractal": fid, "lambda": args.lam, **doc}


def cmd_walk(args):
    fr = _fractal(args)
    cfg = walk.WalkConfig(float(args.lam), args.samples, args.level, args.escape_level, seed=args.seed)
    tree = _tree(fr, cfg.m)
    h = walk.hitting_histogram(fr, cfg, jobs=args.jobs, tree=tree)
    return {"fractal": _fid(fr), "lambda": args.lam, "escape_level": cfg.m, "seed": args.seed, **h.to_json()}


TEST_FUNCTIONS = {
    "x": lambda p: p[:, 0],
    "y": lambda p: p[:, 1] if p.shape[1] > 1 else p[:, 0] ** 2,
    "radial": lambda p: np.sqrt((p ** 2).sum(1)),
    "wave": lambda p: np.sin(3 * p[:, 0]) + (np.cos(2 * p[:, 1]) if p.shape[1] > 1 else 0.0),
    "quadratic": lambda p: (p ** 2).sum(1) - p[:, 0],
}


def cmd_energy_compare(args):
    fr = _fractal(args)
    levels = [int(x) for x in args.levels.split(",")]
    names = args.function or list(TEST_FUNCTIONS)
    rows = []
    for name in names:
        if name not in TEST_FUNCTIONS:
            raise InvalidInput(f"unknown test function {name!r}; choose from {', '.join(TEST_FUNCTIONS)}")
        for n in levels:
            rows.append({"function": name, "n": n,
                         "ratio": critical.gagliardo_compare(_tree(fr, n), float(args.lam), TEST_FUNCTIONS[name], n)})
    vals = [r["ratio"] for r in rows]
    return {"fractal": _fid(fr), "lambda": args.lam, "ratios": rows,
            "band": [min(vals), max(vals)], "spread": max(vals) / min(vals)}


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write JSON here instead of stdout")
    common.add_argument("--deterministic", action="store_true", help="omit wall-clock fields")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for independent jobs")
    frac = argparse.ArgumentParser(add_help=False)
    frac.add_argument("--fractal", help="catalog id: " + ", ".join(CATALOG_IDS))
    frac.add_argument("--spec", help="IFS JSON file (maps, gamma)")
    tol = argparse.ArgumentParser(add_help=False)
    tol.add_argument("--decay-margin", type=float, default=0.05)
    tol.add_argument("--stabilize-tol", type=float, default=0.02)
    tol.add_argument("--window", type=int, default=3)
    tol.add_argument("--bisect-tol", type=float, default=0.005)

    p = argparse.ArgumentParser(prog="fracnet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    fl = sub.add_parser("fractal", help="catalog queries")
    fl_sub = fl.add_subparsers(dest="action", required=True)
    fl_sub.add_parser("list", parents=[common]).set_defaults(func=cmd_fractal_list)

    g = sub.add_parser("graph", help="augmented tree construction")
    g_sub = g.add_subparsers(dest="action", required=True)
    gb = g_sub.add_parser("build", parents=[common, frac])
    gb.add_argument("--level", type=int, required=True)
    gb.add_argument("--mode", default="auto", choices=["auto", "exact-catalog", "geometric"])
    gb.add_argument("--lambda", dest="lam", type=_lam, help="also dump the network")
    gb.set_defaults(func=cmd_graph_build)

    r = sub.add_parser("resist", parents=[common, frac], help="R_n between two symbol points")
    r.add_argument("--lambda", dest="lam", type=_lam, required=True)
    r.add_argument("--pair", type=_pair, default=(1, 2))
    r.add_argument("--level", type=int, required=True)
    r.add_argument("--weights", choices=["float", "rational"], default="float")
    r.add_argument("--tol", type=float, default=1e-12)
    r.set_defaults(func=cmd_resist)

    s = sub.add_parser("scan", parents=[common, frac, tol], help="series classification / lambda* bisection")
    s.add_argument("--pair", type=_pair, action="append")
    s.add_argument("--which", choices=["lambda3", "lambda1"], default="lambda3")
    s.add_argument("--lambda-lo", type=float, default=0.05)
    s.add_argument("--lambda-hi", type=float, default=0.45)
    s.add_argument("--lambdas", help="comma list: classify each lambda instead of bisecting")
    s.add_argument("--levels", type=int, default=8)
    s.add_argument("--csv", help="also write fractal,lambda,n,R_n,classification rows")
    s.set_defaults(func=cmd_scan)

    e = sub.add_parser("exponents", parents=[common, frac, tol], help="critical exponent report")
    e.add_argument("--levels", type=int, default=8)
    e.add_argument("--grid", help="comma list of lambdas (default 0.05..0.45)")
    e.add_argument("--all-pairs", action="store_true", help="use every pair, not symmetry representatives")
    e.add_argument("--csv")
    e.set_defaults(func=cmd_exponents)

    o = sub.add_parser("oracle", parents=[common], help="closed-form values and thresholds")
    o.add_argument("--fractal", required=True)
    o.add_argument("--lambda", dest="lam", type=_lam, required=True)
    o.add_argument("--level", type=int)
    o.set_defaults(func=cmd_oracle)

    w = sub.add_parser("walk", parents=[common, frac], help="Monte Carlo hitting histogram")
    w.add_argument("--lambda", dest="lam", type=_lam, required=True)
    w.add_argument("--level", type=int, required=True, help="target level n")
    w.add_argument("--escape-level", type=int)
    w.add_argument("--samples", type=int, default=100000)
    w.add_argument("--seed", type=int, default=0)
    w.set_defaults(func=cmd_walk)

    ec = sub.add_parser("energy-compare", parents=[common, frac], help="Gagliardo / graph energy ratios")
    ec.add_argument("--lambda", dest="lam", type=_lam, required=True)
    ec.add_argument("--levels", default="4,5,6")
    ec.add_argument("--function", action="append", help=", ".join(TEST_FUNCTIONS))
    ec.set_defaults(func=cmd_energy_compare)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    for name in ("levels", "level"):
        v = getattr(args, name, None)
        if isinstance(v, int) and v < (2 if name == "levels" else 0):
            print(f"error: --{name} too small", file=sys.stderr)
            return EXIT_INVALID
    start = time.perf_counter()
    try:
        doc = args.func(args)
    except UndecidedOnly as exc:
        _emit(args, exc.doc, start)
        print("error: every classification is UNDECIDED; raise --levels or move the lambda range",
              file=sys.stderr)
        return EXIT_UNDECIDED
    except (SolverFailure, DanglingInterior, np.linalg.LinAlgError) as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InvalidInput, Unsupported, InsufficientPrecision, AmbiguousAdjacency,
            critical.BadBracket, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _emit(args, doc, start)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
