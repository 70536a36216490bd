"""Command-line interface.

Exit codes: 0 = pass, 1 = a law/audit failed, 2 = usage, configuration or data error.
Machine-readable JSON goes to stdout, human summaries to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .config import CONSTRUCTIONS, FACTORS, SpaceConfig, load_config_file, resolve_config
from .dataio import (grid_to_csv, grid_to_pgm, ingest, parse_inline_points, write_atomic)
from .errors import StarMetricError, UsageError
from .metric import check_star_metric_axioms
from .tdefiner import (BUILTINS, DEFAULT_TOLERANCES, check_tdefiner_axioms, compare,
                       get_tdefiner, grid_pairs, random_triples, residuum, residuum_numeric)
from .topology import (Ball, ball_grid, ball_members, interior_witness, normal_separation,
                       product_ball_inclusion_check, separation_radius)
from .vptree import VpTree, brute_force, brute_force_range

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _default_seed() -> int:
    raw = os.environ.get("STARMETRIC_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"STARMETRIC_SEED must be an integer, got {raw!r}") from None


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2, default=_json_default)
    sys.stdout.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _space_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("space")
    g.add_argument("--config", help="JSON file with space settings; flags override it")
    g.add_argument("--tdefiner", choices=sorted(BUILTINS))
    g.add_argument("--construction", choices=CONSTRUCTIONS)
    g.add_argument("--arity", type=int)
    g.add_argument("--factor", choices=FACTORS)
    g.add_argument("--pseudometric", action="store_true", default=None)


def _space_config(args) -> SpaceConfig:
    file_values = load_config_file(args.config) if args.config else None
    return resolve_config(file_values, tdefiner=args.tdefiner, construction=args.construction,
                          arity=args.arity, factor=args.factor, pseudometric=args.pseudometric)


def _parse_floats(text: str, n: Optional[int] = None, what: str = "value") -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"could not parse {what} {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{what} needs {n} comma-separated numbers, got {len(vals)}")
    return vals


def _seed(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


# --- check-laws ---------------------------------------------------------------

def cmd_check_laws(args) -> int:
    conf = _space_config(args)
    space = conf.build()
    seed = _seed(args)
    if args.points is not None:
        pts = parse_inline_points(args.points, space.arity)
    elif args.data:
        pts = ingest(args.data, args.format).points
    elif args.generate:
        rng = np.random.default_rng(seed)
        low = 0.0 if args.low is None else args.low
        pts = rng.uniform(low, args.high, size=(args.generate, space.arity))
    else:
        raise UsageError("give --points, --data or --generate")
    if len(pts) == 0:
        raise UsageError("empty dataset")
    space.check_domain(pts)
    if args.force_tdefiner:
        space = space.with_star(get_tdefiner(args.force_tdefiner))

    samples = random_triples(args.tdefiner_samples, seed)
    t_report = check_tdefiner_axioms(space.star, samples)
    m_report = check_star_metric_axioms(space, pts, triple_budget=args.budget, seed=seed)
    passed = t_report.passed and m_report.passed
    _emit({"config": conf.to_dict(), "space": space.name, "seed": seed,
           "verdict": "pass" if passed else "fail",
           "reports": [t_report.to_dict(), m_report.to_dict()]})
    _say(t_report.summary())
    _say(m_report.summary())
    return EXIT_PASS if passed else EXIT_FAIL


# --- residuum -----------------------------------------------------------------

def cmd_residuum(args) -> int:
    star = get_tdefiner(args.tdefiner)
    a, b = args.a, args.b
    out = {"tdefiner": star.name, "a": a, "b": b}
    if args.method in ("closed", "both"):
        if star.residuum_closed_form is None:
            raise UsageError(f"t-definer {star.name!r} has no closed-form residuum")
        out["closed"] = residuum(star, a, b)
    if args.method in ("numeric", "both"):
        out["numeric"] = residuum_numeric(star, a, b)
    if args.method == "both":
        out["discrepancy"] = abs(out["closed"] - out["numeric"])
    _emit(out)
    _say(" ".join(f"{k}={out[k]!r}" for k in ("closed", "numeric", "discrepancy") if k in out))
    return EXIT_PASS


# --- query --------------------------------------------------------------------

def _neighbor_json(nb) -> dict:
    return {"point": list(nb.point), "distance": nb.distance, "index": nb.index}


def cmd_query(args) -> int:
    conf = _space_config(args)
    space = conf.build()
    data = ingest(args.data, args.format)
    queries = ingest(args.queries, args.format)
    if queries.arity != data.arity:
        raise UsageError(f"arity mismatch: dataset has arity {data.arity}, queries have {queries.arity}")
    data.validate_for(space)
    queries.validate_for(space)
    seed = _seed(args)
    tree = VpTree(data.points, space, leaf_size=args.leaf_size, seed=seed)

    results, all_ok = [], True
    for q in queries.points:
        if args.k is not None:
            res = tree.knn(q, args.k, audit=args.audit)
        else:
            res = tree.range_query(q, args.radius, audit=args.audit)
        item = {"query": q.tolist(), "neighbors": [_neighbor_json(n) for n in res],
                "distance_evals": res.distance_evals}
        if args.k is not None:
            item["short"] = res.short
        if args.audit:
            if args.k is not None:
                oracle = brute_force(data.points, space, q, args.k)
                sound = tree.verify_skips(q, res, strict=True)
                audit = {"skips": len(res.skips), "pruning_sound": sound,
                         "oracle_match": res.distances == oracle.distances}
            else:
                oracle = brute_force_range(data.points, space, q, args.radius)
                members = ball_members(Ball(space, q, args.radius), data.points)
                sound = tree.verify_skips(q, res, strict=False)
                audit = {"skips": len(res.skips), "pruning_sound": sound,
                         "oracle_match": res.distances == oracle.distances,
                         "ball_members_match": sorted(map(tuple, members.tolist()))
                         == sorted(n.point for n in res)}
            all_ok &= all(v for k, v in audit.items() if k != "skips")
            item["audit"] = audit
        results.append(item)

    payload = {"config": conf.to_dict(), "seed": seed, "leaf_size": args.leaf_size,
               "mode": "knn" if args.k is not None else "range", "results": results}
    if args.audit:
        payload["audit_passed"] = all_ok
    _emit(payload)
    _say(f"{len(results)} queries over {len(data)} points"
         + (f"; audit {'passed' if all_ok else 'FAILED'}" if args.audit else ""))
    return EXIT_PASS if all_ok else EXIT_FAIL


# --- ball-grid ----------------------------------------------------------------

def cmd_ball_grid(args) -> int:
    conf = _space_config(args)
    space = conf.build()
    if space.arity != 2:
        raise UsageError(f"ball-grid needs a 2-dimensional space, got arity {space.arity}")
    center = _parse_floats(args.center, 2, "--center")
    window = _parse_floats(args.window, 4, "--window")
    grid = ball_grid(space, center, args.radius, window, args.resolution)
    if args.format == "pgm":
        comment = (f"starmetric ball-grid space={space.name} center={args.center} "
                   f"radius={args.radius} window={args.window}\n"
                   "values: 0=out 1=in 2=boundary-ambiguous; first row is y=ymax")
        text = grid_to_pgm(grid, comment)
    else:
        text = grid_to_csv(grid)
    if args.output:
        write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    counts = {name: int((grid.values == v).sum()) for v, name in enumerate(("out", "in", "boundary"))}
    _say(f"{space.name}: {counts}")
    return EXIT_PASS


# --- topology-check -----------------------------------------------------------

def _candidates(space, rng, around: np.ndarray, scale: float, n: int) -> np.ndarray:
    lo = around.min(axis=0) - scale
    hi = around.max(axis=0) + scale
    cand = rng.uniform(lo, hi, size=(n, space.arity))
    cand = np.vstack([cand, around])
    return cand[space.domain(cand)]


def cmd_topology_check(args) -> int:
    conf = _space_config(args)
    space = conf.build()
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    out: dict = {"config": conf.to_dict(), "procedure": args.procedure, "seed": seed}
    ok = True
    if args.procedure == "separation":
        if not (args.a and args.b):
            raise UsageError("separation needs --a and --b")
        a = np.asarray(_parse_floats(args.a, space.arity, "--a"))
        b = np.asarray(_parse_floats(args.b, space.arity, "--b"))
        s = separation_radius(space, a, b)
        d = space.dist(a, b)
        cand = _candidates(space, rng, np.stack([a, b]), d, args.candidates)
        both = Ball(space, a, s).mask(cand) & Ball(space, b, s).mask(cand)
        ok = not both.any()
        out.update({"distance": d, "s": s, "s_star_s": float(space.star.apply(s, s)),
                    "candidates": len(cand), "disjoint": ok})
    elif args.procedure == "normal":
        if not (args.A and args.B):
            raise UsageError("normal needs --A and --B")
        A = parse_inline_points(args.A, space.arity)
        B = parse_inline_points(args.B, space.arity)
        sep = normal_separation(space, A, B)
        allp = np.vstack([A, B])
        scale = float(np.max(space.pairwise(allp))) or 1.0
        cand = _candidates(space, rng, allp, scale, args.candidates)
        overlap = sep.overlap(cand)
        ok = len(overlap) == 0
        out.update({"U": [{"center": u.center.tolist(), "radius": u.radius} for u in sep.U],
                    "V": [{"center": v.center.tolist(), "radius": v.radius} for v in sep.V],
                    "candidates": len(cand), "disjoint": ok})
    elif args.procedure == "witness":
        if not (args.center and args.radius and args.y):
            raise UsageError("witness needs --center, --radius and --y")
        ball = Ball(space, _parse_floats(args.center, space.arity, "--center"), args.radius)
        y = np.asarray(_parse_floats(args.y, space.arity, "--y"))
        eps = interior_witness(ball, y)
        cand = _candidates(space, rng, y[None, :], eps, args.candidates)
        near = cand[Ball(space, y, eps).mask(cand)]
        escaped = near[~ball.mask(near)] if len(near) else near
        ok = len(escaped) == 0
        out.update({"epsilon": eps, "sampled_in_witness_ball": len(near), "sound": ok})
    else:  # inclusion
        if conf.construction not in ("product_max", "product_T"):
            raise UsageError("inclusion needs a product_max or product_T configuration")
        if not (args.center and args.radius):
            raise UsageError("inclusion needs --center and --radius")
        space_factors = space.factors
        center = np.asarray(_parse_floats(args.center, space.arity, "--center"))
        big_r = space.star.power(args.radius, len(space_factors))
        cand = _candidates(space, rng, center[None, :], big_r, args.candidates)
        report = product_ball_inclusion_check(space_factors, space.star, center, args.radius, cand)
        ok = report.passed
        out["report"] = report.to_dict()
        _say(report.summary())
    out["verdict"] = "pass" if ok else "fail"
    _emit(out)
    _say(f"topology-check {args.procedure}: {'pass' if ok else 'FAIL'}")
    return EXIT_PASS if ok else EXIT_FAIL


# --- compare-tdefiners --------------------------------------------------------

def cmd_compare(args) -> int:
    s1, s2 = get_tdefiner(args.first), get_tdefiner(args.second)
    result = compare(s1, s2, grid_pairs(args.grid, args.high), DEFAULT_TOLERANCES)
    _emit({"first": s1.name, "second": s2.name, **result.to_dict()})
    _say(f"{s1.name} vs {s2.name}: {result.verdict.value}")
    return EXIT_PASS


# --- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="starmetric",
                                     description="Star-metric spaces: law checks, residuums, "
                                                 "VP-tree queries and topology procedures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-laws", help="check t-definer and star-metric axioms")
    _space_args(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--points", help='inline points: "1,16,25" or "0,0;1,2"')
    src.add_argument("--data", help="CSV or JSON point file")
    src.add_argument("--generate", type=int, help="draw N uniform random points")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--low", type=float)
    p.add_argument("--high", type=float, default=100.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int, default=10**6, help="triangle-check budget")
    p.add_argument("--force-tdefiner", choices=sorted(BUILTINS),
                   help="judge the distance against a different t-definer")
    p.add_argument("--tdefiner-samples", type=int, default=1000)
    p.set_defaults(func=cmd_check_laws)

    p = sub.add_parser("residuum", help="evaluate a -o b")
    p.add_argument("a", type=float)
    p.add_argument("b", type=float)
    p.add_argument("--tdefiner", choices=sorted(BUILTINS), default="lukasiewicz")
    p.add_argument("--method", choices=("closed", "numeric", "both"), default="closed")
    p.set_defaults(func=cmd_residuum)

    p = sub.add_parser("query", help="k-NN or range queries through the VP-tree")
    _space_args(p)
    p.add_argument("--data", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--format", choices=("csv", "json"))
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--k", type=int)
    mode.add_argument("--radius", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--leaf-size", type=int, default=16)
    p.add_argument("--audit", action="store_true",
                   help="replay pruning decisions and compare with brute force")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("ball-grid", help="rasterise an open ball of a 2-D product space")
    _space_args(p)
    p.add_argument("--center", default="0,0")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--window", default="-1.5,1.5,-1.5,1.5", help="xmin,xmax,ymin,ymax")
    p.add_argument("--resolution", type=int, default=301)
    p.add_argument("--format", choices=("pgm", "csv"), default="pgm")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_ball_grid)

    p = sub.add_parser("topology-check", help="run a constructive topology procedure")
    _space_args(p)
    p.add_argument("--procedure", choices=("separation", "normal", "witness", "inclusion"),
                   required=True)
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--A", dest="A", help='points of A: "0;1" or "0,0;1,1"')
    p.add_argument("--B", dest="B")
    p.add_argument("--center")
    p.add_argument("--radius", type=float)
    p.add_argument("--y")
    p.add_argument("--candidates", type=int, default=10000)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_topology_check)

    p = sub.add_parser("compare-tdefiners", help="pointwise order of two t-definers on a grid")
    p.add_argument("first", choices=sorted(BUILTINS))
    p.add_argument("second", choices=sorted(BUILTINS))
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--high", type=float, default=10.0)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StarMetricError as e:
        _say(f"error: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
