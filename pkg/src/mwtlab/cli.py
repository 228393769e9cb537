"""mwtlab command line: heuristics -> skeleton DP or LP -> report.

Exit codes: 0 integral optimum, 2 fractional LP optimum, 3 input error,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from .geometry import GeometryError, Instance, InstanceError
from .heuristics import ClosureContradiction, HeuristicConfig, run_closure, skeleton_faces
from .lp import (
    TilingError,
    build_lp,
    classify_solution,
    solve_to_extreme_point,
    write_lp_file,
    write_solution,
)
from .oracle import MAX_ORACLE_POINTS, OracleSizeError, branch_and_bound_mwt, enumerate_triangulations
from .rounding import STRATEGIES, RoundingError, build_convex_partition, transpose_solution
from .simplex import SimplexError
from .triangulate import greedy_completion, skeleton_triangulation, triangles_from_edges

log = logging.getLogger("mwtlab")

SCHEMA = 1
EXIT_OK, EXIT_FRACTIONAL, EXIT_INPUT, EXIT_INTERNAL = 0, 2, 3, 4
# exact search one point past the enumeration guard, pruned by a known upper bound
MAX_PRUNED_ORACLE_POINTS = MAX_ORACLE_POINTS + 1


class _Timer:
    def __init__(self):
        self.stages: dict[str, float] = {}

    def __call__(self, name):
        timer = self

        class _Stage:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                timer.stages[name] = time.perf_counter() - self.t
                log.info("%s: %.3fs", name, timer.stages[name])

        return _Stage()


def _tri_list(tris) -> list[list[int]]:
    return [list(t.key) for t in sorted(tris, key=lambda t: t.key)]


def _instance_stats(inst: Instance) -> dict:
    return {"n": inst.n, "hull": len(inst.hull), "potential_edges": len(inst.edges), "empty_triangles": len(inst.triangles)}


def _ledger_summary(ledger) -> dict:
    return {"counts": ledger.counts(), "rules": ledger.rule_counts(), "rounds": ledger.rounds}


def _emit(report: dict, args) -> None:
    text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _oracle(inst: Instance, upper: float) -> dict:
    if inst.n <= MAX_ORACLE_POINTS:
        ts = enumerate_triangulations(inst)
        return {"method": "enumeration", "triangulations": len(ts.all), "cost": ts.min_cost, "optima": len(ts.optima)}
    if inst.n <= MAX_PRUNED_ORACLE_POINTS:
        cost, optima = branch_and_bound_mwt(inst, upper, MAX_PRUNED_ORACLE_POINTS)
        return {"method": "branch_and_bound", "cost": cost, "optima": len(optima)}
    raise OracleSizeError(f"oracle limited to {MAX_PRUNED_ORACLE_POINTS} points, instance has {inst.n}")


# -- subcommands -------------------------------------------------------------------


def cmd_solve(args) -> int:
    timer = _Timer()
    inst = Instance.from_file(args.input)
    config = HeuristicConfig.from_rules(args.rules)
    with timer("triangles"):
        inst.triangles
    with timer("heuristics"):
        ledger = run_closure(inst, config)
        faces, solvable = skeleton_faces(ledger)
    report = {
        "schema": SCHEMA,
        "command": "solve",
        "instance": _instance_stats(inst),
        "ledger": _ledger_summary(ledger),
        "solvable": solvable,
    }
    start = None
    if solvable:
        with timer("dp"):
            tris, cost = skeleton_triangulation(inst, ledger.forced_in())
        report["faces"] = [{"boundary": list(f.boundary), "method": "DP"} for f in faces]
        start = [t.key for t in tris]
    else:
        report["faces"] = [
            {"boundary": list(f.boundary), "method": "DP" if f.is_empty and f.is_simple else "LP"} for f in faces
        ]
        allowed = [k for k in inst.edges if not ledger.is_out(k)]
        cand = triangles_from_edges(inst, greedy_completion(inst, ledger.forced_in(), allowed))
        if len(cand) == 2 * inst.n - len(inst.hull) - 2:
            start = [t.key for t in cand]
    with timer("lp"):
        lp = build_lp(inst, ledger)
        if args.export_lp:
            write_lp_file(lp, args.export_lp)
        x = solve_to_extreme_point(lp, start, tol=args.tolerance)
        cls = classify_solution(x)
    report["lp"] = {
        "columns": len(lp.triangles),
        "rows": sum(1 for r in lp.rows if r.coeffs),
        "eliminated_triangles": lp.removed,
        "eliminated_fraction": lp.removed / max(len(inst.triangles), 1),
        "objective": x.objective,
        "integral": cls.integral,
        "fractional": [[list(t.key), w] for t, w in cls.fractional],
    }
    if solvable:
        report["method"] = "DP"
        integer = tris
    elif cls.integral:
        report["method"] = "LP"
        integer = cls.triangles
    else:
        report["method"] = "LP+rounding"
        with timer("rounding"):
            full = solve_to_extreme_point(build_lp(inst), tol=args.tolerance)
            integer = transpose_solution(full, build_convex_partition(inst, args.partition)).triangles
    integer_cost = sum(t.cost for t in integer)
    if args.oracle:
        with timer("oracle"):
            report["oracle"] = _oracle(inst, integer_cost)
        if report["oracle"]["cost"] < integer_cost - 1e-9 and (solvable or cls.integral):
            raise AssertionError(f"oracle found a cheaper triangulation ({report['oracle']['cost']}) than {integer_cost}")
        integer_cost = min(integer_cost, report["oracle"]["cost"])
    report["integer_cost"] = integer_cost
    report["gap"] = integer_cost / x.objective
    report["triangulation"] = _tri_list(integer)
    if report["gap"] < 1 - 1e-7:
        raise AssertionError(f"integer cost below LP objective (gap {report['gap']})")
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(render_svg(inst, ledger, x, integer))
    if args.timings:
        report["timings"] = timer.stages
    _emit(report, args)
    return EXIT_OK if cls.integral else EXIT_FRACTIONAL


def cmd_round(args) -> int:
    inst = Instance.from_file(args.input)
    lp = build_lp(inst)
    x = solve_to_extreme_point(lp, tol=args.tolerance)
    cls = classify_solution(x)
    part = build_convex_partition(inst, args.partition)
    res = transpose_solution(x, part)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for ft in res.faces:
        pts = inst.xy[list(ft.face.boundary)]
        for _ in range(20):
            w = rng.dirichlet(np.ones(len(pts)))
            px, py = w @ pts
            worst = max(worst, abs(ft.xf.coverage(px, py) - 1.0))
    report = {
        "schema": SCHEMA,
        "command": "round",
        "instance": _instance_stats(inst),
        "partition": {"strategy": part.strategy, "faces": [list(f.boundary) for f in part.faces], "length": part.total_length},
        "lp": {"objective": x.objective, "integral": cls.integral},
        "faces": [
            {
                "boundary": list(ft.face.boundary),
                "blankets": [{"weight": b.weight, "triangles": _tri_list(b.triangles)} for b in ft.blankets],
                "cost": ft.xf.objective,
                "best_cost": ft.optimum_cost,
            }
            for ft in res.faces
        ],
        "ledger": res.ledger.to_dict(),
        "coverage_error": worst,
        "triangulation": _tri_list(res.triangles),
    }
    _emit(report, args)
    if not res.ledger.holds:
        log.error("cost bound violated: %s > %s", res.ledger.sum_transposed, res.ledger.bound)
        return EXIT_INTERNAL
    if worst > 1e-7:
        log.error("transposed solution covers a sample point with weight off by %g", worst)
        return EXIT_INTERNAL
    return EXIT_OK if cls.integral else EXIT_FRACTIONAL


def cmd_oracle(args) -> int:
    inst = Instance.from_file(args.input)
    ts = enumerate_triangulations(inst)
    report = {
        "schema": SCHEMA,
        "command": "oracle",
        "instance": _instance_stats(inst),
        "triangulations": len(ts.all),
        "cost": ts.min_cost,
        "optima": [_tri_list(t) for t in ts.optima],
    }
    _emit(report, args)
    return EXIT_OK


def cmd_heuristics(args) -> int:
    inst = Instance.from_file(args.input)
    ledger = run_closure(inst, HeuristicConfig.from_rules(args.rules))
    faces, solvable = skeleton_faces(ledger)
    report = {
        "schema": SCHEMA,
        "command": "heuristics",
        "instance": {"n": inst.n, "potential_edges": len(inst.edges)},
        "ledger": _ledger_summary(ledger),
        "edges": ledger.to_records(),
        "faces": [{"boundary": list(f.boundary), "empty": f.is_empty, "simple": f.is_simple} for f in faces],
        "solvable": solvable,
    }
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(render_svg(inst, ledger, None, []))
    _emit(report, args)
    return EXIT_OK


def cmd_lp(args) -> int:
    inst = Instance.from_file(args.input)
    ledger = run_closure(inst, HeuristicConfig.from_rules(args.rules)) if args.rules else None
    lp = build_lp(inst, ledger)
    if args.export_lp:
        write_lp_file(lp, args.export_lp)
    x = solve_to_extreme_point(lp, tol=args.tolerance)
    if args.solution:
        write_solution(x, args.solution)
    cls = classify_solution(x)
    report = {
        "schema": SCHEMA,
        "command": "lp",
        "instance": _instance_stats(inst),
        "columns": len(lp.triangles),
        "rows": sum(1 for r in lp.rows if r.coeffs),
        "objective": x.objective,
        "integral": cls.integral,
        "weights": [[list(k), w] for k, w in sorted(x.weights.items())],
        "edge_weights": [[list(e), w] for e, w in sorted(x.edge_weights.items())],
    }
    if cls.integral:
        report["triangulation"] = _tri_list(cls.triangles)
    _emit(report, args)
    return EXIT_OK if cls.integral else EXIT_FRACTIONAL


def cmd_generate(args) -> int:
    """Uniform random integer points (distinct), for experiments."""
    rng = np.random.default_rng(args.seed)
    pts: list[tuple[int, int]] = []
    seen = set()
    while len(pts) < args.n:
        p = tuple(int(v) for v in rng.integers(0, args.box + 1, size=2))
        if p not in seen:
            seen.add(p)
            pts.append(p)
    text = "".join(f"{x} {y}\n" for x, y in pts)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- rendering ---------------------------------------------------------------------


def render_svg(inst: Instance, ledger, x, triangles, size: int = 600) -> str:
    """ForcedIn edges solid, ForcedOut omitted, fractional LP edges with opacity
    equal to their weight, the final triangulation in light gray."""
    xy = inst.xy
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 12

    def pt(i):
        px = pad + (xy[i][0] - lo[0]) / span * (size - 2 * pad)
        py = size - pad - (xy[i][1] - lo[1]) / span * (size - 2 * pad)
        return px, py

    def line(e, style):
        (x1, y1), (x2, y2) = pt(e[0]), pt(e[1])
        return f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" style="{style}"/>'

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">']
    for e in sorted({e for t in triangles for e in t.edges}):
        out.append(line(e, "stroke:#bbb;stroke-width:1"))
    if x is not None:
        for e, w in sorted(x.edge_weights.items()):
            if 1e-7 < w < 1 - 1e-7:
                out.append(line(e, f"stroke:#1565c0;stroke-width:2;stroke-opacity:{w:.3f}"))
    for e in sorted(ledger.forced_in()):
        out.append(line(e, "stroke:#000;stroke-width:1.5"))
    for i in range(inst.n):
        px, py = pt(i)
        out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- entry point -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 3), not argparse's default 2,
    which would read as "fractional optimum"."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tolerance", type=float, default=1e-9, help="LP feasibility tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    common.add_argument("--json", metavar="PATH", help="write the JSON report here instead of stdout")
    common.add_argument("--rules", help="heuristic rules, e.g. 'diamond,lmt', 'none'; drop one with --rules=-yxy")

    p = _Parser(prog="mwtlab", description="Minimum-weight triangulation workbench")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="heuristics, then skeleton DP or LP")
    s.add_argument("input")
    s.add_argument("--oracle", action="store_true", help="cross-check with the exact oracle (small n only)")
    s.add_argument("--partition", choices=STRATEGIES, default="hm", help="partition used to round a fractional LP")
    s.add_argument("--export-lp", metavar="PATH")
    s.add_argument("--svg", metavar="PATH")
    s.add_argument("--timings", action="store_true", help="include stage timings (makes output non-reproducible)")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("round", parents=[common], help="blanket/transposal rounding of the LP optimum")
    r.add_argument("input")
    r.add_argument("--partition", choices=STRATEGIES, default="hm")
    r.set_defaults(func=cmd_round)

    o = sub.add_parser("oracle", parents=[common], help="enumerate every triangulation")
    o.add_argument("input")
    o.set_defaults(func=cmd_oracle)

    h = sub.add_parser("heuristics", parents=[common], help="edge-status ledger only")
    h.add_argument("input")
    h.add_argument("--svg", metavar="PATH")
    h.set_defaults(func=cmd_heuristics)

    lpp = sub.add_parser("lp", parents=[common], help="build and solve the triangle LP")
    lpp.add_argument("input")
    lpp.add_argument("--export-lp", metavar="PATH")
    lpp.add_argument("--solution", metavar="PATH", help="write 'var value' lines")
    lpp.set_defaults(func=cmd_lp)

    g = sub.add_parser("generate", help="random integer point set")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--box", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", metavar="PATH")
    g.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    level = os.environ.get("MWT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, OracleSizeError, OSError, ValueError) as exc:
        print(f"mwtlab: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ClosureContradiction, RoundingError, TilingError, SimplexError, GeometryError, AssertionError) as exc:
        print(f"mwtlab: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
