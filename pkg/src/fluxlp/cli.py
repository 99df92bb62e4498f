"""Command line interface.

    fluxlp solve    --network net.json [--phi-max 1] [--eps 0] [--fix ID=VALUE ...] --out DIR
    fluxlp validate --network net.json
    fluxlp gen      radial --rings 20 --spokes 30 --seed 1 --out net.json
    fluxlp oracle   --network small.json --bounds=-50,50

Exit codes: 0 optimal, 1 oracle mismatch, 2 infeasible, 3 unbounded,
4 input error, 5 unanchored component.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import generators, solver
from .assembly import StructurallyInfeasible
from .io import NetworkFileError, export_results, jsonable, parse_network, resolve_node, \
    write_network
from .pipeline import InfeasibleProblem, RunConfig, UnboundedProblem, build_problem, \
    check_boundedness, run_pipeline
from .reduction import NotSPD, UnanchoredComponent

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INFEASIBLE = 2
EXIT_UNBOUNDED = 3
EXIT_INPUT = 4
EXIT_UNANCHORED = 5

logger = logging.getLogger("fluxlp")


def _parse_fix(token: str):
    key, sep, value = token.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected ID=VALUE, got {token!r}")
    try:
        return key, float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad potential in {token!r}") from exc


def _parse_bounds(token: str):
    lo, sep, hi = token.partition(",")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {token!r}")
    try:
        lo_v = float(lo) if lo.strip() else -np.inf
        hi_v = float(hi) if hi.strip() else np.inf
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad bounds {token!r}") from exc
    if lo_v > hi_v:
        raise argparse.ArgumentTypeError(f"lower bound exceeds upper bound in {token!r}")
    return lo_v, hi_v


def _add_problem_args(p):
    p.add_argument("--network", required=True, help="network JSON file (schema version 1)")
    p.add_argument("--phi-max", type=float, default=1.0, help="gradient cap (default 1)")
    p.add_argument("--eps", type=float, default=0.0, help="no-backflow slack (default 0)")
    p.add_argument("--fix", type=_parse_fix, action="append", default=[], metavar="ID=VALUE",
                   help="prescribe a node potential; repeatable, overrides the file")
    p.add_argument("--gauge", choices=["auto", "error"], default="auto",
                   help="auto: fix one boundary node per unanchored component")
    p.add_argument("--gauge-value", type=float, default=10.0)
    p.add_argument("--bounds", type=_parse_bounds, default=None, metavar="LO,HI",
                   help="box bounds applied to every control")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fluxlp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the full pipeline and export results")
    _add_problem_args(p)
    p.add_argument("--out", default=None, help="directory for CSV/GeoJSON/report output")

    p = sub.add_parser("validate", help="parse, check structure and report boundedness")
    _add_problem_args(p)

    p = sub.add_parser("oracle", help="cross-check the simplex against vertex enumeration")
    _add_problem_args(p)

    p = sub.add_parser("gen", help="write a synthetic network file")
    p.add_argument("kind", choices=generators.KINDS)
    p.add_argument("--rows", type=int, default=10)
    p.add_argument("--cols", type=int, default=10)
    p.add_argument("--rings", type=int, default=20)
    p.add_argument("--spokes", type=int, default=30)
    p.add_argument("--gate-stride", type=int, default=2)
    p.add_argument("--count", type=int, default=7)
    p.add_argument("--nodes", type=int, default=600, help="total nodes for multi_component")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    return parser


def _config(args, net) -> RunConfig:
    fixes = {resolve_node(net, key): value for key, value in args.fix}
    return RunConfig(phi_max=args.phi_max, eps=args.eps, fixes=fixes, bounds=args.bounds,
                     gauge=args.gauge, gauge_value=args.gauge_value)


def _emit(doc):
    print(json.dumps(jsonable(doc), indent=1, sort_keys=True))


def _cmd_solve(args) -> int:
    net, bspec = parse_network(args.network)
    config = _config(args, net)
    try:
        result = run_pipeline(config, net, bspec)
    except InfeasibleProblem as exc:
        _emit(exc.result.summary())
        return EXIT_INFEASIBLE
    except UnboundedProblem as exc:
        _emit(exc.result.summary())
        return EXIT_UNBOUNDED
    summary = result.summary()
    print(result.report.render())
    if args.out:
        written = export_results(net, result.bspec, result.state, result.report, args.out,
                                 phi_max=config.phi_max, extra={"run": summary})
        for name, path in written.items():
            logger.info("wrote %s: %s", name, path)
        if "geojson" not in written:
            print("note: no node positions, GeoJSON skipped", file=sys.stderr)
    else:
        _emit(summary)
    return EXIT_OK


def _cmd_validate(args) -> int:
    net, bspec = parse_network(args.network)
    config = _config(args, net)
    prob = build_problem(config, net, bspec)
    diag = check_boundedness(config, prob)
    _emit({
        "n_nodes": net.n_nodes,
        "n_edges": net.n_edges,
        "n_components": prob.comps.K,
        "n_controls": prob.partition.n_ctrl,
        "lp_rows": prob.lp.m,
        "sign_rows": prob.selector.m,
        "gauge_fixed": {str(net.node_ids[v]): x for v, x in sorted(prob.gauge_fixed.items())},
        "boundedness": diag.as_dict(),
    })
    return EXIT_OK


def _cmd_oracle(args) -> int:
    net, bspec = parse_network(args.network)
    config = _config(args, net)
    lp = build_problem(config, net, bspec).lp
    sol = solver.solve_lp(lp)
    vertices = solver.enumerate_vertices(lp)
    doc = {"simplex_status": sol.status, "simplex_objective": sol.objective,
           "n_vertices": len(vertices)}
    if not vertices:
        _emit(doc)
        return EXIT_OK if sol.status == solver.INFEASIBLE else EXIT_MISMATCH
    best = min(float(lp.cost @ v) for v in vertices)
    doc["vertex_minimum"] = best
    agree = sol.optimal and abs(best - sol.objective) <= 1e-8 * (1.0 + abs(best))
    doc["agree"] = bool(agree)
    _emit(doc)
    return EXIT_OK if agree else EXIT_MISMATCH


def _cmd_gen(args) -> int:
    params = {
        "grid": {"rows": args.rows, "cols": args.cols},
        "radial": {"rings": args.rings, "spokes": args.spokes, "gate_stride": args.gate_stride},
        "multi_component": {"count": args.count, "total_nodes": args.nodes},
    }[args.kind]
    net, bspec = generators.generate_synthetic(args.kind, params, seed=args.seed)
    if args.out:
        write_network(net, bspec, args.out)
    else:
        from .io import dumps_network
        sys.stdout.write(dumps_network(net, bspec))
    return EXIT_OK


COMMANDS = {"solve": _cmd_solve, "validate": _cmd_validate, "oracle": _cmd_oracle, "gen": _cmd_gen}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which would read as "infeasible"
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UnanchoredComponent as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNANCHORED
    except (NetworkFileError, StructurallyInfeasible, solver.EnumerationGuardExceeded,
            NotSPD, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
