"""Command-line entry point: solve, evaluate, export-profile, compare, example."""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from importlib import resources
from typing import Optional, Sequence

from . import documents as docs
from .bnb import GAP_LIMIT, INFEASIBLE, OPTIMAL, SolveOptions, solve
from .instances import cutting_stock_scenario
from .scheme import check_feasibility, propagate

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3

BUNDLED = {"toy3": "toy3.json", "qt-like": "qt_like.json"}


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")] if text.strip() else []
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _write(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_json(path: str, what: str):
    with open(path, encoding="utf-8") as fh:
        return docs.parse_json(fh.read(), what)


def report_to_dict(rep) -> dict:
    def num(v):
        return float(v) if math.isfinite(v) else None
    return {"status": rep.status, "gub": num(rep.gub), "glb": num(rep.glb),
            "root_lb": num(rep.root_lb), "gap": num(rep.gap), "nodes": rep.nodes,
            "oa_iterations": rep.oa_iterations, "lp_solves": rep.lp_solves,
            "lp_iterations": rep.lp_iterations, "pool_size": rep.pool_size,
            "wall_time_s": rep.wall_time}


def cmd_solve(args) -> int:
    scen = docs.load_scenario(args.scenario)
    if args.dump_lp:
        os.makedirs(args.dump_lp, exist_ok=True)
    handler = None
    if args.log:
        handler = logging.FileHandler(args.log, mode="w", encoding="utf-8")
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger = logging.getLogger("hopsolve.bnb")
        logger.addHandler(handler)
        logger.setLevel(logging.INFO)
    try:
        rep = solve(scen, SolveOptions(eps=args.eps, gap_tol=args.gap,
                                       warm_start=not args.cold_start,
                                       max_nodes=args.max_nodes,
                                       lp_dump_dir=args.dump_lp))
    finally:
        if handler is not None:
            logging.getLogger("hopsolve.bnb").removeHandler(handler)
            handler.close()
    doc = {"report": report_to_dict(rep), "scheme": None}
    if rep.scheme is not None:
        feas = check_feasibility(rep.scheme, scen, integral=True)
        doc["scheme"] = docs.scheme_to_dict(rep.scheme, scen, feas)
    _write(docs.dump_json(doc), args.out)
    return {OPTIMAL: EXIT_OK, INFEASIBLE: EXIT_INFEASIBLE, GAP_LIMIT: EXIT_LIMIT}[rep.status]


def _scheme_part(doc):
    # accept both a bare scheme document and the wrapper written by ``solve``
    if isinstance(doc, dict) and "scheme" in doc and "report" in doc:
        if doc["scheme"] is None:
            raise docs.DocumentError("scheme", "solve output carries no scheme")
        return doc["scheme"]
    return doc


def cmd_evaluate(args) -> int:
    scen = docs.load_scenario(args.scenario)
    if args.scheme:
        s = docs.solution_from_scheme_dict(_scheme_part(_read_json(args.scheme, "scheme")), scen)
    else:
        values = [args.x, args.y, args.dh_sp, args.dt, args.h_out]
        if any(v is None for v in values):
            raise docs.DocumentError("arguments", "give --scheme or all of --x --y --dh-sp "
                                                  "--dt --h-out")
        for name, v in zip(("x", "y", "dH_sp", "dT", "H_out"), values):
            if len(v) != scen.n_pumping:
                raise docs.DocumentError(name, f"expected {scen.n_pumping} values, got {len(v)}")
        s = docs.SolutionVector(*values)
    scheme = propagate(s, scen)
    feas = check_feasibility(scheme, scen)
    _write(docs.dump_json(docs.scheme_to_dict(scheme, scen, feas)), args.out)
    return EXIT_OK if feas.feasible else EXIT_INFEASIBLE


def cmd_export_profile(args) -> int:
    doc = _scheme_part(_read_json(args.scheme, "scheme"))
    _write(docs.profile_csv(doc), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    a = _scheme_part(_read_json(args.scheme_a, "scheme A"))
    b = _scheme_part(_read_json(args.scheme_b, "scheme B"))
    result = docs.compare_documents(a, b)
    text = docs.dump_json(result) if args.json else docs.format_comparison(result) + "\n"
    _write(text, args.out)
    return EXIT_OK


def cmd_example(args) -> int:
    if args.name == "cutting-stock":
        scen = cutting_stock_scenario(args.demand, args.heads, args.counts, args.costs)
        text = docs.dump_json(docs.scenario_to_dict(scen))
    else:
        text = resources.files("hopsolve.data").joinpath(BUNDLED[args.name]).read_text("utf-8")
    _write(text, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hopsolve",
                                description="Minimum-cost pump and heater schedules for "
                                            "heated oil pipelines.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="globally optimize a scenario")
    s.add_argument("scenario")
    s.add_argument("--eps", type=float, default=1e-6, help="cut violation tolerance (m)")
    s.add_argument("--gap", type=float, default=1e-6, help="relative optimality gap")
    s.add_argument("--cold-start", action="store_true", help="fresh cut pool at every node")
    s.add_argument("--max-nodes", type=int, default=None,
                   help="stop after this many nodes (the root is always processed)")
    s.add_argument("--out", help="write the result JSON here instead of stdout")
    s.add_argument("--log", help="write one progress line per node to this file")
    s.add_argument("--dump-lp", metavar="DIR",
                   help="write each node's final relaxation LP to DIR/node_<id>.mps")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="simulate and price a given operating point")
    e.add_argument("scenario")
    e.add_argument("--scheme", help="scheme JSON supplying x, y, dH_sp, dT, H_out")
    e.add_argument("--x", type=_float_list)
    e.add_argument("--y", type=_float_list)
    e.add_argument("--dh-sp", type=_float_list)
    e.add_argument("--dt", type=_float_list)
    e.add_argument("--h-out", type=_float_list)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("export-profile", help="head/temperature profile of a scheme as CSV")
    x.add_argument("scheme")
    x.add_argument("--out")
    x.set_defaults(func=cmd_export_profile)

    c = sub.add_parser("compare", help="cost deltas and saving of scheme B over scheme A")
    c.add_argument("scheme_a")
    c.add_argument("scheme_b")
    c.add_argument("--json", action="store_true")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("example", help="print a bundled or generated scenario")
    g.add_argument("name", choices=[*BUNDLED, "cutting-stock"])
    g.add_argument("--demand", type=float, default=10.0)
    g.add_argument("--heads", type=_float_list, default=[3.0, 4.0, 5.0])
    g.add_argument("--counts", type=lambda t: [int(v) for v in _float_list(t)],
                   default=[3, 3, 3])
    g.add_argument("--costs", type=_float_list, default=[4.0, 5.0, 6.0])
    g.add_argument("--out")
    g.set_defaults(func=cmd_example)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except docs.DocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
