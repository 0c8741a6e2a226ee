"""Command line front end.

Subcommands: analyze, commutator, fitting, supernilpotent, reduce, solve,
sizes, verify, bundled.  Reports are JSON-first with a plain-text summary;
exit codes: 0 ok, 1 property failure, 2 usage error, 3 cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__, catalog
from .algebra import Circuit, FiniteAlgebra, find_maltsev
from .commutator import (
    central_series,
    derived_series,
    fitting,
    higher_commutator,
    is_supernilpotent,
    supernilpotent_series,
)
from .congruence import Congruence, congruence_lattice
from .errors import CapExceeded, LatticeOverflow, SearchSpaceOverflow, SizeOverflow, WorkbenchError
from .fileio import (
    algebra_hash,
    dump_instance,
    load_algebra,
    load_cnf,
    load_graph,
    load_instance,
)
from .reductions import (
    brute_ceqv,
    brute_csat,
    color_to_csat,
    prepare_reduction,
    sat3_to_csat,
    size_report,
)
from .report import RunManifest, render_text, write_report, write_size_outputs
from . import verify as verify_suites

INF = float("inf")


def _algebra_from_arg(arg: str) -> tuple[FiniteAlgebra, Circuit | None, str]:
    if arg.startswith("bundled:"):
        name = arg.split(":", 1)[1]
        return catalog.load(name), catalog.maltsev_circuit(name), name
    alg = load_algebra(arg)
    try:
        m = find_maltsev(alg)
    except CapExceeded:
        m = None
    return alg, m, Path(arg).stem


def _emit(args, manifest: RunManifest, result: dict) -> None:
    doc = manifest.full(result)
    if args.output:
        write_report(doc, args.output)
    if args.format == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(render_text(result))


def cmd_analyze(args) -> int:
    man = RunManifest("analyze", caps={"clone": args.cap_clone, "search": args.cap_search})
    alg, m, name = _algebra_from_arg(args.algebra)
    if not args.algebra.startswith("bundled:"):
        man.add_input("algebra", args.algebra)
    t0 = time.time()
    lat = congruence_lattice(alg)
    one = lat.one
    d = derived_series(alg, one, cap=args.cap_clone, m=m)
    c = central_series(alg, one, cap=args.cap_clone, m=m)
    sn = supernilpotent_series(alg, one, cap=args.cap_clone, m=m)
    fd = fitting(alg, cap=args.cap_clone, m=m, lattice=lat)
    man.time_block("analysis", t0)
    result = {
        "algebra": name,
        "size": alg.size,
        "hash": algebra_hash(alg),
        "signature": {n: a for n, a in alg.signature},
        "maltsev": m.to_json() if m is not None else None,
        "congruences": len(lat),
        "hasse_edges": lat.hasse_edges(),
        "solvable_degree": d.degree,
        "nilpotent_degree": c.degree,
        "supernilpotent_degree": sn.degree,
        "fitting_length": ("inf" if fd.length == INF else int(fd.length)),
    }
    _emit(args, man, result)
    return 0


def _parse_congruence(alg: FiniteAlgebra, text: str, lat) -> Congruence:
    if text == "one":
        return Congruence.one(alg.size)
    if text == "zero":
        return Congruence.zero(alg.size)
    blocks = tuple(int(x) for x in text.split(","))
    cong = Congruence(blocks)
    if cong not in lat.members:
        raise WorkbenchError("not a congruence of this algebra")
    return cong


def cmd_commutator(args) -> int:
    man = RunManifest("commutator", caps={"clone": args.cap_clone})
    alg, m, name = _algebra_from_arg(args.algebra)
    lat = congruence_lattice(alg)
    congs = [_parse_congruence(alg, t, lat) for t in args.congruences]
    t0 = time.time()
    gamma = higher_commutator(alg, congs, cap=args.cap_clone, m=m)
    man.time_block("commutator", t0)
    result = {
        "algebra": name,
        "arguments": [list(c.blocks) for c in congs],
        "commutator": list(gamma.blocks),
        "num_blocks": gamma.num_blocks,
    }
    _emit(args, man, result)
    return 0


def cmd_fitting(args) -> int:
    man = RunManifest("fitting", caps={"clone": args.cap_clone})
    alg, m, name = _algebra_from_arg(args.algebra)
    t0 = time.time()
    fd = fitting(alg, cap=args.cap_clone, m=m)
    man.time_block("fitting", t0)
    result = {
        "algebra": name,
        "length": ("inf" if fd.length == INF else int(fd.length)),
        "lower": [list(c.blocks) for c in fd.lower],
        "upper": [list(c.blocks) for c in fd.upper],
        "fitting_congruence": list(fd.fitting_congruence.blocks),
    }
    _emit(args, man, result)
    return 0


def cmd_supernilpotent(args) -> int:
    man = RunManifest("supernilpotent", caps={"clone": args.cap_clone})
    alg, m, name = _algebra_from_arg(args.algebra)
    lat = congruence_lattice(alg)
    alpha = _parse_congruence(alg, args.congruence, lat)
    t0 = time.time()
    cert = is_supernilpotent(alg, alpha, cap=args.cap_clone, m=m, lattice=lat)
    man.time_block("certificate", t0)
    result = {
        "algebra": name,
        "congruence": list(alpha.blocks),
        "supernilpotent": bool(cert),
        "witnesses": [list(w.blocks) for w in cert.witnesses] if cert.witnesses else None,
        "primes": list(cert.primes) if cert.primes else None,
    }
    _emit(args, man, result)
    return 0


def cmd_reduce(args) -> int:
    man = RunManifest(
        "reduce", caps={"clone": args.cap_clone, "search": args.cap_search}
    )
    alg, m, name = _algebra_from_arg(args.algebra)
    graph = load_graph(args.graph) if args.graph else None
    cnf = load_cnf(args.cnf) if args.cnf else None
    if (graph is None) == (cnf is None):
        print("error: provide exactly one of --graph or --cnf", file=sys.stderr)
        return 2
    if args.graph:
        man.add_input("graph", args.graph)
    if args.cnf:
        man.add_input("cnf", args.cnf)
    t0 = time.time()
    ctx = prepare_reduction(alg, m=m, cap=args.cap_clone)
    man.time_block("context", t0)
    t0 = time.time()
    if graph is not None:
        inst = color_to_csat(ctx, graph, p=args.p or ctx.p)
    else:
        inst = sat3_to_csat(ctx, cnf)
    man.time_block("instance", t0)
    out = Path(args.out or "instance.json")
    dump_instance(inst, out, manifest=man.result_section())
    rep = size_report(ctx, ns=tuple(range(1, args.sizes_upto + 1)))
    files = write_size_outputs(rep, out.with_name(out.stem + "_sizes"))
    result = {
        "algebra": name,
        "instance": str(out),
        "meta": inst.meta,
        "size_rows": [{"n": n, "arity": a, "gates": g} for (n, a, g) in rep.rows],
        "growth_ratio": round(rep.ratio, 4),
        "fit_residual": round(rep.residual, 4),
        "artifacts": [str(f) for f in files],
    }
    _emit(args, man, result)
    return 0


def cmd_sizes(args) -> int:
    man = RunManifest("sizes", caps={"clone": args.cap_clone})
    alg, m, name = _algebra_from_arg(args.algebra)
    t0 = time.time()
    ctx = prepare_reduction(alg, m=m, cap=args.cap_clone)
    rep = size_report(ctx, ns=tuple(range(1, args.sizes_upto + 1)))
    man.time_block("sizes", t0)
    stem = Path(args.out or f"{name}_sizes")
    files = write_size_outputs(rep, stem.with_suffix(".json"))
    result = {
        "algebra": name,
        "rows": [{"n": n, "arity": a, "gates": g} for (n, a, g) in rep.rows],
        "growth_ratio": round(rep.ratio, 4),
        "fit_residual": round(rep.residual, 4),
        "artifacts": [str(f) for f in files],
    }
    write_report(man.full(result), stem.with_suffix(".json"))
    _emit(args, man, result)
    return 0


def cmd_solve(args) -> int:
    man = RunManifest("solve", caps={"assignments": args.cap_search})
    alg, m, name = _algebra_from_arg(args.algebra)
    inst = load_instance(args.instance, alg)
    man.add_input("instance", args.instance)
    t0 = time.time()
    if args.mode == "csat":
        verdict = brute_csat(inst, cap=args.cap_search)
        result = {
            "mode": "csat",
            "satisfiable": verdict.satisfiable,
            "witness": list(verdict.witness) if verdict.witness else None,
        }
        if verdict.witness and inst.meta.get("kind") == "coloring":
            result["coloring"] = _decode_coloring(alg, m, inst, verdict.witness)
    else:
        verdict = brute_ceqv(inst, cap=args.cap_search)
        result = {
            "mode": "ceqv",
            "equivalent": verdict.equivalent,
            "counterexample": list(verdict.counterexample) if verdict.counterexample else None,
        }
    man.time_block("scan", t0)
    result["algebra"] = name
    _emit(args, man, result)
    return 0


def _decode_coloring(alg, m, inst, witness) -> list[int] | None:
    try:
        ctx = prepare_reduction(alg, m=m)
    except WorkbenchError:
        return None
    per = inst.meta.get("vars_per_vertex", 1)
    if per != 1:
        return None
    from .reductions import _color_phase

    return [_color_phase(ctx, x) for x in witness]


def cmd_verify(args) -> int:
    man = RunManifest("verify", caps={"clone": args.cap_clone, "seed": args.seed})
    t0 = time.time()
    outcome = verify_suites.run_suite(args.suite, cap=args.cap_clone, seed=args.seed)
    man.time_block("suite", t0)
    result = {
        "suite": args.suite,
        "passed": outcome.passed,
        "failed": outcome.failed,
        "checks": outcome.checks,
    }
    _emit(args, man, result)
    return 0 if outcome.failed == 0 else 1


def cmd_bundled(args) -> int:
    man = RunManifest("bundled")
    rows = []
    for name in catalog.names():
        alg = catalog.load(name)
        rows.append({"name": name, "size": alg.size, "signature": dict(alg.signature)})
    _emit(args, man, {"algebras": rows})
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="maltsev",
        description="workbench for finite Maltsev algebras: congruences, commutators, "
        "wreath decompositions, and coloring/SAT-to-circuit-SAT instances",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cap-clone", type=int, default=3072, help="clone enumeration cap")
    common.add_argument("--cap-search", type=int, default=2_000_000, help="search space cap")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled property suites")
    common.add_argument("--format", choices=("json", "text"), default="text")
    common.add_argument("--output", help="write a JSON report to this path")

    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="structure report for an algebra")
    p.add_argument("algebra", help="algebra file or bundled:<name>")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("commutator", parents=[common], help="higher commutator of congruences")
    p.add_argument("algebra")
    p.add_argument(
        "congruences",
        nargs="+",
        help="congruences: 'one', 'zero', or comma-separated block ids",
    )
    p.set_defaults(func=cmd_commutator)

    p = sub.add_parser("fitting", parents=[common], help="lower and upper Fitting series")
    p.add_argument("algebra")
    p.set_defaults(func=cmd_fitting)

    p = sub.add_parser("supernilpotent", parents=[common], help="supernilpotence certificate")
    p.add_argument("algebra")
    p.add_argument("congruence")
    p.set_defaults(func=cmd_supernilpotent)

    p = sub.add_parser("reduce", parents=[common], help="emit a coloring/3-SAT instance")
    p.add_argument("algebra")
    p.add_argument("--graph", help="DIMACS edge or JSON graph file")
    p.add_argument("--cnf", help="DIMACS cnf file")
    p.add_argument("--p", type=int, default=None, help="number of colors (defaults to the context prime)")
    p.add_argument("--out", help="instance output path")
    p.add_argument("--sizes-upto", type=int, default=4)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("sizes", parents=[common], help="tower size report with figure")
    p.add_argument("algebra")
    p.add_argument("--out", help="output stem")
    p.add_argument("--sizes-upto", type=int, default=4)
    p.set_defaults(func=cmd_sizes)

    p = sub.add_parser("solve", parents=[common], help="brute-force a saved instance")
    p.add_argument("algebra")
    p.add_argument("instance")
    p.add_argument("--mode", choices=("csat", "ceqv"), default="csat")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="run a property suite")
    p.add_argument("suite", help="one of: " + ", ".join(verify_suites.SUITES))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bundled", parents=[common], help="list bundled algebras")
    p.set_defaults(func=cmd_bundled)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (CapExceeded, SizeOverflow, LatticeOverflow, SearchSpaceOverflow) as exc:
        print(json.dumps(exc.to_json()), file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except WorkbenchError as exc:
        print(json.dumps(exc.to_json()), file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
