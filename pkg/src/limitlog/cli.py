"""Command-line interface.

Exit status: 0 on success (or ``entailed``), 1 for ``not-entailed``, 2 on
usage, parse or contract errors, 3 for ``unknown``.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from . import corpus, oddminsat
from .analysis import classify
from .engine import NO_VALUE, EngineConfig, lub_query, materialise_stratified, query
from .model import ALL_INTS, Fact, Kind, LimitLogError
from .oracle import OracleVerdict, brute_force_materialise, default_bound, oracle_entails, oracle_lub
from .presburger import emit_presburger
from .syntax import (
    format_rule,
    parse_dataset,
    parse_fact,
    parse_program,
    print_facts,
    print_pseudo,
)
from .transform import SemiGroundProgram, reduct, semi_ground, tc_rewrite_reduct

EXIT_OK, EXIT_NO, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2, 3


def _load(program: str, datasets: list[str]):
    prog = parse_program(Path(program).read_text())
    facts: list[Fact] = []
    for d in datasets:
        facts += parse_dataset(Path(d).read_text(), prog.declarations)
    return prog, facts


def _config(args) -> EngineConfig:
    threshold = args.threshold if args.threshold == "auto" else int(args.threshold)
    return EngineConfig(mode=args.mode, threshold=threshold, max_iterations=args.max_iters)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _print_sg(sg: SemiGroundProgram) -> str:
    return "".join(format_rule(r) + "\n" for r in sg.rules) + print_facts(sg.facts)


# ---------------------------------------------------------------- commands


def cmd_check(args) -> int:
    prog, facts = _load(args.program, args.datasets)
    report = classify(prog.with_facts(facts) if facts else prog)
    sys.stdout.write(report.format())
    return EXIT_OK


def cmd_ground(args) -> int:
    prog, facts = _load(args.program, args.datasets)
    _emit(_print_sg(semi_ground(prog, facts, prune=not args.no_prune)), args.output)
    return EXIT_OK


def cmd_reduct(args) -> int:
    prog, facts = _load(args.program, args.datasets)
    sg = semi_ground(prog, facts)
    out = tc_rewrite_reduct(sg, validate=True) if args.tc else reduct(sg)
    _emit(_print_sg(out), args.output)
    return EXIT_OK


def cmd_materialize(args) -> int:
    prog, facts = _load(args.program, args.datasets)
    J, trace = materialise_stratified(prog, facts, _config(args))
    _emit(print_pseudo(J), args.output)
    if args.trace:
        sys.stderr.write(trace.summary())
    return EXIT_OK


def _split_query(rest: list[str]) -> tuple[list[str], str]:
    if not rest:
        raise LimitLogError("missing query")
    return rest[:-1], rest[-1]


def cmd_query(args) -> int:
    datasets, text = _split_query(args.rest)
    prog, facts = _load(args.program, datasets)
    verdict = query(prog, facts, parse_fact(text), _config(args))
    print(verdict)
    return {"entailed": EXIT_OK, "not-entailed": EXIT_NO}.get(verdict, EXIT_UNKNOWN)


def cmd_lub(args) -> int:
    datasets, text = _split_query(args.rest)
    prog, facts = _load(args.program, datasets)
    target = parse_fact(text)
    if prog.kind(target.pred).is_limit and target.value is not None:
        # ``ds(c)`` names the slot; a trailing value would be ambiguous.
        raise LimitLogError("lub takes the object arguments only, e.g. ds(c)")
    value = lub_query(prog, facts, target.pred, target.objects, _config(args))
    if value == "unknown":
        print("unknown")
        return EXIT_UNKNOWN
    print("none" if value is NO_VALUE else "*" if value is ALL_INTS else value.value)
    return EXIT_OK


def cmd_oracle(args) -> int:
    prog, facts = _load(args.program, args.datasets)
    bound = default_bound() if args.bound is None else args.bound
    store = brute_force_materialise(prog, facts, bound=bound)
    if args.query:
        verdict = oracle_entails(store, parse_fact(args.query))
        print(verdict.value)
        return {OracleVerdict.TRUE: EXIT_OK, OracleVerdict.FALSE: EXIT_NO}.get(verdict, EXIT_UNKNOWN)
    lines = [f"% bound={bound}"]
    plain = [f for f in store.facts() if not store.kinds.get(f.pred, Kind.OBJECT).is_limit]
    lines += print_facts(plain).splitlines()
    for pred, objs in sorted(store.limits):
        best = oracle_lub(store, pred, objs)
        if best is None:
            continue
        value = "*" if best == "saturated" else best
        suffix = "  % window saturated" if best == "saturated" else ""
        lines.append(f"{print_facts([Fact(pred, objs, ALL_INTS if value == '*' else value)]).strip()}{suffix}")
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_export_smt(args) -> int:
    datasets, text = _split_query(args.rest)
    prog, facts = _load(args.program, datasets)
    sg = semi_ground(prog, facts)
    doc = emit_presburger(sg, parse_fact(text))
    _emit(doc.to_smtlib(), args.output)
    return EXIT_OK


def cmd_gen_oddminsat(args) -> int:
    rng = random.Random(args.seed)
    n = args.vars
    while True:
        phi = oddminsat.random_formula(n, rng)
        if oddminsat.minimal_assignment(n, phi) is not None:
            break
    header = f"% formula: {oddminsat.show(phi)}\n% expected minOdd: {str(oddminsat.brute_force_oddminsat(n, phi)).lower()}\n"
    text = header + print_facts(oddminsat.encode(n, phi))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "oddminsat.lpl").write_text(corpus.read_text("oddminsat.lpl"))
        (out / "oddminsat.lpd").write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _run_shortest_path(prog, facts, config) -> list[tuple[str, object, object]]:
    g = corpus.graph_of(facts)
    source = next(f.objects[0] for f in facts if f.pred == "source")
    target = next(f.objects[0] for f in facts if f.pred == "target")
    J, _ = materialise_stratified(prog, facts, config)
    dist = corpus.dijkstra(g, source)
    rows = []
    for v in g.nodes:
        got = J.limit("ds", (v,))
        rows.append((f"lub ds({v})", dist.get(v, "none"), "none" if got is None else got.value))
    got_edges = sorted(f.objects for f in J.facts() if f.pred == "sp_edge")
    rows.append(("sp_edge", sorted(corpus.shortest_path_edges(g, source, target)), got_edges))
    return rows


def _run_closeness(prog, facts, config):
    g = corpus.graph_of(facts)
    J, _ = materialise_stratified(prog, facts, config)
    expected = corpus.closeness_centre(g, corpus.order_of(facts))
    got = sorted(f.objects[0] for f in J.facts() if f.pred == "centre")
    return [("centre", [expected], got)]


def _run_oddminsat(prog, facts, config):
    n, phi = oddminsat.decode(facts)
    verdict = query(prog, facts, Fact("minOdd"), config)
    return [("minOdd", "entailed" if oddminsat.brute_force_oddminsat(n, phi) else "not-entailed", verdict)]


def cmd_run_example(args) -> int:
    prog, facts = corpus.load_example(args.name)
    if args.dataset:
        facts = parse_dataset(Path(args.dataset).read_text(), prog.declarations)
    runner = {"shortest-path": _run_shortest_path, "closeness": _run_closeness, "oddminsat": _run_oddminsat}
    mode = args.mode or ("general" if args.name == "oddminsat" else "tc")
    rows = runner[args.name](prog, facts, EngineConfig(mode=mode))
    ok = True
    for label, expected, actual in rows:
        match = expected == actual
        ok &= match
        print(f"{label}: expected={expected} actual={actual} {'ok' if match else 'MISMATCH'}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NO


# ------------------------------------------------------------------ parser


def _engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("tc", "general"), default="tc")
    p.add_argument("--max-iters", type=int, default=100_000, help="iteration cap per stratum")
    p.add_argument("--threshold", default="auto", help="improvements per slot before promotion to '*'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="limitlog", description="Stratified limit Datalog toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text, datasets=True, output=False):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        if name != "gen-oddminsat" and name != "run-example":
            p.add_argument("program", help=".lpl program file")
        if datasets:
            p.add_argument("datasets", nargs="*", help=".lpd dataset files")
        if output:
            p.add_argument("-o", "--output", help="write to this file instead of stdout")
        return p

    command("check", cmd_check, "classify a program")
    p = command("ground", cmd_ground, "print the semi-grounding", output=True)
    p.add_argument("--no-prune", action="store_true", help="all constant combinations, no folding")
    p = command("reduct", cmd_reduct, "print the reduct of a semi-positive program", output=True)
    p.add_argument("--tc", action="store_true", help="type-consistency preserving rewrite")
    p = command("materialize", cmd_materialize, "compute the pseudo-materialisation", output=True)
    _engine_flags(p)
    p.add_argument("--trace", action="store_true", help="evaluation summary on stderr")
    for name, func, text in (("query", cmd_query, "decide entailment of a fact"), ("lub", cmd_lub, "lub of a limit slot")):
        p = command(name, func, text, datasets=False)
        p.add_argument("rest", nargs="+", metavar="DATASET... FACT")
        _engine_flags(p)
    p = command("oracle", cmd_oracle, "bounded brute-force materialisation", output=True)
    p.add_argument("--bound", type=int, help="integer window [-B, B] (default 64 or $LIMITLOG_ORACLE_BOUND)")
    p.add_argument("--query", help="decide this fact instead of printing the store")
    p = command("export-smt", cmd_export_smt, "SMT-LIB2 encoding of a positive program", datasets=False, output=True)
    p.add_argument("rest", nargs="+", metavar="DATASET... FACT")
    p = command("gen-oddminsat", cmd_gen_oddminsat, "random OddMinSAT instance", datasets=False)
    p.add_argument("--vars", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", help="write oddminsat.lpl and oddminsat.lpd here")
    p = command("run-example", cmd_run_example, "run a bundled example", datasets=False)
    p.add_argument("name", choices=sorted(corpus.EXAMPLES))
    p.add_argument("--dataset", help="replace the bundled dataset")
    p.add_argument("--mode", choices=("tc", "general"))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LimitLogError, OSError, ValueError) as e:
        print(f"limitlog: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
