"""Command-line front end: ``cqa <command> ...``.

Exit codes: 0 success (for ``solve``: certain), 1 ``solve`` answered
not certain, 64 usage error or unmet precondition, 65 malformed query or
data, 66 missing input file, 70 resource limit exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import errors
from .attackgraph import attack_graph, classify_complexity
from .jointree import build_join_tree
from .probdb import is_safe, load_bid, prob_bruteforce, prob_is_one
from .querylang import Query, parse_query
from .reductions import all_key_extension, strong_cycle_reduce
from .attackgraph import CycleShape
from .solvers import count_satisfying_repairs, solve
from .uncertaindb import dump_database, load_database, purify, repair_count

EXIT_OK = 0
EXIT_NOT_CERTAIN = 1
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NO_INPUT = 66
EXIT_LIMIT = 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunReport:
    command: str
    inputs: dict[str, Any]
    verdict: dict[str, Any]
    lines: list[str] = field(default_factory=list)
    exit_code: int = EXIT_OK
    timings: dict[str, float] = field(default_factory=dict)

    def to_json(self, with_timings: bool = False) -> str:
        doc = {"command": self.command, "inputs": self.inputs, **self.verdict}
        if with_timings:
            doc["timings"] = self.timings
        return json.dumps(doc, sort_keys=True, ensure_ascii=False)


def _read(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(path)
    return p


def _query(args) -> Query:
    if args.query_file:
        if args.query is not None:
            raise UsageError("give either a query or --query-file, not both")
        return parse_query(_read(args.query_file).read_text(encoding="utf-8"))
    if args.query is None:
        raise UsageError("a query is required")
    return parse_query(args.query)


def _facts(world) -> list[str]:
    return [f.to_line() for f in sorted(world)]


def cmd_classify(args) -> RunReport:
    q = _query(args)
    v = classify_complexity(q)
    evidence = {}
    for k, val in v.evidence.items():
        if k == "shape":
            continue
        if isinstance(val, (list, tuple)):
            evidence[k] = [
                [str(a) for a in x] if isinstance(x, (list, tuple)) else str(x) for x in val
            ]
        else:
            evidence[k] = val if isinstance(val, int) else str(val)
    return RunReport(
        "classify", {"query": str(q)},
        {"complexity": v.complexity.value, "summary": v.summary(), "evidence": evidence},
        [v.summary()],
    )


def cmd_solve(args) -> RunReport:
    q = _query(args)
    db = load_database(_read(args.db))
    ans = solve(db, q, args.method)
    lines = ["CERTAIN" if ans.certain else "NOT CERTAIN", f"method: {ans.method}"]
    witness = None
    if ans.witness is not None:
        witness = _facts(ans.witness)
        lines.append("witness:")
        lines.extend("  " + w for w in witness)
    return RunReport(
        "solve", {"query": str(q), "db": args.db, "method": args.method},
        {"certain": ans.certain, "method": ans.method, "witness": witness},
        lines, EXIT_OK if ans.certain else EXIT_NOT_CERTAIN,
    )


def cmd_attack_graph(args) -> RunReport:
    q = _query(args)
    g = attack_graph(q)
    edges = sorted(g.edge_set())
    if args.dot:
        lines = [g.to_dot().rstrip("\n")]
    else:
        lines = [f"{s} -> {t} ({w})" for s, t, w in edges] or ["(no attacks)"]
    return RunReport(
        "attack-graph", {"query": str(q)},
        {"edges": [{"from": s, "to": t, "strength": w} for s, t, w in edges]},
        lines,
    )


def cmd_join_tree(args) -> RunReport:
    q = _query(args)
    t = build_join_tree(q)
    if t is None:
        raise errors.CyclicQuery(f"{q} is cyclic and has no join tree")
    rows = [(str(f), str(g), sorted(lab)) for f, g, lab in t.labeled_edges()]
    if args.dot:
        lines = [t.to_dot().rstrip("\n")]
    else:
        lines = [f"{f} -- {g} {{{','.join(lab)}}}" for f, g, lab in rows] or [str(q)]
    return RunReport(
        "join-tree", {"query": str(q)},
        {"edges": [{"a": f, "b": g, "label": lab} for f, g, lab in rows]},
        lines,
    )


def cmd_purify(args) -> RunReport:
    q = _query(args)
    db = load_database(_read(args.db))
    out = purify(db, q)
    text = dump_database(out)
    return RunReport(
        "purify", {"query": str(q), "db": args.db},
        {"facts": _facts(out), "removed": len(db) - len(out)},
        [text.rstrip("\n")] if text else [],
    )


def cmd_count(args) -> RunReport:
    q = _query(args)
    db = load_database(_read(args.db))
    sat, total = count_satisfying_repairs(db, q), repair_count(db)
    return RunReport(
        "count", {"query": str(q), "db": args.db},
        {"satisfying": sat, "total": total}, [f"{sat}/{total}"],
    )


def cmd_issafe(args) -> RunReport:
    q = _query(args)
    trace = is_safe(q)
    steps = [str(s) for s in trace.steps]
    return RunReport(
        "issafe", {"query": str(q)},
        {"safe": trace.safe, "steps": steps},
        ["SAFE" if trace.safe else "UNSAFE"] + ["  " + s for s in steps],
    )


def cmd_prob(args) -> RunReport:
    q = _query(args)
    pdb = load_bid(_read(args.pdb))
    if args.is_one:
        one = prob_is_one(pdb, q)
        return RunReport("prob", {"query": str(q), "pdb": args.pdb},
                         {"is_one": one}, ["true" if one else "false"])
    p = prob_bruteforce(pdb, q)
    return RunReport("prob", {"query": str(q), "pdb": args.pdb},
                     {"probability": str(p)}, [str(p)])


def cmd_reduce(args) -> RunReport:
    if args.gadget == "strong-cycle":
        q = _query(args)
        db0 = load_database(_read(args.db))
        out = strong_cycle_reduce(db0, q)
        inputs = {"gadget": args.gadget, "query": str(q), "db": args.db}
    else:
        if args.k < 2:
            raise UsageError("k must be at least 2")
        db = load_database(_read(args.db))
        small = CycleShape.standard(args.k, with_all_key=False).query()
        big = CycleShape.standard(args.k).query()
        for rel, sig in db.schema.items():
            if small.signatures.get(rel) != sig:
                raise errors.SchemaMismatch(f"relation {rel} {sig} is not part of C_{args.k}")
        out = all_key_extension(db, small, big)
        inputs = {"gadget": args.gadget, "k": args.k, "db": args.db}
    text = dump_database(out)
    return RunReport("reduce", inputs, {"facts": _facts(out)},
                     [text.rstrip("\n")] if text else [])


def _add_query(p: argparse.ArgumentParser) -> None:
    p.add_argument("query", nargs="?", help="query text, e.g. \"R(x;y) & S(y;x)\"")
    p.add_argument("-Q", "--query-file", help="read the query from a file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cqa", description="Certain query answering under primary keys.")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--timings", action="store_true", help="include timings in --json output")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
        return p

    p = command("classify", cmd_classify, "complexity of CERTAINTY(q)")
    _add_query(p)

    p = command("solve", cmd_solve, "decide whether every repair satisfies q")
    p.add_argument("db", help="database file")
    _add_query(p)
    p.add_argument("--method", default="auto",
                   choices=["auto", "bruteforce", "terminal-weak", "cycle"])

    p = command("attack-graph", cmd_attack_graph, "print the attack graph")
    _add_query(p)
    p.add_argument("--dot", action="store_true", help="emit Graphviz DOT")

    p = command("join-tree", cmd_join_tree, "print a join tree")
    _add_query(p)
    p.add_argument("--dot", action="store_true", help="emit Graphviz DOT")

    p = command("purify", cmd_purify, "purify a database relative to q")
    p.add_argument("db")
    _add_query(p)

    p = command("count", cmd_count, "count repairs satisfying q")
    p.add_argument("db")
    _add_query(p)

    p = command("issafe", cmd_issafe, "safety test for probabilistic evaluation")
    _add_query(p)

    p = command("prob", cmd_prob, "probability of q on a BID database")
    p.add_argument("pdb", help="BID database file")
    _add_query(p)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exact probability (default)")
    mode.add_argument("--is-one", action="store_true", help="decide Pr(q) = 1 via certainty")

    p = command("reduce", cmd_reduce, "run a reduction gadget")
    gadgets = p.add_subparsers(dest="gadget", required=True, parser_class=_Parser)
    g = gadgets.add_parser("strong-cycle", help="R0/S0 database to a database for q")
    g.add_argument("db", help="database over R0<2,1> and S0<3,2>")
    _add_query(g)
    g = gadgets.add_parser("ck-ack", help="C_k database to an AC_k database")
    g.add_argument("k", type=int)
    g.add_argument("db")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "query"):
        args.query = args.query_file = None
    start = time.perf_counter()
    try:
        report = args.func(args)
    except UsageError as exc:
        print(f"cqa: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"cqa: no such file: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_NO_INPUT
    except errors.ResourceLimitExceeded as exc:
        print(f"cqa: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (errors.QuerySyntaxError, errors.SignatureConflict, errors.DatabaseFormatError,
            errors.SchemaMismatch) as exc:
        print(f"cqa: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (errors.PreconditionViolated, errors.SelfJoin, errors.CyclicQuery) as exc:
        print(f"cqa: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report.timings["total_seconds"] = time.perf_counter() - start
    if getattr(args, "json", False):
        print(report.to_json(args.timings))
    else:
        for line in report.lines:
            print(line)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
