"""cqsj command line: classify | enumerate | verify | bench-delay | gadget.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 inapplicable
engine.  All commands are deterministic for fixed inputs and --seed.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import engines, fixtures, reductions, structure
from .qmodel import (
    Database,
    Query,
    QueryModelError,
    parse_database,
    parse_query,
    serialize_answer,
    serialize_query,
)

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_INPUT = 2
EXIT_INAPPLICABLE = 3


class InputError(Exception):
    pass


class InapplicableEngineError(Exception):
    pass


def _load_query(path: str) -> Query:
    try:
        return parse_query(Path(path).read_text())
    except (OSError, QueryModelError) as exc:
        raise InputError(f"cannot load query {path}: {exc}") from exc


def _load_database(path: str) -> Database:
    try:
        return parse_database(Path(path).read_text())
    except (OSError, QueryModelError) as exc:
        raise InputError(f"cannot load database {path}: {exc}") from exc


# -- engine selection -----------------------------------------------------------


def _bespoke_strategy_for(query: Query):
    key = structure.canonical_key(query)
    for strategy, fixture_name in fixtures.BESPOKE_STRATEGIES.items():
        if structure.canonical_key(fixtures.fixture(fixture_name)) == key:
            return strategy
    return None


def select_engine(query: Query, engine: str):
    """Resolve an engine name to a cursor factory.

    auto prefers the strongest applicable guarantee: full-acyclic and mirror
    (constant delay) over constant-delay bespokes, over untangling (linear
    delay), over linear-delay bespokes, over the oracle.
    """
    if engine == "oracle":
        return "oracle", lambda db: engines.oracle_cursor(query, db)
    if engine == "acyclic":
        if not (query.is_full and structure.is_acyclic(query)):
            raise InapplicableEngineError("query is not full acyclic")
        return "acyclic", lambda db: engines.enum_full_acyclic(query, db)
    if engine == "mirror":
        witness = structure.is_mirror(query) if query.is_full else None
        if witness is None:
            raise InapplicableEngineError("query is not a mirror")
        return "mirror", lambda db: engines.enum_mirror(query, witness, db)
    if engine == "untangle":
        if not query.is_full:
            raise InapplicableEngineError("untangling needs a full query")
        status, witness = structure.is_untangleable(query)
        if status != "yes":
            raise InapplicableEngineError(f"query is not untangleable ({status})")
        return "untangle", lambda db: engines.enum_untangle(query, witness, db)
    if engine.startswith("bespoke:"):
        strategy = engine.split(":", 1)[1]
        if strategy not in engines.BESPOKE_DUPLICATION:
            raise InputError(f"unknown bespoke strategy {strategy}")
        if _bespoke_strategy_for(query) != strategy:
            raise InapplicableEngineError(f"query is not the {strategy} pattern")
        return engine, lambda db: engines.enum_bespoke(strategy, db)
    if engine != "auto":
        raise InputError(f"unknown engine {engine}")

    if query.is_full and structure.is_acyclic(query):
        return select_engine(query, "acyclic")
    if query.is_full and structure.is_mirror(query) is not None:
        return select_engine(query, "mirror")
    strategy = _bespoke_strategy_for(query)
    if strategy in ("SPIKE_Q2", "SPIKE_Q3"):
        return select_engine(query, f"bespoke:{strategy}")
    if query.is_full and structure.is_untangleable(query)[0] == "yes":
        return select_engine(query, "untangle")
    if strategy is not None:
        return select_engine(query, f"bespoke:{strategy}")
    print("warning: no specialised engine applies, falling back to the oracle",
          file=sys.stderr)
    return select_engine(query, "oracle")


# -- subcommands ------------------------------------------------------------------


def cmd_classify(args) -> int:
    query = _load_query(args.query)
    report = structure.classify(query, untangle_budget=args.budget)
    if args.json:
        print(json.dumps(report.to_json(), indent=2, sort_keys=True))
        return EXIT_OK
    print(f"query: {serialize_query(report.analyzed)}")
    if report.minimized:
        print("note: input was not minimal; verdicts apply to the minimal form")
    if report.fixture_name:
        print(f"pattern: {report.fixture_name}")
    print(f"full: {report.is_full}  boolean: {report.is_boolean}  "
          f"unary: {report.is_unary}  binary: {report.is_binary}")
    print(f"acyclic: {report.acyclic}  free-connex: {report.free_connex}  "
          f"minimal: {report.minimal}")
    print(f"core: {serialize_query(report.core)}  (acyclic: {report.core_acyclic})")
    if report.full_core is not None:
        print(f"full-core: {serialize_query(report.full_core)}")
    if report.images:
        print(f"images: {len(report.images)}")
    print(f"mirror: {'yes' if report.mirror else 'no'}")
    print(f"untangleable: {report.untangleable}")
    for v in report.verdicts:
        qualifier = "" if v.assumption == "none" else f"{v.assumption}; "
        print(f"  {v.problem}: {v.verdict} ({qualifier}{v.citation})")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    query = _load_query(args.query)
    db = _load_database(args.db)
    name, factory = select_engine(query, args.engine)
    cursor = factory(db)
    if args.dedup:
        cursor = engines.cheater_dedup(cursor, 4)
    emitted = 0
    while True:
        if args.limit is not None and emitted >= args.limit:
            break
        item = cursor.next()
        if item is None:
            break
        print(serialize_answer(item))
        emitted += 1
    if args.stats:
        stats = {"engine": name, "answers": emitted,
                 "preprocessing_ticks": cursor.preprocessing_ticks,
                 "ticks": cursor.ticker.count}
        print(json.dumps(stats, sort_keys=True), file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    query = _load_query(args.query)
    db = _load_database(args.db)
    name, factory = select_engine(query, args.engine)
    got = list(factory(db))
    if args.corrupt_for_test and got:
        got = got[:-1]  # harness self-test hook: drop one answer
    want = engines.oracle_enumerate(query, db)
    dupes = len(got) - len(set(got))
    missing = want - set(got)
    extra = set(got) - want
    if not missing and not extra and not dupes:
        print(f"PASS {name}: {len(want)} answers match the oracle")
        return EXIT_OK
    print(f"FAIL {name}: {len(got)} emitted vs {len(want)} expected "
          f"({dupes} duplicates)")
    for label, group in (("missing", missing), ("extra", extra)):
        for item in sorted(group)[:5]:
            print(f"  {label}: {serialize_answer(item)}")
    return EXIT_VERIFY_FAIL


GENERATORS = ("digraph", "digraph-red", "digraph-loops")


def _bench_db(gen: str, size: int, seed: int) -> Database:
    # edge count tracks the requested fact count; node count keeps the
    # instances sparse so answer sets stay near-linear
    if gen == "digraph":
        graph = reductions.gen_random_graph(max(4, size // 2), size, seed)
        return reductions.graph_to_db(graph)
    if gen == "digraph-red":
        graph = reductions.gen_random_graph(max(4, size // 2), size, seed)
        rng = random.Random(seed + 1)
        red = [v for v in graph.vertices if rng.random() < 0.05]
        return reductions.graph_to_db(graph, red=red)
    if gen == "digraph-loops":
        graph = reductions.gen_random_graph(max(4, size // 2), size - size // 50, seed)
        rng = random.Random(seed + 2)
        db = reductions.graph_to_db(graph)
        for _ in range(size // 50):
            v = graph.vertices[rng.randrange(len(graph.vertices))]
            db.add_fact("R", (v, v))
        return db
    raise InputError(f"unknown generator {gen}")


def _default_generator(query: Query) -> str:
    uses_red = any(a.symbol.name == "P" for a in query.atoms)
    has_loop_atom = any(len(set(a.args)) == 1 and a.symbol.arity == 2
                        for a in query.atoms)
    if has_loop_atom:
        return "digraph-loops"
    return "digraph-red" if uses_red else "digraph"


def cmd_bench_delay(args) -> int:
    query = _load_query(args.query)
    gen = args.gen or _default_generator(query)
    if gen not in GENERATORS:
        raise InputError(f"unknown generator {gen}")
    needed = {a.symbol.name for a in query.atoms}
    provided = {"R", "P"} if gen != "digraph" else {"R"}
    if not needed <= provided:
        raise InputError(f"generator {gen} cannot feed schema {sorted(needed)}")
    name, factory = select_engine(query, args.engine)
    rows = []
    for size in args.sizes:
        db = _bench_db(gen, size, args.seed)
        stats = engines.measure_delay(lambda: factory(db))
        rows.append({"size": db.size, **stats.to_json()})
    verdict = delay_verdict(rows)
    payload = {"engine": name, "generator": gen, "rows": rows, "verdict": verdict}
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"engine: {name}  generator: {gen}")
        print(f"{'size':>8} {'prep_ticks':>12} {'max_gap':>10} {'answers':>10} {'wall_ms':>10}")
        for r in rows:
            print(f"{r['size']:>8} {r['preprocessing_ticks']:>12} "
                  f"{r['max_gap']:>10} {r['answers']:>10} {r['wall_ms']:>10.1f}")
        print(f"verdict: {verdict}")
    return EXIT_OK


def delay_verdict(rows) -> str:
    """CONSTANT if max_gap barely moves across sizes, LINEAR if max_gap/size
    stays flat, UNBOUNDED otherwise.  Finite-sample heuristic, ratio 2."""
    if len(rows) < 2:
        return "CONSTANT"
    gaps = [max(1, r["max_gap"]) for r in rows]
    sizes = [r["size"] for r in rows]
    if max(gaps) / min(gaps) <= 2.0:
        return "CONSTANT"
    per_size = [g / s for g, s in zip(gaps, sizes)]
    if max(per_size) / min(per_size) <= 2.0:
        return "LINEAR"
    return "UNBOUNDED"


def cmd_gadget(args) -> int:
    kind = args.kind
    out_path = Path(args.out)
    if kind == "encoding-trick":
        if not args.query:
            raise InputError("encoding-trick needs --query")
        query = _load_query(args.query)
        d_prime = _load_database(args.input)
        _, occurrence = reductions.relabel_self_join_free(query)
        try:
            db = reductions.encoding_trick(query, d_prime, occurrence)
        except reductions.SchemaMismatchError as exc:
            raise InputError(str(exc)) from exc
    elif kind in reductions.GADGET_BUILDERS:
        try:
            graph = reductions.parse_graph(Path(args.input).read_text())
            db = reductions.GADGET_BUILDERS[kind](graph)
        except (OSError, reductions.GadgetInputError) as exc:
            raise InputError(str(exc)) from exc
    else:
        raise InputError(f"unknown gadget kind {kind}")
    from .qmodel import serialize_database

    out_path.write_text(serialize_database(db))
    print(f"{db.size} facts written to {out_path}")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqsj",
        description="structural classification, verified-delay enumeration and "
                    "hardness gadgets for conjunctive queries with self-joins",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="structural facts and verdicts")
    p.add_argument("query")
    p.add_argument("--json", action="store_true")
    p.add_argument("--budget", type=int, default=structure.DEFAULT_UNTANGLE_BUDGET)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("enumerate", help="stream the answers of a query")
    p.add_argument("query")
    p.add_argument("db")
    p.add_argument("--engine", default="auto")
    p.add_argument("--dedup", action="store_true")
    p.add_argument("--limit", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stats", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("verify", help="compare an engine against the oracle")
    p.add_argument("query")
    p.add_argument("db")
    p.add_argument("--engine", default="auto")
    p.add_argument("--corrupt-for-test", action="store_true",
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench-delay", help="tick-based delay measurements")
    p.add_argument("query")
    p.add_argument("--engine", default="auto")
    p.add_argument("--sizes", type=int, nargs="+",
                   default=[1000, 2000, 4000, 8000])
    p.add_argument("--gen", choices=GENERATORS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bench_delay)

    p = sub.add_parser("gadget", help="write a reduction database")
    p.add_argument("kind", choices=["encoding-trick"] + sorted(reductions.GADGET_BUILDERS))
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--query", help="query file (encoding-trick only)")
    p.set_defaults(func=cmd_gadget)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InapplicableEngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INAPPLICABLE
    except (QueryModelError, engines.WrongSchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
