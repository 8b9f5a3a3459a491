"""Command-line front end: compile, verify, emit LNT and run benchmarks.

Exit codes: 0 relation holds (or command succeeded), 1 relation fails,
2 parse or semantic error, 3 I/O error, 4 timeout or a check worker that died
without answering.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Tuple

import pandas as pd

from . import bench, metrics
from .attack_tree import load_tree, tree_to_lts
from .bench import (
    BenchCase,
    BenchResult,
    CheckTimeout,
    Family,
    WorkerError,
    run_with_timeout,
)
from .equivalence import RelationKind, Verdict, check
from .gtdl import GtdlRule, GtdlRuntimeError, engine_to_lts, load_gtdl
from .gtdl.compiler import EngineWiring
from .lnt import LntDocument, emit_engine, emit_gtdl, emit_tree
from .lts import Lts, dump_lts
from .settings import settings
from .storage import CSV_COLUMNS, MultiStorage
from .wiring import WiringSpec, load_wiring

logger = logging.getLogger(__name__)

EXIT_HOLDS = 0
EXIT_FAILS = 1
EXIT_PARSE = 2
EXIT_IO = 3
EXIT_TIMEOUT = 4

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
FORMATS = ("human", "json-lines", "csv")


def setup_logging(verbose: bool = False, log_dir: Optional[str] = None) -> None:
    """Log to stderr and, when ``log_dir`` is set, to ``log_dir/gapcheck.log``."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_dir:
        directory = Path(log_dir)
        directory.mkdir(parents=True, exist_ok=True)
        log_file = directory / "gapcheck.log"
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    level = getattr(logging, settings.log_level.upper(), logging.INFO)
    if verbose:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


# loading


def _wiring(
    path: Optional[str], externals: Sequence[str]
) -> Tuple[EngineWiring, Optional[int]]:
    spec = load_wiring(path) if path else WiringSpec()
    return spec.to_wiring(list(externals)), spec.loop_bound


def _engine(
    gtdl_path: str,
    wiring_path: Optional[str],
    externals: Sequence[str],
    loop_bound: Optional[int],
) -> Tuple[List[GtdlRule], EngineWiring, Lts]:
    rules = load_gtdl(gtdl_path)
    wiring, file_bound = _wiring(wiring_path, externals)
    bound = loop_bound or file_bound or settings.loop_bound
    return rules, wiring, engine_to_lts(rules, wiring, loop_bound=bound)


def _timeout(args: argparse.Namespace) -> Optional[float]:
    """``--timeout-secs 0`` disables the limit and keeps work in-process."""
    value = getattr(args, "timeout_secs", None)
    if value is None:
        return settings.timeout_secs
    return value or None


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text)


# output


def print_verdict(
    verdict: Verdict, output_format: str, stream: Optional[TextIO] = None
) -> None:
    stream = stream or sys.stdout
    if output_format == "json-lines":
        stream.write(verdict.model_dump_json() + "\n")
    elif output_format == "csv":
        row = {
            "kind": verdict.kind.value,
            "holds": str(verdict.holds).lower(),
            "counterexample": ".".join(verdict.counterexample)
            if verdict.counterexample is not None
            else "",
            "states_lhs": verdict.stats.states_lhs,
            "states_rhs": verdict.stats.states_rhs,
            "millis": round(verdict.stats.elapsed_ms, 3),
        }
        pd.DataFrame([row]).to_csv(stream, index=False)
    else:
        stream.write(verdict.to_report() + "\n")
        stream.write(verdict.to_record() + "\n")


def _print_results(results: Sequence[BenchResult], output_format: str) -> None:
    if output_format == "json-lines":
        for result in results:
            sys.stdout.write(result.model_dump_json() + "\n")
    elif output_format == "csv":
        frame = metrics.results_frame(results)[CSV_COLUMNS]
        frame.to_csv(sys.stdout, index=False, float_format="%.3f")
    else:
        sys.stdout.write(metrics.render_report(results))


# commands


def _write_lts(lts: Lts, out: Optional[str]) -> None:
    """Write the dump and report its size; on stdout the size is a comment line."""
    counts = f"states={lts.num_states} transitions={lts.num_transitions}"
    if out:
        _write(dump_lts(lts), out)
        print(counts)
    else:
        _write(f"# {counts}\n" + dump_lts(lts), None)


def cmd_compile_tree(args: argparse.Namespace) -> int:
    _write_lts(tree_to_lts(load_tree(args.file)), args.out)
    return EXIT_HOLDS


def cmd_compile_gtdl(args: argparse.Namespace) -> int:
    _, _, lts = _engine(args.file, args.wiring, args.external, args.loop_bound)
    _write_lts(lts, args.out)
    return EXIT_HOLDS


def cmd_verify(args: argparse.Namespace) -> int:
    tree_lts = tree_to_lts(load_tree(args.tree))
    _, _, engine_lts = _engine(args.gtdl, args.wiring, args.external, args.loop_bound)
    lhs, rhs = tree_lts, engine_lts
    if args.direction == "engine-tree":
        lhs, rhs = engine_lts, tree_lts

    if not lhs.alphabet & rhs.alphabet:
        logger.warning(
            "Tree and engine share no observable actions;"
            " check the channel map of the wiring"
        )

    verdict = run_with_timeout(check, (lhs, rhs, args.relation), _timeout(args))
    logger.info(verdict.to_record())
    print_verdict(verdict, args.format)
    return EXIT_HOLDS if verdict.holds else EXIT_FAILS


def cmd_emit_lnt(args: argparse.Namespace) -> int:
    document: LntDocument
    if args.tree:
        document = emit_tree(load_tree(args.tree))
    else:
        rules = load_gtdl(args.gtdl)
        wiring, _ = _wiring(args.wiring, args.external)
        if args.rule:
            selected = [rule for rule in rules if rule.name == args.rule]
            if not selected:
                raise ValueError(f"no rule named '{args.rule}' in {args.gtdl}")
            document = emit_gtdl(selected[0], wiring.channels)
        elif len(rules) == 1:
            document = emit_gtdl(rules[0], wiring.channels)
        else:
            document = emit_engine(rules, wiring)
    _write(document.text, args.out)
    logger.info(f"Emitted processes: {', '.join(document.process_names)}")
    return EXIT_HOLDS


def cmd_bench(args: argparse.Namespace) -> int:
    families = [Family(name) for name in args.family] if args.family else list(Family)
    relations = [RelationKind(name) for name in args.relations or []]
    counts = bench.parse_leaves(args.leaves)

    cases: List[BenchCase] = []
    for family in families:
        minimum = bench.MIN_LEAVES.get(family, 1)
        skipped = [n for n in counts if n < minimum]
        if skipped:
            logger.warning(f"{family.value} needs {minimum} leaves; skipping {skipped}")
        cases += [
            BenchCase(
                family=family,
                leaves=n,
                relations=relations,
                direction=args.direction,
            )
            for n in counts
            if n >= minimum
        ]

    storage = MultiStorage(
        Path(args.out),
        sqlite_path=Path(args.db) if args.db else None,
        excel_path=Path(args.excel) if args.excel else None,
    )
    status = storage.get_backend_status()
    for backend, requested in (("sqlite", args.db), ("excel", args.excel)):
        if requested and not status[backend]:
            logger.warning(f"No {backend} copy will be written to {requested}")
    try:
        results = bench.run(
            cases,
            repetitions=args.reps or settings.bench_reps,
            timeout_secs=_timeout(args),
            workers=args.workers or settings.bench_workers,
            on_result=lambda result: storage.append_row(result.to_row()),
        )
    finally:
        storage.close()

    if args.markdown:
        Path(args.markdown).write_text(metrics.render_report(results), encoding="utf-8")
        logger.info(f"Wrote timing table to {args.markdown}")
    _print_results(results, args.format)
    return EXIT_HOLDS


# parser


def _global_options(defaults: bool) -> argparse.ArgumentParser:
    """Options accepted both before and after the subcommand."""
    default = None if defaults else argparse.SUPPRESS
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "--format", choices=FORMATS, default=default, help="Output format"
    )
    parent.add_argument(
        "--timeout-secs",
        type=float,
        default=default,
        help="Per-check time limit in seconds; 0 disables it",
    )
    parent.add_argument(
        "--loop-bound", type=int, default=default, help="Engine loop bound"
    )
    parent.add_argument(
        "--verbose",
        action="store_true",
        default=False if defaults else argparse.SUPPRESS,
    )
    parent.add_argument(
        "--log-dir", default=default, help="Also log to DIR/gapcheck.log"
    )
    return parent


def _engine_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--wiring", help="YAML wiring file (channels, bindings, externals)"
    )
    parser.add_argument(
        "--external",
        action="append",
        default=[],
        metavar="FLAG",
        help="Flag set outside the engine; repeatable",
    )


def build_parser() -> argparse.ArgumentParser:
    common = _global_options(defaults=False)
    parser = argparse.ArgumentParser(
        prog="gapcheck",
        description="Check detection rules against attack trees",
        parents=[_global_options(defaults=True)],
    )
    commands = parser.add_subparsers(dest="command", required=True)

    compile_tree = commands.add_parser(
        "compile-tree", parents=[common], help="Compile an attack tree to an LTS dump"
    )
    compile_tree.add_argument("file")
    compile_tree.add_argument("-o", "--out")
    compile_tree.set_defaults(handler=cmd_compile_tree)

    compile_gtdl = commands.add_parser(
        "compile-gtdl", parents=[common], help="Compile a GTDL engine to an LTS dump"
    )
    compile_gtdl.add_argument("file")
    _engine_options(compile_gtdl)
    compile_gtdl.add_argument("-o", "--out")
    compile_gtdl.set_defaults(handler=cmd_compile_gtdl)

    verify = commands.add_parser(
        "verify", parents=[common], help="Check a relation between a tree and an engine"
    )
    verify.add_argument("--tree", required=True)
    verify.add_argument("--gtdl", required=True)
    _engine_options(verify)
    verify.add_argument(
        "--relation",
        type=RelationKind,
        choices=list(RelationKind),
        default=RelationKind.WEAK_TRACE_INCL,
        metavar="{" + ",".join(kind.value for kind in RelationKind) + "}",
    )
    verify.add_argument(
        "--direction", choices=["tree-engine", "engine-tree"], default="tree-engine"
    )
    verify.set_defaults(handler=cmd_verify)

    emit = commands.add_parser("emit-lnt", parents=[common], help="Emit LNT source")
    source = emit.add_mutually_exclusive_group(required=True)
    source.add_argument("--tree")
    source.add_argument("--gtdl")
    _engine_options(emit)
    emit.add_argument("--rule", help="Emit only the named detection rule")
    emit.add_argument("-o", "--out")
    emit.set_defaults(handler=cmd_emit_lnt)

    bench_parser = commands.add_parser(
        "bench",
        parents=[common],
        help="Run the parametric benchmark families",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    bench_parser.add_argument(
        "--family", action="append", choices=[family.value for family in Family]
    )
    bench_parser.add_argument(
        "--leaves", default="1-10", help="Leaf counts, e.g. 1-10,15"
    )
    bench_parser.add_argument(
        "--relations", nargs="+", choices=[kind.value for kind in RelationKind]
    )
    bench_parser.add_argument("--reps", type=int, help="Repetitions per check")
    bench_parser.add_argument("--workers", type=int, help="Concurrent checks")
    bench_parser.add_argument(
        "--direction", choices=["tree-engine", "engine-tree"], default="tree-engine"
    )
    bench_parser.add_argument("--out", default="results.csv", help="CSV report")
    bench_parser.add_argument("--markdown", help="Also write the timing table here")
    bench_parser.add_argument("--db", help="Also store rows in this SQLite database")
    bench_parser.add_argument("--excel", help="Also store rows in this Excel workbook")
    bench_parser.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.format = args.format or settings.output_format
    if args.loop_bound is not None and args.loop_bound < 1:
        parser.error("--loop-bound must be at least 1")
    setup_logging(args.verbose, args.log_dir or settings.log_dir)

    try:
        return args.handler(args)
    except CheckTimeout as e:
        logger.error(f"Timed out: {e}")
        return EXIT_TIMEOUT
    except WorkerError as e:
        logger.error(f"Check did not complete: {e}")
        return EXIT_TIMEOUT
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO
    except (ValueError, GtdlRuntimeError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_PARSE
