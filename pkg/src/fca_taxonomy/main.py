from __future__ import annotations

import argparse
import csv
import sys
import time
from collections.abc import Iterable, Iterator, Sequence
from contextlib import contextmanager
from pathlib import Path

from fca_taxonomy import __version__
from fca_taxonomy.context import ContextFormatError, FormalContext
from fca_taxonomy.context_io import load_context, save_cxt
from fca_taxonomy.export import (
    criterion_document,
    lattice_document,
    selection_document,
    selection_dot,
    stability_documents,
    write_json,
    write_manifest,
    write_text,
)
from fca_taxonomy.ingest import (
    EmptyContextError,
    IngestConfigError,
    LogFormatError,
    build_context,
    load_ingest_config,
    parse_usage_log,
)
from fca_taxonomy.lattice import (
    CapacityError,
    ConceptLattice,
    LatticeInconsistencyError,
    build_cover_graph,
    enumerate_concepts,
)
from fca_taxonomy.logging_config import configure_logging, get_app_logger
from fca_taxonomy.models import CriterionDocument, IngestConfig, RunManifest, UsageRecord
from fca_taxonomy.selection import (
    iceberg_filter,
    selection_overlap,
    stability_threshold_filter,
    top_k_extent,
    top_k_stability,
)
from fca_taxonomy.settings import Settings, get_settings
from fca_taxonomy.stability import (
    StabilityReport,
    stability_all,
    stability_bruteforce,
    verify_counting_identity,
)

logger = get_app_logger()

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_EMPTY = 3
EXIT_CAPACITY = 4
EXIT_INCONSISTENT = 5


class CommandError(Exception):
    def __init__(self, exit_code: int, message: str) -> None:
        super().__init__(message)
        self.exit_code = exit_code


class _Run:
    """Per-command bookkeeping: stage wall-times and manifest fields."""

    def __init__(self, command: str, argv: Sequence[str], settings: Settings) -> None:
        self.command = command
        self.argv = list(argv)
        self.settings = settings
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self.stage_seconds: dict[str, float] = {}
        self.concept_count: int | None = None

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        started = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - started
            self.stage_seconds[name] = round(elapsed, 6)
            logger.info(
                "%s stage=%s seconds=%.3f",
                self.command,
                name,
                elapsed,
                extra={"command": self.command, "stage": name, "seconds": round(elapsed, 6)},
            )

    def manifest(self, criterion: CriterionDocument | None = None) -> RunManifest:
        return RunManifest(
            command=self.command,
            argv=self.argv,
            inputs=self.inputs,
            outputs=self.outputs,
            config=self.settings.snapshot(),
            tool_version=__version__,
            stage_seconds=self.stage_seconds,
            concept_count=self.concept_count,
            criterion=criterion,
        )


def cmd_build_context(args: argparse.Namespace, run: _Run) -> int:
    log_paths = [_require_file(path) for path in args.logs]
    config_path = _require_file(args.config) if args.config else None
    out_path = Path(args.out)
    settings = run.settings

    with run.stage("ingest"):
        if config_path is not None:
            config = load_ingest_config(
                config_path, default_min_sessions=settings.default_min_sessions
            )
        else:
            config = IngestConfig(min_sessions=settings.default_min_sessions)
        records: list[UsageRecord] = []
        for path in log_paths:
            with path.open("rb") as stream:
                parsed = parse_usage_log(stream, args.kind)
            for reject in parsed.rejects:
                logger.warning(
                    "rejected path=%s line=%s reason=%s", path, reject.line_no, reject.reason
                )
            records.extend(parsed.records)
        records.sort(key=lambda record: (record.user_id, record.site_or_page, record.first_visit))
    with run.stage("build"):
        ctx = build_context(records, config)
    with run.stage("write"):
        save_cxt(ctx, out_path)

    run.inputs = [str(path) for path in log_paths] + ([str(config_path)] if config_path else [])
    run.outputs = [str(out_path)]
    write_manifest(out_path, run.manifest())
    print(f"{ctx.n_objects} objects x {ctx.n_attributes} attributes, {ctx.incidence_count} pairs")
    return EXIT_OK


def cmd_lattice(args: argparse.Namespace, run: _Run) -> int:
    ctx = _load(args.cxt, run)
    out_path = Path(args.out)
    lat = _build_lattice(ctx, run)
    with run.stage("write"):
        write_json(out_path, lattice_document(lat))
    run.outputs = [str(out_path)]
    write_manifest(out_path, run.manifest())
    print(f"{len(lat)} concepts, {len(lat.edges)} edges")
    return EXIT_OK


def cmd_stability(args: argparse.Namespace, run: _Run) -> int:
    ctx = _load(args.cxt, run)
    out_path = Path(args.out)
    lat = _build_lattice(ctx, run)
    report = _stability(ctx, lat, run)
    if args.verify:
        _verify_against_bruteforce(ctx, lat, report, run)
    with run.stage("write"):
        write_json(out_path, stability_documents(report))
    run.outputs = [str(out_path)]
    write_manifest(out_path, run.manifest())
    print(f"{len(report)} concepts, counting identity holds for 2^{ctx.n_objects}")
    return EXIT_OK


def cmd_select(args: argparse.Namespace, run: _Run) -> int:
    ctx = _load(args.cxt, run)
    dot_path = Path(args.dot)
    json_path = Path(args.json) if args.json else dot_path.with_suffix(".json")
    lat = _build_lattice(ctx, run)
    report = _stability(ctx, lat, run)

    with run.stage("select"):
        if args.iceberg is not None:
            selection = iceberg_filter(lat, args.iceberg)
        elif args.top_extent is not None:
            selection = top_k_extent(lat, args.top_extent)
        elif args.top_stability is not None:
            selection = top_k_stability(lat, report, args.top_stability, args.exclude_extremes)
        else:
            selection = stability_threshold_filter(lat, report, args.stability_gt)
    if not selection.selected_ids:
        message = f"selection {selection.criterion.describe()} is empty"
        logger.warning(message)
        print(f"warning: {message}", file=sys.stderr)

    with run.stage("write"):
        write_text(dot_path, selection_dot(lat, selection, report))
        write_json(json_path, selection_document(lat, selection))
    run.outputs = [str(dot_path), str(json_path)]
    write_manifest(dot_path, run.manifest(criterion_document(selection.criterion)))
    print(f"{len(selection)} concepts selected, {len(selection.induced_edges)} edges")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, run: _Run) -> int:
    ctx = _load(args.cxt, run)
    lat = _build_lattice(ctx, run)
    report = _stability(ctx, lat, run)
    by_extent = top_k_extent(lat, args.k)
    by_stability = top_k_stability(lat, report, args.k, args.exclude_extremes)
    overlap = selection_overlap(by_extent, by_stability)

    print(f"top-{args.k} by extent: {_ids(by_extent.selected_ids)}")
    print(f"top-{args.k} by stability: {_ids(by_stability.selected_ids)}")
    print(f"jaccard: {overlap.jaccard:.6f}")
    print(f"common: {_ids(sorted(overlap.common))}")
    print(f"only by extent: {_ids(sorted(overlap.only_first))}")
    print(f"only by stability: {_ids(sorted(overlap.only_second))}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fca-taxonomy",
        description="Concept lattices, stability indices and user-group taxonomies.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=_positive_int, help="worker threads for enumeration")
    parser.add_argument("--max-concepts", type=_positive_int, help="hard limit on lattice size")
    parser.add_argument(
        "--seed", type=int, help="reserved for sampled estimators; currently unused"
    )
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING, ERROR or CRITICAL")
    parser.add_argument("--log-json", action=argparse.BooleanOptionalAction, default=None)
    commands = parser.add_subparsers(dest="command", required=True)

    build = commands.add_parser("build-context", help="usage logs -> CXT context")
    build.add_argument("logs", nargs="+", help="usage log CSV files")
    build.add_argument("--config", help="ingest config JSON")
    build.add_argument("--kind", choices=("external", "internal"), default="external")
    build.add_argument("-o", "--out", required=True, help="output CXT path")
    build.set_defaults(handler=cmd_build_context)

    lattice = commands.add_parser("lattice", help="CXT -> concepts and cover edges JSON")
    lattice.add_argument("cxt")
    lattice.add_argument("-o", "--out", required=True)
    lattice.set_defaults(handler=cmd_lattice)

    stability = commands.add_parser("stability", help="CXT -> stability report JSON")
    stability.add_argument("cxt")
    stability.add_argument("-o", "--out", required=True)
    stability.add_argument(
        "--verify",
        action="store_true",
        help="recount small extents by subset enumeration (up to FCA_BRUTEFORCE_EXTENT_CAP objects)",
    )
    stability.set_defaults(handler=cmd_stability)

    select = commands.add_parser("select", help="CXT -> selected taxonomy as DOT and JSON")
    select.add_argument("cxt")
    criterion = select.add_mutually_exclusive_group(required=True)
    criterion.add_argument("--iceberg", type=_non_negative_int, metavar="N")
    criterion.add_argument("--top-extent", type=_non_negative_int, metavar="K")
    criterion.add_argument("--top-stability", type=_non_negative_int, metavar="K")
    criterion.add_argument("--stability-gt", type=_unit_interval, metavar="THETA")
    select.add_argument(
        "--exclude-extremes", action=argparse.BooleanOptionalAction, default=True
    )
    select.add_argument("--dot", required=True, help="output DOT path")
    select.add_argument("--json", help="output JSON path (default: DOT path with .json)")
    select.set_defaults(handler=cmd_select)

    compare = commands.add_parser("compare", help="top-k by extent vs top-k by stability")
    compare.add_argument("cxt")
    compare.add_argument("-k", type=_positive_int, required=True)
    compare.add_argument(
        "--exclude-extremes", action=argparse.BooleanOptionalAction, default=False
    )
    compare.set_defaults(handler=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    try:
        settings = _settings_for(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    configure_logging(settings)
    logger.debug("command=%s argv=%s", args.command, argv)
    run = _Run(args.command, argv, settings)

    try:
        return args.handler(args, run)
    except CommandError as exc:
        return _fail(exc.exit_code, str(exc))
    except FileNotFoundError as exc:
        return _fail(EXIT_USAGE, f"input file not found: {exc.filename}")
    except (ContextFormatError, LogFormatError, IngestConfigError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    except UnicodeDecodeError as exc:
        return _fail(EXIT_USAGE, f"input is not valid UTF-8: {exc}")
    except csv.Error as exc:
        return _fail(EXIT_USAGE, f"malformed CSV input: {exc}")
    except EmptyContextError as exc:
        return _fail(EXIT_EMPTY, f"empty context: {exc}")
    except CapacityError as exc:
        return _fail(EXIT_CAPACITY, str(exc))
    except LatticeInconsistencyError as exc:
        return _fail(EXIT_INCONSISTENT, str(exc))


def run() -> None:
    raise SystemExit(main())


def _settings_for(args: argparse.Namespace) -> Settings:
    overrides = {
        "threads": args.threads,
        "max_concepts": args.max_concepts,
        "seed": args.seed,
        "log_json": args.log_json,
        "log_level": args.log_level,
    }
    updates = {key: value for key, value in overrides.items() if value is not None}
    if not updates:
        return get_settings()
    return Settings(**updates)


def _load(path_value: str, run: _Run) -> FormalContext:
    path = _require_file(path_value)
    run.inputs = [str(path)]
    with run.stage("load"):
        return load_context(path)


def _build_lattice(ctx: FormalContext, run: _Run) -> ConceptLattice:
    settings = run.settings
    with run.stage("enumerate"):
        concepts = enumerate_concepts(
            ctx, max_concepts=settings.max_concepts, threads=settings.threads
        )
    with run.stage("cover"):
        lat = build_cover_graph(ctx, concepts)
    run.concept_count = len(lat)
    logger.info(
        "%s concepts=%s edges=%s",
        run.command,
        len(lat),
        len(lat.edges),
        extra={"command": run.command, "concepts": len(lat), "edges": len(lat.edges)},
    )
    return lat


def _stability(ctx: FormalContext, lat: ConceptLattice, run: _Run) -> StabilityReport:
    with run.stage("stability"):
        report = stability_all(
            ctx, lat, exact=True, downset_cache_limit=run.settings.downset_cache_limit
        )
    if not verify_counting_identity(report, ctx):
        raise CommandError(
            EXIT_INCONSISTENT,
            f"generator counts do not add up to 2^{ctx.n_objects}; lattice or stability pass is inconsistent",
        )
    return report


def _verify_against_bruteforce(
    ctx: FormalContext, lat: ConceptLattice, report: StabilityReport, run: _Run
) -> None:
    cap = run.settings.bruteforce_extent_cap
    checked = 0
    with run.stage("verify"):
        for concept in lat.concepts:
            if concept.extent_size > cap:
                continue
            expected = stability_bruteforce(ctx, concept, cap=cap).generator_count
            if report[concept.id].generator_count != expected:
                raise CommandError(
                    EXIT_INCONSISTENT,
                    f"concept c{concept.id}: stability pass counted "
                    f"{report[concept.id].generator_count} generators, subset enumeration {expected}",
                )
            checked += 1
    logger.info("verified concepts=%s extent_cap=%s", checked, cap)


def _require_file(path_value: str) -> Path:
    path = Path(path_value)
    if not path.is_file():
        raise CommandError(EXIT_USAGE, f"input file not found: {path}")
    return path


def _fail(exit_code: int, message: str) -> int:
    logger.error("exit_code=%s %s", exit_code, message, extra={"exit_code": exit_code})
    print(f"error: {message}", file=sys.stderr)
    return exit_code


def _ids(ids: Iterable[int]) -> str:
    return " ".join(f"c{cid}" for cid in ids) or "-"


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {number}")
    return number


def _non_negative_int(value: str) -> int:
    number = int(value)
    if number < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {number}")
    return number


def _unit_interval(value: str) -> float:
    number = float(value)
    if not 0.0 <= number <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {number}")
    return number
