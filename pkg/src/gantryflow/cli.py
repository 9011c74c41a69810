"""Command-line entry point: gen / extract / stats / serve.

Exit status: 0 success, 1 usage error (bad flags, unknown corridor or view),
2 runtime failure (I/O, missing data).  Payload output goes to stdout and is
byte-stable for identical inputs; counters and diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date
from pathlib import Path

from gantryflow import cubeio, synth, views as statviews
from gantryflow.extraction import ExtractionConfig, run_extraction
from gantryflow.ingest import DatasetNotFound, IoFailure, load_manifest
from gantryflow.model import (
    GantryflowError,
    UnknownCorridor,
    Weekday,
    builtin_corridors,
    load_corridors,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

CORRIDORS_ENV = "GANTRYFLOW_CORRIDORS"


class UsageError(GantryflowError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); our convention is 1
        raise UsageError(message)


def _available_corridors(config_path: str | None):
    path = config_path or os.environ.get(CORRIDORS_ENV)
    return load_corridors(path) if path else builtin_corridors()


def _cmd_gen(args) -> int:
    if args.config == "september-2018":
        config = synth.september_2018_profile(
            **({} if args.seed is None else {"seed": args.seed})
        )
    else:
        config = synth.load_config(args.config, seed_override=args.seed)
    out_dir = Path(args.out)
    dataset, truth = synth.generate(config, out_dir)
    payload = {
        "dataset_id": dataset.id,
        "manifest": str(out_dir / synth.MANIFEST_FILENAME),
        "truth": str(out_dir / synth.TRUTH_FILENAME),
        "files": len(dataset.files),
        "complete_trips": truth.complete_trips,
    }
    print(json.dumps(payload, separators=(",", ":")))
    return EXIT_OK


def _cmd_extract(args) -> int:
    corridors = {c.id: c for c in _available_corridors(args.corridors_config)}
    unknown = [cid for cid in args.corridor if cid not in corridors]
    if unknown:
        raise UsageError(f"unknown corridor(s): {', '.join(unknown)}")
    dataset = load_manifest(args.dataset)
    config = ExtractionConfig(
        corridors=tuple(corridors[cid] for cid in args.corridor),
        max_travel_seconds=args.max_travel_seconds,
        strict_path=args.strict_path,
    )
    cube = run_extraction(
        dataset,
        config,
        date_from=args.date_from,
        date_to=args.date_to,
        workers=args.workers,
    )
    cubeio.write_cube_json(cube, args.out)
    counters = cube.metadata.counters
    print(
        f"records_ok={counters.records_ok} "
        f"rejected={counters.total_rejected()} "
        f"discarded={counters.observations_discarded} "
        f"cells={len(cube.cells)} total={cube.total_count()}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_stats(args) -> int:
    cube = cubeio.read_cube_json(args.cube)
    name = args.view
    corridor = args.corridor
    if name not in ("hourly", "heatmap", "vehicle_types", "avg_time", "best_departure"):
        raise UsageError(f"unknown view {name!r}")
    if not corridor:
        raise UsageError("--corridor is required")
    if name == "hourly":
        result = statviews.hourly_distribution(cube, corridor).to_json_dict()
        csv_text = None
    elif name == "heatmap":
        matrix = statviews.weekday_hour_counts(cube, corridor)
        result = matrix.to_json_dict()
        csv_text = statviews.matrix_to_csv_text(matrix)
    elif name == "vehicle_types":
        profiles = statviews.vehicle_type_counts(cube, corridor)
        result = {
            "corridor": corridor,
            "profiles": [
                {"code": vt.code, "label": vt.label, "counts": list(p.counts), "total": p.total()}
                for vt, p in profiles.items()
            ],
        }
        csv_text = None
    elif name == "avg_time":
        profile = statviews.avg_travel_time(cube, corridor, args.min_samples)
        result = profile.to_json_dict()
        csv_text = statviews.matrix_to_csv_text(profile)
    else:
        if not args.weekday:
            raise UsageError("--weekday is required for best_departure")
        try:
            day = Weekday.from_label(args.weekday)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        window = _parse_window_arg(args.window)
        hour, minutes = statviews.best_departure(cube, corridor, day, window, args.min_samples)
        result = {
            "corridor": corridor,
            "weekday": day.label,
            "window": [window.start, window.stop - 1],
            "min_samples": args.min_samples,
            "hour": hour,
            "minutes": minutes,
        }
        csv_text = None
    if args.format == "csv":
        if csv_text is None:
            raise UsageError(f"view {name!r} has no CSV form")
        sys.stdout.write(csv_text)
    else:
        print(json.dumps(result, separators=(",", ":")))
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from gantryflow.service import create_app

    if not args.data:
        raise UsageError("--data (or env GANTRYFLOW_DATA) is required")
    host, _, port_text = args.listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise UsageError(f"bad --listen address {args.listen!r}, expected HOST:PORT")
    corridors = _available_corridors(args.corridors_config)
    app = create_app(
        data_dir=args.data,
        results_dir=args.results,
        corridors=corridors,
        workers=args.workers,
        ui_dir=args.ui,
    )
    uvicorn.run(app, host=host, port=int(port_text), log_level="info")
    return EXIT_OK


def _parse_window_arg(text: str) -> range:
    try:
        if "-" in text:
            lo_s, hi_s = text.split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"bad --window {text!r}, expected H or H-H") from None
    if not (0 <= lo <= hi <= 23):
        raise UsageError(f"--window {text!r} out of range 0..23")
    return range(lo, hi + 1)


def _date_arg(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise UsageError(f"bad date {text!r}, expected YYYY-MM-DD") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gantryflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic dataset with ground truth")
    gen.add_argument("--config", required=True,
                     help="generator config JSON, or the name 'september-2018'")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--seed", type=int, default=None, help="override the config seed")
    gen.set_defaults(func=_cmd_gen)

    ext = sub.add_parser("extract", help="extract corridor transits into a cube")
    ext.add_argument("--dataset", required=True, help="dataset manifest path")
    ext.add_argument("--corridor", action="append", required=True,
                     help="corridor id (repeatable)")
    ext.add_argument("--from", dest="date_from", type=_date_arg, default=None)
    ext.add_argument("--to", dest="date_to", type=_date_arg, default=None)
    ext.add_argument("--workers", type=int, default=1)
    ext.add_argument("--out", required=True, help="cube JSON output path")
    ext.add_argument("--max-travel-seconds", type=int, default=10800)
    ext.add_argument("--strict-path", action="store_true")
    ext.add_argument("--corridors-config", default=None,
                     help=f"corridor config JSON (default: built-ins or ${CORRIDORS_ENV})")
    ext.set_defaults(func=_cmd_extract)

    stats = sub.add_parser("stats", help="print a view of a cube")
    stats.add_argument("--cube", required=True)
    stats.add_argument("--view", required=True)
    stats.add_argument("--corridor", default=None)
    stats.add_argument("--weekday", default=None)
    stats.add_argument("--window", default="0-23")
    stats.add_argument("--min-samples", type=int, default=statviews.DEFAULT_MIN_SAMPLES)
    stats.add_argument("--format", choices=("json", "csv"), default="json")
    stats.set_defaults(func=_cmd_stats)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--listen", default=os.environ.get("GANTRYFLOW_LISTEN", "127.0.0.1:8800"),
                       help="HOST:PORT (env GANTRYFLOW_LISTEN)")
    serve.add_argument("--data", default=os.environ.get("GANTRYFLOW_DATA"),
                       help="directory scanned for dataset manifests (env GANTRYFLOW_DATA)")
    serve.add_argument("--results", default=os.environ.get("GANTRYFLOW_RESULTS", "results"),
                       help="job and cube storage directory (env GANTRYFLOW_RESULTS)")
    serve.add_argument("--workers", type=int, default=1, help="extraction workers per job")
    serve.add_argument("--corridors-config", default=None)
    serve.add_argument("--ui", default=None, help="static UI directory to mount at /ui")
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownCorridor as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetNotFound, IoFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except GantryflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:  # console script
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
