"""HTTP service exposing corridors, datasets, extraction jobs and views.

Jobs are asynchronous with polling: POST /api/jobs returns an id
immediately, the extraction runs on a bounded worker pool, and finished
cubes persist as canonical JSON exports in the results directory (keyed by
job id) so a restarted process serves identical views.  View responses are
serialized manually with a fixed field order: repeated GETs on a Done job
are byte-identical.
"""
from __future__ import annotations

import json
import logging
import sys
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from fastapi import FastAPI, Request, Response
from pydantic import BaseModel, Field

from gantryflow import cubeio
from gantryflow.extraction import ExtractionConfig, run_extraction
from gantryflow.ingest import Dataset, load_manifest
from gantryflow.model import (
    Corridor,
    GantryflowError,
    StatsCube,
    UnknownCorridor,
    Weekday,
    builtin_corridors,
    corridor_totals,
)
from gantryflow import views as statviews

logger = logging.getLogger("gantryflow.api")

PENDING = "pending"
RUNNING = "running"
DONE = "done"
FAILED = "failed"

VIEW_NAMES = ("hourly", "heatmap", "vehicle_types", "avg_time", "best_departure")


class ApiError(GantryflowError):
    def __init__(self, status: int, detail: str):
        super().__init__(detail)
        self.status = status
        self.detail = detail


@dataclass
class JobRecord:
    """One extraction job; state moves pending -> running -> done|failed."""

    id: str
    dataset_id: str
    corridor_ids: tuple[str, ...]
    date_from: str | None
    date_to: str | None
    overrides: dict
    state: str = PENDING
    error: str | None = None
    created_at: str = ""
    started_at: str | None = None
    finished_at: str | None = None
    cube_file: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "request": {
                "dataset": self.dataset_id,
                "corridors": list(self.corridor_ids),
                "date_range": (
                    {"start": self.date_from, "end": self.date_to}
                    if self.date_from or self.date_to
                    else None
                ),
                "overrides": self.overrides,
            },
            "state": self.state,
            "error": self.error,
            "created_at": self.created_at,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "result": {"cube_file": self.cube_file} if self.state == DONE else None,
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# live lifecycle only; restart recovery rewrites stale records out-of-band
_ALLOWED_TRANSITIONS = {
    PENDING: {RUNNING},
    RUNNING: {DONE, FAILED},
    DONE: set(),
    FAILED: set(),
}


class JobStore:
    """Thread-safe registry persisting each record next to its cube export."""

    def __init__(self, results_dir: Path):
        self.results_dir = results_dir
        self._lock = threading.Lock()
        self._jobs: dict[str, JobRecord] = {}
        self._cubes: dict[str, StatsCube] = {}
        self._load_existing()

    def _record_path(self, job_id: str) -> Path:
        return self.results_dir / f"{job_id}.job.json"

    def cube_path(self, job_id: str) -> Path:
        return self.results_dir / f"{job_id}.cube.json"

    def _load_existing(self) -> None:
        self.results_dir.mkdir(parents=True, exist_ok=True)
        for path in sorted(self.results_dir.glob("*.job.json")):
            try:
                raw = json.loads(path.read_text(encoding="utf-8"))
                record = JobRecord(
                    id=raw["id"],
                    dataset_id=raw["request"]["dataset"],
                    corridor_ids=tuple(raw["request"]["corridors"]),
                    date_from=(raw["request"]["date_range"] or {}).get("start"),
                    date_to=(raw["request"]["date_range"] or {}).get("end"),
                    overrides=raw["request"]["overrides"],
                    state=raw["state"],
                    error=raw.get("error"),
                    created_at=raw.get("created_at", ""),
                    started_at=raw.get("started_at"),
                    finished_at=raw.get("finished_at"),
                    cube_file=(raw.get("result") or {}).get("cube_file"),
                )
            except (ValueError, KeyError, TypeError) as exc:
                logger.warning("skipping unreadable job record %s: %s", path, exc)
                continue
            if record.state in (PENDING, RUNNING):
                record.state = FAILED
                record.error = "interrupted by service restart"
                record.finished_at = record.finished_at or _now()
                self._persist(record)
            self._jobs[record.id] = record

    def _persist(self, record: JobRecord) -> None:
        payload = json.dumps(record.to_json_dict(), indent=2) + "\n"
        self._record_path(record.id).write_text(payload, encoding="utf-8")

    def create(self, record: JobRecord) -> None:
        with self._lock:
            self._jobs[record.id] = record
            self._persist(record)

    def get(self, job_id: str) -> JobRecord | None:
        with self._lock:
            return self._jobs.get(job_id)

    def transition(self, job_id: str, state: str, **updates) -> None:
        with self._lock:
            record = self._jobs[job_id]
            if state not in _ALLOWED_TRANSITIONS[record.state]:
                raise GantryflowError(
                    f"illegal job transition {record.state} -> {state}"
                )
            record.state = state
            for name, value in updates.items():
                setattr(record, name, value)
            self._persist(record)

    def cube_for(self, record: JobRecord) -> StatsCube:
        with self._lock:
            cube = self._cubes.get(record.id)
        if cube is None:
            cube = cubeio.read_cube_json(self.cube_path(record.id))
            with self._lock:
                self._cubes[record.id] = cube
        return cube


def _json_response(payload, status: int = 200) -> Response:
    body = json.dumps(payload, separators=(",", ":")) + "\n"
    return Response(content=body, status_code=status, media_type="application/json")


def _error(status: int, detail: str) -> Response:
    return _json_response({"detail": detail}, status)


class DateRangeBody(BaseModel):
    start: str
    end: str


class JobRequestBody(BaseModel):
    dataset: str
    corridors: list[str] = Field(default_factory=list)
    date_range: DateRangeBody | None = None
    overrides: dict = Field(default_factory=dict)


def _parse_window(text: str | None) -> range:
    if not text:
        return range(0, 24)
    try:
        if "-" in text:
            lo_s, hi_s = text.split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
        else:
            lo = hi = int(text)
    except ValueError:
        raise ApiError(400, f"bad hour window {text!r}, expected H or H-H") from None
    if not (0 <= lo <= hi <= 23):
        raise ApiError(400, f"hour window {text!r} out of range 0..23")
    return range(lo, hi + 1)


def _parse_vehicle_types(text: str | None) -> frozenset[int] | None:
    if not text:
        return None
    try:
        return frozenset(int(part) for part in text.split(","))
    except ValueError:
        raise ApiError(400, f"bad vehicle_types {text!r}") from None


def create_app(
    data_dir: str | Path,
    results_dir: str | Path,
    corridors: Sequence[Corridor] | None = None,
    workers: int = 1,
    max_concurrent_jobs: int = 1,
    extractor: Callable | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    """Build the service; `extractor` is injectable for tests and defaults
    to run_extraction."""
    data_dir = Path(data_dir)
    results_dir = Path(results_dir)
    corridor_list = list(corridors) if corridors is not None else builtin_corridors()
    corridor_map = {c.id: c for c in corridor_list}
    store = JobStore(results_dir)
    executor = ThreadPoolExecutor(max_workers=max_concurrent_jobs)
    extract = extractor if extractor is not None else run_extraction

    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
        logger.setLevel(logging.INFO)

    app = FastAPI(title="gantryflow", version="0.1.0")

    @app.middleware("http")
    async def request_log(request: Request, call_next):
        started = time.monotonic()
        response = await call_next(request)
        logger.info(
            json.dumps(
                {
                    "method": request.method,
                    "path": request.url.path,
                    "status": response.status_code,
                    "ms": round((time.monotonic() - started) * 1000, 1),
                },
                separators=(",", ":"),
            )
        )
        return response

    def find_datasets() -> dict[str, Dataset]:
        found: dict[str, Dataset] = {}
        if data_dir.is_dir():
            manifests = sorted(
                list(data_dir.rglob("manifest.json"))
                + list(data_dir.rglob("*.manifest.json"))
            )
            for path in manifests:
                try:
                    dataset = load_manifest(path)
                except GantryflowError as exc:
                    logger.warning("skipping unreadable manifest %s: %s", path, exc)
                    continue
                found.setdefault(dataset.id, dataset)
        return found

    @app.get("/api/corridors")
    def get_corridors() -> Response:
        payload = []
        for corridor in corridor_list:
            distance, fee = corridor_totals(corridor)
            payload.append(
                {
                    "id": corridor.id,
                    "freeway": corridor.freeway,
                    "bearing": corridor.bearing.value,
                    "start_gantry": corridor.start_gantry.text,
                    "end_gantry": corridor.end_gantry.text,
                    "segments": [
                        {
                            "gantry": seg.gantry.text,
                            "distance_km": float(seg.distance_km),
                            "fee_twd": float(seg.fee_twd),
                            "interchange_start": seg.interchange_start,
                            "interchange_stop": seg.interchange_stop,
                        }
                        for seg in corridor.segments
                    ],
                    "totals": {"distance_km": float(distance), "fee_twd": float(fee)},
                }
            )
        return _json_response(payload)

    @app.get("/api/datasets")
    def get_datasets() -> Response:
        payload = [
            {
                "id": dataset.id,
                "month_span": list(dataset.month_span),
                "files": len(dataset.files),
            }
            for _, dataset in sorted(find_datasets().items())
        ]
        return _json_response(payload)

    def _execute(job_id: str, dataset: Dataset, config: ExtractionConfig,
                 date_from: date | None, date_to: date | None, job_workers: int) -> None:
        store.transition(job_id, RUNNING, started_at=_now())
        try:
            cube = extract(
                dataset,
                config,
                date_from=date_from,
                date_to=date_to,
                workers=job_workers,
            )
            cube_path = store.cube_path(job_id)
            cubeio.write_cube_json(cube, cube_path)
            store.transition(
                job_id, DONE, finished_at=_now(), cube_file=cube_path.name
            )
        except Exception as exc:  # any failure lands in the record
            logger.warning("job %s failed: %s", job_id, exc)
            store.transition(job_id, FAILED, finished_at=_now(), error=str(exc))

    @app.post("/api/jobs", status_code=202)
    def post_job(body: JobRequestBody) -> Response:
        datasets = find_datasets()
        dataset = datasets.get(body.dataset)
        if dataset is None:
            return _error(404, f"unknown dataset {body.dataset!r}")
        requested = body.corridors or list(corridor_map)
        unknown = [cid for cid in requested if cid not in corridor_map]
        if unknown:
            return _error(404, f"unknown corridors {unknown}")
        date_from = date_to = None
        if body.date_range is not None:
            try:
                date_from = date.fromisoformat(body.date_range.start)
                date_to = date.fromisoformat(body.date_range.end)
            except ValueError as exc:
                return _error(400, f"bad date range: {exc}")
            if date_from > date_to:
                return _error(400, "date range start is after end")
        overrides = dict(body.overrides)
        try:
            config = ExtractionConfig(
                corridors=tuple(corridor_map[cid] for cid in requested),
                max_travel_seconds=int(
                    overrides.get("max_travel_seconds", ExtractionConfig.max_travel_seconds)
                ),
                strict_path=bool(overrides.get("strict_path", False)),
            )
            job_workers = int(overrides.get("workers", workers))
        except (ValueError, TypeError) as exc:
            return _error(400, f"bad overrides: {exc}")

        record = JobRecord(
            id=f"job-{uuid.uuid4().hex[:12]}",
            dataset_id=dataset.id,
            corridor_ids=tuple(requested),
            date_from=date_from.isoformat() if date_from else None,
            date_to=date_to.isoformat() if date_to else None,
            overrides=overrides,
            created_at=_now(),
        )
        store.create(record)
        executor.submit(_execute, record.id, dataset, config, date_from, date_to, job_workers)
        return _json_response({"job_id": record.id}, status=202)

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str) -> Response:
        record = store.get(job_id)
        if record is None:
            return _error(404, f"unknown job {job_id!r}")
        return _json_response(record.to_json_dict())

    @app.get("/api/jobs/{job_id}/views/{view_name}")
    def get_view(
        job_id: str,
        view_name: str,
        corridor: str | None = None,
        weekday: str | None = None,
        window: str | None = None,
        min_samples: int = statviews.DEFAULT_MIN_SAMPLES,
        vehicle_types: str | None = None,
    ) -> Response:
        record = store.get(job_id)
        if record is None:
            return _error(404, f"unknown job {job_id!r}")
        if view_name not in VIEW_NAMES:
            return _error(404, f"unknown view {view_name!r}")
        if record.state != DONE:
            return _error(409, f"job {job_id} is {record.state}, views need done")
        if not corridor:
            return _error(400, "corridor query parameter is required")
        cube = store.cube_for(record)
        try:
            filters = statviews.ViewFilters(vehicle_types=_parse_vehicle_types(vehicle_types))
            payload = _render_view(
                cube, view_name, corridor, weekday, window, min_samples, filters
            )
        except ApiError as exc:
            return _error(exc.status, exc.detail)
        except UnknownCorridor as exc:
            return _error(404, str(exc))
        except statviews.NoData as exc:
            return _error(404, f"no data: {exc}")
        except ValueError as exc:
            return _error(400, str(exc))
        return _json_response(payload)

    def _render_view(cube, view_name, corridor, weekday, window, min_samples, filters):
        if view_name == "hourly":
            return statviews.hourly_distribution(cube, corridor, filters).to_json_dict()
        if view_name == "heatmap":
            return statviews.weekday_hour_counts(cube, corridor, filters).to_json_dict()
        if view_name == "vehicle_types":
            profiles = statviews.vehicle_type_counts(cube, corridor, filters)
            return {
                "corridor": corridor,
                "profiles": [
                    {
                        "code": vt.code,
                        "label": vt.label,
                        "counts": list(profile.counts),
                        "total": profile.total(),
                    }
                    for vt, profile in profiles.items()
                ],
            }
        if view_name == "avg_time":
            return statviews.avg_travel_time(cube, corridor, min_samples, filters).to_json_dict()
        # best_departure
        if not weekday:
            raise ApiError(400, "weekday query parameter is required")
        try:
            day = Weekday.from_label(weekday)
        except ValueError as exc:
            raise ApiError(400, str(exc)) from None
        hour_window = _parse_window(window)
        hour, minutes = statviews.best_departure(
            cube, corridor, day, hour_window, min_samples, filters
        )
        return {
            "corridor": corridor,
            "weekday": day.label,
            "window": [hour_window.start, hour_window.stop - 1],
            "min_samples": min_samples,
            "hour": hour,
            "minutes": minutes,
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    app.state.store = store
    app.state.executor = executor
    return app
