"""Corridor transit extraction: the map/reduce job over trip records.

A traversal is matched by scanning a trip's passages left to right: a
corridor's start gantry pairs with the earliest later passage of its end
gantry, traversals never overlap, and scanning resumes after the end
passage.  Travel times outside (0, max_travel_seconds] are discarded and
counted.  Hour and weekday binning use the start-gantry passage time: the
entry time is what a departing road user controls.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from datetime import date
from typing import Iterator

from gantryflow.ingest import (
    Dataset,
    DatasetNotFound,
    IngestReport,
    IoFailure,
    MalformedRecord,
    TripRecord,
    parse_trip_record,
)
from gantryflow.model import (
    Corridor,
    CountSum,
    CubeCounters,
    CubeMetadata,
    GantryflowError,
    StatKey,
    StatsCube,
    TransitObservation,
    VehicleType,
)
from gantryflow.mr.engine import DEFAULT_SPILL_THRESHOLD, JobSpec, run_job
from gantryflow.mr.keycodec import register_key_type

# StatKey travels through the shuffle as (corridor, date, hour, vehicle code)
register_key_type(
    b"K",
    StatKey,
    lambda k: (k.corridor_id, k.date, k.hour, k.vehicle_type.code),
    lambda t: StatKey(t[0], t[1], t[2], VehicleType.of(t[3])),
)

# Reserved keys carrying side counts through the same reduce as the cells.
_META_DISCARDED = ("_meta", "discarded")
_META_REJECTED = ("_meta", "rejected")  # + reason as third element


@dataclass(frozen=True)
class ExtractionConfig:
    """Corridors to match plus the outlier cutoff and strict-path switch."""

    corridors: tuple[Corridor, ...]
    max_travel_seconds: int = 10800  # 3 h generously bounds congestion
    strict_path: bool = False

    def __post_init__(self):
        if not self.corridors:
            raise ValueError("at least one corridor is required")
        if self.max_travel_seconds <= 0:
            raise ValueError("max_travel_seconds must be positive")
        object.__setattr__(self, "corridors", tuple(self.corridors))

    def corridor_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.corridors)


def _strict_path_ok(passages, i: int, j: int, corridor: Corridor) -> bool:
    # every passage from start to end must stay on the corridor's freeway
    # and bearing and move (weakly) monotonically in mileage toward the end
    direction = 1 if corridor.end_gantry.mileage_km > corridor.start_gantry.mileage_km else -1
    prev_m = passages[i].gantry.mileage_km
    for k in range(i + 1, j + 1):
        g = passages[k].gantry
        if g.freeway != corridor.freeway or g.bearing != corridor.bearing:
            return False
        if (g.mileage_km - prev_m) * direction < 0:
            return False
        prev_m = g.mileage_km
    return True


def extract_transits(
    trip: TripRecord,
    config: ExtractionConfig,
    counters: dict | None = None,
) -> list[TransitObservation]:
    """Match corridor traversals in one trip.

    Returns one observation per non-overlapping traversal, per corridor.
    When `counters` is given, discarded out-of-bounds travel times are
    tallied under "discarded".
    """
    passages = trip.passages
    # canonical text identifies a gantry, and list.index scans at C speed
    texts = [p.gantry.text for p in passages]
    observations: list[TransitObservation] = []
    for corridor in config.corridors:
        start_text = corridor.start_gantry.text
        end_text = corridor.end_gantry.text
        i = 0
        while True:
            try:
                i = texts.index(start_text, i)
            except ValueError:
                break
            try:
                j = texts.index(end_text, i + 1)
            except ValueError:
                break  # no end passage left; later starts cannot match either
            t0 = passages[i].timestamp
            t1 = passages[j].timestamp
            delta = t1 - t0
            travel = delta.days * 86400 + delta.seconds
            if 0 < travel <= config.max_travel_seconds:
                if not config.strict_path or _strict_path_ok(passages, i, j, corridor):
                    observations.append(
                        TransitObservation(
                            corridor_id=corridor.id,
                            vehicle_type=trip.vehicle_type,
                            start_time=t0,
                            end_time=t1,
                            travel_seconds=travel,
                        )
                    )
            elif counters is not None:
                counters["discarded"] = counters.get("discarded", 0) + 1
            i = j + 1
    return observations


def transit_map(
    trip: TripRecord, config: ExtractionConfig
) -> list[tuple[StatKey, CountSum]]:
    """Emit one ((corridor, date, hour, vehicle type), (1, travel_s)) per transit."""
    pairs = []
    for obs in extract_transits(trip, config):
        start = obs.start_time
        key = StatKey(obs.corridor_id, start.date(), start.hour, obs.vehicle_type)
        pairs.append((key, CountSum(1, obs.travel_seconds)))
    return pairs


def transit_reduce(key, values: list[CountSum]) -> CountSum:
    """Component-wise sum; insensitive to value order."""
    if not values:
        raise ValueError("reduce called with no values")
    count = 0
    total = 0
    for v in values:
        count += v.count
        total += v.sum_travel_seconds
    return CountSum(count, total)


def _read_lines_split(path: str) -> Iterator[tuple[str, int, str]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            for line_no, raw in enumerate(handle, start=1):
                line = raw.rstrip("\r\n")
                if not line or line.startswith("#"):
                    continue
                yield path, line_no, line
    except OSError as exc:
        raise IoFailure(path, exc) from exc


@dataclass(frozen=True)
class _TripLineMapper:
    """Parses a raw line and maps it to cell pairs plus reserved meta pairs."""

    config: ExtractionConfig
    date_from: date | None = None
    date_to: date | None = None

    def __call__(self, record: tuple[str, int, str]):
        path, line_no, line = record
        try:
            trip = parse_trip_record(line, line_no, path)
        except MalformedRecord as exc:
            return [((*_META_REJECTED, exc.reason), CountSum(1, 0))]
        counters: dict = {}
        pairs: list[tuple] = []
        for obs in extract_transits(trip, self.config, counters):
            start = obs.start_time
            day = start.date()
            if self.date_from is not None and day < self.date_from:
                continue
            if self.date_to is not None and day > self.date_to:
                continue
            key = StatKey(obs.corridor_id, day, start.hour, obs.vehicle_type)
            pairs.append((key, CountSum(1, obs.travel_seconds)))
        discarded = counters.get("discarded", 0)
        if discarded:
            pairs.append((_META_DISCARDED, CountSum(discarded, 0)))
        return pairs


def run_extraction(
    dataset: Dataset,
    config: ExtractionConfig,
    date_from: date | None = None,
    date_to: date | None = None,
    workers: int = 1,
    partitions: int = 0,
    spill_threshold_bytes: int = DEFAULT_SPILL_THRESHOLD,
) -> StatsCube:
    """Extract and aggregate a whole dataset into a StatsCube.

    The optional [date_from, date_to] range filters observations by the
    date of their start passage; cube metadata records the requested range,
    or the observed one when no range is given.
    """
    if date_from is not None and date_to is not None and date_from > date_to:
        raise ValueError(f"date_from {date_from} after date_to {date_to}")
    missing = [str(p) for p in dataset.files if not os.path.isfile(p)]
    if missing:
        raise DatasetNotFound(f"dataset {dataset.id!r}: missing files {missing}")

    spec = JobSpec(
        splits=[str(p) for p in dataset.files],
        read_split=_read_lines_split,
        mapper=_TripLineMapper(config, date_from, date_to),
        reducer=transit_reduce,
        combiner=transit_reduce,
        workers=workers,
        partitions=partitions,
        spill_threshold_bytes=spill_threshold_bytes,
    )
    result = run_job(spec)

    cells: dict[StatKey, CountSum] = {}
    rejected: dict[str, int] = {}
    discarded = 0
    for key, value in result.output.items():
        if isinstance(key, StatKey):
            cells[key] = value
        elif key == _META_DISCARDED:
            discarded = value.count
        elif isinstance(key, tuple) and key[:2] == _META_REJECTED:
            rejected[key[2]] = value.count
        else:  # pragma: no cover - no other keys are emitted
            raise GantryflowError(f"unexpected reduce key {key!r}")

    records_ok = result.counters.records_mapped - sum(rejected.values())
    if date_from is not None and date_to is not None:
        date_range = (date_from, date_to)
    elif cells:
        days = [k.date for k in cells]
        date_range = (min(days), max(days))
    else:
        date_range = None
    metadata = CubeMetadata(
        dataset_id=dataset.id,
        corridor_ids=config.corridor_ids(),
        date_range=date_range,
        counters=CubeCounters.build(records_ok, rejected, discarded),
    )
    return StatsCube(metadata=metadata, cells=cells)


def ingest_report_from_cube(cube: StatsCube) -> IngestReport:
    """Reconstruct the ingest view of a cube's counters."""
    counters = cube.metadata.counters
    return IngestReport(
        records_ok=counters.records_ok,
        rejected={r: n for r, n in counters.rejected if n},
    )
