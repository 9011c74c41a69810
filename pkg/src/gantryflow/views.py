"""Statistic views over a cube: hourly and weekday distributions, vehicle
type breakdowns, average travel times, and the best-departure pick.

All functions are pure projections of an immutable cube; conservation holds
exactly: the hourly, weekday and vehicle-type views each redistribute the
same total count.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Iterator, Sequence

from gantryflow.model import (
    CountSum,
    GantryflowError,
    StatKey,
    StatsCube,
    UnknownCorridor,
    VehicleType,
    Weekday,
)

DEFAULT_MIN_SAMPLES = 5  # tiny cells produce misleading means
DEFAULT_HOLIDAYS = frozenset({date(2018, 9, 24)})


class NoData(GantryflowError):
    pass


@dataclass(frozen=True)
class ViewFilters:
    """Optional cell filters: vehicle types, a date window, and holiday
    grouping (when on, listed holiday dates count as Sunday)."""

    vehicle_types: frozenset[int] | None = None
    date_from: date | None = None
    date_to: date | None = None
    holidays_as_weekend: bool = False
    holidays: frozenset[date] = DEFAULT_HOLIDAYS

    def matches(self, key: StatKey) -> bool:
        if self.vehicle_types is not None and key.vehicle_type.code not in self.vehicle_types:
            return False
        if self.date_from is not None and key.date < self.date_from:
            return False
        if self.date_to is not None and key.date > self.date_to:
            return False
        return True

    def weekday_of(self, key: StatKey) -> int:
        if self.holidays_as_weekend and key.date in self.holidays:
            return Weekday.SUN.value
        return key.date.weekday()


_NO_FILTERS = ViewFilters()


@dataclass(frozen=True)
class HourlyProfile:
    corridor_id: str
    counts: tuple[int, ...]  # exactly 24
    vehicle_types: frozenset[int] | None = None

    def __post_init__(self):
        if len(self.counts) != 24:
            raise ValueError("hourly profile must cover 24 hours")

    def total(self) -> int:
        return sum(self.counts)

    def to_json_dict(self) -> dict:
        return {
            "corridor": self.corridor_id,
            "vehicle_types": sorted(self.vehicle_types) if self.vehicle_types else None,
            "counts": list(self.counts),
            "total": self.total(),
        }


@dataclass(frozen=True)
class WeekHourMatrix:
    corridor_id: str
    values: tuple[tuple[int, ...], ...]  # 7 rows (Mon..Sun) x 24 columns

    def __post_init__(self):
        if len(self.values) != 7 or any(len(row) != 24 for row in self.values):
            raise ValueError("matrix must be 7 weekdays x 24 hours")

    def total(self) -> int:
        return sum(sum(row) for row in self.values)

    def to_json_dict(self) -> dict:
        return {
            "corridor": self.corridor_id,
            "weekdays": [w.label for w in Weekday],
            "values": [list(row) for row in self.values],
        }


@dataclass(frozen=True)
class AvgTimeProfile:
    """7x24 grid of mean minutes (0.1 resolution); None where the sample
    count is below `min_samples`."""

    corridor_id: str
    minutes: tuple[tuple[float | None, ...], ...]
    min_samples: int

    def __post_init__(self):
        if len(self.minutes) != 7 or any(len(row) != 24 for row in self.minutes):
            raise ValueError("profile must be 7 weekdays x 24 hours")

    def to_json_dict(self) -> dict:
        return {
            "corridor": self.corridor_id,
            "min_samples": self.min_samples,
            "weekdays": [w.label for w in Weekday],
            "minutes": [list(row) for row in self.minutes],
        }


def _check_corridor(cube: StatsCube, corridor_id: str) -> None:
    if corridor_id not in cube.metadata.corridor_ids:
        raise UnknownCorridor(corridor_id)


def _iter_cells(
    cube: StatsCube, corridor_id: str, filters: ViewFilters
) -> Iterator[tuple[StatKey, CountSum]]:
    for key, value in cube.cells.items():
        if key.corridor_id == corridor_id and filters.matches(key):
            yield key, value


def hourly_distribution(
    cube: StatsCube, corridor_id: str, filters: ViewFilters | None = None
) -> HourlyProfile:
    """Counts per hour of day (24 bins) for one corridor."""
    _check_corridor(cube, corridor_id)
    filters = filters or _NO_FILTERS
    counts = [0] * 24
    for key, value in _iter_cells(cube, corridor_id, filters):
        counts[key.hour] += value.count
    return HourlyProfile(corridor_id, tuple(counts), filters.vehicle_types)


def weekday_hour_counts(
    cube: StatsCube, corridor_id: str, filters: ViewFilters | None = None
) -> WeekHourMatrix:
    """Counts per (weekday, hour): the 7x24 heatmap."""
    _check_corridor(cube, corridor_id)
    filters = filters or _NO_FILTERS
    grid = [[0] * 24 for _ in range(7)]
    for key, value in _iter_cells(cube, corridor_id, filters):
        grid[filters.weekday_of(key)][key.hour] += value.count
    return WeekHourMatrix(corridor_id, tuple(tuple(row) for row in grid))


def vehicle_type_counts(
    cube: StatsCube, corridor_id: str, filters: ViewFilters | None = None
) -> dict[VehicleType, HourlyProfile]:
    """One hourly profile per vehicle type present; they sum to the
    unfiltered hourly distribution."""
    _check_corridor(cube, corridor_id)
    filters = filters or _NO_FILTERS
    per_type: dict[VehicleType, list[int]] = {}
    for key, value in _iter_cells(cube, corridor_id, filters):
        counts = per_type.setdefault(key.vehicle_type, [0] * 24)
        counts[key.hour] += value.count
    return {
        vt: HourlyProfile(corridor_id, tuple(counts), frozenset({vt.code}))
        for vt, counts in sorted(per_type.items())
    }


def avg_travel_time(
    cube: StatsCube,
    corridor_id: str,
    min_samples: int = DEFAULT_MIN_SAMPLES,
    filters: ViewFilters | None = None,
) -> AvgTimeProfile:
    """Mean travel minutes per (weekday, hour), to 0.1 min resolution."""
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    _check_corridor(cube, corridor_id)
    filters = filters or _NO_FILTERS
    counts = [[0] * 24 for _ in range(7)]
    sums = [[0] * 24 for _ in range(7)]
    for key, value in _iter_cells(cube, corridor_id, filters):
        d = filters.weekday_of(key)
        counts[d][key.hour] += value.count
        sums[d][key.hour] += value.sum_travel_seconds
    minutes = tuple(
        tuple(
            round(sums[d][h] / counts[d][h] / 60.0, 1) if counts[d][h] >= min_samples else None
            for h in range(24)
        )
        for d in range(7)
    )
    return AvgTimeProfile(corridor_id, minutes, min_samples)


def best_departure(
    cube: StatsCube,
    corridor_id: str,
    weekday: Weekday,
    hour_window: Sequence[int] | range,
    min_samples: int = DEFAULT_MIN_SAMPLES,
    filters: ViewFilters | None = None,
) -> tuple[int, float]:
    """The hour in the window with the lowest mean travel time for that
    weekday; ties break to the earliest hour.  Raises NoData when every
    hour in the window lacks min_samples."""
    window = sorted(set(hour_window))
    if not window:
        raise ValueError("hour window must be non-empty")
    if window[0] < 0 or window[-1] > 23:
        raise ValueError(f"hour window must lie within [0, 23], got {window}")
    profile = avg_travel_time(cube, corridor_id, min_samples, filters)
    row = profile.minutes[Weekday(weekday).value]
    candidates = [(row[h], h) for h in window if row[h] is not None]
    if not candidates:
        raise NoData(
            f"no hour in window {window[0]}..{window[-1]} has "
            f">= {min_samples} samples for {Weekday(weekday).label}"
        )
    minutes, hour = min(candidates)
    return hour, minutes


@dataclass(frozen=True)
class CorridorComparison:
    corridor_a: str
    total_a: int
    corridor_b: str
    total_b: int

    @property
    def busier(self) -> str | None:
        """Corridor id with the larger total, or None when equal."""
        if self.total_a == self.total_b:
            return None
        return self.corridor_a if self.total_a > self.total_b else self.corridor_b

    def to_json_dict(self) -> dict:
        return {
            "corridor_a": self.corridor_a,
            "total_a": self.total_a,
            "corridor_b": self.corridor_b,
            "total_b": self.total_b,
            "busier": self.busier,
        }


def compare_totals(cube: StatsCube, corridor_a: str, corridor_b: str) -> CorridorComparison:
    """Total counts of two corridors and which one is busier."""
    _check_corridor(cube, corridor_a)
    _check_corridor(cube, corridor_b)
    return CorridorComparison(
        corridor_a=corridor_a,
        total_a=cube.total_count(corridor_a),
        corridor_b=corridor_b,
        total_b=cube.total_count(corridor_b),
    )


def matrix_to_csv_text(matrix: WeekHourMatrix | AvgTimeProfile) -> str:
    """CSV with a weekday column and one column per hour 0..23."""
    rows = matrix.values if isinstance(matrix, WeekHourMatrix) else matrix.minutes
    lines = ["weekday," + ",".join(str(h) for h in range(24))]
    for day, row in zip(Weekday, rows):
        cells = ("" if v is None else str(v) for v in row)
        lines.append(day.label + "," + ",".join(cells))
    return "\n".join(lines) + "\n"
