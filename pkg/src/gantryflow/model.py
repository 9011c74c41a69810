"""Shared domain vocabulary: gantries, vehicle types, corridors, observations, cube.

Distances, fees and gantry mileages are exact decimals (they come from toll
tables with one fractional digit); timestamps are naive local civil time.
All types are immutable values after construction and safe to share between
concurrent workers.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date, datetime
from decimal import Decimal, InvalidOperation
from enum import Enum, IntEnum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping


class GantryflowError(Exception):
    """Base class for all errors raised by this package."""


class MalformedGantryId(GantryflowError):
    def __init__(self, text: str, reason: str):
        super().__init__(f"malformed gantry id {text!r}: {reason}")
        self.text = text
        self.reason = reason


class EmptyCorridor(GantryflowError):
    pass


class UnknownCorridor(GantryflowError):
    def __init__(self, corridor_id: str):
        super().__init__(f"unknown corridor {corridor_id!r}")
        self.corridor_id = corridor_id


class Bearing(Enum):
    NORTH = "North"
    SOUTH = "South"

    @property
    def suffix(self) -> str:
        return "N" if self is Bearing.NORTH else "S"

    @classmethod
    def from_suffix(cls, letter: str) -> Bearing:
        if letter == "N":
            return cls.NORTH
        if letter == "S":
            return cls.SOUTH
        raise ValueError(f"bearing suffix must be N or S, got {letter!r}")


class Weekday(IntEnum):
    """Day of week, Monday = 0 (matches ``date.weekday()``)."""

    MON = 0
    TUE = 1
    WED = 2
    THU = 3
    FRI = 4
    SAT = 5
    SUN = 6

    @property
    def label(self) -> str:
        return _WEEKDAY_LABELS[self.value]

    @classmethod
    def from_label(cls, label: str) -> Weekday:
        try:
            return cls(_WEEKDAY_LABELS.index(label.capitalize()))
        except ValueError:
            raise ValueError(f"unknown weekday {label!r}, expected Mon..Sun") from None


_WEEKDAY_LABELS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")

_GANTRY_RE = re.compile(r"^([0-9A-Za-z]+)-(\d+\.\d)([NS])$")


@dataclass(frozen=True, eq=False)
class GantryId:
    """A toll gantry: freeway code, mileage (one fractional digit) and bearing.

    Equality and hashing go through the canonical text form, so two ids are
    equal exactly when they print the same (e.g. "01F-157.2N").
    """

    freeway: str
    mileage_km: Decimal
    bearing: Bearing

    def __post_init__(self):
        if not self.freeway:
            raise MalformedGantryId("", "empty freeway code")
        if self.mileage_km < 0:
            raise MalformedGantryId(str(self.mileage_km), "negative mileage")
        text = f"{self.freeway}-{self.mileage_km}{self.bearing.suffix}"
        object.__setattr__(self, "_text", text)

    @property
    def text(self) -> str:
        return self._text  # type: ignore[attr-defined]

    def __str__(self) -> str:
        return self._text  # type: ignore[attr-defined]

    def __eq__(self, other) -> bool:
        if isinstance(other, GantryId):
            return self._text == other._text  # type: ignore[attr-defined]
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._text)  # type: ignore[attr-defined]


@lru_cache(maxsize=65536)
def parse_gantry_id(text: str) -> GantryId:
    """Parse a canonical gantry id such as "01F-157.2N".

    Raises MalformedGantryId on any deviation from the canonical
    ``<freeway>-<mileage with 1 decimal><N|S>`` pattern.  The parse is
    memoized: trip logs repeat a handful of gantries millions of times.
    """
    m = _GANTRY_RE.match(text)
    if m is None:
        raise MalformedGantryId(text, "does not match <freeway>-<mileage.d><N|S>")
    freeway, mileage, suffix = m.groups()
    return GantryId(freeway, Decimal(mileage), Bearing.from_suffix(suffix))


def format_gantry_id(gantry: GantryId) -> str:
    return gantry.text


_VEHICLE_LABELS: Mapping[int, str] = {
    5: "Trailer",
    31: "Car/Sedan",
    32: "Truck",
    41: "Bus",
    42: "BigTruck",
}


@dataclass(frozen=True, order=True)
class VehicleType:
    """TDCS vehicle classification code; unknown codes are kept, not rejected."""

    code: int

    @property
    def label(self) -> str:
        known = _VEHICLE_LABELS.get(self.code)
        return known if known is not None else f"Unknown({self.code})"

    @property
    def known(self) -> bool:
        return self.code in _VEHICLE_LABELS

    @classmethod
    def of(cls, code: int) -> VehicleType:
        return _vehicle_cache(code)


@lru_cache(maxsize=1024)
def _vehicle_cache(code: int) -> VehicleType:
    return VehicleType(code)


@dataclass(slots=True)
class GantryPassage:
    """One detection: a vehicle passing a gantry at a local civil time.

    Timestamps are naive (Taiwan has no DST) with second resolution.
    Treat instances as immutable.
    """

    gantry: GantryId
    timestamp: datetime


@dataclass(frozen=True)
class Segment:
    """One toll-table row: gantry plus distance/fee and interchange names."""

    gantry: GantryId
    distance_km: Decimal
    fee_twd: Decimal
    interchange_start: str
    interchange_stop: str

    def __post_init__(self):
        if self.distance_km <= 0:
            raise ValueError(f"segment distance must be > 0, got {self.distance_km}")
        if self.fee_twd < 0:
            raise ValueError(f"segment fee must be >= 0, got {self.fee_twd}")


@dataclass(frozen=True)
class Corridor:
    """A directed start->end gantry route on one freeway bearing."""

    id: str
    freeway: str
    bearing: Bearing
    start_gantry: GantryId
    end_gantry: GantryId
    segments: tuple[Segment, ...]

    def __post_init__(self):
        if not self.id:
            raise ValueError("corridor id must be non-empty")
        if self.start_gantry == self.end_gantry:
            raise ValueError(f"corridor {self.id}: start and end gantry are equal")
        for g in (self.start_gantry, self.end_gantry):
            self._check_gantry(g)
        for seg in self.segments:
            self._check_gantry(seg.gantry)

    def _check_gantry(self, g: GantryId) -> None:
        if g.freeway != self.freeway or g.bearing != self.bearing:
            raise ValueError(
                f"corridor {self.id}: gantry {g} does not match "
                f"freeway {self.freeway} bearing {self.bearing.suffix}"
            )

    def travel_sequence(self) -> tuple[GantryId, ...]:
        """Segment gantries ordered in the direction of travel (start first).

        Requires the start and end gantries to appear among the segments,
        which holds for the four built-ins and any route-complete config.
        """
        ordered = sorted(
            {seg.gantry for seg in self.segments},
            key=lambda g: g.mileage_km,
            reverse=self.start_gantry.mileage_km > self.end_gantry.mileage_km,
        )
        if not ordered or ordered[0] != self.start_gantry or ordered[-1] != self.end_gantry:
            raise ValueError(
                f"corridor {self.id}: segments do not span start..end gantries"
            )
        return tuple(ordered)


def corridor_totals(corridor: Corridor) -> tuple[Decimal, Decimal]:
    """Sum of segment distances and fees, as `(distance_km, fee_twd)`.

    Display metadata only: the toll-table distances do not sum to the
    start/end mileage delta, so no such identity is asserted anywhere.
    """
    if not corridor.segments:
        raise EmptyCorridor(f"corridor {corridor.id} has no segments")
    dist = sum((s.distance_km for s in corridor.segments), Decimal(0))
    fee = sum((s.fee_twd for s in corridor.segments), Decimal(0))
    return dist, fee


def _corridor_from_dict(obj: dict) -> Corridor:
    try:
        segments = tuple(
            Segment(
                gantry=parse_gantry_id(s["gantry"]),
                distance_km=_as_decimal(s["distance_km"]),
                fee_twd=_as_decimal(s["fee_twd"]),
                interchange_start=s["interchange_start"],
                interchange_stop=s["interchange_stop"],
            )
            for s in obj["segments"]
        )
        return Corridor(
            id=obj["id"],
            freeway=obj["freeway"],
            bearing=Bearing(obj["bearing"]),
            start_gantry=parse_gantry_id(obj["start_gantry"]),
            end_gantry=parse_gantry_id(obj["end_gantry"]),
            segments=segments,
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad corridor object: {exc}") from exc


def _as_decimal(value) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, (int, str)):
        try:
            return Decimal(value)
        except InvalidOperation as exc:
            raise ValueError(f"bad decimal value {value!r}") from exc
    raise ValueError(f"bad decimal value {value!r}")


def corridors_from_json(text: str) -> list[Corridor]:
    # parse_float=Decimal keeps 1-decimal table values exact
    raw = json.loads(text, parse_float=Decimal)
    if not isinstance(raw, list):
        raise ValueError("corridor config must be a JSON array")
    corridors = [_corridor_from_dict(obj) for obj in raw]
    seen = set()
    for c in corridors:
        if c.id in seen:
            raise ValueError(f"duplicate corridor id {c.id!r}")
        seen.add(c.id)
    return corridors


def load_corridors(path: str | Path) -> list[Corridor]:
    """Load a corridor configuration file (UTF-8 JSON array)."""
    return corridors_from_json(Path(path).read_text(encoding="utf-8"))


def builtin_corridors() -> list[Corridor]:
    """The four built-in Taichung corridors (NF01-N/S, NF03-N/S)."""
    text = resources.files("gantryflow.data").joinpath("corridors.json").read_text("utf-8")
    return corridors_from_json(text)


@dataclass(frozen=True)
class TransitObservation:
    """One matched corridor traversal and its travel time in whole seconds."""

    corridor_id: str
    vehicle_type: VehicleType
    start_time: datetime
    end_time: datetime
    travel_seconds: int

    def __post_init__(self):
        delta = self.end_time - self.start_time
        expected = delta.days * 86400 + delta.seconds
        if self.travel_seconds != expected:
            raise ValueError(
                f"travel_seconds {self.travel_seconds} != end-start {expected}"
            )
        if self.travel_seconds <= 0:
            raise ValueError("travel_seconds must be positive")


@dataclass(frozen=True)
class StatKey:
    """Aggregation key: (corridor, date, hour, vehicle type); weekday derives."""

    corridor_id: str
    date: date
    hour: int
    vehicle_type: VehicleType

    def __post_init__(self):
        if not 0 <= self.hour <= 23:
            raise ValueError(f"hour must be in [0, 23], got {self.hour}")

    @property
    def weekday(self) -> Weekday:
        return Weekday(self.date.weekday())

    def sort_key(self) -> tuple:
        return (self.corridor_id, self.date, self.hour, self.vehicle_type.code)


@dataclass(frozen=True)
class CountSum:
    """Reduce-side accumulator: a commutative monoid under `+`."""

    count: int = 0
    sum_travel_seconds: int = 0

    def __post_init__(self):
        if self.count < 0 or self.sum_travel_seconds < 0:
            raise ValueError("count and sum must be non-negative")
        if self.count == 0 and self.sum_travel_seconds != 0:
            raise ValueError("zero count requires zero sum")

    def __add__(self, other: CountSum) -> CountSum:
        return CountSum(
            self.count + other.count,
            self.sum_travel_seconds + other.sum_travel_seconds,
        )

    @classmethod
    def identity(cls) -> CountSum:
        return cls(0, 0)


REJECT_REASONS = ("bad_gantry_id", "malformed", "non_monotonic")


@dataclass(frozen=True)
class CubeCounters:
    """Skipped-record bookkeeping carried in cube metadata."""

    records_ok: int = 0
    rejected: tuple[tuple[str, int], ...] = tuple((r, 0) for r in REJECT_REASONS)
    observations_discarded: int = 0

    @classmethod
    def build(
        cls,
        records_ok: int,
        rejected: Mapping[str, int] | None = None,
        observations_discarded: int = 0,
    ) -> CubeCounters:
        rej = dict.fromkeys(REJECT_REASONS, 0)
        rej.update(rejected or {})
        return cls(records_ok, tuple(sorted(rej.items())), observations_discarded)

    def rejected_by_reason(self) -> dict[str, int]:
        return dict(self.rejected)

    def total_rejected(self) -> int:
        return sum(n for _, n in self.rejected)


@dataclass(frozen=True)
class CubeMetadata:
    dataset_id: str
    corridor_ids: tuple[str, ...]
    date_range: tuple[date, date] | None
    counters: CubeCounters


@dataclass
class StatsCube:
    """Aggregated (corridor, date, hour, vehicle type) -> (count, sum seconds).

    Empty cells are absent; every stored cell has count >= 1.
    """

    metadata: CubeMetadata
    cells: dict[StatKey, CountSum] = field(default_factory=dict)

    def total_count(self, corridor_id: str | None = None) -> int:
        if corridor_id is None:
            return sum(cs.count for cs in self.cells.values())
        return sum(
            cs.count for k, cs in self.cells.items() if k.corridor_id == corridor_id
        )

    def sorted_cells(self) -> list[tuple[StatKey, CountSum]]:
        return sorted(self.cells.items(), key=lambda kv: kv[0].sort_key())
