"""Shared fixtures and the independent extraction oracle used for
cross-checking the pipeline."""
from __future__ import annotations

from datetime import date, datetime

import pytest

from gantryflow.ingest import TripRecord, read_dataset
from gantryflow.model import (
    Corridor,
    CountSum,
    CubeCounters,
    CubeMetadata,
    GantryPassage,
    StatKey,
    StatsCube,
    VehicleType,
    builtin_corridors,
    parse_gantry_id,
)


@pytest.fixture(scope="session")
def corridors():
    return {c.id: c for c in builtin_corridors()}


def make_passages(*stops: tuple[str, str]) -> tuple[GantryPassage, ...]:
    """stops are ("01F-180.2N", "2018-09-03 08:00:00") pairs."""
    return tuple(
        GantryPassage(parse_gantry_id(g), datetime.fromisoformat(t)) for g, t in stops
    )


def make_trip(*stops: tuple[str, str], vehicle_code: int = 31) -> TripRecord:
    passages = make_passages(*stops)
    first, last = passages[0], passages[-1]
    length = abs(float(first.gantry.mileage_km) - float(last.gantry.mileage_km))
    return TripRecord(
        vehicle_type=VehicleType.of(vehicle_code),
        passages=passages,
        trip_length_km=length,
        complete=True,
        source=("test", 1),
    )


def make_cube(cells: dict, corridor_ids=None, dataset_id="test") -> StatsCube:
    """cells maps (corridor_id, iso_date, hour, vehicle_code) -> (count, sum)."""
    typed = {}
    for (cid, day, hour, code), (count, total) in cells.items():
        key = StatKey(cid, date.fromisoformat(day), hour, VehicleType.of(code))
        typed[key] = CountSum(count, total)
    ids = tuple(corridor_ids) if corridor_ids else tuple(sorted({k[0] for k in cells}))
    days = sorted(k.date for k in typed)
    metadata = CubeMetadata(
        dataset_id=dataset_id,
        corridor_ids=ids,
        date_range=(days[0], days[-1]) if days else None,
        counters=CubeCounters.build(records_ok=sum(c for c, _ in cells.values())),
    )
    return StatsCube(metadata=metadata, cells=typed)


# -- independent oracle -------------------------------------------------------
# A deliberately different implementation of the matching rule: collect start
# and end indices up front, pair greedily, then filter.  Kept free of any
# imports from gantryflow.extraction.


def _oracle_strict_ok(trip, s, e, corridor) -> bool:
    gantries = [p.gantry for p in trip.passages[s : e + 1]]
    if any(g.freeway != corridor.freeway or g.bearing != corridor.bearing for g in gantries):
        return False
    miles = [float(g.mileage_km) for g in gantries]
    if miles[0] < miles[-1]:
        return all(a <= b for a, b in zip(miles, miles[1:]))
    return all(a >= b for a, b in zip(miles, miles[1:]))


def oracle_transits(
    trip: TripRecord,
    corridor: Corridor,
    max_travel_seconds: int = 10800,
    strict: bool = False,
) -> list[tuple[datetime, datetime, int]]:
    names = [p.gantry.text for p in trip.passages]
    starts = [i for i, t in enumerate(names) if t == corridor.start_gantry.text]
    ends = [i for i, t in enumerate(names) if t == corridor.end_gantry.text]
    paired: list[tuple[int, int]] = []
    used_until = -1
    for s in starts:
        if s <= used_until:
            continue
        later = [e for e in ends if e > s]
        if not later:
            continue
        e = later[0]
        paired.append((s, e))
        used_until = e
    out = []
    for s, e in paired:
        t0 = trip.passages[s].timestamp
        t1 = trip.passages[e].timestamp
        secs = int((t1 - t0).total_seconds())
        if not (0 < secs <= max_travel_seconds):
            continue
        if strict and not _oracle_strict_ok(trip, s, e, corridor):
            continue
        out.append((t0, t1, secs))
    return out


def oracle_cells(
    dataset,
    corridor_list,
    max_travel_seconds: int = 10800,
    strict: bool = False,
    date_from: date | None = None,
    date_to: date | None = None,
) -> dict[tuple, tuple[int, int]]:
    """Single-pass naive aggregation over a dataset, as plain tuples."""
    stream, _report = read_dataset(dataset)
    cells: dict[tuple, tuple[int, int]] = {}
    for trip in stream:
        for corridor in corridor_list:
            for t0, _t1, secs in oracle_transits(trip, corridor, max_travel_seconds, strict):
                day = t0.date()
                if date_from is not None and day < date_from:
                    continue
                if date_to is not None and day > date_to:
                    continue
                key = (corridor.id, day, t0.hour, trip.vehicle_type.code)
                count, total = cells.get(key, (0, 0))
                cells[key] = (count + 1, total + secs)
    return cells


def cube_cells_as_tuples(cube: StatsCube) -> dict[tuple, tuple[int, int]]:
    return {
        (k.corridor_id, k.date, k.hour, k.vehicle_type.code): (v.count, v.sum_travel_seconds)
        for k, v in cube.cells.items()
    }
