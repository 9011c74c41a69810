"""Canonical StatsCube serialization: byte-stable JSON and CSV.

Cells are sorted by (corridor, date, hour, vehicle_type) so two equal cubes
always serialize to identical bytes, which makes golden-file diffs and
determinism checks trivial.
"""
from __future__ import annotations

import csv
import io
import json
from datetime import date
from pathlib import Path

from gantryflow.model import (
    REJECT_REASONS,
    CountSum,
    CubeCounters,
    CubeMetadata,
    StatKey,
    StatsCube,
    VehicleType,
)

CSV_HEADER = ("corridor", "date", "weekday", "hour", "vehicle_type", "count", "sum_travel_seconds")


def _cell_dict(key: StatKey, value: CountSum) -> dict:
    return {
        "corridor": key.corridor_id,
        "date": key.date.isoformat(),
        "weekday": key.weekday.label,
        "hour": key.hour,
        "vehicle_type": key.vehicle_type.code,
        "count": value.count,
        "sum_travel_seconds": value.sum_travel_seconds,
    }


def cube_to_dict(cube: StatsCube) -> dict:
    meta = cube.metadata
    date_range = None
    if meta.date_range is not None:
        date_range = {
            "start": meta.date_range[0].isoformat(),
            "end": meta.date_range[1].isoformat(),
        }
    return {
        "metadata": {
            "dataset_id": meta.dataset_id,
            "corridor_ids": list(meta.corridor_ids),
            "date_range": date_range,
            "counters": {
                "records_ok": meta.counters.records_ok,
                "rejected": dict(meta.counters.rejected),
                "observations_discarded": meta.counters.observations_discarded,
            },
        },
        "cells": [_cell_dict(k, v) for k, v in cube.sorted_cells()],
    }


def cube_to_json_bytes(cube: StatsCube) -> bytes:
    return (json.dumps(cube_to_dict(cube), separators=(",", ":")) + "\n").encode("utf-8")


def cells_to_json_bytes(cube: StatsCube) -> bytes:
    """Just the sorted cell array: the comparable content of a cube."""
    cells = [_cell_dict(k, v) for k, v in cube.sorted_cells()]
    return (json.dumps(cells, separators=(",", ":")) + "\n").encode("utf-8")


def write_cube_json(cube: StatsCube, path: str | Path) -> None:
    Path(path).write_bytes(cube_to_json_bytes(cube))


def cube_from_dict(obj: dict) -> StatsCube:
    meta = obj["metadata"]
    raw_range = meta.get("date_range")
    date_range = None
    if raw_range is not None:
        date_range = (date.fromisoformat(raw_range["start"]), date.fromisoformat(raw_range["end"]))
    raw_counters = meta.get("counters", {})
    rejected = dict.fromkeys(REJECT_REASONS, 0)
    rejected.update(raw_counters.get("rejected", {}))
    counters = CubeCounters.build(
        records_ok=raw_counters.get("records_ok", 0),
        rejected=rejected,
        observations_discarded=raw_counters.get("observations_discarded", 0),
    )
    cells: dict[StatKey, CountSum] = {}
    for cell in obj["cells"]:
        key = StatKey(
            corridor_id=cell["corridor"],
            date=date.fromisoformat(cell["date"]),
            hour=cell["hour"],
            vehicle_type=VehicleType.of(cell["vehicle_type"]),
        )
        if cell.get("weekday") not in (None, key.weekday.label):
            raise ValueError(
                f"cell weekday {cell['weekday']!r} contradicts date {cell['date']}"
            )
        if key in cells:
            raise ValueError(f"duplicate cube cell {key}")
        cells[key] = CountSum(cell["count"], cell["sum_travel_seconds"])
    metadata = CubeMetadata(
        dataset_id=meta["dataset_id"],
        corridor_ids=tuple(meta["corridor_ids"]),
        date_range=date_range,
        counters=counters,
    )
    return StatsCube(metadata=metadata, cells=cells)


def read_cube_json(path: str | Path) -> StatsCube:
    return cube_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def cube_to_csv_text(cube: StatsCube) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for key, value in cube.sorted_cells():
        writer.writerow(
            (
                key.corridor_id,
                key.date.isoformat(),
                key.weekday.label,
                key.hour,
                key.vehicle_type.code,
                value.count,
                value.sum_travel_seconds,
            )
        )
    return buf.getvalue()


def write_cube_csv(cube: StatsCube, path: str | Path) -> None:
    Path(path).write_text(cube_to_csv_text(cube), encoding="utf-8")
