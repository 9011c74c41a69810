"""Trip-log file format: parse datasets into TripRecord streams.

One record per line, comma-separated:

    VehicleType,DetectionTime_O,GantryID_O,DetectionTime_D,GantryID_D,TripLength,TripEnd,TripInformation

where TripInformation is ``<time>+<gantry>`` pairs joined by "; " and times
are ``yyyy-MM-dd HH:mm:ss``.  The first five fields mirror the passage list;
the authoritative sequence is TripInformation.  Bad lines are rejected (and
counted), never repaired.  Input is UTF-8; LF and CRLF both accepted; lines
starting with ``#`` and blank lines are skipped.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Iterator

from gantryflow.model import (
    GantryPassage,
    GantryflowError,
    MalformedGantryId,
    VehicleType,
    parse_gantry_id,
)


class MalformedRecord(GantryflowError):
    """A line that cannot be parsed; `reason` is one of REJECT_REASONS."""

    reason = "malformed"

    def __init__(self, line_no: int, detail: str, reason: str | None = None):
        super().__init__(f"line {line_no}: {detail}")
        self.line_no = line_no
        self.detail = detail
        if reason is not None:
            self.reason = reason


class NonMonotonicTimestamps(MalformedRecord):
    reason = "non_monotonic"

    def __init__(self, line_no: int):
        super().__init__(line_no, "passage timestamps decrease")


class DatasetNotFound(GantryflowError):
    pass


class IoFailure(GantryflowError):
    def __init__(self, path: str | Path, cause: BaseException | str):
        super().__init__(f"I/O failure on {path}: {cause}")
        self.path = str(path)
        self._cause_text = str(cause)

    def __reduce__(self):  # may cross process boundaries from map workers
        return (IoFailure, (self.path, self._cause_text))


@dataclass(slots=True)
class TripRecord:
    """One vehicle trip: an ordered gantry-passage timestamp sequence.

    `trip_length_km` and `complete` carry the TripLength / TripEnd fields as
    given; `source` is (file id, line number).  Treat instances as immutable.
    """

    vehicle_type: VehicleType
    passages: tuple[GantryPassage, ...]
    trip_length_km: float
    complete: bool
    source: tuple[str, int]


@dataclass(frozen=True)
class Dataset:
    id: str
    files: tuple[Path, ...]
    month_span: tuple[str, str]  # inclusive, "YYYY-MM"

    def __post_init__(self):
        if not self.files:
            raise ValueError("dataset must list at least one file")
        if self.month_span[0] > self.month_span[1]:
            raise ValueError(f"month span start after end: {self.month_span}")


@dataclass
class IngestReport:
    """Exact counts: records_ok + sum(rejected) == lines attempted."""

    records_ok: int = 0
    rejected: dict[str, int] = field(default_factory=dict)

    def add_rejected(self, reason: str) -> None:
        self.rejected[reason] = self.rejected.get(reason, 0) + 1

    def total_rejected(self) -> int:
        return sum(self.rejected.values())

    def lines_attempted(self) -> int:
        return self.records_ok + self.total_rejected()


def _parse_timestamp(text: str, line_no: int) -> datetime:
    # fromisoformat is strict and C-fast; the two extra checks pin the
    # exact "yyyy-MM-dd HH:mm:ss" shape (no T separator, no sub-seconds).
    if len(text) != 19 or text[10] != " ":
        raise MalformedRecord(line_no, f"bad timestamp {text!r}")
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        raise MalformedRecord(line_no, f"bad timestamp {text!r}") from None


def parse_trip_record(line: str, line_no: int, file_id: str = "-") -> TripRecord:
    """Parse one trip-log line; raises MalformedRecord / NonMonotonicTimestamps."""
    fields = line.split(",")
    if len(fields) != 8:
        raise MalformedRecord(line_no, f"expected 8 fields, got {len(fields)}")
    (vt_text, time_o, gantry_o, time_d, gantry_d, length_text, end_text, info) = fields

    if not vt_text.isdigit():
        raise MalformedRecord(line_no, f"bad vehicle type {vt_text!r}")
    vehicle_type = VehicleType.of(int(vt_text))

    _parse_timestamp(time_o, line_no)
    _parse_timestamp(time_d, line_no)
    try:
        parse_gantry_id(gantry_o)
        parse_gantry_id(gantry_d)
    except MalformedGantryId as exc:
        raise MalformedRecord(line_no, str(exc), reason="bad_gantry_id") from None

    try:
        trip_length = float(length_text)
    except ValueError:
        raise MalformedRecord(line_no, f"bad trip length {length_text!r}") from None
    if trip_length < 0:
        raise MalformedRecord(line_no, f"negative trip length {length_text!r}")

    if end_text == "Y":
        complete = True
    elif end_text == "N":
        complete = False
    else:
        raise MalformedRecord(line_no, f"bad trip-end flag {end_text!r}")

    if not info:
        raise MalformedRecord(line_no, "empty trip information")
    passages = []
    for part in info.split("; "):
        time_text, sep, gantry_text = part.partition("+")
        if not sep or not gantry_text:
            raise MalformedRecord(line_no, f"bad passage {part!r}")
        ts = _parse_timestamp(time_text, line_no)
        try:
            gantry = parse_gantry_id(gantry_text)
        except MalformedGantryId as exc:
            raise MalformedRecord(line_no, str(exc), reason="bad_gantry_id") from None
        passages.append(GantryPassage(gantry, ts))

    for earlier, later in zip(passages, passages[1:]):
        if later.timestamp < earlier.timestamp:
            raise NonMonotonicTimestamps(line_no)

    return TripRecord(
        vehicle_type=vehicle_type,
        passages=tuple(passages),
        trip_length_km=trip_length,
        complete=complete,
        source=(file_id, line_no),
    )


def format_trip_record(record: TripRecord) -> str:
    """Canonical line for a record; format(parse(x)) == x for canonical x.

    O/D fields are derived from the first and last passage, so lines whose
    carried O/D disagree with the passage list will not round-trip.
    """
    first, last = record.passages[0], record.passages[-1]
    info = "; ".join(
        f"{p.timestamp.isoformat(sep=' ')}+{p.gantry}" for p in record.passages
    )
    return (
        f"{record.vehicle_type.code},"
        f"{first.timestamp.isoformat(sep=' ')},{first.gantry},"
        f"{last.timestamp.isoformat(sep=' ')},{last.gantry},"
        f"{record.trip_length_km:.1f},"
        f"{'Y' if record.complete else 'N'},"
        f"{info}"
    )


def read_trip_file(
    path: str | Path,
    report: IngestReport,
    file_id: str | None = None,
) -> Iterator[TripRecord]:
    """Stream records from one file, counting rejects into `report`.

    Memory stays bounded by one buffered line regardless of file size.
    """
    path = Path(path)
    fid = file_id if file_id is not None else path.name
    try:
        with path.open("r", encoding="utf-8", newline="") as handle:
            for line_no, raw in enumerate(handle, start=1):
                line = raw.rstrip("\r\n")
                if not line or line.startswith("#"):
                    continue
                try:
                    yield parse_trip_record(line, line_no, fid)
                except MalformedRecord as exc:
                    report.add_rejected(exc.reason)
                else:
                    report.records_ok += 1
    except OSError as exc:
        raise IoFailure(path, exc) from exc


def read_dataset(dataset: Dataset) -> tuple[Iterator[TripRecord], IngestReport]:
    """Stream a dataset's records in file order then line order.

    The returned report fills in as the stream is consumed and is complete
    once the iterator is exhausted.
    """
    missing = [str(p) for p in dataset.files if not Path(p).is_file()]
    if missing:
        raise DatasetNotFound(f"dataset {dataset.id!r}: missing files {missing}")
    report = IngestReport()

    def _stream() -> Iterator[TripRecord]:
        for path in dataset.files:
            yield from read_trip_file(path, report)

    return _stream(), report


def load_manifest(path: str | Path) -> Dataset:
    """Read a dataset manifest: JSON {id, months: [...], files: [...]}.

    File entries are resolved relative to the manifest's directory.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetNotFound(f"manifest not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
        dataset_id = obj["id"]
        months = sorted(obj["months"])
        files = tuple(
            (path.parent / f).resolve() if not Path(f).is_absolute() else Path(f)
            for f in obj["files"]
        )
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DatasetNotFound(f"bad manifest {path}: {exc}") from exc
    if not months:
        raise DatasetNotFound(f"bad manifest {path}: empty months")
    return Dataset(id=dataset_id, files=files, month_span=(months[0], months[-1]))


def write_manifest(dataset: Dataset, path: str | Path, months: Iterable[str] | None = None) -> None:
    path = Path(path)
    month_list = sorted(months) if months is not None else list(dataset.month_span)
    payload = {
        "id": dataset.id,
        "months": month_list,
        "files": [_relative_name(f, path.parent) for f in dataset.files],
    }
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _relative_name(file: Path, base: Path) -> str:
    try:
        return str(Path(file).resolve().relative_to(base.resolve()))
    except ValueError:
        return str(file)
