"""Deterministic single-node MapReduce runtime.

Mappers run over input splits (in worker processes when ``workers > 1``),
emitted pairs are grouped by canonical key bytes and routed to partitions by
a stable keyed hash, and each partition is reduced exactly once.  Output is
identical for any worker count and any split granularity of the same
records, provided mapper/reducer are deterministic and the reducer is
insensitive to value order.

Map-side buffers spill to temporary length-prefixed partition files once an
in-memory threshold is exceeded; spill files are deleted on job completion.
"""
from __future__ import annotations

import hashlib
import logging
import os
import pickle
import shutil
import struct
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from gantryflow.model import GantryflowError
from gantryflow.mr.keycodec import decode_key, encode_key

logger = logging.getLogger("gantryflow.mr")

DEFAULT_SPILL_THRESHOLD = 256 * 1024 * 1024

_LEN = struct.Struct("<I")
_HASH_PERSON = b"gfshuffle"  # fixed seed: partition routing is stable across runs


class EngineError(GantryflowError):
    pass


class MapperFailure(EngineError):
    def __init__(self, split: str, record: str, cause: str):
        super().__init__(f"mapper failed on split {split}, record {record}: {cause}")
        self.split = split
        self.record = record
        self.cause = cause

    def __reduce__(self):  # crosses process boundaries
        return (MapperFailure, (self.split, self.record, self.cause))


class ReducerFailure(EngineError):
    def __init__(self, key: str, cause: str):
        super().__init__(f"reducer failed on key {key}: {cause}")
        self.key = key
        self.cause = cause

    def __reduce__(self):
        return (ReducerFailure, (self.key, self.cause))


class KeyValue(tuple):
    """An emitted (key, value) pair; any 2-tuple is accepted interchangeably."""

    __slots__ = ()

    def __new__(cls, key, value):
        return super().__new__(cls, (key, value))

    @property
    def key(self):
        return self[0]

    @property
    def value(self):
        return self[1]


def partition_of(key: Any, partitions: int) -> int:
    """Stable partition for a key: depends only on its canonical bytes."""
    if partitions < 1:
        raise ValueError("partitions must be >= 1")
    if partitions == 1:
        return 0
    return _partition_of_bytes(encode_key(key), partitions)


def _partition_of_bytes(key_bytes: bytes, partitions: int) -> int:
    digest = hashlib.blake2b(key_bytes, digest_size=8, person=_HASH_PERSON).digest()
    return int.from_bytes(digest, "big") % partitions


@dataclass(frozen=True)
class JobSpec:
    """A MapReduce job.

    splits        input splits; each is handed to `read_split` (or iterated
                  directly when `read_split` is None)
    mapper        record -> iterable of (key, value); pure and deterministic
    reducer       (key, values) -> value; must not depend on value order
    combiner      optional map-side pre-reduce; reducing combined partials
                  must equal reducing the raw values (true for monoids)
    For workers > 1, splits, mapper, reducer and combiner must be picklable.
    """

    splits: Sequence[Any]
    mapper: Callable[[Any], Iterable[tuple]]
    reducer: Callable[[Any, list], Any]
    read_split: Callable[[Any], Iterable[Any]] | None = None
    combiner: Callable[[Any, list], Any] | None = None
    partitions: int = 0  # 0 -> same as workers
    workers: int = 1
    spill_threshold_bytes: int = DEFAULT_SPILL_THRESHOLD

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.partitions < 0:
            raise ValueError("partitions must be >= 1 (or 0 for default)")
        if self.spill_threshold_bytes < 1:
            raise ValueError("spill threshold must be positive")

    @property
    def effective_partitions(self) -> int:
        return self.partitions if self.partitions >= 1 else self.workers


@dataclass(frozen=True)
class JobCounters:
    records_mapped: int
    pairs_emitted: int
    keys_reduced: int


@dataclass
class JobResult:
    output: dict[Any, Any]
    counters: JobCounters


@dataclass
class _MapOutput:
    records: int
    pairs: int
    # per-partition {key_bytes: combined value} or {key_bytes: [values]}
    buffers: list[dict] = field(default_factory=list)
    spill_files: list[list[str]] = field(default_factory=list)


def _spill_buffers(buffers, spill_files, spill_dir, task_id, seq, combined) -> None:
    for p, buf in enumerate(buffers):
        if not buf:
            continue
        path = os.path.join(spill_dir, f"map{task_id}-p{p}-{seq}.spill")
        with open(path, "wb") as out:
            for kb, stored in buf.items():
                values = [stored] if combined else stored
                for v in values:
                    vb = pickle.dumps(v, pickle.HIGHEST_PROTOCOL)
                    out.write(_LEN.pack(len(kb)))
                    out.write(kb)
                    out.write(_LEN.pack(len(vb)))
                    out.write(vb)
        spill_files[p].append(path)
        buf.clear()


def _read_spill(path: str):
    with open(path, "rb") as handle:
        read = handle.read
        while True:
            head = read(4)
            if not head:
                return
            kb = read(_LEN.unpack(head)[0])
            (vlen,) = _LEN.unpack(read(4))
            yield kb, pickle.loads(read(vlen))


def _run_map_task(args) -> _MapOutput:
    (task_id, split, read_split, mapper, combiner, partitions, spill_dir, spill_limit) = args
    buffers: list[dict] = [{} for _ in range(partitions)]
    spill_files: list[list[str]] = [[] for _ in range(partitions)]
    records = 0
    pairs = 0
    approx_bytes = 0
    spill_seq = 0
    kb_cache: dict = {}  # encoded bytes per key; keys repeat heavily
    stream = read_split(split) if read_split is not None else split
    for record in stream:
        try:
            emitted = mapper(record)
        except Exception as exc:
            raise MapperFailure(repr(split)[:200], repr(record)[:200], repr(exc)) from exc
        for key, value in emitted:
            pairs += 1
            try:
                kb = kb_cache[key]
            except KeyError:
                kb = kb_cache[key] = encode_key(key)
            except TypeError:  # unhashable key type
                kb = encode_key(key)
            p = _partition_of_bytes(kb, partitions) if partitions > 1 else 0
            buf = buffers[p]
            if combiner is not None:
                prev = buf.get(kb)
                buf[kb] = value if prev is None else combiner(key, [prev, value])
            else:
                buf.setdefault(kb, []).append(value)
            approx_bytes += len(kb) + 64  # rough per-entry footprint
            if approx_bytes >= spill_limit:
                _spill_buffers(buffers, spill_files, spill_dir, task_id, spill_seq,
                               combiner is not None)
                spill_seq += 1
                approx_bytes = 0
        records += 1
    if spill_seq:
        # once spilling started, flush the tail so the task output is
        # uniformly on disk for those partitions
        _spill_buffers(buffers, spill_files, spill_dir, task_id, spill_seq,
                       combiner is not None)
    return _MapOutput(records, pairs, buffers, spill_files)


def _run_reduce_task(args) -> dict:
    (partition, mem_buffers, spill_paths, reducer, combined) = args
    grouped: dict[bytes, list] = {}
    for buf in mem_buffers:
        for kb, stored in buf.items():
            if combined:
                grouped.setdefault(kb, []).append(stored)
            else:
                grouped.setdefault(kb, []).extend(stored)
    for path in spill_paths:
        for kb, value in _read_spill(path):
            grouped.setdefault(kb, []).append(value)
    output: dict = {}
    for kb, values in grouped.items():
        key = decode_key(kb)
        try:
            output[key] = reducer(key, values)
        except Exception as exc:
            raise ReducerFailure(repr(key), repr(exc)) from exc
    return output


def run_job(spec: JobSpec) -> JobResult:
    """Run a job to completion; returns the reduced key -> value mapping."""
    partitions = spec.effective_partitions
    spill_dir = tempfile.mkdtemp(prefix="gfmr-")
    per_task_limit = max(1, spec.spill_threshold_bytes // max(1, spec.workers))
    try:
        map_args = [
            (i, split, spec.read_split, spec.mapper, spec.combiner,
             partitions, spill_dir, per_task_limit)
            for i, split in enumerate(spec.splits)
        ]
        if spec.workers == 1 or len(map_args) <= 1:
            map_outs = [_run_map_task(a) for a in map_args]
        else:
            with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                map_outs = list(pool.map(_run_map_task, map_args))

        reduce_args = []
        for p in range(partitions):
            mem = [o.buffers[p] for o in map_outs if o.buffers[p]]
            spills = [f for o in map_outs for f in o.spill_files[p]]
            if mem or spills:
                reduce_args.append((p, mem, spills, spec.reducer, spec.combiner is not None))
        if spec.workers == 1 or len(reduce_args) <= 1:
            reduce_outs = [_run_reduce_task(a) for a in reduce_args]
        else:
            with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                reduce_outs = list(pool.map(_run_reduce_task, reduce_args))

        output: dict = {}
        for part in reduce_outs:
            output.update(part)
        counters = JobCounters(
            records_mapped=sum(o.records for o in map_outs),
            pairs_emitted=sum(o.pairs for o in map_outs),
            keys_reduced=len(output),
        )
        logger.info(
            "job done: %d splits, %d workers, %d partitions, "
            "records_mapped=%d pairs_emitted=%d keys_reduced=%d",
            len(spec.splits), spec.workers, partitions,
            counters.records_mapped, counters.pairs_emitted, counters.keys_reduced,
        )
        return JobResult(output=output, counters=counters)
    finally:
        shutil.rmtree(spill_dir, ignore_errors=True)
