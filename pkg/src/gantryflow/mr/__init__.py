"""Generic deterministic single-node MapReduce runtime."""

from gantryflow.mr.engine import (
    EngineError,
    JobCounters,
    JobResult,
    JobSpec,
    KeyValue,
    MapperFailure,
    ReducerFailure,
    partition_of,
    run_job,
)
from gantryflow.mr.keycodec import decode_key, encode_key, register_key_type

__all__ = [
    "EngineError",
    "JobCounters",
    "JobResult",
    "JobSpec",
    "KeyValue",
    "MapperFailure",
    "ReducerFailure",
    "decode_key",
    "encode_key",
    "partition_of",
    "register_key_type",
    "run_job",
]
