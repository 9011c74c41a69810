"""Travel-time extraction and traffic statistics for freeway gantry trip logs."""

from gantryflow.model import (
    Bearing,
    Corridor,
    CountSum,
    GantryId,
    GantryPassage,
    GantryflowError,
    Segment,
    StatKey,
    StatsCube,
    TransitObservation,
    VehicleType,
    Weekday,
    builtin_corridors,
    corridor_totals,
    load_corridors,
    parse_gantry_id,
)

__version__ = "0.1.0"

__all__ = [
    "Bearing",
    "Corridor",
    "CountSum",
    "GantryId",
    "GantryPassage",
    "GantryflowError",
    "Segment",
    "StatKey",
    "StatsCube",
    "TransitObservation",
    "VehicleType",
    "Weekday",
    "builtin_corridors",
    "corridor_totals",
    "load_corridors",
    "parse_gantry_id",
    "__version__",
]
