"""Signal-passing tile assembly with rotations: executable semantics, shape codec, gadgets and analysis."""
from .model import STAM, STAM_R, Glue, GlueSpec, GlueState, Signal, Supertile, Tile, TileType
from .engine import RunConfig, SystemState, enumerate_producibles, run_random

__version__ = "0.1.0"

__all__ = [
    "STAM",
    "STAM_R",
    "Glue",
    "GlueSpec",
    "GlueState",
    "RunConfig",
    "Signal",
    "Supertile",
    "SystemState",
    "Tile",
    "TileType",
    "enumerate_producibles",
    "run_random",
]
