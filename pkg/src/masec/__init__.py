"""Secrecy-rate maximization for movable-antenna MIMO wiretap links."""

from .channel import LinkGeometry, TransmitRegion, assemble_channel, sample_geometry
from .config import SystemConfig
from .driver import SolverOptions, run_bcd
from .secrecy import PrecoderPair, secrecy_rate

__version__ = "0.1.0"

__all__ = [
    "LinkGeometry",
    "TransmitRegion",
    "assemble_channel",
    "sample_geometry",
    "SystemConfig",
    "SolverOptions",
    "run_bcd",
    "PrecoderPair",
    "secrecy_rate",
]
