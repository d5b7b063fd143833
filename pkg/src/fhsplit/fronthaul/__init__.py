"""Framed fronthaul transport between emulated DU and RU endpoints."""

from .emulator import (
    BandwidthReport,
    SessionConfig,
    SplitMode,
    TransportKind,
    reference_demand,
    run_downlink,
    run_uplink,
    sweep_load,
)
from .frames import FrameMeta, FronthaulFrame, PayloadKind, frame_decode, frame_encode

__all__ = [
    "BandwidthReport",
    "FrameMeta",
    "FronthaulFrame",
    "PayloadKind",
    "SessionConfig",
    "SplitMode",
    "TransportKind",
    "frame_decode",
    "frame_encode",
    "reference_demand",
    "run_downlink",
    "run_uplink",
    "sweep_load",
]
