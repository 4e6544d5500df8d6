"""Per-frame feature extraction: 9 clamped distances + out-of-range count + in-range mean.

A reading of exactly 150 mm is by convention out of range: the clamp threshold
sits above every distance a real pose can produce, so a genuine in-pose reading
never lands on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

MAX_RANGE_MM = 150.0
N_CHANNELS = 9
N_FEATURES = 11


@dataclass(frozen=True)
class SensorFrame:
    """One timestamped 9-channel sample, already clamped to [0, 150] mm."""

    timestamp_ms: int
    readings: tuple[float, ...]
    oor_flags: tuple[bool, ...]

    def __post_init__(self):
        if len(self.readings) != N_CHANNELS or len(self.oor_flags) != N_CHANNELS:
            raise InputError(f"frame must carry exactly {N_CHANNELS} channels")
        for r, flag in zip(self.readings, self.oor_flags):
            if not 0.0 <= r <= MAX_RANGE_MM:
                raise InputError(f"reading {r} outside [0, {MAX_RANGE_MM}]")
            if flag != (r == MAX_RANGE_MM):
                raise InputError("oor flag must hold exactly when reading == 150")


def clamp_raw(raw, timestamp_ms: int = 0) -> SensorFrame:
    """Clamp raw distances to the sensor range and flag out-of-range channels.

    Values above 150 mm, exactly 150 mm, or non-finite (the no-target sentinel)
    all become a flagged 150. Negative or NaN input is rejected.
    """
    vals = list(raw)
    if len(vals) != N_CHANNELS:
        raise InputError(f"expected {N_CHANNELS} raw values, got {len(vals)}")
    readings = []
    flags = []
    for v in vals:
        v = float(v)
        if math.isnan(v) or v < 0.0:
            raise InputError(f"invalid raw distance: {v}")
        oor = v >= MAX_RANGE_MM
        readings.append(MAX_RANGE_MM if oor else v)
        flags.append(oor)
    return SensorFrame(timestamp_ms=int(timestamp_ms), readings=tuple(readings), oor_flags=tuple(flags))


def _in_range_mean(readings: np.ndarray, flags: np.ndarray) -> float:
    in_range = readings[~flags]
    if in_range.size == 0:
        return MAX_RANGE_MM
    # fsum is correctly rounded, so the mean is identical under any channel
    # permutation (the permutation invariant holds exactly, not just to eps).
    return math.fsum(in_range) / in_range.size


def extract(frame: SensorFrame) -> np.ndarray:
    """11-feature vector: the 9 readings, the out-of-range count, the in-range mean."""
    readings = np.asarray(frame.readings, dtype=float)
    flags = np.asarray(frame.oor_flags, dtype=bool)
    return np.concatenate([readings, [float(flags.sum()), _in_range_mean(readings, flags)]])


def extract_channels(frame: SensorFrame, channels: tuple[int, ...]) -> np.ndarray:
    """Feature vector restricted to a sensor subset (1-based channel numbers).

    Used by the ablation studies: k distances + out-of-range count + in-range
    mean computed over the retained channels only. With all nine channels this
    is exactly `extract`.
    """
    idx = [c - 1 for c in channels]
    readings = np.asarray(frame.readings, dtype=float)[idx]
    flags = np.asarray(frame.oor_flags, dtype=bool)[idx]
    return np.concatenate([readings, [float(flags.sum()), _in_range_mean(readings, flags)]])
