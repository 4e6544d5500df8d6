"""Two-pose remount calibration: reference capture, offset check, adjustment hints.

The reference stores per-channel distances for the two calibration poses
(little-proximal and little-distal, the reaches farthest from the thumb).
A remount passes when the average of all 18 absolute offsets is at most
0.7 mm (inclusive).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .features import N_CHANNELS, SensorFrame
from .poses import CALIBRATION_POSES

OFFSET_THRESHOLD_MM = 0.7
MIN_CAPTURE_FRAMES = 10


@dataclass(frozen=True)
class CalibrationReference:
    """Median 9-channel distances per calibration pose at the original mount."""

    distances: dict[str, tuple[float, ...]]

    def __post_init__(self):
        if set(self.distances) != set(CALIBRATION_POSES):
            raise InputError(f"reference must cover exactly {CALIBRATION_POSES}")
        for pose, vals in self.distances.items():
            if len(vals) != N_CHANNELS:
                raise InputError(f"reference for {pose} must have {N_CHANNELS} channels")

    def to_dict(self) -> dict:
        return {pose: list(vals) for pose, vals in self.distances.items()}

    @staticmethod
    def from_dict(doc: dict) -> "CalibrationReference":
        return CalibrationReference({pose: tuple(float(v) for v in vals) for pose, vals in doc.items()})


@dataclass(frozen=True)
class CalibrationReport:
    offsets: dict[str, tuple[float, ...]]  # per pose, 9 absolute offsets (mm)
    average_offset_mm: float
    passed: bool
    worst_pose: str
    worst_sensor: int  # 1-based channel number
    worst_signed_mm: float  # current minus reference at the worst cell

    def to_dict(self) -> dict:
        return {
            "offsets": {pose: list(vals) for pose, vals in self.offsets.items()},
            "average_offset_mm": self.average_offset_mm,
            "pass": self.passed,
            "worst_pose": self.worst_pose,
            "worst_sensor": self.worst_sensor,
            "worst_signed_mm": self.worst_signed_mm,
        }


def _median_profile(frames: list[SensorFrame], pose: str) -> np.ndarray:
    if len(frames) < MIN_CAPTURE_FRAMES:
        raise InputError(
            f"need at least {MIN_CAPTURE_FRAMES} frames for {pose}, got {len(frames)}"
        )
    readings = np.asarray([f.readings for f in frames], dtype=float)
    return np.median(readings, axis=0)


def capture_reference(frames_by_pose: dict[str, list[SensorFrame]]) -> CalibrationReference:
    """Build the reference from >= 10 frames per calibration pose (median per channel)."""
    distances = {}
    for pose in CALIBRATION_POSES:
        frames = frames_by_pose.get(pose, [])
        distances[pose] = tuple(float(v) for v in _median_profile(frames, pose))
    return CalibrationReference(distances)


def check(reference: CalibrationReference, current_by_pose: dict[str, list[SensorFrame]]) -> CalibrationReport:
    """Compare the current mount's medians against the reference."""
    offsets: dict[str, tuple[float, ...]] = {}
    worst = (-1.0, "", 0, 0.0)
    total = 0.0
    for pose in CALIBRATION_POSES:
        ref = np.asarray(reference.distances[pose])
        cur = _median_profile(current_by_pose.get(pose, []), pose)
        signed = cur - ref
        off = np.abs(signed)
        offsets[pose] = tuple(float(v) for v in off)
        total += float(off.sum())
        k = int(np.argmax(off))
        if off[k] > worst[0]:
            worst = (float(off[k]), pose, k + 1, float(signed[k]))
    average = total / (len(CALIBRATION_POSES) * N_CHANNELS)
    return CalibrationReport(
        offsets=offsets,
        average_offset_mm=average,
        # Inclusive at the threshold; the epsilon keeps float round-off in the
        # offset sums from flipping an exact-boundary average.
        passed=average <= OFFSET_THRESHOLD_MM + 1e-9,
        worst_pose=worst[1],
        worst_sensor=worst[2],
        worst_signed_mm=worst[3],
    )


def guidance(report: CalibrationReport) -> str:
    """Human hint naming the worst sensor and the direction of its deviation.

    "too far" means the sensor currently reads a larger distance than the
    reference; nudge the ring so that channel comes back closer.
    """
    if report.passed:
        return "no adjustment needed"
    direction = "too far" if report.worst_signed_mm > 0 else "too near"
    return (
        f"S{report.worst_sensor} reads {direction} on {report.worst_pose} "
        f"({report.worst_signed_mm:+.2f} mm); adjust the ring and re-capture"
    )


# Candidate (rotation deg, axial mm) corrections swept during a remount loop.
# The offset surface is a staircase (each channel flipping in/out of range
# adds ~6-7 mm to the average), so gradient nudging stalls on plateaus;
# instead the loop tries a fixed lattice of corrections sized so that, for
# any remount displacement within the "medium" bounds (|rot| <= 5 deg,
# |axial| <= 3 mm), at least one candidate lands inside the passing basin
# measured on the reference geometry. Ordered smallest correction first.
REMOUNT_SWEEP_OFFSETS: tuple[tuple[float, float], ...] = (
    (-0.15, -0.4),
    (-0.15, 1.7),
    (2.55, -0.4),
    (-3.8, -0.4),
    (-0.15, -2.55),
    (2.55, 1.7),
    (-3.8, 1.7),
    (2.55, -2.55),
    (-3.8, -2.55),
)


def run_remount_loop(
    capture_fn,
    reference: CalibrationReference,
    mount,
    max_rounds: int = 10,
):
    """Iterative remount calibration within a fixed capture budget.

    `capture_fn(mount) -> dict[pose, list[SensorFrame]]` performs one capture
    round at a candidate mount; every capture produces a CalibrationReport and
    counts against `max_rounds`. Round 1 checks the mount as worn and stops
    if it already passes; otherwise the whole `REMOUNT_SWEEP_OFFSETS` lattice
    is swept and the ring settles on the lowest average offset seen. Sweeping
    past the first passing candidate costs nothing (the budget allows the
    full lattice) and often lands visibly closer to the original mount than
    a barely-passing cell would.

    Returns (final mount, reports); the final mount is the best seen.
    """
    from dataclasses import replace as _replace
    from .errors import RingposeError

    reports: list[CalibrationReport] = []
    tried: list[tuple] = []  # (avg, mount, report)

    def probe(m) -> CalibrationReport | None:
        if len(reports) >= max_rounds:
            return None
        report = check(reference, capture_fn(m))
        reports.append(report)
        tried.append((report.average_offset_mm, m, report))
        return report

    report = probe(mount)
    # Even a passing first check can hide a displacement the two calibration
    # poses barely see, so always sweep and keep the lowest offset found.
    if report is not None:
        for d_rot, d_ax in REMOUNT_SWEEP_OFFSETS:
            if len(reports) >= max_rounds:
                break
            try:
                candidate = _replace(
                    mount,
                    rotation_deg=mount.rotation_deg + d_rot,
                    axial_offset_mm=mount.axial_offset_mm + d_ax,
                )
                probe(candidate)
            except RingposeError:
                continue

    tried.sort(key=lambda t: t[0])
    best_avg, best_mount, best_report = tried[0]
    return best_mount, reports
