"""Pose label vocabulary: 12 thumb-to-phalanx poses plus the no-pose rest state."""

from __future__ import annotations

FINGERS = ("index", "middle", "ring", "little")
PHALANGES = ("proximal", "middle", "distal")

# Canonical ordering used everywhere a class list is needed (model files,
# confusion matrices, argmax tie-breaks).
POSES: tuple[str, ...] = tuple(f"{f}-{p}" for f in FINGERS for p in PHALANGES)
NO_POSE = "no-pose"
ALL_LABELS: tuple[str, ...] = POSES + (NO_POSE,)

# Predefined application subsets.
DPAD_SUBSET = ("index-middle", "middle-distal", "middle-proximal", "ring-middle")
CORNERS_SUBSET = ("index-distal", "index-proximal", "little-distal", "little-proximal")
SUBSETS = {"dpad": DPAD_SUBSET, "corners": CORNERS_SUBSET}

# The two poses used by the remount calibration routine.
CALIBRATION_POSES = ("little-proximal", "little-distal")


def is_pose(label: str) -> bool:
    return label != NO_POSE


def validate_label(label: str) -> str:
    if label not in ALL_LABELS:
        raise ValueError(f"unknown pose label: {label!r}")
    return label


def split_label(label: str) -> tuple[str, str]:
    """Return (finger, phalanx) for one of the 12 pose labels."""
    finger, _, phalanx = label.partition("-")
    if finger not in FINGERS or phalanx not in PHALANGES:
        raise ValueError(f"not a thumb-touch pose label: {label!r}")
    return finger, phalanx
