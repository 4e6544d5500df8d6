"""Sensor-ring simulator: ray-cast proximity frames for scripted pose sequences.

Everything here is a pure function of its inputs; random state always comes
from an explicit seed, so identical calls give bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import geometry
from .errors import ConfigurationError, InputError
from .features import MAX_RANGE_MM, SensorFrame, clamp_raw
from .hand import HandConfig, HandFrames, N_JOINTS, check_bounds, forward_kinematics

N_SENSORS = 9

# Raw-value sentinel written to datasets when a ray hits nothing in range
# (or the reading dropped out). Anything >= 150 clamps to a flagged 150.
NO_HIT_SENTINEL = 999.0


@dataclass(frozen=True)
class RingMount:
    """Where the ring sits on the thumb proximal phalanx.

    The default rotation turns the sensor arc to face the palm and finger
    mass when the thumb opposes; 0 would aim it off the back of the thumb.
    """

    axial_offset_mm: float = 17.0
    rotation_deg: float = 110.0
    tilt_deg: float = 0.0

    def __post_init__(self):
        if not -180.0 <= self.rotation_deg < 180.0:
            raise ConfigurationError(f"mount rotation {self.rotation_deg} outside [-180, 180)")


@dataclass(frozen=True)
class SensorRig:
    """Nine sensors on a half-ring arc, rays pointing radially outward.

    Sensor angles are degrees around the ring axis measured from the
    palm-facing direction; S5 sits at 0 in the middle of the arc, S1 and S9
    at the ends. Local frame: z along the thumb axis, x palm-facing.
    """

    angles_deg: tuple[float, ...] = tuple(-90.0 + 22.5 * i for i in range(9))
    ring_radius_mm: float = 11.5
    pitch_deg: float = -10.0
    max_range_mm: float = MAX_RANGE_MM

    def __post_init__(self):
        if len(self.angles_deg) != N_SENSORS:
            raise ConfigurationError(f"rig must have exactly {N_SENSORS} sensors")
        if self.ring_radius_mm <= 0:
            raise ConfigurationError("ring radius must be positive")

    def local_origins(self) -> np.ndarray:
        th = np.deg2rad(np.asarray(self.angles_deg))
        return self.ring_radius_mm * np.stack([np.cos(th), np.sin(th), np.zeros(N_SENSORS)], axis=-1)

    def local_directions(self) -> np.ndarray:
        th = np.deg2rad(np.asarray(self.angles_deg))
        ph = np.deg2rad(self.pitch_deg)
        d = np.stack(
            [np.cos(th) * np.cos(ph), np.sin(th) * np.cos(ph), np.full(N_SENSORS, np.sin(ph))],
            axis=-1,
        )
        return geometry.unit(d)


@dataclass(frozen=True)
class NoiseModel:
    """Additive Gaussian noise plus per-channel dropout to out-of-range."""

    sigma_mm: float = 1.5
    dropout: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.sigma_mm < 0:
            raise ConfigurationError("noise sigma must be >= 0")
        if not 0.0 <= self.dropout <= 1.0:
            raise ConfigurationError("dropout must be a probability")


CLEAN_NOISE = NoiseModel(sigma_mm=0.0, dropout=0.0, seed=0)


@dataclass(frozen=True)
class ScriptEntry:
    label: str
    hold_ms: int


@dataclass(frozen=True)
class SimFrame:
    """One simulated frame with its pre-clamp raw values and ground truth."""

    t_ms: int
    raw: tuple[float, ...]
    frame: SensorFrame
    label: str
    entry_index: int


def _validate_mount(hand: HandConfig, mount: RingMount) -> None:
    prox_len = hand.thumb_lengths[1] * hand.scale
    if not 0.0 <= mount.axial_offset_mm <= prox_len:
        raise ConfigurationError(
            f"axial offset {mount.axial_offset_mm} outside thumb proximal segment [0, {prox_len:.1f}]"
        )


def sensor_rays(frames: HandFrames, mount: RingMount, rig: SensorRig) -> tuple[np.ndarray, np.ndarray]:
    """World-space sensor origins and unit ray directions, (T, 9, 3) each."""
    rot = np.deg2rad(mount.rotation_deg)
    tilt = np.deg2rad(mount.tilt_deg)
    c, s = np.cos(rot), np.sin(rot)
    rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    ct, st = np.cos(tilt), np.sin(tilt)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, ct, -st], [0.0, st, ct]])
    ring_rot = frames.thumb_prox_frame @ (rz @ rx)  # (T, 3, 3)

    center = frames.thumb_mcp + mount.axial_offset_mm * frames.thumb_prox_frame[..., 2]
    origins = center[:, None, :] + np.einsum("tij,sj->tsi", ring_rot, rig.local_origins())
    dirs = np.einsum("tij,sj->tsi", ring_rot, rig.local_directions())
    return origins, dirs


def raycast_distances(
    hand: HandConfig, angles: np.ndarray, mount: RingMount, rig: SensorRig
) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free nearest-hit distances (T, 9) and capsule hit indices (T, 9)."""
    _validate_mount(hand, mount)
    frames = forward_kinematics(hand, angles)
    origins, dirs = sensor_rays(frames, mount, rig)
    dist, hit = geometry.raycast_capsules(
        origins, dirs, frames.caps_a[:, None], frames.caps_b[:, None], frames.radii
    )
    return dist, hit


def _apply_noise(dist: np.ndarray, noise: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Turn ideal distances into raw sensor values (sentinel where out of range)."""
    raw = np.where(np.isinf(dist), NO_HIT_SENTINEL, dist)
    if noise.sigma_mm > 0:
        jitter = rng.normal(0.0, noise.sigma_mm, size=raw.shape)
        raw = np.where(raw < NO_HIT_SENTINEL, np.maximum(raw + jitter, 0.0), raw)
    if noise.dropout > 0:
        drop = rng.random(raw.shape) < noise.dropout
        raw = np.where(drop, NO_HIT_SENTINEL, raw)
    return np.round(raw, 3)


def raycast_frame(
    hand: HandConfig,
    angles,
    mount: RingMount,
    rig: SensorRig,
    noise: NoiseModel = CLEAN_NOISE,
    t_ms: int = 0,
) -> SensorFrame:
    """Simulate a single frame. Noise is seeded by (noise.seed, t_ms)."""
    vec = np.asarray(angles, dtype=float)
    if vec.shape != (N_JOINTS,):
        raise InputError(f"expected a {N_JOINTS}-joint angle vector")
    check_bounds(hand, vec)
    dist, _ = raycast_distances(hand, vec[None, :], mount, rig)
    rng = np.random.default_rng([noise.seed, int(t_ms)])
    raw = _apply_noise(dist[0], noise, rng)
    return clamp_raw(raw, timestamp_ms=t_ms)


def _normalize_script(script) -> list[ScriptEntry]:
    out = []
    for entry in script:
        if isinstance(entry, ScriptEntry):
            out.append(entry)
        else:
            label, hold_ms = entry
            out.append(ScriptEntry(label=label, hold_ms=int(hold_ms)))
    return out


def script_angle_track(
    script: list[ScriptEntry],
    pose_table: dict[str, np.ndarray],
    rest_label: str,
    rate_hz: float,
    transition_ms: int,
    jitter_deg: float = 0.0,
    rng: np.random.Generator | None = None,
    bounds: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[np.ndarray, list[str], list[int], np.ndarray]:
    """Expand a script into per-frame joint angles, labels and entry indices.

    Transitions interpolate linearly from the previous target to the next and
    are labelled as the rest (no-pose) state; holds carry the entry's label.
    Per-entry jitter models execution variability: a performer settles into a
    slightly different realization of the pose each time.
    """
    frame_ms = 1000.0 / rate_hz
    n_trans = int(round(transition_ms / frame_ms))

    angles_rows: list[np.ndarray] = []
    labels: list[str] = []
    entries: list[int] = []
    t_list: list[int] = []

    prev = pose_table[rest_label].copy()
    t = 0.0
    for e_idx, entry in enumerate(script):
        target = pose_table[entry.label].copy()
        if jitter_deg > 0 and rng is not None:
            target = target + rng.normal(0.0, jitter_deg, size=target.shape)
            if bounds is not None:
                target = np.clip(target, bounds[0], bounds[1])
        n_hold = int(round(entry.hold_ms / frame_ms))
        for j in range(n_trans):
            f = (j + 1) / (n_trans + 1)
            angles_rows.append(prev + f * (target - prev))
            labels.append(rest_label)
            entries.append(e_idx)
            t_list.append(int(round(t)))
            t += frame_ms
        for _ in range(n_hold):
            angles_rows.append(target)
            labels.append(entry.label)
            entries.append(e_idx)
            t_list.append(int(round(t)))
            t += frame_ms
        prev = target

    if not angles_rows:
        return np.zeros((0, N_JOINTS)), [], [], np.zeros(0, dtype=int)
    return np.asarray(angles_rows), labels, entries, np.asarray(t_list, dtype=int)


def simulate_session(
    script,
    hand: HandConfig,
    pose_table: dict[str, np.ndarray],
    mount: RingMount,
    rig: SensorRig,
    noise: NoiseModel,
    rate_hz: float = 10.0,
    transition_ms: int = 800,
    jitter_deg: float = 0.0,
    rest_label: str = "no-pose",
) -> list[SimFrame]:
    """Simulate a whole scripted session; deterministic in noise.seed."""
    entries = _normalize_script(script)
    if not entries:
        return []
    rng = np.random.default_rng([int(noise.seed)])
    lo, hi = hand.bounds_lo_hi()
    angles, labels, entry_idx, t_ms = script_angle_track(
        entries, pose_table, rest_label, rate_hz, transition_ms, jitter_deg, rng, (lo, hi)
    )
    check_bounds(hand, angles)
    dist, _ = raycast_distances(hand, angles, mount, rig)
    raw = _apply_noise(dist, noise, rng)

    frames: list[SimFrame] = []
    for i in range(raw.shape[0]):
        sf = clamp_raw(raw[i], timestamp_ms=int(t_ms[i]))
        frames.append(
            SimFrame(
                t_ms=int(t_ms[i]),
                raw=tuple(float(v) for v in raw[i]),
                frame=sf,
                label=labels[i],
                entry_index=int(entry_idx[i]),
            )
        )
    return frames


PERTURB_BOUNDS = {"small": (1.0, 0.5), "medium": (3.0, 5.0), "large": (6.0, 12.0)}


def perturb_mount(mount: RingMount, magnitude, rng) -> RingMount:
    """Sample a remounted ring uniformly within the magnitude's displacement bounds.

    `magnitude` is one of "small" / "medium" / "large" or an explicit
    (axial_mm, rotation_deg) bound pair. The original mount is unchanged.
    """
    if isinstance(magnitude, str):
        try:
            axial_b, rot_b = PERTURB_BOUNDS[magnitude]
        except KeyError:
            raise InputError(f"unknown remount magnitude {magnitude!r}") from None
    else:
        axial_b, rot_b = magnitude
    gen = np.random.default_rng(rng) if isinstance(rng, int) else rng
    d_axial = gen.uniform(-axial_b, axial_b) if axial_b > 0 else 0.0
    d_rot = gen.uniform(-rot_b, rot_b) if rot_b > 0 else 0.0
    rot = (mount.rotation_deg + d_rot + 180.0) % 360.0 - 180.0
    return replace(mount, axial_offset_mm=mount.axial_offset_mm + d_axial, rotation_deg=rot)


def capture_frames(
    hand: HandConfig,
    pose_table: dict[str, np.ndarray],
    label: str,
    mount: RingMount,
    rig: SensorRig,
    noise: NoiseModel,
    n_frames: int = 12,
    rate_hz: float = 10.0,
) -> list[SensorFrame]:
    """Hold one pose and record n frames (used by the calibration flow)."""
    sims = simulate_session(
        [(label, int(n_frames * 1000.0 / rate_hz))],
        hand,
        pose_table,
        mount,
        rig,
        noise,
        rate_hz=rate_hz,
        transition_ms=0,
    )
    return [s.frame for s in sims]
