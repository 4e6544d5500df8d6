"""Capsule hand model and batched forward kinematics.

The scene a sensor ray can hit is 13 capsules: three phalanges for each of
the four non-thumb fingers plus one wide capsule standing in for the palm.
The thumb itself is never an obstacle; it carries the sensor ring, so the
kinematic chain also produces the thumb proximal-phalanx frame the ring is
mounted on.

Frame convention: palm faces +Z, fingers extend roughly +X, the thumb side
of the hand is +Y. Positive flexion curls toward the palmar (+Z) side.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .errors import ConfigurationError
from .poses import FINGERS

HAND_CONFIG_VERSION = 1

# Joint vector layout; every angle is degrees.
JOINT_NAMES: tuple[str, ...] = tuple(
    f"{f}.{j}" for f in FINGERS for j in ("mcp_abd", "mcp_flex", "pip_flex", "dip_flex")
) + ("thumb.cmc_abd", "thumb.cmc_flex", "thumb.mcp_flex", "thumb.ip_flex")
JOINT_INDEX = {name: i for i, name in enumerate(JOINT_NAMES)}
N_JOINTS = len(JOINT_NAMES)

_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class HandConfig:
    """Dimensions of the simulated hand, all millimetres (angles degrees)."""

    finger_lengths: dict[str, tuple[float, float, float]]
    finger_radii: dict[str, tuple[float, float, float]]
    finger_bases: dict[str, tuple[float, float, float]]
    finger_splay_deg: dict[str, float]
    thumb_lengths: tuple[float, float, float]  # metacarpal, proximal, distal
    thumb_radii: tuple[float, float, float]
    thumb_base: tuple[float, float, float]
    thumb_neutral_dir: tuple[float, float, float]
    thumb_palm_ref: tuple[float, float, float]  # reference for the palm-facing axis
    palm_center: tuple[float, float, float]
    palm_half_width: float
    palm_radius: float
    scale: float = 1.0
    joint_bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        for f in FINGERS:
            if f not in self.finger_lengths:
                raise ConfigurationError(f"missing finger {f!r} in hand config")
            for v in (*self.finger_lengths[f], *self.finger_radii[f]):
                if not v > 0:
                    raise ConfigurationError(f"non-positive segment dimension on {f}")
        for v in (*self.thumb_lengths, *self.thumb_radii, self.palm_half_width, self.palm_radius):
            if not v > 0:
                raise ConfigurationError("non-positive thumb/palm dimension")
        if not 0.7 <= self.scale <= 1.3:
            raise ConfigurationError(f"scale {self.scale} outside [0.7, 1.3]")

    def bounds_lo_hi(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.empty(N_JOINTS)
        hi = np.empty(N_JOINTS)
        for i, name in enumerate(JOINT_NAMES):
            prefix, key = name.split(".", 1)
            scope = ("thumb." if prefix == "thumb" else "finger.") + key
            lo[i], hi[i] = self.joint_bounds[scope]
        return lo, hi


DEFAULT_JOINT_BOUNDS: dict[str, tuple[float, float]] = {
    "finger.mcp_abd": (-15.0, 15.0),
    "finger.mcp_flex": (-10.0, 95.0),
    "finger.pip_flex": (0.0, 110.0),
    "finger.dip_flex": (0.0, 80.0),
    "thumb.cmc_abd": (-10.0, 110.0),
    "thumb.cmc_flex": (-60.0, 60.0),
    "thumb.mcp_flex": (-10.0, 80.0),
    "thumb.ip_flex": (-15.0, 95.0),
}


def build_default_hand() -> HandConfig:
    """The reference adult hand the shipped config files were derived from."""
    return HandConfig(
        finger_lengths={
            "index": (46.0, 26.0, 23.0),
            "middle": (50.0, 30.0, 25.0),
            "ring": (46.0, 28.0, 24.0),
            "little": (36.0, 21.0, 19.0),
        },
        finger_radii={
            "index": (8.2, 7.4, 6.8),
            "middle": (8.4, 7.6, 7.0),
            "ring": (7.8, 7.0, 6.5),
            "little": (7.0, 6.3, 5.8),
        },
        finger_bases={
            "index": (88.0, 26.0, 0.0),
            "middle": (90.0, 9.0, 0.0),
            "ring": (87.0, -8.0, 0.0),
            "little": (81.0, -25.0, 0.0),
        },
        finger_splay_deg={"index": 3.0, "middle": 0.0, "ring": -4.0, "little": -9.0},
        thumb_lengths=(44.0, 34.0, 28.0),
        thumb_radii=(10.0, 8.5, 7.5),
        thumb_base=(22.0, 34.0, 3.0),
        thumb_neutral_dir=(0.55, 0.80, 0.12),
        thumb_palm_ref=(0.10, -0.75, 0.65),
        palm_center=(46.0, 1.0, -1.0),
        palm_half_width=29.0,
        palm_radius=15.0,
        scale=1.0,
        joint_bounds=dict(DEFAULT_JOINT_BOUNDS),
    )


def angles_to_vector(angles: dict[str, float]) -> np.ndarray:
    vec = np.zeros(N_JOINTS)
    for name, value in angles.items():
        try:
            vec[JOINT_INDEX[name]] = value
        except KeyError:
            raise ConfigurationError(f"unknown joint {name!r}") from None
    return vec


def vector_to_angles(vec: np.ndarray) -> dict[str, float]:
    return {name: float(vec[i]) for i, name in enumerate(JOINT_NAMES)}


def check_bounds(hand: HandConfig, vec: np.ndarray) -> None:
    lo, hi = hand.bounds_lo_hi()
    v = np.atleast_2d(vec)
    # Allow a hair of slack so interpolated/jittered angles at the limit pass.
    if np.any(v < lo - 1e-6) or np.any(v > hi + 1e-6):
        bad = np.where((v < lo - 1e-6) | (v > hi + 1e-6))
        name = JOINT_NAMES[int(bad[1][0])]
        raise ConfigurationError(f"joint {name} out of anatomical bounds")


@dataclass
class HandFrames:
    """FK output for a batch of T joint-angle rows."""

    caps_a: np.ndarray  # (T, 13, 3) capsule segment starts
    caps_b: np.ndarray  # (T, 13, 3) capsule segment ends
    radii: np.ndarray  # (13,)
    thumb_mcp: np.ndarray  # (T, 3) ring-bearing segment start
    thumb_prox_frame: np.ndarray  # (T, 3, 3) columns x (palm-facing), y, z (axis)
    thumb_tip: np.ndarray  # (T, 3)
    capsule_names: tuple[str, ...]
    phalanx_centers: dict[str, np.ndarray]  # label -> (T, 3) capsule midpoints


def _ry(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    out = np.zeros(theta.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 2] = s
    out[..., 1, 1] = 1.0
    out[..., 2, 0] = -s
    out[..., 2, 2] = c
    return out


def forward_kinematics(hand: HandConfig, angles: np.ndarray) -> HandFrames:
    """Evaluate the capsule scene and thumb frames for (T, N_JOINTS) degrees."""
    ang = np.atleast_2d(np.asarray(angles, dtype=float))
    T = ang.shape[0]
    rad = np.deg2rad(ang)
    s = hand.scale

    caps_a = np.empty((T, 13, 3))
    caps_b = np.empty((T, 13, 3))
    radii = np.empty(13)
    names: list[str] = []
    centers: dict[str, np.ndarray] = {}

    k = 0
    for f in FINGERS:
        base = np.asarray(hand.finger_bases[f]) * s
        lengths = np.asarray(hand.finger_lengths[f]) * s
        splay = np.deg2rad(hand.finger_splay_deg[f])
        abd = rad[:, JOINT_INDEX[f + ".mcp_abd"]] + splay
        d_abd = np.stack([np.cos(abd), np.sin(abd), np.zeros(T)], axis=-1)
        flex = np.cumsum(
            rad[:, [JOINT_INDEX[f + ".mcp_flex"], JOINT_INDEX[f + ".pip_flex"], JOINT_INDEX[f + ".dip_flex"]]],
            axis=1,
        )
        p = np.broadcast_to(base, (T, 3)).copy()
        for seg, phalanx in enumerate(("proximal", "middle", "distal")):
            d = np.cos(flex[:, seg])[:, None] * d_abd + np.sin(flex[:, seg])[:, None] * _Z
            q = p + lengths[seg] * d
            caps_a[:, k] = p
            caps_b[:, k] = q
            radii[k] = hand.finger_radii[f][seg] * s
            names.append(f"{f}-{phalanx}")
            centers[f"{f}-{phalanx}"] = 0.5 * (p + q)
            p = q
            k += 1

    palm_c = np.asarray(hand.palm_center) * s
    half = np.array([0.0, hand.palm_half_width * s, 0.0])
    caps_a[:, k] = palm_c - half
    caps_b[:, k] = palm_c + half
    radii[k] = hand.palm_radius * s
    names.append("palm")

    # Thumb chain: base frame, then y-axis flexions (abduction sweeps toward
    # the palm-facing x axis) with cmc_flex tilting the curl plane.
    z0 = np.asarray(hand.thumb_neutral_dir, dtype=float)
    z0 = z0 / np.linalg.norm(z0)
    ref = np.asarray(hand.thumb_palm_ref, dtype=float)
    x0 = ref - np.dot(ref, z0) * z0
    n = np.linalg.norm(x0)
    if n < 1e-9:
        raise ConfigurationError("thumb_palm_ref parallel to thumb_neutral_dir")
    x0 /= n
    y0 = np.cross(z0, x0)
    f0 = np.stack([x0, y0, z0], axis=-1)  # columns

    cmc_abd = rad[:, JOINT_INDEX["thumb.cmc_abd"]]
    cmc_flex = rad[:, JOINT_INDEX["thumb.cmc_flex"]]
    mcp_flex = rad[:, JOINT_INDEX["thumb.mcp_flex"]]
    ip_flex = rad[:, JOINT_INDEX["thumb.ip_flex"]]

    c, sn = np.cos(cmc_flex), np.sin(cmc_flex)
    rx = np.zeros((T, 3, 3))
    rx[:, 0, 0] = 1.0
    rx[:, 1, 1] = c
    rx[:, 1, 2] = -sn
    rx[:, 2, 1] = sn
    rx[:, 2, 2] = c

    m_frame = np.einsum("ij,tjk,tkl->til", f0, _ry(cmc_abd), rx)
    p_frame = np.einsum("tij,tjk->tik", m_frame, _ry(mcp_flex))
    d_frame = np.einsum("tij,tjk->tik", p_frame, _ry(ip_flex))

    lmc, lprox, ldist = (v * s for v in hand.thumb_lengths)
    cmc = np.broadcast_to(np.asarray(hand.thumb_base) * s, (T, 3))
    mcp = cmc + lmc * m_frame[..., 2]
    ip = mcp + lprox * p_frame[..., 2]
    tip = ip + ldist * d_frame[..., 2]

    return HandFrames(
        caps_a=caps_a,
        caps_b=caps_b,
        radii=radii,
        thumb_mcp=mcp,
        thumb_prox_frame=p_frame,
        thumb_tip=tip,
        capsule_names=tuple(names),
        phalanx_centers=centers,
    )


def hand_to_dict(hand: HandConfig) -> dict:
    return {
        "version": HAND_CONFIG_VERSION,
        "finger_lengths": {f: list(v) for f, v in hand.finger_lengths.items()},
        "finger_radii": {f: list(v) for f, v in hand.finger_radii.items()},
        "finger_bases": {f: list(v) for f, v in hand.finger_bases.items()},
        "finger_splay_deg": dict(hand.finger_splay_deg),
        "thumb_lengths": list(hand.thumb_lengths),
        "thumb_radii": list(hand.thumb_radii),
        "thumb_base": list(hand.thumb_base),
        "thumb_neutral_dir": list(hand.thumb_neutral_dir),
        "thumb_palm_ref": list(hand.thumb_palm_ref),
        "palm_center": list(hand.palm_center),
        "palm_half_width": hand.palm_half_width,
        "palm_radius": hand.palm_radius,
        "scale": hand.scale,
        "joint_bounds": {k: list(v) for k, v in hand.joint_bounds.items()},
    }


def hand_from_dict(doc: dict) -> HandConfig:
    if doc.get("version") != HAND_CONFIG_VERSION:
        raise ConfigurationError(f"unsupported hand config version: {doc.get('version')!r}")
    return HandConfig(
        finger_lengths={f: tuple(v) for f, v in doc["finger_lengths"].items()},
        finger_radii={f: tuple(v) for f, v in doc["finger_radii"].items()},
        finger_bases={f: tuple(v) for f, v in doc["finger_bases"].items()},
        finger_splay_deg=dict(doc["finger_splay_deg"]),
        thumb_lengths=tuple(doc["thumb_lengths"]),
        thumb_radii=tuple(doc["thumb_radii"]),
        thumb_base=tuple(doc["thumb_base"]),
        thumb_neutral_dir=tuple(doc["thumb_neutral_dir"]),
        thumb_palm_ref=tuple(doc["thumb_palm_ref"]),
        palm_center=tuple(doc["palm_center"]),
        palm_half_width=doc["palm_half_width"],
        palm_radius=doc["palm_radius"],
        scale=doc.get("scale", 1.0),
        joint_bounds={k: tuple(v) for k, v in doc["joint_bounds"].items()},
    )


def load_hand(path) -> HandConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return hand_from_dict(json.load(fh))


def default_hand() -> HandConfig:
    text = resources.files("ringpose.data").joinpath("default_hand.json").read_text()
    return hand_from_dict(json.loads(text))


def scaled_hand(hand: HandConfig, scale: float) -> HandConfig:
    return replace(hand, scale=scale)
