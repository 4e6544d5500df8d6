"""Derive joint-angle presets for the 12 thumb-touch poses by grid search.

The thumb has four degrees of freedom here; for each pose we pick a natural
curl for the target finger, then search thumb angles that bring the thumb tip
onto the target phalanx center (accepted within 5 mm). The search is a coarse
grid plus two local refinement passes, fully deterministic.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .errors import ConfigurationError
from .hand import (
    HandConfig,
    JOINT_INDEX,
    JOINT_NAMES,
    N_JOINTS,
    forward_kinematics,
)
from .poses import NO_POSE, POSES, split_label

POSE_TABLE_VERSION = 1

TIP_TOLERANCE_MM = 5.0

# (mcp, pip, dip) flexion reached at curl = 1.
_CURL_FULL = np.array([65.0, 95.0, 60.0])
_NO_POSE_THUMB = {"thumb.cmc_abd": 6.0, "thumb.cmc_flex": -6.0, "thumb.mcp_flex": 4.0, "thumb.ip_flex": 4.0}

_CURL_CANDIDATES = {
    "distal": (0.35, 0.5, 0.65, 0.8),
    "middle": (0.3, 0.45, 0.6, 0.75),
    "proximal": (0.15, 0.3, 0.5, 0.7, 0.85),
}
# Baseline curl options for the non-target fingers; different baselines give
# genuinely different sensor scenes, which the table selection exploits.
_RELAXED_OPTIONS = (0.18, 0.38)

# Candidate scoring for the separation-aware table (see solve_pose_table).
# Clouds sample execution jitter plus small ring drift so the chosen
# realizations stay apart under both nuisances.
_PROFILE_JITTER_DEG = 1.5
_PROFILE_MOUNT_ROT_DEG = 2.0
_PROFILE_MOUNT_AX_MM = 0.6
_PROFILE_DRAWS = 8
_SPREAD_WEIGHT = 1.5
_OWN_SPREAD_WEIGHT = 0.3
_TIP_ERR_WEIGHT = 0.05
_SELECTION_SWEEPS = 2


def _set_finger_curl(vec: np.ndarray, finger: str, curl: float) -> None:
    mcp, pip, dip = curl * _CURL_FULL
    vec[JOINT_INDEX[finger + ".mcp_flex"]] = mcp
    vec[JOINT_INDEX[finger + ".pip_flex"]] = pip
    vec[JOINT_INDEX[finger + ".dip_flex"]] = dip


def rest_angles(hand: HandConfig) -> np.ndarray:
    """Open relaxed hand used as the no-pose state."""
    vec = np.zeros(N_JOINTS)
    for f in ("index", "middle", "ring", "little"):
        _set_finger_curl(vec, f, 0.1)
    for joint, value in _NO_POSE_THUMB.items():
        vec[JOINT_INDEX[joint]] = value
    return vec


def _thumb_tips(hand: HandConfig, grid: np.ndarray) -> np.ndarray:
    """Thumb tip positions for (N, 4) thumb angle rows (degrees)."""
    s = hand.scale
    z0 = np.asarray(hand.thumb_neutral_dir, dtype=float)
    z0 = z0 / np.linalg.norm(z0)
    ref = np.asarray(hand.thumb_palm_ref, dtype=float)
    x0 = ref - np.dot(ref, z0) * z0
    x0 /= np.linalg.norm(x0)
    y0 = np.cross(z0, x0)

    abd = np.deg2rad(grid[:, 0])
    flex = np.deg2rad(grid[:, 1])
    mcp = np.deg2rad(grid[:, 2])
    ip = np.deg2rad(grid[:, 3])
    ca, sa = np.cos(abd), np.sin(abd)
    cf, sf = np.cos(flex), np.sin(flex)

    # z and x columns of R_y(abd) @ R_x(flex) in base-frame coordinates;
    # further flexions rotate about the frame's own y axis, so only these two
    # columns need tracking.
    zc = (sa * cf, -sf, ca * cf)
    xc = (ca, np.zeros_like(ca), -sa)

    def world(v):
        return v[0][:, None] * x0 + v[1][:, None] * y0 + v[2][:, None] * z0

    def rot_y(zc, xc, theta):
        c, s = np.cos(theta), np.sin(theta)
        znew = tuple(c * z + s * x for z, x in zip(zc, xc))
        xnew = tuple(c * x - s * z for z, x in zip(zc, xc))
        return znew, xnew

    d_mc = world(zc)
    zc, xc = rot_y(zc, xc, mcp)
    d_prox = world(zc)
    zc, xc = rot_y(zc, xc, ip)
    d_dist = world(zc)

    lmc, lprox, ldist = (v * s for v in hand.thumb_lengths)
    base = np.asarray(hand.thumb_base) * s
    return base + lmc * d_mc + lprox * d_prox + ldist * d_dist


def _grid(lo, hi, n):
    return np.linspace(lo, hi, n)


def _search_thumb(hand: HandConfig, target: np.ndarray) -> tuple[np.ndarray, float]:
    b = hand.joint_bounds
    axes = [
        _grid(*b["thumb.cmc_abd"], 18),
        _grid(*b["thumb.cmc_flex"], 12),
        _grid(*b["thumb.mcp_flex"], 8),
        _grid(*b["thumb.ip_flex"], 8),
    ]
    best = None
    best_cost = np.inf
    steps = [ax[1] - ax[0] for ax in axes]
    center = None
    for refine in range(3):
        if refine == 0:
            mesh = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
        else:
            offs = np.linspace(-1.0, 1.0, 5)
            local = [
                np.clip(center[i] + offs * steps[i], b[k][0], b[k][1])
                for i, k in enumerate(("thumb.cmc_abd", "thumb.cmc_flex", "thumb.mcp_flex", "thumb.ip_flex"))
            ]
            mesh = np.stack([g.ravel() for g in np.meshgrid(*local, indexing="ij")], axis=-1)
            steps = [st / 2.0 for st in steps]
        tips = _thumb_tips(hand, mesh)
        err = np.linalg.norm(tips - target, axis=-1)
        cost = err + 2e-4 * np.abs(mesh).sum(axis=1)
        i = int(np.argmin(cost))
        if cost[i] < best_cost:
            best_cost = cost[i]
            best = mesh[i]
        center = best
    tips = _thumb_tips(hand, best[None, :])
    return best, float(np.linalg.norm(tips[0] - target))


def _apply_thumb(vec: np.ndarray, thumb: np.ndarray) -> np.ndarray:
    out = vec.copy()
    out[JOINT_INDEX["thumb.cmc_abd"]] = thumb[0]
    out[JOINT_INDEX["thumb.cmc_flex"]] = thumb[1]
    out[JOINT_INDEX["thumb.mcp_flex"]] = thumb[2]
    out[JOINT_INDEX["thumb.ip_flex"]] = thumb[3]
    return out


def pose_candidates(
    hand: HandConfig, label: str, tolerance_mm: float = TIP_TOLERANCE_MM
) -> list[tuple[np.ndarray, float]]:
    """All acceptable realizations of one pose: (joint vector, tip error).

    One candidate per (baseline curl, target-finger curl) whose thumb search
    lands within tolerance of the target phalanx center.
    """
    finger, phalanx = split_label(label)
    cands: list[tuple[np.ndarray, float]] = []
    for relax in _RELAXED_OPTIONS:
        base = rest_angles(hand)
        for f in ("index", "middle", "ring", "little"):
            _set_finger_curl(base, f, relax)
        for curl in _CURL_CANDIDATES[phalanx]:
            vec = base.copy()
            _set_finger_curl(vec, finger, curl)
            fk = forward_kinematics(hand, vec[None, :])
            target = fk.phalanx_centers[label][0]
            thumb, err = _search_thumb(hand, target)
            if err <= tolerance_mm:
                cands.append((_apply_thumb(vec, thumb), err))
    return cands


def solve_pose(hand: HandConfig, label: str) -> tuple[np.ndarray, float]:
    """Joint vector realizing one pose with the smallest achievable tip error."""
    best_vec, best_err = None, np.inf
    for vec, err in pose_candidates(hand, label, tolerance_mm=np.inf):
        if err < best_err:
            best_vec, best_err = vec, err
    return best_vec, best_err


def _candidate_clouds(hand, mount, rig, cands):
    """Jittered 11-feature profiles per candidate, for separation scoring."""
    from dataclasses import replace
    from .simulate import raycast_distances

    rng = np.random.default_rng([123])
    jitters = rng.normal(0.0, _PROFILE_JITTER_DEG, size=(_PROFILE_DRAWS - 1, N_JOINTS))
    mounts = [mount]
    for _ in range(_PROFILE_DRAWS - 1):
        mounts.append(
            replace(
                mount,
                rotation_deg=mount.rotation_deg + rng.uniform(-_PROFILE_MOUNT_ROT_DEG, _PROFILE_MOUNT_ROT_DEG),
                axial_offset_mm=mount.axial_offset_mm + rng.uniform(-_PROFILE_MOUNT_AX_MM, _PROFILE_MOUNT_AX_MM),
            )
        )
    vecs = np.asarray([vec for vec, _ in cands])
    per_draw = []
    for d, m in enumerate(mounts):
        rows = vecs if d == 0 else vecs + jitters[d - 1]
        dist, _ = raycast_distances(hand, rows, m, rig)
        per_draw.append(dist)
    dists = np.stack(per_draw, axis=1)  # (n_cands, draws, 9)
    clouds = []
    for c in dists:
        c = np.where(np.isfinite(c) & (c < 150.0), c, 150.0)
        oor = (c >= 150.0).sum(axis=1).astype(float)
        mean = np.where(oor == 9, 150.0, np.where(c < 150.0, c, 0.0).sum(axis=1) / np.maximum(9 - oor, 1))
        clouds.append(np.concatenate([c / 15.0, oor[:, None], mean[:, None] / 15.0], axis=1))
    return clouds


def _separation(cloud, others) -> float:
    mu = cloud.mean(axis=0)
    spread = float(np.linalg.norm(cloud - mu, axis=1).mean())
    sep = 0.0 if not others else np.inf
    for other in others:
        mu_o = other.mean(axis=0)
        sp_o = float(np.linalg.norm(other - mu_o, axis=1).mean())
        sep = min(sep, float(np.linalg.norm(mu - mu_o)) - _SPREAD_WEIGHT * (spread + sp_o))
    return sep - _OWN_SPREAD_WEIGHT * spread


def solve_pose_table(
    hand: HandConfig,
    mount=None,
    rig=None,
    tolerance_mm: float = TIP_TOLERANCE_MM,
) -> dict[str, np.ndarray]:
    """All 12 poses plus no-pose, chosen for mutual distinguishability.

    Every candidate satisfies the <= 5 mm thumb-tip criterion; among those,
    a greedy pass plus coordinate-ascent sweeps picks the combination whose
    simulated sensor profiles (under pose-execution jitter) stay farthest
    apart, so no two poses collapse onto the same readings for a given hand.
    Raises if any pose has no acceptable realization.
    """
    from .simulate import RingMount, SensorRig

    if mount is None:
        mount = RingMount(axial_offset_mm=0.5 * hand.thumb_lengths[1] * hand.scale)
    if rig is None:
        rig = SensorRig()

    cands: dict[str, list[tuple[np.ndarray, float]]] = {}
    clouds: dict[str, list[np.ndarray]] = {}
    for label in POSES:
        cl = pose_candidates(hand, label, tolerance_mm)
        if not cl:
            best = solve_pose(hand, label)[1]
            raise ConfigurationError(f"pose {label} unreachable: best tip error {best:.2f} mm")
        cands[label] = cl
        clouds[label] = _candidate_clouds(hand, mount, rig, cl)

    chosen: dict[str, int] = {}
    for label in POSES:
        others = [clouds[o][chosen[o]] for o in chosen]
        scores = [
            _separation(clouds[label][i], others) - _TIP_ERR_WEIGHT * cands[label][i][1]
            for i in range(len(cands[label]))
        ]
        chosen[label] = int(np.argmax(scores))
    for _ in range(_SELECTION_SWEEPS):
        for label in POSES:
            others = [clouds[o][chosen[o]] for o in chosen if o != label]
            scores = [
                _separation(clouds[label][i], others) - _TIP_ERR_WEIGHT * cands[label][i][1]
                for i in range(len(cands[label]))
            ]
            chosen[label] = int(np.argmax(scores))

    table: dict[str, np.ndarray] = {NO_POSE: rest_angles(hand)}
    for label in POSES:
        table[label] = np.round(cands[label][chosen[label]][0], 3)
    return table


def tip_error(hand: HandConfig, table: dict[str, np.ndarray], label: str) -> float:
    fk = forward_kinematics(hand, table[label][None, :])
    target = fk.phalanx_centers[label][0]
    return float(np.linalg.norm(fk.thumb_tip[0] - target))


def table_to_dict(table: dict[str, np.ndarray]) -> dict:
    return {
        "version": POSE_TABLE_VERSION,
        "angles": {
            label: {name: float(vec[i]) for i, name in enumerate(JOINT_NAMES)}
            for label, vec in table.items()
        },
    }


def table_from_dict(doc: dict) -> dict[str, np.ndarray]:
    if doc.get("version") != POSE_TABLE_VERSION:
        raise ConfigurationError(f"unsupported pose table version: {doc.get('version')!r}")
    table = {}
    for label, angles in doc["angles"].items():
        vec = np.zeros(N_JOINTS)
        for name, value in angles.items():
            vec[JOINT_INDEX[name]] = value
        table[label] = vec
    return table


def load_pose_table(path) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        return table_from_dict(json.load(fh))


def default_pose_table() -> dict[str, np.ndarray]:
    text = resources.files("ringpose.data").joinpath("default_poses.json").read_text()
    return table_from_dict(json.loads(text))
