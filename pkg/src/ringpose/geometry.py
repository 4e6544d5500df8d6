"""Capsule scene geometry: batched ray casting and small rotation helpers.

All distances are millimetres. Arrays broadcast over leading dimensions so a
whole session (frames x sensors x capsules) is evaluated in one call.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-12


def unit(v: np.ndarray, axis: int = -1) -> np.ndarray:
    n = np.linalg.norm(v, axis=axis, keepdims=True)
    return v / np.maximum(n, _EPS)


def rotation_about_axis(axis: np.ndarray, angle_rad) -> np.ndarray:
    """Rodrigues rotation matrix (or stack of them for an array of angles)."""
    k = unit(np.asarray(axis, dtype=float))
    angle = np.asarray(angle_rad, dtype=float)
    kx, ky, kz = k
    kmat = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    outer = np.outer(k, k)
    c = np.cos(angle)[..., None, None]
    s = np.sin(angle)[..., None, None]
    eye = np.eye(3)
    return c * eye + s * kmat + (1.0 - c) * outer


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from point(s) to segment(s) ab, broadcasting over leading dims."""
    ab = b - a
    ap = p - a
    denom = np.sum(ab * ab, axis=-1)
    t = np.sum(ap * ab, axis=-1) / np.maximum(denom, _EPS)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(p - closest, axis=-1)


def capsule_sdf(p: np.ndarray, a: np.ndarray, b: np.ndarray, radius) -> np.ndarray:
    """Signed distance from point(s) to a capsule surface (negative inside)."""
    return point_segment_distance(p, a, b) - radius


def ray_capsule(o: np.ndarray, d: np.ndarray, a: np.ndarray, b: np.ndarray, radius) -> np.ndarray:
    """First non-negative hit parameter of unit-direction rays against capsules.

    Broadcasts over leading dimensions; returns +inf where the ray misses.
    A ray whose origin lies inside (or on) the capsule reports 0.
    """
    o = np.asarray(o, dtype=float)
    d = np.asarray(d, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    r = np.asarray(radius, dtype=float)

    ab = b - a
    seg_len = np.linalg.norm(ab, axis=-1)
    u = ab / np.maximum(seg_len, _EPS)[..., None]

    m = o - a
    m_ax = np.sum(m * u, axis=-1)
    d_ax = np.sum(d * u, axis=-1)
    m_perp = m - m_ax[..., None] * u
    d_perp = d - d_ax[..., None] * u

    best = np.full(np.broadcast_shapes(m_ax.shape, r.shape), np.inf)

    # Cylindrical side.
    A = np.sum(d_perp * d_perp, axis=-1)
    B = np.sum(m_perp * d_perp, axis=-1)
    C = np.sum(m_perp * m_perp, axis=-1) - r * r
    disc = B * B - A * C
    ok = (disc >= 0.0) & (A > _EPS)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_cyl = np.where(ok, (-B - sq) / np.where(A > _EPS, A, 1.0), np.inf)
    s = m_ax + t_cyl * d_ax
    valid = ok & (t_cyl >= 0.0) & (s >= 0.0) & (s <= seg_len)
    best = np.where(valid & (t_cyl < best), t_cyl, best)

    # Spherical end caps.
    for center in (a, b):
        mc = o - center
        Bs = np.sum(mc * d, axis=-1)
        Cs = np.sum(mc * mc, axis=-1) - r * r
        disc_s = Bs * Bs - Cs
        ok_s = disc_s >= 0.0
        t_sph = np.where(ok_s, -Bs - np.sqrt(np.where(ok_s, disc_s, 0.0)), np.inf)
        valid_s = ok_s & (t_sph >= 0.0)
        best = np.where(valid_s & (t_sph < best), t_sph, best)

    # Origin inside (or on) the capsule: contact at zero distance.
    inside = point_segment_distance(o, a, b) <= r
    return np.where(inside, 0.0, best)


def raycast_capsules(
    origins: np.ndarray,
    directions: np.ndarray,
    caps_a: np.ndarray,
    caps_b: np.ndarray,
    radii: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-hit distance and capsule index for each ray.

    origins/directions: (..., 3); caps_a/caps_b: (..., K, 3); radii: (K,).
    Returns (distance (...,), hit_index (...,)); misses are (+inf, -1).
    """
    o = np.asarray(origins, dtype=float)[..., None, :]
    d = np.asarray(directions, dtype=float)[..., None, :]
    ts = ray_capsule(o, d, caps_a, caps_b, radii)
    hit = np.argmin(ts, axis=-1)
    dist = np.take_along_axis(ts, hit[..., None], axis=-1)[..., 0]
    hit = np.where(np.isinf(dist), -1, hit)
    return dist, hit
