"""Elastic collision kinematics on the unit sphere.

A binary elastic collision exchanges momentum along a unit vector ``sigma``:

    v'  = (v + v*)/2 + |v - v*| sigma / 2
    v*' = (v + v*)/2 - |v - v*| sigma / 2

Momentum and kinetic energy are conserved for every ``sigma``.  The deviation
angle ``theta`` is the angle between ``sigma`` and the relative velocity
``v - v*``; grazing collisions are ``theta -> 0``.

Besides the forward map this module provides the inverse of ``v -> v'`` at
frozen ``(v*, sigma)`` and the two partner-reconstruction maps (planar
rotation form and the general-dimension sigma form) together with their
Jacobians, which the weighted-norm estimates integrate against.  Degenerate
configurations (coincident velocities, sigma leaving the admissible cone) are
reported as errors rather than regularized, so callers see exactly where a
change of variables stops being valid.

All functions accept arrays with leading batch dimensions; the vector
dimension is always the trailing axis.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "GeometryDomainError",
    "post_collision",
    "deviation_angle",
    "inverse_map_phi",
    "vstar_of_w_2d",
    "vstar_of_w_nd",
    "sigma_decompose",
    "perp_frame",
]

# Unit-norm residual accepted before a sigma (or a cosine) is considered
# out of range rather than merely rounded.
_COS_CLAMP_TOL = 1e-9


class GeometryDomainError(ValueError):
    """A kinematic map was evaluated outside its domain of validity."""


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", a, b)


def _norm(a: np.ndarray) -> np.ndarray:
    return np.sqrt(_dot(a, a))


def _check_sigma(sigma: np.ndarray) -> None:
    err = np.abs(_norm(sigma) - 1.0)
    if np.any(err > _COS_CLAMP_TOL):
        raise GeometryDomainError(
            f"sigma is not a unit vector (max |norm - 1| = {float(np.max(err)):.3e})"
        )


def post_collision(
    v: np.ndarray, v_star: np.ndarray, sigma: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Post-collision velocity pair for impact direction ``sigma``.

    Returns ``(v_prime, v_star_prime)``.  Conserves the pair sum and the sum
    of squared speeds identically (up to round-off).
    """
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    _check_sigma(sigma)
    center = 0.5 * (v + v_star)
    half_speed = 0.5 * _norm(v - v_star)
    offset = half_speed[..., None] * sigma
    return center + offset, center - offset


def deviation_angle(v: np.ndarray, v_star: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Angle between ``sigma`` and the relative velocity ``v - v_star``.

    Equivalently ``arccos`` of ``(v' - v*') . (v - v*) / |v - v*|^2``.  The
    cosine is clamped into [-1, 1] when it exceeds the range by round-off
    only; a residual beyond 1e-9 raises, as does a coincident pair.
    """
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    rel = v - v_star
    speed = _norm(rel)
    if np.any(speed == 0.0):
        raise GeometryDomainError("deviation angle undefined for v == v_star")
    c = _dot(rel, sigma) / speed
    overshoot = np.abs(c) - 1.0
    if np.any(overshoot > _COS_CLAMP_TOL):
        raise GeometryDomainError(
            f"cosine residual {float(np.max(overshoot)):.3e} exceeds clamp tolerance"
        )
    return np.arccos(np.clip(c, -1.0, 1.0))


def inverse_map_phi(v: np.ndarray, v_star: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Invert ``v -> v'`` at frozen ``(v_star, sigma)``.

    Returns the unique ``v_bar`` with ``post_collision(v_bar, v_star, sigma)[0]
    == v``, valid while the reconstructed collision stays in the symmetrized
    half sphere (deviation angle below pi/2, i.e. ``sigma`` within pi/4 of
    ``v - v_star``).  Outside that cone the map leaves its support and an
    error is raised.
    """
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    _check_sigma(sigma)
    x = v - v_star
    r = _norm(x)
    if np.any(r == 0.0):
        raise GeometryDomainError("inverse collision map undefined for v == v_star")
    c = _dot(x, sigma) / r
    # v - v_star bisects the pre-collision relative direction and sigma, so
    # the reconstructed deviation angle is twice the angle measured here.
    if np.any(c <= np.cos(np.pi / 4.0) + 1e-15):
        raise GeometryDomainError(
            "sigma outside the quarter-cone of v - v_star: reconstructed "
            "deviation angle would reach pi/2 (antipodal regime)"
        )
    scale = r * r / _dot(x, sigma)
    return 2.0 * v - v_star - scale[..., None] * sigma


def _rot2(theta: float | np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack(
        [np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2
    )


def vstar_of_w_2d(
    v: np.ndarray, w: np.ndarray, theta: float | np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Planar partner reconstruction at fixed deviation angle.

    Given ``v`` and the second post-collisional velocity ``w`` produced with
    impact direction at angle ``theta`` counterclockwise from ``v - v_star``,
    recover ``v_star``:

        v_star = (R(-theta/2) w + sin(theta/2) R(pi/2) v) / cos(theta/2)

    Returns ``(v_star, jac)`` where ``jac`` is the Jacobian determinant of
    the map computed here, ``w -> v_star`` at fixed ``(v, theta)``, namely
    ``cos(theta/2)**-2``.  (Its reciprocal is the determinant of the forward
    direction ``v_star -> w``.)  Requires ``theta`` in [0, pi/2).
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if v.shape[-1] != 2 or w.shape[-1] != 2:
        raise GeometryDomainError("vstar_of_w_2d requires 2-d velocities")
    if np.any(theta < 0.0) or np.any(theta >= np.pi / 2.0):
        raise GeometryDomainError("theta must lie in [0, pi/2)")
    half = 0.5 * theta
    rot_back = _rot2(-half)
    rot_quarter = _rot2(np.pi / 2.0)
    v_star = (
        np.einsum("...ij,...j->...i", rot_back, w)
        + np.sin(half)[..., None] * np.einsum("...ij,...j->...i", rot_quarter, v)
    ) / np.cos(half)[..., None]
    jac = np.cos(half) ** -2.0
    return v_star, jac


def vstar_of_w_nd(
    v: np.ndarray, w: np.ndarray, sigma: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Partner reconstruction at fixed ``sigma``, any dimension.

        v_star = 2 w - v + (|v - w|^2 / ((v - w) . sigma)) sigma

    Returns ``(v_star, jac)`` with ``jac`` the Jacobian determinant of
    ``w -> v_star`` at fixed ``(v, sigma)``:

        jac = 2^(N-1) |v - w|^2 / ((v - w) . sigma)^2

    Requires ``(v - w) . sigma > 0`` (otherwise ``w`` is not reachable as a
    second post-collisional velocity for this ``sigma``).
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    _check_sigma(sigma)
    x = v - w
    denom = _dot(x, sigma)
    if np.any(denom <= 0.0):
        raise GeometryDomainError("(v - w) . sigma must be positive")
    ndim = v.shape[-1]
    scale = _dot(x, x) / denom
    v_star = 2.0 * w - v + scale[..., None] * sigma
    jac = 2.0 ** (ndim - 1) * _dot(x, x) / denom**2
    return v_star, jac


def sigma_decompose(
    v: np.ndarray, w: np.ndarray, theta: float | np.ndarray, normal: np.ndarray
) -> np.ndarray:
    """Assemble ``sigma = cos(theta) (v-w)/|v-w| + sin(theta) normal``.

    ``normal`` must be a unit vector orthogonal to ``v - w`` (checked to
    1e-9); the result is then a unit vector at angle ``theta`` from the
    relative direction.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    normal = np.asarray(normal, dtype=float)
    theta = np.asarray(theta, dtype=float)
    x = v - w
    r = _norm(x)
    if np.any(r == 0.0):
        raise GeometryDomainError("sigma decomposition undefined for v == w")
    xhat = x / r[..., None]
    if np.any(np.abs(_norm(normal) - 1.0) > _COS_CLAMP_TOL):
        raise GeometryDomainError("normal is not a unit vector")
    if np.any(np.abs(_dot(xhat, normal)) > _COS_CLAMP_TOL):
        raise GeometryDomainError("normal is not orthogonal to v - w")
    return np.cos(theta)[..., None] * xhat + np.sin(theta)[..., None] * normal


def perp_frame(unit: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane orthogonal to a unit vector.

    Maps shape ``(..., N)`` to ``(..., N-1, N)``.  The construction is
    deterministic: in 2-d it is the quarter-turn ``(-u2, u1)``; in 3-d it
    seeds with the coordinate axis least aligned with ``unit`` and completes
    with a cross product, so repeated calls agree bit for bit.
    """
    u = np.asarray(unit, dtype=float)
    if np.any(np.abs(_norm(u) - 1.0) > _COS_CLAMP_TOL):
        raise GeometryDomainError("perp_frame expects unit vectors")
    n = u.shape[-1]
    if n == 2:
        return np.stack([-u[..., 1], u[..., 0]], axis=-1)[..., None, :]
    if n != 3:
        raise GeometryDomainError("perp_frame supports dimensions 2 and 3")
    seed_axis = np.argmin(np.abs(u), axis=-1)
    e = np.zeros(u.shape)
    np.put_along_axis(e, seed_axis[..., None], 1.0, axis=-1)
    t1 = e - _dot(e, u)[..., None] * u
    t1 = t1 / _norm(t1)[..., None]
    t2 = np.cross(u, t1)
    return np.stack([t1, t2], axis=-2)
