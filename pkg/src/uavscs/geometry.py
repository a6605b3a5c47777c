"""Air-to-ground geometry and line-of-sight channels for uniform linear arrays.

All functions broadcast over leading axes: positions may be ``(2,)`` or ``(..., 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def slant_distance(uav_xy, alt, ground_xy):
    """3-D distance between a UAV at altitude ``alt`` and a ground node."""
    diff = np.asarray(uav_xy, dtype=float) - np.asarray(ground_xy, dtype=float)
    return np.sqrt(np.sum(diff * diff, axis=-1) + np.asarray(alt, dtype=float) ** 2)


def departure_angle(uav_xy, alt, ground_xy):
    """Angle between the downward vertical and the line of sight, in [0, pi/2)."""
    return np.arccos(np.asarray(alt, dtype=float) / slant_distance(uav_xy, alt, ground_xy))


def steering_from_cos(M: int, spacing_ratio: float, cos_angle):
    cos_angle = np.asarray(cos_angle, dtype=float)
    idx = np.arange(M)
    return np.exp(2j * np.pi * spacing_ratio * cos_angle[..., None] * idx)


def steering_vector(M: int, spacing_ratio: float, angle):
    """ULA response with element 0 as phase reference (entry 0 is exactly 1)."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return steering_from_cos(M, spacing_ratio, np.cos(angle))


def ground_steering(uav_xy, alt, ground_xy, M: int, spacing_ratio: float):
    """Steering vector toward a ground node, using cos(angle) = alt / distance directly."""
    d = slant_distance(uav_xy, alt, ground_xy)
    return steering_from_cos(M, spacing_ratio, np.asarray(alt, dtype=float) / d)


def channel_vector(uav_xy, alt, ground_xy, M: int, spacing_ratio: float, beta: float):
    d = slant_distance(uav_xy, alt, ground_xy)
    a = steering_from_cos(M, spacing_ratio, np.asarray(alt, dtype=float) / d)
    return a * np.sqrt(beta / d ** 2)[..., None]


def _check_hermitian(W):
    W = np.asarray(W)
    if W.ndim < 2 or W.shape[-1] != W.shape[-2]:
        raise ValueError("expected a square matrix")
    scale = max(np.max(np.abs(W)), 1e-300)
    if np.max(np.abs(W - np.swapaxes(W.conj(), -1, -2))) > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian")
    return W


def eta(W, uav_xy, alt, ground_xy, spacing_ratio: float):
    """Quadratic form a^H W a written through the magnitudes and phases of W's entries.

    Only the upper triangle of W is used, so the expansion stays real-valued
    without ever forming the steering vector.
    """
    W = _check_hermitian(W)
    M = W.shape[-1]
    d = slant_distance(uav_xy, alt, ground_xy)
    xs, ys = np.triu_indices(M, k=1)
    upper = W[..., xs, ys]
    phase = np.angle(upper) + (2 * np.pi * spacing_ratio * alt * (ys - xs)) / d[..., None]
    diag = np.real(np.trace(W, axis1=-2, axis2=-1))
    return diag + 2.0 * np.sum(np.abs(upper) * np.cos(phase), axis=-1)


def eta_gradient(W, uav_xy, alt, ground_xy, spacing_ratio: float):
    """Gradient of eta with respect to the UAV's horizontal position, shape (..., 2)."""
    W = _check_hermitian(W)
    M = W.shape[-1]
    uav_xy = np.asarray(uav_xy, dtype=float)
    ground_xy = np.asarray(ground_xy, dtype=float)
    d = slant_distance(uav_xy, alt, ground_xy)
    xs, ys = np.triu_indices(M, k=1)
    upper = W[..., xs, ys]
    lag = ys - xs
    phase = np.angle(upper) + (2 * np.pi * spacing_ratio * alt * lag) / d[..., None]
    s = np.sum(np.abs(upper) * np.sin(phase) * lag, axis=-1)
    coef = 4 * np.pi * spacing_ratio * alt * s / d ** 3
    return coef[..., None] * (uav_xy - ground_xy)


def quad_form(W, a):
    """Real part of a^H W a for Hermitian W."""
    return np.real(np.einsum("...i,...ij,...j->...", a.conj(), W, a))


@dataclass(frozen=True)
class SlotChannels:
    """Channels from Alice (a) and Jack (j) to Bob (b) and Eve (e) in one slot."""

    h_ab: np.ndarray
    h_ae: np.ndarray
    h_jb: np.ndarray
    h_je: np.ndarray

    @property
    def M(self) -> int:
        return self.h_ab.shape[-1]


def slot_channels(alice_xy, jack_xy, s) -> SlotChannels:
    """Channels for one slot of Scenario ``s`` with UAVs at the given horizontal positions."""
    M, sr, beta = s.num_antennas, s.spacing_ratio, s.pathloss_ref
    return SlotChannels(
        h_ab=channel_vector(alice_xy, s.alt_alice, s.bob_pos, M, sr, beta),
        h_ae=channel_vector(alice_xy, s.alt_alice, s.eve_pos, M, sr, beta),
        h_jb=channel_vector(jack_xy, s.alt_jack, s.bob_pos, M, sr, beta),
        h_je=channel_vector(jack_xy, s.alt_jack, s.eve_pos, M, sr, beta),
    )


def mrt_covariance(h, power: float):
    """Rank-one covariance that puts ``power`` watts along the conjugate-matched direction of h."""
    h = np.asarray(h, dtype=complex)
    n = np.linalg.norm(h)
    if n == 0 or power == 0:
        return np.zeros((h.size, h.size), dtype=complex)
    w = h * np.sqrt(power) / n
    return np.outer(w, w.conj())
