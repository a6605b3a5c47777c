"""SINR, secrecy rate, average secrecy rate and the sensing beampattern gain."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SlotChannels, ground_steering, quad_form, slant_distance


@dataclass(frozen=True)
class SlotBeams:
    """Transmit covariances of one slot (watts).  R_r is zero outside sensing slots."""

    W_a: np.ndarray
    W_j: np.ndarray
    R_r: np.ndarray

    @classmethod
    def zeros(cls, M: int) -> "SlotBeams":
        z = np.zeros((M, M), dtype=complex)
        return cls(z, z.copy(), z.copy())

    @classmethod
    def sc(cls, W_a, W_j) -> "SlotBeams":
        W_a = np.asarray(W_a, dtype=complex)
        return cls(W_a, np.asarray(W_j, dtype=complex), np.zeros_like(W_a))

    def check(self, p_max_alice: float, p_max_jack: float, tol: float = 1e-8) -> list[str]:
        """Names of violated invariants (empty when the beams are admissible)."""
        issues = []
        for name in ("W_a", "W_j", "R_r"):
            X = getattr(self, name)
            if np.max(np.abs(X - X.conj().T), initial=0.0) > 1e-9 * max(np.max(np.abs(X)), 1e-300):
                issues.append(f"{name} not Hermitian")
                continue
            ev = np.linalg.eigvalsh(0.5 * (X + X.conj().T))
            if ev.size and ev.min() < -1e-9 * max(np.max(np.abs(ev)), 1e-12):
                issues.append(f"{name} not PSD")
        if np.trace(self.W_a).real + np.trace(self.R_r).real > p_max_alice * (1 + tol) + tol:
            issues.append("Alice power budget exceeded")
        if np.trace(self.W_j).real > p_max_jack * (1 + tol) + tol:
            issues.append("Jack power budget exceeded")
        return issues


def received_power(h, W) -> float:
    """tr(h h^H W) = h^H W h."""
    return float(np.real(np.conj(h) @ np.asarray(W) @ h))


def sinr(phase: str, node: str, beams: SlotBeams, ch: SlotChannels, imp) -> float:
    """SINR at Bob or Eve in trace form; phase 'scs' adds the sensing-signal residual."""
    if node == "bob":
        h_a, h_j, phi_j, phi_r, noise = ch.h_ab, ch.h_jb, imp.jam_bob, imp.sense_bob, imp.noise_bob
    elif node == "eve":
        h_a, h_j, phi_j, phi_r, noise = ch.h_ae, ch.h_je, imp.jam_eve, imp.sense_eve, imp.noise_eve
    else:
        raise ValueError(f"unknown node {node!r}")
    if phase not in ("sc", "scs"):
        raise ValueError(f"unknown phase {phase!r}")
    signal = received_power(h_a, beams.W_a)
    denom = phi_j * received_power(h_j, beams.W_j) + noise
    if phase == "scs":
        denom += phi_r * received_power(h_a, beams.R_r)
    if denom <= 0:
        if signal == 0:
            raise ZeroDivisionError("SINR undefined: zero signal over zero noise and interference")
        return float("inf")
    return signal / denom


def secrecy_rate(phase: str, beams: SlotBeams, ch: SlotChannels, imp, clamp: bool = True) -> float:
    r = (np.log2(1.0 + sinr(phase, "bob", beams, ch, imp))
         - np.log2(1.0 + sinr(phase, "eve", beams, ch, imp)))
    return max(r, 0.0) if clamp else float(r)


def rate_from_sinr(gamma_b: float, gamma_e: float, clamp: bool = True) -> float:
    r = float(np.log2(1.0 + gamma_b) - np.log2(1.0 + gamma_e))
    return max(r, 0.0) if clamp else r


def asr(rates) -> float:
    """Mean of per-slot secrecy rates after clamping each at zero."""
    rates = np.asarray(list(rates), dtype=float)
    if rates.size == 0:
        raise ValueError("average secrecy rate over an empty slot set")
    return float(np.mean(np.maximum(rates, 0.0)))


def beampattern_gain(beams: SlotBeams, alice_xy, jack_xy, target_xy, alt_alice: float,
                     alt_jack: float, spacing_ratio: float) -> float:
    """Distance-normalized sum-beampattern gain at a ground target (watts, no path-loss factor)."""
    M = beams.W_a.shape[0]
    a_ak = ground_steering(alice_xy, alt_alice, target_xy, M, spacing_ratio)
    a_jk = ground_steering(jack_xy, alt_jack, target_xy, M, spacing_ratio)
    d_ak = slant_distance(alice_xy, alt_alice, target_xy)
    d_jk = slant_distance(jack_xy, alt_jack, target_xy)
    return float(quad_form(beams.W_a + beams.R_r, a_ak) / d_ak ** 2
                 + quad_form(beams.W_j, a_jk) / d_jk ** 2)
