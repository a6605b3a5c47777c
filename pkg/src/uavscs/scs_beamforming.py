"""Per-slot beamforming for sensing slots: secrecy rate with a dedicated sensing covariance.

Alice splits her budget between the information beam W_a and a sensing covariance
R_r; Jack's jamming beam W_j doubles as a bistatic illuminator.  The slot must deliver
a distance-normalized beampattern gain of at least Gamma at its assigned target.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .geometry import SlotChannels, ground_steering, mrt_covariance, slant_distance
from .sc_beamforming import (
    BeamResult,
    SensingRow,
    _psd_clip,
    _rank_ratio,
    build_rate_bound,
    extract_rank_one,
    lifted_rate,
    mrt_vector,
    run_sca,
)


class SensingInfeasible(RuntimeError):
    """Gamma exceeds the largest gain the two UAVs can focus on the target."""

    def __init__(self, max_gain: float, gamma: float):
        super().__init__(f"sensing threshold {gamma:.6g} W exceeds achievable gain {max_gain:.6g} W")
        self.max_gain = max_gain
        self.gamma = gamma


def scs_rate_lifted(W_a, W_j, R_r, ch: SlotChannels, imp) -> float:
    return lifted_rate(W_a, W_j, R_r, ch, imp)


def build_scs_bound(W_a0, W_j0, R_r0, ch: SlotChannels, imp):
    return build_rate_bound(W_a0, W_j0, R_r0, ch, imp)


def sensing_row(alice_xy, jack_xy, target_xy, s, gamma: Optional[float] = None) -> SensingRow:
    """Gain coefficients A_m = a_mk a_mk^H / d_mk^2 of Scenario ``s`` for one target."""
    M, sr = s.num_antennas, s.spacing_ratio
    a_ak = ground_steering(alice_xy, s.alt_alice, target_xy, M, sr)
    a_jk = ground_steering(jack_xy, s.alt_jack, target_xy, M, sr)
    d_ak = slant_distance(alice_xy, s.alt_alice, target_xy)
    d_jk = slant_distance(jack_xy, s.alt_jack, target_xy)
    return SensingRow(np.outer(a_ak, a_ak.conj()) / d_ak ** 2,
                      np.outer(a_jk, a_jk.conj()) / d_jk ** 2,
                      s.gamma_sense if gamma is None else gamma)


def _focus(A):
    lam, vec = np.linalg.eigh(A)
    return vec[:, -1]


def _strict_start(M, budgets, row: SensingRow, gamma: float) -> Optional[dict]:
    """Interior point of the sensing-constrained feasible set, or None if none is usable."""
    p_a, p_j = budgets
    g_max = row.max_gain(p_a, p_j)
    if not g_max > gamma:
        return None
    f = 0.9 if 0.9 * g_max > gamma else 0.5 * (1.0 + gamma / g_max)
    target = 0.5 * (gamma + f * g_max)
    u, v = _focus(row.A_a), _focus(row.A_j)
    iso = {"a": np.eye(M) / M, "r": np.eye(M) / M, "j": np.eye(M) / M}
    foc = {"a": np.outer(u, u.conj()), "r": np.outer(u, u.conj()), "j": np.outer(v, v.conj())}
    power = {"a": f * p_a / 2, "r": f * p_a / 2, "j": f * p_j}
    g_iso = row.gain(power["a"] * iso["a"], power["j"] * iso["j"], power["r"] * iso["r"])
    g_foc = f * g_max
    theta = 0.0
    if g_iso < target and g_foc > g_iso:
        theta = min((target - g_iso) / (g_foc - g_iso), 1.0 - 1e-6)
    start = {k: power[k] * ((1 - theta) * iso[k] + theta * foc[k]) for k in iso}
    if p_j <= 0:
        start["j"] = np.zeros((M, M))
    if not row.gain(start["a"], start["j"], start["r"]) > gamma:
        return None
    return {k: np.asarray(m, dtype=complex) for k, m in start.items()}


def _round(X, M, p_j):
    """Rank-one W_a, W_j; Alice's residual power moves into R_r (gain and budget unchanged)."""
    W_a, W_j, R_r = X["a"], X.get("j", np.zeros((M, M), complex)), X["r"]
    if np.real(np.trace(W_a)) > 0:
        w_a = extract_rank_one(W_a)[0]
    else:
        w_a = np.zeros(M, complex)
    R = _psd_clip(R_r + W_a - np.outer(w_a, w_a.conj()))
    if p_j > 0 and np.real(np.trace(W_j)) > 1e-6 * p_j:
        w_j = extract_rank_one(W_j)[0]
    else:
        w_j = np.zeros(M, complex)
    return w_a, w_j, R


def solve_scs_slot(ch: SlotChannels, imp, budgets, row: SensingRow, cfg,
                   sc_beams: Optional[tuple] = None, max_passes: int = 3) -> BeamResult:
    """Sensing-slot beamformers (w_a, w_j, R_r) maximizing the secrecy rate with gain >= Gamma.

    The sensing-unconstrained problem is solved first and kept when it already meets
    Gamma; otherwise the constrained problem is solved from a strictly feasible start.
    When rank-one extraction of Jack's beam costs gain, the constrained solve is
    repeated with a threshold raised by twice the shortfall.  Among all candidates that
    meet Gamma (including the plain sensing beam with zero rate and the communication
    beams ``sc_beams`` when they happen to satisfy the threshold) the best rate wins.
    """
    M = ch.M
    p_a, p_j = budgets
    gamma = row.gamma
    g_max = row.max_gain(p_a, p_j)
    if gamma > 0 and g_max < gamma:
        raise SensingInfeasible(g_max, gamma)
    zero = np.zeros((M, M), dtype=complex)
    solves = 0
    log = []
    flags = []
    cands = []  # (name, w_a, w_j, R_r, rank_ok, X)

    ridge = 1e-3 / (2 * M) * np.eye(M)
    expansion = {"a": mrt_covariance(ch.h_ab, p_a / 4) + p_a * ridge,
                 "j": mrt_covariance(ch.h_je, p_j / 4) + p_j * ridge,
                 "r": (p_a / (4 * M)) * np.eye(M, dtype=complex)}
    start = {"a": (p_a / (4 * M)) * np.eye(M, dtype=complex),
             "j": (p_j / (2 * M)) * np.eye(M, dtype=complex),
             "r": (p_a / (4 * M)) * np.eye(M, dtype=complex)}
    X, lg, n, ok = run_sca(ch, imp, budgets, cfg, expansion, start, sensing=None, with_rr=True)
    solves += n
    log.extend(("free",) + r for r in lg)
    w_a, w_j, R = _round(X, M, p_j)
    cands.append(("sca_free", w_a, w_j, R, ok, X))
    need_constrained = gamma > 0 and row.gain(np.outer(w_a, w_a.conj()),
                                              np.outer(w_j, w_j.conj()), R) < gamma
    if need_constrained:
        g_req = gamma
        for _ in range(max_passes):
            start_c = _strict_start(M, budgets, row, g_req)
            if start_c is None:
                flags.append("no strictly feasible start for the sensing-constrained solve")
                break
            tight = SensingRow(row.A_a, row.A_j, g_req)
            X, lg, n, ok = run_sca(ch, imp, budgets, cfg, dict(start_c), start_c,
                                   sensing=tight, with_rr=True)
            solves += n
            log.extend(("constrained",) + r for r in lg)
            w_a, w_j, R = _round(X, M, p_j)
            cands.append(("sca_sensing", w_a, w_j, R, ok, X))
            gain = row.gain(np.outer(w_a, w_a.conj()), np.outer(w_j, w_j.conj()), R)
            if gain >= gamma:
                break
            g_req = g_req + 2.0 * (gamma - gain)

    # sensing-only beam: all power focused on the target, zero information rate
    u, v = _focus(row.A_a), _focus(row.A_j)
    cands.append(("sensing_only", np.zeros(M, complex), np.sqrt(max(p_j, 0.0)) * v,
                  p_a * np.outer(u, u.conj()), True, None))
    if sc_beams is not None:
        cands.append(("sc_beams", np.asarray(sc_beams[0], complex),
                      np.asarray(sc_beams[1], complex), zero.copy(), True, None))
    cands.append(("mrt", mrt_vector(ch.h_ab, p_a), mrt_vector(ch.h_je, p_j), zero.copy(),
                  True, None))

    best = None
    for name, wa, wj, Rr, ok, Xraw in cands:
        Wa, Wj = np.outer(wa, wa.conj()), np.outer(wj, wj.conj())
        if row.gain(Wa, Wj, Rr) < gamma:
            continue
        r = lifted_rate(Wa, Wj, Rr, ch, imp)
        if best is None or r > best[0] + 1e-12:
            best = (r, name, wa, wj, Wa, Wj, Rr, ok, Xraw)
    r, name, wa, wj, Wa, Wj, Rr, ok, Xraw = best
    ratio_a = _rank_ratio(Xraw["a"]) if Xraw is not None else 1.0
    ratio_j = _rank_ratio(Xraw["j"]) if Xraw is not None and "j" in Xraw else 1.0
    if Xraw is not None and not ok:
        flags.append("rank-one ratio below tolerance after penalty schedule")
    return BeamResult(w_a=wa, w_j=wj, W_a=Wa, W_j=Wj, R_r=Rr, rate=r, ratio_a=ratio_a,
                      ratio_j=ratio_j, rank_one_ok=ok, source=name, solves=solves,
                      flags=flags, log=log)


def sensing_rank(R_r, threshold: float = 1e-6) -> int:
    """Numerical rank of the sensing covariance (eigenvalues above threshold * trace)."""
    tr = float(np.real(np.trace(R_r)))
    if tr <= 0:
        return 0
    return int(np.sum(np.linalg.eigvalsh(R_r) > threshold * tr))
