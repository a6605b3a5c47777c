"""Per-slot beamforming for secure communication: lifted rate, concave lower bound and SCA.

The transmit covariances are lifted to PSD matrices (W = w w^H).  The secrecy rate is a
difference of two concave log terms; linearizing the subtracted terms at an expansion
point gives a tight concave minorant.  Maximizing it repeatedly (plus a rank-one
penalty tr((I - p p^H) W) / iota built from the principal eigenvector p of the previous
iterate) is the successive convex approximation used here.  The same engine serves the
sensing slots, where Alice additionally emits a dedicated sensing covariance R_r.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .conic import LinearConstraint, LogTerm, PsdLogProgram, solve_psd_log
from .geometry import SlotChannels, mrt_covariance

LOG2E = 1.0 / np.log(2.0)


def _tr(h, W) -> float:
    """tr(h h^H W) for Hermitian W; zero when W is None."""
    if W is None:
        return 0.0
    return float(np.real(np.conj(h) @ W @ h))


def _terms(W_a, W_j, R_r, ch: SlotChannels, imp):
    """(Bob signal, Bob interference+noise, Eve signal, Eve interference+noise)."""
    s_b = _tr(ch.h_ab, W_a)
    s_e = _tr(ch.h_ae, W_a)
    i_b = imp.sense_bob * _tr(ch.h_ab, R_r) + imp.jam_bob * _tr(ch.h_jb, W_j) + imp.noise_bob
    i_e = imp.sense_eve * _tr(ch.h_ae, R_r) + imp.jam_eve * _tr(ch.h_je, W_j) + imp.noise_eve
    return s_b, i_b, s_e, i_e


def lifted_rate(W_a, W_j, R_r, ch: SlotChannels, imp) -> float:
    """Unclamped secrecy rate of lifted covariances; R_r=None gives the communication-only form."""
    s_b, i_b, s_e, i_e = _terms(W_a, W_j, R_r, ch, imp)
    return float(np.log2(1.0 + s_b / i_b) - np.log2(1.0 + s_e / i_e))


def sc_rate_lifted(W_a, W_j, ch: SlotChannels, imp) -> float:
    return lifted_rate(W_a, W_j, None, ch, imp)


@dataclass
class RateBound:
    """Concave minorant of the lifted rate, tight at the expansion point.

    value(X) = log2(S_b + I_b) + log2(I_e) - a - b * (E(X) - E(X0)) - c * (I_b(X) - I_b(X0))
    where E = S_e + I_e is Eve's total received power.
    """

    W_a0: np.ndarray
    W_j0: np.ndarray
    R_r0: Optional[np.ndarray]
    a: float
    b: float
    c: float
    ch: SlotChannels
    imp: object

    def value(self, W_a, W_j, R_r=None) -> float:
        s_b, i_b, s_e, i_e = _terms(W_a, W_j, R_r, self.ch, self.imp)
        s_b0, i_b0, s_e0, i_e0 = _terms(self.W_a0, self.W_j0, self.R_r0, self.ch, self.imp)
        return float(np.log2(s_b + i_b) + np.log2(i_e) - self.a
                     - self.b * ((s_e + i_e) - (s_e0 + i_e0))
                     - self.c * ((i_b - self.imp.noise_bob) - (i_b0 - self.imp.noise_bob)))


def build_rate_bound(W_a0, W_j0, R_r0, ch: SlotChannels, imp) -> RateBound:
    _, i_b0, s_e0, i_e0 = _terms(W_a0, W_j0, R_r0, ch, imp)
    a = float(np.log2(s_e0 + i_e0) + np.log2(i_b0))
    return RateBound(W_a0, W_j0, R_r0, a, LOG2E / (s_e0 + i_e0), LOG2E / i_b0, ch, imp)


def build_sc_bound(W_a0, W_j0, ch: SlotChannels, imp) -> RateBound:
    return build_rate_bound(W_a0, W_j0, None, ch, imp)


def extract_rank_one(W):
    """Principal component w = sqrt(lambda_max) v_max with entry 0 made real and >= 0."""
    W = np.asarray(W, dtype=complex)
    W = 0.5 * (W + W.conj().T)
    trace = float(np.real(np.trace(W)))
    if trace <= 0:
        raise ValueError("rank-one extraction of a zero-trace matrix")
    lam, vec = np.linalg.eigh(W)
    lmax = max(float(lam[-1]), 0.0)
    w = np.sqrt(lmax) * vec[:, -1]
    if abs(w[0]) > 0:
        w = w * (np.conj(w[0]) / abs(w[0]))
        w[0] = abs(w[0])
    return w, lmax / trace


def _principal(W):
    lam, vec = np.linalg.eigh(0.5 * (W + W.conj().T))
    return vec[:, -1]


def _rank_ratio(W) -> float:
    tr = float(np.real(np.trace(W)))
    if tr <= 0:
        return 1.0
    return float(np.linalg.eigvalsh(0.5 * (W + W.conj().T))[-1]) / tr


def _psd_clip(W):
    W = 0.5 * (W + W.conj().T)
    lam, vec = np.linalg.eigh(W)
    lam = np.maximum(lam, 0.0)
    return (vec * lam) @ vec.conj().T


@dataclass(frozen=True)
class SensingRow:
    """gain = <A_a, W_a + R_r> + <A_j, W_j> >= gamma, A_m = a_mk a_mk^H / d_mk^2."""

    A_a: np.ndarray
    A_j: np.ndarray
    gamma: float

    def gain(self, W_a, W_j, R_r) -> float:
        g = np.trace(self.A_a @ W_a).real + np.trace(self.A_j @ W_j).real
        if R_r is not None:
            g += np.trace(self.A_a @ R_r).real
        return float(g)

    def max_gain(self, p_a: float, p_j: float) -> float:
        return float(p_a * np.linalg.eigvalsh(self.A_a)[-1] + p_j * np.linalg.eigvalsh(self.A_j)[-1])


@dataclass
class BeamResult:
    w_a: np.ndarray
    w_j: np.ndarray
    W_a: np.ndarray
    W_j: np.ndarray
    R_r: Optional[np.ndarray]
    rate: float
    ratio_a: float
    ratio_j: float
    rank_one_ok: bool
    source: str
    solves: int = 0
    flags: list = field(default_factory=list)
    log: list = field(default_factory=list)


def _program(bound: RateBound, blocks, ch, imp, budgets, iota, principals, sensing):
    """PsdLogProgram of one SCA step; ``blocks`` lists the active names among a, j, r."""
    idx = {name: i for i, name in enumerate(blocks)}
    M = ch.M
    Hab = np.outer(ch.h_ab, ch.h_ab.conj())
    Hae = np.outer(ch.h_ae, ch.h_ae.conj())
    Hjb = np.outer(ch.h_jb, ch.h_jb.conj())
    Hje = np.outer(ch.h_je, ch.h_je.conj())
    nb, ne = imp.noise_bob, imp.noise_eve

    bob = {}
    eve = {}
    lin = {}

    def add(d, name, mat):
        if name in idx:
            i = idx[name]
            d[i] = d.get(i, 0) + mat

    add(bob, "a", Hab / nb)
    add(bob, "j", imp.jam_bob * Hjb / nb)
    add(bob, "r", imp.sense_bob * Hab / nb)
    add(eve, "j", imp.jam_eve * Hje / ne)
    add(eve, "r", imp.sense_eve * Hae / ne)
    add(lin, "a", -bound.b * Hae)
    add(lin, "j", -(bound.b * imp.jam_eve * Hje + bound.c * imp.jam_bob * Hjb))
    add(lin, "r", -(bound.b * imp.sense_eve * Hae + bound.c * imp.sense_bob * Hab))
    for name, p in principals.items():
        add(lin, name, -(np.eye(M) - np.outer(p, p.conj())) / iota)

    s_b0, i_b0, s_e0, i_e0 = _terms(bound.W_a0, bound.W_j0, bound.R_r0, ch, imp)
    constant = (np.log2(nb) + np.log2(ne) - bound.a + bound.b * (s_e0 + i_e0 - ne)
                + bound.c * (i_b0 - nb))
    log_terms = [LogTerm(LOG2E, bob, 1.0)]
    if eve:
        log_terms.append(LogTerm(LOG2E, eve, 1.0))
    cons = []
    p_a, p_j = budgets
    alice = {}
    add(alice, "a", np.eye(M))
    add(alice, "r", np.eye(M))
    cons.append(LinearConstraint(alice, p_a))
    if "j" in idx:
        cons.append(LinearConstraint({idx["j"]: np.eye(M)}, p_j))
    if sensing is not None:
        row = {}
        add(row, "a", -sensing.A_a / sensing.gamma)
        add(row, "r", -sensing.A_a / sensing.gamma)
        add(row, "j", -sensing.A_j / sensing.gamma)
        cons.append(LinearConstraint(row, -1.0))
    return PsdLogProgram(dims=[M] * len(blocks), log_terms=log_terms, linear=lin,
                         constraints=cons, constant=float(constant))


def _penalized(X, blocks, ch, imp, iota):
    W_a = X.get("a")
    W_j = X.get("j")
    R_r = X.get("r")
    rate = lifted_rate(W_a, W_j, R_r, ch, imp)
    pen = 0.0
    for name in ("a", "j"):
        if name in blocks:
            W = X[name]
            pen += float(np.real(np.trace(W))) - float(np.linalg.eigvalsh(W)[-1])
    return rate, rate - pen / iota


def run_sca(ch: SlotChannels, imp, budgets, cfg, expansion: dict, start: dict,
            sensing: Optional[SensingRow] = None, with_rr: bool = False):
    """Penalized SCA over the active blocks.

    ``expansion`` and ``start`` map block names ('a', 'j', 'r') to matrices; the start
    must be strictly feasible for the conic solver.  Returns (X, log, solves, rank_ok).
    """
    p_a, p_j = budgets
    blocks = ["a"] + (["j"] if p_j > 0 else []) + (["r"] if with_rr else [])
    X = {k: np.asarray(expansion[k], dtype=complex) for k in blocks}
    start_list = [np.asarray(start[k], dtype=complex) for k in blocks]
    log = []
    solves = 0
    iota = cfg.penalty_init
    rank_ok = False
    for rnd in range(cfg.max_penalty_rounds):
        rate, obj = _penalized(X, blocks, ch, imp, iota)
        log.append((rnd, iota, 0, rate, obj, "expansion"))
        for it in range(1, cfg.max_beam_iter + 1):
            bound = build_rate_bound(X["a"], X.get("j", np.zeros_like(X["a"])), X.get("r"), ch, imp)
            principals = {k: _principal(X[k]) for k in blocks if k in ("a", "j")}
            prog = _program(bound, blocks, ch, imp, budgets, iota, principals, sensing)
            sol = solve_psd_log(prog, start_list, tol=cfg.kkt_tol, max_iter=cfg.max_newton_iter)
            solves += 1
            if sol.status == "infeasible_start":
                raise RuntimeError(f"beamforming subproblem start rejected: {sol.message}")
            Xn = {k: _psd_clip(B) for k, B in zip(blocks, sol.blocks)}
            rate_n, obj_n = _penalized(Xn, blocks, ch, imp, iota)
            log.append((rnd, iota, it, rate_n, obj_n, sol.status))
            gain = obj_n - obj
            X, obj = Xn, obj_n
            if gain <= cfg.beam_tol:
                break
        ratios = [_rank_ratio(X[k]) for k in blocks if k in ("a", "j")
                  and np.real(np.trace(X[k])) > 1e-6 * budgets[0 if k == "a" else 1]]
        if all(r >= cfg.rank_one_tol for r in ratios):
            rank_ok = True
            break
        iota *= cfg.penalty_shrink
    return X, log, solves, rank_ok


def _default_start(M, budgets, with_rr=False):
    p_a, p_j = budgets
    share = 2 if with_rr else 1
    start = {"a": (p_a / (2 * M * share)) * np.eye(M, dtype=complex),
             "j": (p_j / (2 * M)) * np.eye(M, dtype=complex)}
    if with_rr:
        start["r"] = (p_a / (4 * M)) * np.eye(M, dtype=complex)
    return start


def solve_sc_slot(ch: SlotChannels, imp, budgets, cfg, warm: Optional[tuple] = None) -> BeamResult:
    """Communication-slot beamformers (w_a, w_j) maximizing the secrecy rate.

    The SCA expands around the warm-start beams when given (previous outer iterate),
    otherwise around half-budget MRT lifts (Alice toward Bob, Jack toward Eve).  Its
    rank-one result is compared against simple feasible alternatives (full-power MRT
    pair, Alice-only MRT, and the warm-start beams) and the best true rate wins, so the
    returned rate never falls below any of them.
    """
    M = ch.M
    p_a, p_j = budgets
    if p_a <= 0:
        raise ValueError("Alice needs a positive power budget")
    zero = np.zeros((M, M), dtype=complex)
    ridge = 1e-3 / (2 * M) * np.eye(M)
    if warm is not None:
        wa, wj = (np.asarray(w, dtype=complex) for w in warm)
        expansion = {"a": np.outer(wa, wa.conj()) + p_a * ridge,
                     "j": np.outer(wj, wj.conj()) + p_j * ridge}
    else:
        expansion = {"a": mrt_covariance(ch.h_ab, p_a / 2) + p_a * ridge,
                     "j": mrt_covariance(ch.h_je, p_j / 2) + p_j * ridge}
    X, log, solves, rank_ok = run_sca(ch, imp, budgets, cfg, expansion, _default_start(M, budgets))

    cands = []
    W_a = X["a"]
    W_j = X.get("j", zero)
    w_a = extract_rank_one(W_a)[0] if np.real(np.trace(W_a)) > 0 else np.zeros(M, complex)
    w_j = (extract_rank_one(W_j)[0] if p_j > 0 and np.real(np.trace(W_j)) > 1e-6 * p_j
           else np.zeros(M, complex))
    cands.append(("sca", w_a, w_j))
    cands.append(("mrt", _mrt_vec(ch.h_ab, p_a), _mrt_vec(ch.h_je, p_j)))
    cands.append(("mrt_alice_only", _mrt_vec(ch.h_ab, p_a), np.zeros(M, complex)))
    if warm is not None:
        cands.append(("warm", np.asarray(warm[0], complex), np.asarray(warm[1], complex)))
    best = None
    for name, wa, wj in cands:
        Wa, Wj = np.outer(wa, wa.conj()), np.outer(wj, wj.conj())
        r = sc_rate_lifted(Wa, Wj, ch, imp)
        if best is None or r > best[0] + 1e-12:
            best = (r, name, wa, wj, Wa, Wj)
    r, name, wa, wj, Wa, Wj = best
    flags = [] if rank_ok else ["rank-one ratio below tolerance after penalty schedule"]
    return BeamResult(w_a=wa, w_j=wj, W_a=Wa, W_j=Wj, R_r=None, rate=r,
                      ratio_a=_rank_ratio(W_a), ratio_j=_rank_ratio(W_j),
                      rank_one_ok=rank_ok, source=name, solves=solves, flags=flags, log=log)


def _mrt_vec(h, power):
    h = np.asarray(h, dtype=complex)
    n = np.linalg.norm(h)
    if n == 0 or power <= 0:
        return np.zeros(h.size, complex)
    w = h * np.sqrt(power) / n
    if abs(w[0]) > 0:
        w = w * (np.conj(w[0]) / abs(w[0]))
    return w


mrt_vector = _mrt_vec
