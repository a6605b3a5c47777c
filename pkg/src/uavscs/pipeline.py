"""Mission-level drivers: block coordinate descent, the two-phase pipeline and the benchmarks."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import slot_channels
from .metrics import SlotBeams, asr, beampattern_gain, secrecy_rate
from .sc_beamforming import mrt_vector, solve_sc_slot
from .scheduling import SlotAssignment, distance_table, greedy_select
from .scs_beamforming import SensingInfeasible, sensing_row, solve_scs_slot
from .trajectory import (
    RateContext,
    Trajectory,
    check_trajectory,
    fhf_trajectory,
    initial_trajectories,
    solve_alice_trajectory,
    solve_jack_trajectory,
)

log = logging.getLogger(__name__)

SCHEMES = ("scs", "fhf", "fhf-bf", "single")


@dataclass
class SensingReport:
    slot: int  # 1-based
    target: int  # 0-based
    gain: float
    gamma: float
    feasible: bool = True  # False when Gamma exceeded the achievable gain

    @property
    def satisfied(self) -> bool:
        return self.gain >= self.gamma * (1 - 1e-8)


@dataclass
class BcdResult:
    traj_alice: Trajectory
    traj_jack: Trajectory
    w_alice: np.ndarray  # (N, M)
    w_jack: np.ndarray  # (N, M)
    trace: list
    rates: np.ndarray
    beam_solves: int = 0
    traj_solves: int = 0
    flags: list = field(default_factory=list)


@dataclass
class MissionResult:
    scheme: str
    scenario: object
    traj_alice: Trajectory
    traj_jack: Optional[Trajectory]  # None when Jack is absent
    beams: list  # SlotBeams per slot
    rates: np.ndarray  # clamped per-slot secrecy rates
    assignment: SlotAssignment
    sensing: list  # SensingReport per sensing slot
    asr_sc: Optional[float]
    asr_scs: Optional[float]
    asr_overall: float
    bcd_trace: list
    violations: list  # named feasibility violations; non-empty means degraded
    notes: list  # informational findings (not degrading)
    wall_clock: float
    solve_counts: dict
    rng_seed: int

    @property
    def degraded(self) -> bool:
        return bool(self.violations)

    @property
    def N(self) -> int:
        return len(self.beams)

    def slot_phase(self, n: int) -> str:
        """'scs' for sensing slots (1-based n), 'sc' otherwise."""
        return "scs" if n in set(self.assignment.sensing_slots) else "sc"


# --------------------------------------------------------------------------- helpers

def _budgets(s):
    return (s.p_max_alice, s.p_max_jack)


def _outer(w):
    return np.outer(w, np.conj(w))


def _slot_rates(s, ua, uj, w_a, w_j, imp):
    out = np.empty(len(ua))
    for n in range(len(ua)):
        ch = slot_channels(ua[n], uj[n], s)
        out[n] = secrecy_rate("sc", SlotBeams.sc(_outer(w_a[n]), _outer(w_j[n])), ch, imp)
    return out


def _solve_slot_task(args):
    s, ua_n, uj_n, warm = args
    ch = slot_channels(ua_n, uj_n, s)
    return solve_sc_slot(ch, s.impairments(), _budgets(s), s.solver, warm=warm)


def _solve_slots(s, ua, uj, w_a, w_j, workers: int, use_warm: bool = True):
    tasks = [(s, ua[n], uj[n], (w_a[n], w_j[n]) if use_warm else None) for n in range(len(ua))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_solve_slot_task, tasks))
    return [_solve_slot_task(t) for t in tasks]


def _mrt_beams(s, ua, uj):
    M = s.num_antennas
    w_a = np.zeros((len(ua), M), complex)
    w_j = np.zeros((len(ua), M), complex)
    for n in range(len(ua)):
        ch = slot_channels(ua[n], uj[n], s)
        w_a[n] = mrt_vector(ch.h_ab, s.p_max_alice)
        w_j[n] = mrt_vector(ch.h_je, s.p_max_jack)
    return w_a, w_j


# --------------------------------------------------------------------------- block coordinate descent

def run_bcd(s, workers: int = 1) -> BcdResult:
    """Alternate per-slot beamforming, Alice's trajectory and Jack's trajectory.

    Starts from the straight-line paths with full-power MRT beams.  Every block keeps
    the best of its input and its output, so the clamped ASR trace is nondecreasing.
    Stops when one outer iteration improves the ASR by at most ``bcd_tol``.
    """
    cfg = s.solver
    imp = s.impairments()
    ctx = RateContext.from_scenario(s, imp)
    ta, tj = initial_trajectories(s)
    w_a, w_j = _mrt_beams(s, ta.waypoints, tj.waypoints)
    rates = _slot_rates(s, ta.waypoints, tj.waypoints, w_a, w_j, imp)
    trace = [asr(rates)]
    res = BcdResult(ta, tj, w_a, w_j, trace, rates)
    for it in range(cfg.max_bcd_iter):
        slots = _solve_slots(s, ta.waypoints, tj.waypoints, w_a, w_j, workers)
        res.beam_solves += sum(r.solves for r in slots)
        for n, r in enumerate(slots):
            res.flags.extend(f"iteration {it + 1} slot {n + 1}: {f}" for f in r.flags)
        w_a = np.array([r.w_a for r in slots])
        w_j = np.array([r.w_j for r in slots])
        Wa = np.einsum("ni,nj->nij", w_a, w_a.conj())
        Wj = np.einsum("ni,nj->nij", w_j, w_j.conj())
        ra = solve_alice_trajectory(ta, tj, Wa, Wj, ctx, s, cfg)
        ta = ra.trajectory
        rj = solve_jack_trajectory(tj, ta, Wa, Wj, ctx, s, cfg)
        tj = rj.trajectory
        res.traj_solves += len(ra.radii) + len(rj.radii)
        rates = _slot_rates(s, ta.waypoints, tj.waypoints, w_a, w_j, imp)
        value = asr(rates)
        log.info("bcd iteration %d: ASR %.6f (beams %.6f, alice %.6f, jack %.6f)", it + 1, value,
                 float(np.mean([max(r.rate, 0.0) for r in slots])), ra.asr, rj.asr)
        improvement = value - trace[-1]
        trace.append(value)
        if improvement <= cfg.bcd_tol:
            break
    res.traj_alice, res.traj_jack, res.w_alice, res.w_jack, res.rates = ta, tj, w_a, w_j, rates
    return res


# --------------------------------------------------------------------------- mission assembly

def _assemble(scheme, s, ta, tj, beams, assignment, sensing, trace, violations, notes,
              t0, counts, enforce_separation: bool = True) -> MissionResult:
    imp = s.impairments() if tj is not None else s.impairments().without_jammer()
    uj = tj.waypoints if tj is not None else ta.waypoints
    sensing_set = set(assignment.sensing_slots)
    rates = np.empty(len(beams))
    for n in range(len(beams)):
        ch = slot_channels(ta.waypoints[n], uj[n], s)
        phase = "scs" if n + 1 in sensing_set else "sc"
        rates[n] = secrecy_rate(phase, beams[n], ch, imp)
    sel = [n - 1 for n in sorted(sensing_set)]
    rest = [n for n in range(len(beams)) if n + 1 not in sensing_set]
    d_max = s.v_max * s.slot_len
    violations, notes = list(violations), list(notes)
    violations += [f"Alice: {v}" for v in check_trajectory(ta, s.alice_end, d_max)]
    if tj is not None:
        violations += [f"Jack: {v}" for v in check_trajectory(tj, s.jack_end, d_max)]
        sep = [f"Jack: {v}" for v in check_trajectory(tj, s.jack_end, d_max, ta, s.d_min)
               if v.startswith("separation")]
        # fly-hover-fly benchmarks report separation without enforcing it
        (violations if enforce_separation else notes).extend(sep)
    for n, b in enumerate(beams):
        violations += [f"slot {n + 1}: {v}" for v in b.check(s.p_max_alice, s.p_max_jack)]
    return MissionResult(
        scheme=scheme, scenario=s, traj_alice=ta, traj_jack=tj, beams=beams, rates=rates,
        assignment=assignment, sensing=sensing,
        asr_sc=asr(rates[rest]) if rest else None,
        asr_scs=asr(rates[sel]) if sel else None,
        asr_overall=asr(rates), bcd_trace=list(trace), violations=violations, notes=notes,
        wall_clock=time.perf_counter() - t0, solve_counts=dict(counts), rng_seed=s.rng_seed)


def _gain(s, beams, ua_n, uj_n, target):
    return beampattern_gain(beams, ua_n, uj_n, target, s.alt_alice, s.alt_jack, s.spacing_ratio)


def _sensing_phase(s, ta, tj, w_a, w_j, enforce: bool, optimize: bool):
    """Greedy slot selection, then per-slot sensing beams (or just gain reports)."""
    targets = s.targets_array()
    uj = tj.waypoints if tj is not None else ta.waypoints
    D = distance_table(ta, tj, targets, s)
    assignment = greedy_select(D, s.slots_per_target) if len(targets) else SlotAssignment(())
    beams = [SlotBeams.sc(_outer(w_a[n]), _outer(w_j[n])) for n in range(ta.N)]
    reports, violations, notes = [], [], []
    solves = 0
    imp = s.impairments()
    for n, k in sorted(assignment.target_of().items()):
        i = n - 1
        if optimize:
            ch = slot_channels(ta.waypoints[i], uj[i], s)
            row = sensing_row(ta.waypoints[i], uj[i], targets[k], s)
            try:
                r = solve_scs_slot(ch, imp, _budgets(s), row, s.solver, sc_beams=(w_a[i], w_j[i]))
            except SensingInfeasible as exc:
                violations.append(f"slot {n}: sensing infeasible for target {k + 1} "
                                  f"(max gain {exc.max_gain:.6g} W < {exc.gamma:.6g} W)")
                g = _gain(s, beams[i], ta.waypoints[i], uj[i], targets[k])
                reports.append(SensingReport(n, k, g, s.gamma_sense, feasible=False))
                continue
            solves += r.solves
            notes.extend(f"slot {n}: {f}" for f in r.flags)
            beams[i] = SlotBeams(r.W_a, r.W_j, r.R_r)
        g = _gain(s, beams[i], ta.waypoints[i], uj[i], targets[k])
        rep = SensingReport(n, k, g, s.gamma_sense)
        reports.append(rep)
        if not rep.satisfied:
            msg = f"slot {n}: beampattern gain {g:.6g} W below threshold {s.gamma_sense:.6g} W"
            (violations if enforce else notes).append(msg)
    return assignment, beams, reports, violations, notes, solves


def run_two_phase(s, bcd: Optional[BcdResult] = None, workers: int = 1) -> MissionResult:
    """Full pipeline: BCD over all slots, greedy sensing slots, sensing-slot beams.

    Unselected slots keep their communication beams.  A precomputed ``bcd`` result for
    the same scenario (sensing parameters aside) may be passed to skip the first phase.
    """
    t0 = time.perf_counter()
    if bcd is None:
        bcd = run_bcd(s, workers=workers)
    assignment, beams, reports, violations, notes, solves = _sensing_phase(
        s, bcd.traj_alice, bcd.traj_jack, bcd.w_alice, bcd.w_jack, enforce=True, optimize=True)
    notes = [f"bcd {f}" for f in bcd.flags] + notes
    counts = {"bcd_iterations": len(bcd.trace) - 1, "beam_solves": bcd.beam_solves,
              "trajectory_solves": bcd.traj_solves, "sensing_solves": solves}
    return _assemble("scs", s, bcd.traj_alice, bcd.traj_jack, beams, assignment, reports,
                     bcd.trace, violations, notes, t0, counts)


def run_benchmark(scheme: str, s, workers: int = 1) -> MissionResult:
    """Benchmarks on fly-hover-fly paths.

    fhf     full-power MRT (Alice toward Bob, Jack toward Eve), no optimization
    fhf-bf  optimized communication and sensing beams on the same paths
    single  Alice alone with full-power MRT toward Bob; Jack absent
    """
    t0 = time.perf_counter()
    scheme = scheme.lower().replace("_", "-")
    ta = fhf_trajectory(s, "alice")
    if scheme == "single":
        M = s.num_antennas
        w_a = np.array([mrt_vector(slot_channels(u, u, s).h_ab, s.p_max_alice) for u in ta.waypoints])
        w_j = np.zeros((ta.N, M), complex)
        assignment, beams, reports, violations, notes, _ = _sensing_phase(
            s, ta, None, w_a, w_j, enforce=False, optimize=False)
        return _assemble("single", s, ta, None, beams, assignment, reports, [], violations,
                         notes, t0, {})
    tj = fhf_trajectory(s, "jack")
    w_a, w_j = _mrt_beams(s, ta.waypoints, tj.waypoints)
    if scheme == "fhf":
        assignment, beams, reports, violations, notes, _ = _sensing_phase(
            s, ta, tj, w_a, w_j, enforce=False, optimize=False)
        return _assemble("fhf", s, ta, tj, beams, assignment, reports, [], violations, notes,
                         t0, {}, enforce_separation=False)
    if scheme == "fhf-bf":
        slots = _solve_slots(s, ta.waypoints, tj.waypoints, w_a, w_j, workers, use_warm=False)
        w_a = np.array([r.w_a for r in slots])
        w_j = np.array([r.w_j for r in slots])
        assignment, beams, reports, violations, notes, solves = _sensing_phase(
            s, ta, tj, w_a, w_j, enforce=True, optimize=True)
        notes = [f"slot {n + 1}: {f}" for n, r in enumerate(slots) for f in r.flags] + notes
        counts = {"beam_solves": sum(r.solves for r in slots), "sensing_solves": solves}
        return _assemble("fhf-bf", s, ta, tj, beams, assignment, reports, [], violations, notes,
                         t0, counts, enforce_separation=False)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def run_scheme(scheme: str, s, workers: int = 1) -> MissionResult:
    scheme = scheme.lower().replace("_", "-")
    if scheme == "scs":
        return run_two_phase(s, workers=workers)
    return run_benchmark(scheme, s, workers=workers)


# --------------------------------------------------------------------------- self-consistency

def recompute_rates(result: MissionResult) -> np.ndarray:
    """Clamped per-slot rates recomputed from the stored trajectories and beams."""
    s = result.scenario
    imp = s.impairments() if result.traj_jack is not None else s.impairments().without_jammer()
    ua = result.traj_alice.waypoints
    uj = result.traj_jack.waypoints if result.traj_jack is not None else ua
    sensing = set(result.assignment.sensing_slots)
    return np.array([secrecy_rate("scs" if n + 1 in sensing else "sc", result.beams[n],
                                  slot_channels(ua[n], uj[n], s), imp)
                     for n in range(result.N)])


def consistency_error(result: MissionResult) -> float:
    """Largest gap between stored and recomputed ASR figures."""
    rates = recompute_rates(result)
    sensing = set(result.assignment.sensing_slots)
    sel = [n for n in range(result.N) if n + 1 in sensing]
    rest = [n for n in range(result.N) if n + 1 not in sensing]
    gaps = [abs(asr(rates) - result.asr_overall), float(np.max(np.abs(rates - result.rates)))]
    if rest:
        gaps.append(abs(asr(rates[rest]) - result.asr_sc))
    if sel:
        gaps.append(abs(asr(rates[sel]) - result.asr_scs))
    return max(gaps)
