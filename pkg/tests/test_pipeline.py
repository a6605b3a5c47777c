import dataclasses

import numpy as np
import pytest

from conftest import small_scenario
from uavscs.metrics import asr
from uavscs.pipeline import (
    consistency_error,
    recompute_rates,
    run_bcd,
    run_benchmark,
    run_scheme,
    run_two_phase,
)
from uavscs.trajectory import check_trajectory


@pytest.fixture(scope="module")
def small():
    return small_scenario()


@pytest.fixture(scope="module")
def small_bcd(small):
    return run_bcd(small)


def test_bcd_trace_nondecreasing_and_feasible(small, small_bcd):
    tr = small_bcd.trace
    assert len(tr) - 1 <= small.solver.max_bcd_iter
    assert all(b >= a - 1e-6 for a, b in zip(tr, tr[1:]))
    assert tr[-1] > tr[0]
    d_max = small.v_max * small.slot_len
    assert check_trajectory(small_bcd.traj_alice, small.alice_end, d_max) == []
    assert check_trajectory(small_bcd.traj_jack, small.jack_end, d_max,
                            small_bcd.traj_alice, small.d_min) == []
    assert asr(small_bcd.rates) == pytest.approx(tr[-1], abs=1e-12)


def test_huge_tolerance_stops_after_one_iteration(small):
    s = small.replace(solver=dataclasses.replace(small.solver, bcd_tol=1e6))
    assert len(run_bcd(s).trace) == 2


def test_two_phase_result(small, small_bcd):
    r = run_two_phase(small, bcd=small_bcd)
    assert r.violations == []
    assert r.asr_overall == pytest.approx(np.mean(r.rates), abs=1e-12)
    assert consistency_error(r) <= 1e-12
    np.testing.assert_allclose(recompute_rates(r), r.rates, atol=1e-12)
    assert len(r.sensing) == 2
    assert all(rep.satisfied for rep in r.sensing)
    assert [rep.slot for rep in r.sensing] == r.assignment.sensing_slots
    for n in range(1, r.N + 1):
        assert r.slot_phase(n) == ("scs" if n in r.assignment.sensing_slots else "sc")
    assert r.asr_sc is not None and r.asr_scs is not None
    assert r.bcd_trace == small_bcd.trace


def test_all_slots_sensing_leaves_no_communication_average(small, small_bcd):
    s = small.replace(targets=((5.0, 10.0), (15.0, 10.0), (25.0, 10.0)), slots_per_target=2)
    r = run_two_phase(s, bcd=small_bcd)
    assert r.asr_sc is None
    assert r.asr_scs == pytest.approx(r.asr_overall)


def test_unreachable_threshold_degrades(small, small_bcd):
    r = run_two_phase(small.replace(gamma_sense=1.0), bcd=small_bcd)
    assert r.degraded
    assert any("sensing infeasible" in v for v in r.violations)
    assert not any(rep.feasible for rep in r.sensing)


def test_benchmarks(small):
    single = run_benchmark("single", small)
    assert single.traj_jack is None
    assert all(np.all(b.W_j == 0) for b in single.beams)
    fhf = run_benchmark("fhf", small)
    fhf_bf = run_benchmark("FHF_BF", small)
    assert fhf_bf.scheme == "fhf-bf"
    np.testing.assert_array_equal(fhf.traj_alice.waypoints, fhf_bf.traj_alice.waypoints)
    for r in (single, fhf, fhf_bf):
        assert consistency_error(r) <= 1e-12
    assert fhf_bf.asr_overall >= fhf.asr_overall - 1e-6
    assert all(rep.satisfied for rep in fhf_bf.sensing)
    with pytest.raises(ValueError):
        run_scheme("carol", small)


def test_parallel_slots_match_serial(small):
    s = small.replace(solver=dataclasses.replace(small.solver, max_bcd_iter=1))
    a, b = run_bcd(s, workers=1), run_bcd(s, workers=2)
    assert a.trace == b.trace
    np.testing.assert_array_equal(a.w_alice, b.w_alice)


@pytest.mark.slow
def test_vanishing_threshold_reduces_to_bcd():
    # eve-side sensing residual off, otherwise the sensing covariance acts as jamming
    s = small_scenario(resid_sense_eve=0.0, gamma_sense=1e-12)
    s = s.replace(solver=dataclasses.replace(s.solver, beam_tol=1e-7, max_beam_iter=400))
    bcd = run_bcd(s)
    r = run_two_phase(s, bcd=bcd)
    assert r.asr_overall == pytest.approx(bcd.trace[-1], abs=1e-3)
