import dataclasses
import time

import numpy as np
import pytest

from uavscs.geometry import slot_channels
from uavscs.pipeline import run_bcd, run_benchmark, run_two_phase
from uavscs.scenario import Impairments, Scenario, preset_scenario

# criterion id -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}
# wall-clock seconds of the cached end-to-end runs
TIMINGS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}")


def small_scenario(**kw):
    """Six-slot mission that keeps the end-to-end tests fast."""
    base = preset_scenario(
        "case1", alice_end=(30.0, 0.0), jack_end=(30.0, 0.0), horizon=3.0,
        bob_pos=(10.0, 20.0), eve_pos=(20.0, 20.0), targets=((5.0, 10.0), (25.0, 10.0)),
        slots_per_target=1)
    solver = dataclasses.replace(base.solver, max_bcd_iter=3)
    return base.replace(solver=solver, **kw)


def random_psd(rng, M, power, rank=None):
    """Random Hermitian PSD matrix with trace ``power``."""
    r = M if rank is None else rank
    G = rng.normal(size=(M, r)) + 1j * rng.normal(size=(M, r))
    W = G @ G.conj().T
    return W * (power / np.trace(W).real)


def random_config(rng, M=None, rank_one=False):
    """Random scenario geometry, impairments and beams for rate/gradient checks."""
    M = int(rng.integers(1, 7)) if M is None else M
    s = Scenario(
        alice_start=(0.0, 0.0), alice_end=(100.0, 0.0), jack_start=(0.0, 0.0),
        jack_end=(100.0, 0.0),
        alt_alice=float(rng.uniform(80, 160)), alt_jack=float(rng.uniform(40, 60)),
        bob_pos=tuple(rng.uniform(-100, 200, 2)), eve_pos=tuple(rng.uniform(-100, 200, 2)),
        targets=((50.0, 30.0),), num_antennas=M, spacing_ratio=float(rng.uniform(0.3, 0.7)),
        resid_jam_bob=float(rng.uniform(0, 1)), resid_jam_eve=float(rng.uniform(0, 1)),
        resid_sense_bob=float(rng.uniform(0, 1)), resid_sense_eve=float(rng.uniform(0, 1)),
        noise_bob=float(10 ** rng.uniform(-12, -10)), noise_eve=float(10 ** rng.uniform(-12, -10)),
    )
    ua = rng.uniform(-100, 200, 2)
    uj = rng.uniform(-100, 200, 2)
    rank = 1 if rank_one else None
    W_a = random_psd(rng, M, rng.uniform(0.05, 1.0), rank)
    W_j = random_psd(rng, M, rng.uniform(0.0, 0.3), rank)
    R_r = random_psd(rng, M, rng.uniform(0.0, 0.5))
    return s, ua, uj, W_a, W_j, R_r, slot_channels(ua, uj, s)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def case1():
    return preset_scenario("case1")


@pytest.fixture
def table_imp():
    return Impairments(0.01, 1.0, 0.01, 1.0, 1e-11, 1e-11)


# ----------------------------------------------------------------- cached end-to-end runs

@pytest.fixture(scope="session")
def case1_bcd():
    t0 = time.perf_counter()
    res = run_bcd(preset_scenario("case1"))
    TIMINGS["case1_bcd"] = time.perf_counter() - t0
    return res


@pytest.fixture(scope="session")
def case1_scs(case1_bcd):
    return run_two_phase(preset_scenario("case1"), bcd=case1_bcd)


@pytest.fixture(scope="session")
def case1_benchmarks():
    s = preset_scenario("case1")
    return {name: run_benchmark(name, s) for name in ("fhf", "fhf-bf", "single")}
