"""Mission configuration: the Scenario/SolverConfig types, JSON loading and unit handling.

Scenario documents are JSON objects whose keys carry their unit as a suffix
(``p_max_alice_dbm``, ``alt_alice_m``, ``resid_jam_bob_db`` ...).  Every power-like
quantity may alternatively be given in linear units (``p_max_alice_w``,
``resid_jam_bob``), which is the only way to express a perfect-cancellation
residual level of 0.  Unspecified keys fall back to the case-1 defaults.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np


class ScenarioError(ValueError):
    """Invalid scenario document or invariant violation; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(lin):
    return 10.0 * np.log10(np.asarray(lin, dtype=float))


@dataclass(frozen=True)
class SolverConfig:
    trust_radius_init: float = 5.0
    trust_radius_min: float = 1e-3
    shrink_alice: float = 0.9
    shrink_jack: float = 0.9
    bcd_tol: float = 1e-3
    beam_tol: float = 1e-3
    alice_tol: float = 1e-3
    jack_tol: float = 1e-3
    penalty_init: float = 1.0
    penalty_shrink: float = 0.5
    rank_one_tol: float = 0.99
    kkt_tol: float = 1e-6
    max_bcd_iter: int = 30
    max_beam_iter: int = 100
    max_penalty_rounds: int = 10
    max_traj_iter: int = 100
    max_newton_iter: int = 400

    def __post_init__(self):
        for name in ("bcd_tol", "beam_tol", "alice_tol", "jack_tol", "kkt_tol",
                     "penalty_init", "trust_radius_min"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"solver.{name}", "must be > 0")
        if self.trust_radius_init < 0:
            raise ScenarioError("solver.trust_radius_init", "must be >= 0")
        for name in ("shrink_alice", "shrink_jack", "penalty_shrink"):
            if not 0 < getattr(self, name) < 1:
                raise ScenarioError(f"solver.{name}", "must lie in (0, 1)")
        if not 0 < self.rank_one_tol <= 1:
            raise ScenarioError("solver.rank_one_tol", "must lie in (0, 1]")
        for name in ("max_bcd_iter", "max_beam_iter", "max_penalty_rounds",
                     "max_traj_iter", "max_newton_iter"):
            if int(getattr(self, name)) < 1:
                raise ScenarioError(f"solver.{name}", "must be >= 1")


@dataclass(frozen=True)
class Impairments:
    """Residual interference levels and receiver noise powers of Bob and Eve."""

    jam_bob: float
    jam_eve: float
    sense_bob: float
    sense_eve: float
    noise_bob: float
    noise_eve: float

    def without_jammer(self) -> "Impairments":
        return dataclasses.replace(self, jam_bob=0.0, jam_eve=0.0)


@dataclass(frozen=True)
class MissionGrid:
    N: int
    N_s: int
    N_c: int
    D_max: float


@dataclass(frozen=True)
class Scenario:
    alice_start: tuple = (0.0, 0.0)
    alice_end: tuple = (100.0, 0.0)
    jack_start: tuple = (0.0, 0.0)
    jack_end: tuple = (100.0, 0.0)
    alt_alice: float = 120.0
    alt_jack: float = 100.0
    bob_pos: tuple = (40.0, 60.0)
    eve_pos: tuple = (60.0, 60.0)
    targets: tuple = ()
    num_antennas: int = 4
    spacing_ratio: float = 0.5
    p_max_alice: float = 1.0
    p_max_jack: float = float(dbm_to_watts(25.0))
    noise_bob: float = 1e-11
    noise_eve: float = 1e-11
    pathloss_ref: float = 1e-3
    resid_jam_bob: float = 0.01
    resid_jam_eve: float = 1.0
    resid_sense_bob: float = 0.01
    resid_sense_eve: float = 1.0
    horizon: float = 10.0
    slot_len: float = 0.5
    v_max: float = 20.0
    d_min: float = 20.0
    gamma_sense: float = 1e-5
    slots_per_target: int = 2
    tau_weight: float = 0.5
    solver: SolverConfig = field(default_factory=SolverConfig)
    rng_seed: int = 0

    def __post_init__(self):
        _validate(self)

    @property
    def K(self) -> int:
        return len(self.targets)

    @property
    def M(self) -> int:
        return self.num_antennas

    @property
    def N(self) -> int:
        return mission_grid(self).N

    def impairments(self) -> Impairments:
        return Impairments(self.resid_jam_bob, self.resid_jam_eve,
                           self.resid_sense_bob, self.resid_sense_eve,
                           self.noise_bob, self.noise_eve)

    def targets_array(self) -> np.ndarray:
        return np.asarray(self.targets, dtype=float).reshape(-1, 2)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


def _slot_count(horizon: float, slot_len: float) -> int:
    ratio = horizon / slot_len
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ScenarioError("horizon", f"T/dt = {ratio!r} is not a positive integer")
    return n


def mission_grid(s: Scenario) -> MissionGrid:
    """Slot counts and per-slot displacement bound; every slot is an SC candidate."""
    n = _slot_count(s.horizon, s.slot_len)
    return MissionGrid(N=n, N_s=s.slots_per_target * len(s.targets), N_c=n,
                       D_max=s.v_max * s.slot_len)


def _validate(s: Scenario) -> None:
    for name in ("alice_start", "alice_end", "jack_start", "jack_end", "bob_pos", "eve_pos"):
        value = getattr(s, name)
        if len(value) != 2 or not all(math.isfinite(float(v)) for v in value):
            raise ScenarioError(name, "must be a finite 2-D position")
    for k, g in enumerate(s.targets):
        if len(g) != 2 or not all(math.isfinite(float(v)) for v in g):
            raise ScenarioError(f"targets[{k}]", "must be a finite 2-D position")
    for name in ("alt_alice", "alt_jack", "p_max_alice", "p_max_jack", "noise_bob",
                 "noise_eve", "pathloss_ref", "gamma_sense", "horizon", "slot_len",
                 "v_max"):
        if not getattr(s, name) > 0:
            raise ScenarioError(name, "must be strictly positive")
    if s.d_min < 0:
        raise ScenarioError("d_min", "must be non-negative")
    if not s.spacing_ratio > 0:
        raise ScenarioError("spacing_ratio", "must be strictly positive")
    for name in ("resid_jam_bob", "resid_jam_eve", "resid_sense_bob", "resid_sense_eve",
                 "tau_weight"):
        if not 0.0 <= getattr(s, name) <= 1.0:
            raise ScenarioError(name, "must lie in [0, 1]")
    if int(s.num_antennas) != s.num_antennas or s.num_antennas < 1:
        raise ScenarioError("num_antennas", "must be an integer >= 1")
    if int(s.slots_per_target) != s.slots_per_target or s.slots_per_target < 1:
        raise ScenarioError("slots_per_target", "must be an integer >= 1")
    n = _slot_count(s.horizon, s.slot_len)
    if s.slots_per_target * len(s.targets) > n:
        raise ScenarioError("slots_per_target",
                            f"{s.slots_per_target} x {len(s.targets)} targets exceeds N = {n}")
    dh2 = (s.alt_alice - s.alt_jack) ** 2
    for tag, a, j in (("start", s.alice_start, s.jack_start), ("end", s.alice_end, s.jack_end)):
        sep2 = (a[0] - j[0]) ** 2 + (a[1] - j[1]) ** 2 + dh2
        if sep2 < s.d_min ** 2:
            raise ScenarioError(f"jack_{tag}", f"UAV separation at {tag} is below d_min")
    d_max = s.v_max * s.slot_len
    for name, a, b in (("alice_end", s.alice_start, s.alice_end),
                       ("jack_end", s.jack_start, s.jack_end)):
        if math.dist(a, b) > n * d_max * (1 + 1e-12):
            raise ScenarioError(name, "end point unreachable within the horizon at v_max")


def default_targets(k: int, points) -> tuple:
    """K targets evenly spaced along the horizontal midline of the bounding box of ``points``."""
    pts = np.asarray(points, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    y = 0.5 * (lo[1] + hi[1])
    xs = lo[0] + (hi[0] - lo[0]) * (np.arange(k) + 0.5) / max(k, 1)
    return tuple((float(x), float(y)) for x in xs)


# --------------------------------------------------------------------------- documents

# (scenario field, unit-suffixed key, converter, linear key)
_QUANTITIES = [
    ("p_max_alice", "p_max_alice_dbm", dbm_to_watts, "p_max_alice_w"),
    ("p_max_jack", "p_max_jack_dbm", dbm_to_watts, "p_max_jack_w"),
    ("noise_bob", "noise_bob_dbm", dbm_to_watts, "noise_bob_w"),
    ("noise_eve", "noise_eve_dbm", dbm_to_watts, "noise_eve_w"),
    ("gamma_sense", "gamma_sense_dbm", dbm_to_watts, "gamma_sense_w"),
    ("pathloss_ref", "pathloss_ref_db", db_to_linear, "pathloss_ref"),
    ("resid_jam_bob", "resid_jam_bob_db", db_to_linear, "resid_jam_bob"),
    ("resid_jam_eve", "resid_jam_eve_db", db_to_linear, "resid_jam_eve"),
    ("resid_sense_bob", "resid_sense_bob_db", db_to_linear, "resid_sense_bob"),
    ("resid_sense_eve", "resid_sense_eve_db", db_to_linear, "resid_sense_eve"),
]

_PLAIN = {
    "alice_start_m": "alice_start", "alice_end_m": "alice_end",
    "jack_start_m": "jack_start", "jack_end_m": "jack_end",
    "alt_alice_m": "alt_alice", "alt_jack_m": "alt_jack",
    "bob_pos_m": "bob_pos", "eve_pos_m": "eve_pos", "targets_m": "targets",
    "num_antennas": "num_antennas", "spacing_ratio": "spacing_ratio",
    "horizon_s": "horizon", "slot_len_s": "slot_len", "v_max_mps": "v_max",
    "d_min_m": "d_min", "slots_per_target": "slots_per_target",
    "tau_weight": "tau_weight", "rng_seed": "rng_seed",
}

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_NUM = {"type": "number"}

SCENARIO_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "uavscs scenario",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "preset": {"enum": ["case1", "case2"]},
        "num_targets": {"type": "integer", "minimum": 0},
        "alice_start_m": _POINT, "alice_end_m": _POINT,
        "jack_start_m": _POINT, "jack_end_m": _POINT,
        "alt_alice_m": _NUM, "alt_jack_m": _NUM,
        "bob_pos_m": _POINT, "eve_pos_m": _POINT,
        "targets_m": {"type": "array", "items": _POINT},
        "num_antennas": {"type": "integer"},
        "spacing_ratio": _NUM,
        "horizon_s": _NUM, "slot_len_s": _NUM, "v_max_mps": _NUM, "d_min_m": _NUM,
        "slots_per_target": {"type": "integer"},
        "tau_weight": _NUM,
        "rng_seed": {"type": "integer"},
        **{q[1]: _NUM for q in _QUANTITIES},
        **{q[3]: _NUM for q in _QUANTITIES},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {f.name: _NUM for f in dataclasses.fields(SolverConfig)},
        },
    },
}

_PRESETS = {
    "case1": {},
    "case2": {"eve_pos": (40.0, -60.0), "num_targets": 6},
}


def _preset_defaults(name: str) -> dict:
    base = dict(_PRESETS[name])
    k = base.pop("num_targets", 4)
    base["_num_targets"] = k
    return base


def load_scenario(document: str | bytes | dict | Path | None = None) -> Scenario:
    """Parse a JSON scenario document (text, dict or path) into a validated Scenario.

    An empty document yields the case-1 defaults.  Raises ScenarioError on parse
    failures, schema violations and invariant violations.
    """
    if document is None:
        doc: dict = {}
    elif isinstance(document, dict):
        doc = dict(document)
    else:
        if isinstance(document, Path):
            document = document.read_text(encoding="utf-8")
        try:
            doc = json.loads(document) if str(document).strip() else {}
        except json.JSONDecodeError as exc:
            raise ScenarioError("document", f"JSON parse failure: {exc}") from None
    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "document"
        raise ScenarioError(where, exc.message) from None

    fields: dict[str, Any] = _preset_defaults(doc.pop("preset", "case1"))
    num_targets = doc.pop("num_targets", None)
    if num_targets is not None:
        fields["_num_targets"] = num_targets

    for key, name in _PLAIN.items():
        if key in doc:
            value = doc[key]
            if key == "targets_m":
                value = tuple(tuple(float(c) for c in g) for g in value)
            elif key.endswith("_m") and isinstance(value, list):
                value = tuple(float(c) for c in value)
            fields[name] = value
    for name, unit_key, convert, lin_key in _QUANTITIES:
        if unit_key in doc and lin_key in doc and unit_key != lin_key:
            raise ScenarioError(name, f"both {unit_key} and {lin_key} given")
        if unit_key in doc:
            fields[name] = float(convert(doc[unit_key]))
        elif lin_key in doc:
            fields[name] = float(doc[lin_key])
    if "solver" in doc:
        try:
            fields["solver"] = SolverConfig(**{
                k: (int(v) if k.startswith("max_") else float(v))
                for k, v in doc["solver"].items()})
        except ScenarioError:
            raise
    k = fields.pop("_num_targets")
    if "targets" not in fields:
        anchors = [fields.get(n, getattr(Scenario, n)) for n in
                   ("alice_start", "alice_end", "jack_start", "jack_end", "bob_pos", "eve_pos")]
        fields["targets"] = default_targets(k, anchors)
    return Scenario(**fields)


def preset_scenario(name: str = "case1", **overrides) -> Scenario:
    sc = load_scenario({"preset": name})
    return sc.replace(**overrides) if overrides else sc


def scenario_to_document(s: Scenario) -> dict:
    """Linear-unit JSON document that round-trips through load_scenario."""
    doc: dict[str, Any] = {}
    for key, name in _PLAIN.items():
        value = getattr(s, name)
        if name == "targets":
            value = [list(g) for g in value]
        elif isinstance(value, tuple):
            value = list(value)
        doc[key] = value
    for name, _, _, lin_key in _QUANTITIES:
        doc[lin_key] = getattr(s, name)
    doc["solver"] = dataclasses.asdict(s.solver)
    return doc


def bundled_scenario_path(name: str) -> Path:
    return Path(str(resources.files("uavscs") / "scenarios" / f"{name}.json"))
