"""Command-line entry point: ``uavscs run | sweep | plot``.

Exit codes: 0 success, 2 degraded result (named violations), 1 error.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .pipeline import SCHEMES, run_scheme
from .plotting import plot_rates, plot_sweep, plot_trajectory
from .results_io import CsvFormatError, write_csv, write_result
from .scenario import Scenario, ScenarioError, SolverConfig, default_targets, load_scenario

log = logging.getLogger("uavscs")

EXIT_OK, EXIT_ERROR, EXIT_DEGRADED = 0, 1, 2

# sweep parameters that set several scenario fields at once
_GROUPS = {
    "resid_bob": ("resid_jam_bob", "resid_sense_bob"),
    "resid_eve": ("resid_jam_eve", "resid_sense_eve"),
    "resid_jam": ("resid_jam_bob", "resid_jam_eve"),
    "resid_sense": ("resid_sense_bob", "resid_sense_eve"),
}


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    schemes: tuple
    out_dir: Path

    def __post_init__(self):
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if not self.schemes:
            raise ValueError("sweep needs at least one scheme")
        for sch in self.schemes:
            if sch not in SCHEMES:
                raise ValueError(f"unknown scheme {sch!r}; expected one of {SCHEMES}")
        _field_names(self.param)


def _field_names(param: str) -> tuple:
    if param in _GROUPS:
        return _GROUPS[param]
    if param == "num_targets":
        return ("targets",)
    if param.startswith("solver."):
        name = param.split(".", 1)[1]
        if name not in {f.name for f in dataclasses.fields(SolverConfig)}:
            raise ValueError(f"unknown solver parameter {name!r}")
        return (param,)
    scalar = {f.name for f in dataclasses.fields(Scenario)} - {
        "alice_start", "alice_end", "jack_start", "jack_end", "bob_pos", "eve_pos",
        "targets", "solver"}
    if param not in scalar:
        raise ValueError(f"parameter {param!r} does not resolve to a scenario field")
    return (param,)


def apply_parameter(s: Scenario, param: str, value) -> Scenario:
    """Scenario with ``param`` set to ``value`` (typed like the current field)."""
    names = _field_names(param)
    if param == "num_targets":
        anchors = [s.alice_start, s.alice_end, s.jack_start, s.jack_end, s.bob_pos, s.eve_pos]
        return s.replace(targets=default_targets(int(value), anchors))
    if param.startswith("solver."):
        name = names[0].split(".", 1)[1]
        cur = getattr(s.solver, name)
        return s.replace(solver=dataclasses.replace(s.solver, **{name: type(cur)(value)}))
    changes = {}
    for name in names:
        cur = getattr(s, name)
        changes[name] = int(value) if isinstance(cur, int) else float(value)
    return s.replace(**changes)


def _load(path) -> Scenario:
    if path is None:
        return load_scenario(None)
    p = Path(path)
    if not p.is_file():
        raise ScenarioError("scenario", f"scenario file not found: {p}")
    return load_scenario(p)


# --------------------------------------------------------------------------- run

def cmd_run(args) -> int:
    s = _load(args.scenario)
    if args.seed is not None:
        s = s.replace(rng_seed=args.seed)
    result = run_scheme(args.scheme, s, workers=args.workers)
    write_result(result, args.out)
    print(f"{result.scheme}: ASR overall {result.asr_overall:.6f} bits/s/Hz "
          f"(communication slots {_opt(result.asr_sc)}, sensing slots {_opt(result.asr_scs)})")
    if result.degraded:
        for v in result.violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def _opt(v):
    return "n/a" if v is None else f"{v:.6f}"


# --------------------------------------------------------------------------- sweep

def _sweep_point(task):
    scheme, param, idx, value, s, out_dir = task
    point_dir = Path(out_dir) / f"{scheme}_{param}_{idx:02d}"
    try:
        sp = apply_parameter(s, param, value)
        result = run_scheme(scheme, sp)
        write_result(result, point_dir)
    except Exception as exc:  # recorded, the sweep continues
        return (scheme, param, value, None, None, None, None, False,
                f"error: {type(exc).__name__}: {exc}")
    gains = [g.gain for g in result.sensing]
    return (scheme, param, value, result.asr_sc, result.asr_scs, result.asr_overall,
            min(gains) if gains else None, not result.degraded,
            "degraded" if result.degraded else "ok")


def run_sweep(spec: SweepSpec, s: Scenario, workers: int = 1) -> list:
    tasks = [(sch, spec.param, i, v, s, spec.out_dir)
             for sch in spec.schemes for i, v in enumerate(spec.values)]
    Path(spec.out_dir).mkdir(parents=True, exist_ok=True)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    write_csv(Path(spec.out_dir) / "sweep.csv", "sweep", rows)
    return rows


def cmd_sweep(args) -> int:
    values = tuple(float(v) for v in args.values.split(",") if v.strip()) if args.values else ()
    schemes = tuple(x.strip() for x in args.schemes.split(",") if x.strip())
    spec = SweepSpec(args.param, values, schemes, Path(args.out))
    s = _load(args.scenario)
    rows = run_sweep(spec, s, workers=args.workers)
    for r in rows:
        print(f"{r[0]} {r[1]}={r[2]!r}: ASR {_opt(r[5])} [{r[8]}]")
    return EXIT_OK if all(r[8] == "ok" for r in rows) else EXIT_DEGRADED


# --------------------------------------------------------------------------- plot

def cmd_plot(args) -> int:
    if not args.run_dir and not args.sweep:
        raise ValueError("nothing to plot: give --run-dir and/or --sweep")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if args.run_dir:
        rd = Path(args.run_dir)
        written.append(plot_trajectory(rd / "trajectory.csv", out / "trajectory.svg"))
        written.append(plot_rates(rd / "rates.csv", out / "rates.svg"))
    if args.sweep:
        written.extend(plot_sweep(args.sweep, out))
    for p in written:
        print(p)
    return EXIT_OK


# --------------------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavscs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scheme and write result files")
    r.add_argument("--scenario", help="scenario JSON file (default: built-in case 1)")
    r.add_argument("--scheme", choices=SCHEMES, default="scs")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, help="override the scenario rng_seed")
    r.add_argument("--workers", type=int, default=1, help="processes for per-slot solves")
    r.add_argument("--log-solver", action="store_true", help="log solver progress to stderr")
    r.set_defaults(func=cmd_run)

    w = sub.add_parser("sweep", help="sweep one scenario parameter over several schemes")
    w.add_argument("--scenario")
    w.add_argument("--param", required=True,
                   help="scenario field, resid_bob/resid_eve/resid_jam/resid_sense, "
                        "num_targets or solver.<field>")
    w.add_argument("--values", required=True, help="comma-separated values")
    w.add_argument("--schemes", default="scs", help="comma-separated schemes")
    w.add_argument("--out", required=True)
    w.add_argument("--workers", type=int, default=1, help="processes for sweep points")
    w.add_argument("--log-solver", action="store_true")
    w.set_defaults(func=cmd_sweep)

    g = sub.add_parser("plot", help="render SVG charts from result/sweep CSVs")
    g.add_argument("--run-dir", help="directory written by 'run'")
    g.add_argument("--sweep", help="sweep.csv written by 'sweep'")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_plot, log_solver=False)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_solver:
        logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, CsvFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
