import json
import subprocess
import sys
from pathlib import Path

import pytest

from conftest import small_scenario
from uavscs.cli import EXIT_DEGRADED, EXIT_ERROR, EXIT_OK, SweepSpec, apply_parameter, main
from uavscs.results_io import RESULT_FILES, read_csv
from uavscs.scenario import preset_scenario, scenario_to_document


@pytest.fixture(scope="module")
def small_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("scen") / "small.json"
    p.write_text(json.dumps(scenario_to_document(small_scenario())))
    return p


def test_run_writes_result_files(small_file, tmp_path, capsys):
    assert main(["run", "--scenario", str(small_file), "--scheme", "fhf", "--out",
                 str(tmp_path)]) == EXIT_OK
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(RESULT_FILES)
    assert "fhf: ASR overall" in capsys.readouterr().out


def test_run_degraded_exit_code(tmp_path):
    doc = scenario_to_document(small_scenario(gamma_sense=1.0))
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    assert main(["run", "--scenario", str(p), "--scheme", "fhf-bf", "--out",
                 str(tmp_path / "o")]) == EXIT_DEGRADED


def test_errors_exit_one(tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "nope.json"), "--out",
                 str(tmp_path)]) == EXIT_ERROR
    bad = tmp_path / "bad.json"
    bad.write_text('{"tau_weight": 3}')
    assert main(["run", "--scenario", str(bad), "--out", str(tmp_path)]) == EXIT_ERROR
    assert "tau_weight" in capsys.readouterr().err
    assert main(["sweep", "--param", "gamma_sense", "--values", "", "--out",
                 str(tmp_path)]) == EXIT_ERROR
    assert main(["sweep", "--param", "nonsense", "--values", "1", "--out",
                 str(tmp_path)]) == EXIT_ERROR
    assert main(["plot", "--out", str(tmp_path)]) == EXIT_ERROR
    broken = tmp_path / "run"
    broken.mkdir()
    (broken / "trajectory.csv").write_text("x,y\n1,2\n")
    assert main(["plot", "--run-dir", str(broken), "--out", str(tmp_path / "p")]) == EXIT_ERROR


def test_unknown_scheme_rejected_by_parser(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--scheme", "carol", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_apply_parameter():
    s = preset_scenario("case1")
    t = apply_parameter(s, "resid_bob", 0.1)
    assert (t.resid_jam_bob, t.resid_sense_bob, t.resid_jam_eve) == (0.1, 0.1, 1.0)
    assert apply_parameter(s, "num_antennas", 6.0).num_antennas == 6
    assert apply_parameter(s, "solver.max_bcd_iter", 2).solver.max_bcd_iter == 2
    assert len(apply_parameter(s, "num_targets", 3).targets) == 3
    with pytest.raises(ValueError):
        apply_parameter(s, "bob_pos", 1.0)
    with pytest.raises(ValueError):
        SweepSpec("gamma_sense", (1.0,), ("scs", "carol"), Path("."))


def test_sweep_then_plot(small_file, tmp_path):
    out = tmp_path / "sw"
    code = main(["sweep", "--scenario", str(small_file), "--param", "p_max_jack",
                 "--values", "0.1,0.3", "--schemes", "fhf,single", "--out", str(out)])
    assert code == EXIT_OK
    rows = read_csv(out / "sweep.csv", "sweep")
    assert [(r["scheme"], r["value"]) for r in rows] == [
        ("fhf", "0.1"), ("fhf", "0.3"), ("single", "0.1"), ("single", "0.3")]
    assert all(r["status"] == "ok" for r in rows)
    assert (out / "fhf_p_max_jack_01" / "rates.csv").exists()
    plots = tmp_path / "plots"
    assert main(["plot", "--run-dir", str(out / "fhf_p_max_jack_00"), "--sweep",
                 str(out / "sweep.csv"), "--out", str(plots)]) == EXIT_OK
    assert sorted(p.name for p in plots.iterdir()) == [
        "rates.svg", "sweep_p_max_jack.svg", "trajectory.svg"]


def test_sweep_records_failed_points(small_file, tmp_path):
    out = tmp_path / "sw"
    code = main(["sweep", "--scenario", str(small_file), "--param", "tau_weight",
                 "--values", "0.5,7", "--schemes", "fhf", "--out", str(out)])
    assert code == EXIT_DEGRADED
    rows = read_csv(out / "sweep.csv", "sweep")
    assert rows[0]["status"] == "ok"
    assert rows[1]["status"].startswith("error: ScenarioError")


def test_module_entry_point(small_file, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "uavscs", "run", "--scenario", str(small_file),
                           "--scheme", "single", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("single: ASR overall")
