import csv
import json
import subprocess
import sys
import time

import numpy as np
import pytest

import sailorbits.cli as cli
from sailorbits.equilibria import classical_lagrange_point
from sailorbits.errors import NoConvergenceError
from sailorbits.lindstedt import initialize
from sailorbits.linearization import linear_model
from sailorbits.series import PRUNE

from conftest import MU, aep_for


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def order3_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("series") / "s3.json"
    assert cli.main(["build-series", "--order", "3", "--out", str(path)]) == 0
    return path


def _rows(path):
    with open(path) as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return np.array([[float(v) for v in row] for row in list(csv.reader(lines))[1:]])


def test_defaults_are_the_reference_setup():
    cfg = cli.RunConfig()
    assert (cfg.mu, cfg.beta, cfg.order, cfg.seed) == (MU, 0.002, 7, 2)
    assert (cfg.study.n3, cfg.study.n4, cfg.study.lo, cfg.study.hi) == (100, 100, 0.0, 0.2)


def test_solve_aep_prints_equilibrium(capsys, tmp_path):
    out_file = tmp_path / "aep.json"
    code, out, _ = _run(capsys, "solve-aep", "--out", str(out_file))
    assert code == 0
    pos = json.loads(out)["position"]
    np.testing.assert_allclose(pos, [1.0100319725242741, 0.0, 1.4769123813475747e-5], atol=1e-9)
    assert json.loads(out_file.read_text())["position"] == pos


def test_zero_lightness_gives_classical_point(capsys):
    code, out, _ = _run(capsys, "solve-aep", "--beta", "0")
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["position"], classical_lagrange_point(MU, 2), atol=1e-13)


def test_bad_angle_is_a_validation_error(capsys):
    code, _, err = _run(capsys, "solve-aep", "--gamma", "200")
    assert code == 1 and "clock angle" in err


def test_config_file_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"beta": 0.002, "colour": "red"}))
    assert _run(capsys, "solve-aep", "--config", str(bad))[0] == 1
    bad.write_text(json.dumps({"orbit": {"amplitudes": [1, 2]}}))
    assert _run(capsys, "solve-aep", "--config", str(bad))[0] == 1
    bad.write_text("{not json")
    assert _run(capsys, "solve-aep", "--config", str(bad))[0] == 1
    bad.write_text(json.dumps({"order": 1.5}))
    assert _run(capsys, "solve-aep", "--config", str(bad))[0] == 1
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"alpha_deg": 0.0, "gamma_deg": 40.0, "output": {"aep": str(tmp_path / "a.json")}}))
    code, out, _ = _run(capsys, "solve-aep", "--config", str(good))
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["position"], [1.009817129039308, 0.0, 0.0], atol=1e-9)


def test_no_convergence_exit_code(capsys, monkeypatch):
    def fail(*args, **kwargs):
        raise NoConvergenceError("synthetic")

    monkeypatch.setattr(cli, "find_aep", fail)
    assert _run(capsys, "solve-aep")[0] == 2


def test_sweep_writes_grid(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sweep": {"alpha_deg": [-90, 0, 90], "gamma_deg": [0, 90]}}))
    out = tmp_path / "sweep.csv"
    assert _run(capsys, "sweep-aep", "--config", str(cfg), "--out", str(out))[0] == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 6 and all(r["converged"] == "1" for r in rows)
    cfg.write_text(json.dumps({"sweep": {"alpha_deg": [10, 0], "gamma_deg": [0]}}))
    assert _run(capsys, "sweep-aep", "--config", str(cfg), "--out", str(out))[0] == 1


def test_first_order_file_is_the_initialization(tmp_path):
    path = tmp_path / "s1.json"
    assert cli.main(["build-series", "--order", "1", "--out", str(path)]) == 0
    data = json.loads(path.read_text())
    want = initialize(linear_model(aep_for(80.0, 0.0)), 1).to_dict()
    assert data["series"] == json.loads(json.dumps(want["series"]))
    assert data["frequencies"] == json.loads(json.dumps(want["frequencies"]))
    assert data["order"] == 1


def test_rebuild_is_byte_identical(order3_file, tmp_path):
    again = tmp_path / "again.json"
    assert cli.main(["build-series", "--order", "3", "--out", str(again)]) == 0
    assert again.read_bytes() == order3_file.read_bytes()


def test_orbit_generation(order3_file, tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"orbit": {"amplitudes": [0, 0, 0, 0], "samples": 7}}))
    out = tmp_path / "orbit.csv"
    code, _, _ = _run(capsys, "gen-orbit", "--config", str(cfg), "--coefficients", str(order3_file), "--out", str(out))
    assert code == 0
    rows = _rows(out)
    assert rows.shape == (7, 7)
    assert np.all(rows[:, 1:] == rows[0, 1:])
    k = linear_model(aep_for(80.0, 0.0)).k
    aep = aep_for(80.0, 0.0)
    offset = np.where(np.abs(k[15:18]) >= PRUNE, k[15:18], 0.0)
    np.testing.assert_allclose(rows[0, 1:4], aep.position + aep.gamma_norm * offset, atol=1e-17)
    assert out.read_text().startswith("# ")


def test_manifold_generation_writes_four_arcs(order3_file, tmp_path, capsys):
    prefix = tmp_path / "mf"
    code, out, _ = _run(capsys, "gen-manifold", "--coefficients", str(order3_file), "--out", str(prefix))
    assert code == 0
    for name in ("stable_plus", "stable_minus", "unstable_plus", "unstable_minus"):
        rows = _rows(f"{prefix}_{name}.csv")
        assert rows.shape == (200, 7)


def test_missing_coefficient_file(capsys, tmp_path):
    code, _, err = _run(capsys, "error-study", "--coefficients", str(tmp_path / "nope.json"))
    assert code == 1 and "not found" in err
    junk = tmp_path / "junk.json"
    junk.write_text("{}")
    assert _run(capsys, "gen-orbit", "--coefficients", str(junk))[0] == 1


def test_small_error_study_is_quick(order3_file, tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"study": {"n3": 3, "n4": 3}}))
    grid = tmp_path / "grid.csv"
    start = time.perf_counter()
    code, _, _ = _run(capsys, "error-study", "--config", str(cfg), "--coefficients", str(order3_file), "--out", str(grid))
    assert code == 0 and time.perf_counter() - start < 10.0
    assert len(grid.read_text().splitlines()) == 10
    meta = json.loads(grid.with_suffix(".json").read_text())
    assert meta["order"] == 3 and meta["shape"] == [3, 3]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "sailorbits", "solve-aep", "--alpha", "0", "--gamma", "40"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["position"][1] == 0.0
