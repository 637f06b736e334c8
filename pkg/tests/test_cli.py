import csv
import hashlib
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qbm import cli
from qbm.validation import CheckResult

WEAK = {
    "system": {"omega": 1.0, "beta": 1.0, "n0": 1.0},
    "coupling": {"family": "power-exponential", "gamma": 0.05, "n": 1},
    "bath": {"N": 300, "omega_max": 10.0},
    "grid": {"t_min": 0.0, "t_max": 40.0, "samples": 9},
}


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def _read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(x) for x in r] for r in rows[1:]]


def test_spectrum_resonant_pair(tmp_path):
    cfg = _write(tmp_path, {"bath": {"modes": [[1.0, 0.1]]}})
    assert cli.main(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_OK
    header, rows = _read_csv(tmp_path / "o" / "spectrum.csv")
    assert header == ["alpha [omega units]", "weight [1]"]
    assert len(rows) == 2
    np.testing.assert_allclose(rows, [[0.9, 0.5], [1.1, 0.5]], rtol=1e-14)


def test_decay_without_coupling_is_flat(tmp_path):
    cfg = _write(tmp_path, {"bath": {"modes": [[0.5, 0.0], [2.0, 0.0]]}, "grid": {"t_max": 10.0, "samples": 5}})
    assert cli.run("decay", cfg, tmp_path / "o") == cli.EXIT_OK
    header, rows = _read_csv(tmp_path / "o" / "decay.csv")
    assert [r[1] for r in rows] == [1.0] * 5
    assert all(math.isnan(r[2]) for r in rows)


def test_manifest_contents(tmp_path):
    cfg = _write(tmp_path, WEAK)
    out = tmp_path / "o"
    assert cli.run("population", cfg, out) == cli.EXIT_OK
    man = json.loads((out / "manifest.json").read_text())
    assert set(man) == {"command", "version", "timestamp", "config", "outputs", "results", "warnings"}
    assert man["command"] == "population" and man["version"] == cli.__version__
    digest = hashlib.sha256((out / "population.csv").read_bytes()).hexdigest()
    assert man["outputs"] == {"population.csv": digest}
    assert man["config"]["bath"]["N"] == 300 and man["config"]["system"]["mass"] == 1.0
    assert "exact_asymptote" in man["results"]


def test_csv_round_trips_doubles(tmp_path):
    cfg = _write(tmp_path, WEAK)
    assert cli.run("langevin", cfg, tmp_path / "o") == cli.EXIT_OK
    text = (tmp_path / "o" / "langevin.csv").read_text().splitlines()
    assert text[0].startswith("t [1/omega units],omega2")
    grid = np.linspace(0, 40, 9)
    assert [float(line.split(",")[0]) for line in text[1:]] == list(grid)


@pytest.mark.parametrize("command", ["decay", "noise", "asymptote"])
def test_threads_do_not_change_output(tmp_path, command, monkeypatch):
    cfg = _write(tmp_path, WEAK)
    assert cli.run(command, cfg, tmp_path / "a", threads=1) == cli.EXIT_OK
    monkeypatch.setenv("QBM_THREADS", "4")
    assert cli.run(command, cfg, tmp_path / "b") == cli.EXIT_OK
    a = (tmp_path / "a" / f"{command}.csv").read_bytes()
    b = (tmp_path / "b" / f"{command}.csv").read_bytes()
    assert a == b


def test_bad_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("QBM_THREADS", "many")
    assert cli.run("spectrum", _write(tmp_path, WEAK), tmp_path / "o") == cli.EXIT_CONFIG


@pytest.mark.parametrize("doc", [
    {"bogus": {}},
    {"system": {"omega": 1.0}},
    {**WEAK, "system": {"omega": -1.0}},
    {**WEAK, "grid": {"t_min": 5.0, "t_max": 1.0, "samples": 3}},
    {**WEAK, "coupling": {"family": "nope"}},
    {**WEAK, "coupling": {"gamma": 0.1, "lambda": 0.1}},
    {**WEAK, "bath": {"N": "many"}},
    {**WEAK, "spectrum": 3},
])
def test_configuration_errors(tmp_path, doc):
    assert cli.run("spectrum", _write(tmp_path, doc), tmp_path / "o") == cli.EXIT_CONFIG
    assert not (tmp_path / "o").exists()


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.run("spectrum", bad, tmp_path / "o") == cli.EXIT_CONFIG
    assert cli.run("spectrum", tmp_path / "missing.json", tmp_path / "o") == cli.EXIT_CONFIG


def test_continuum_command_needs_coupling(tmp_path):
    cfg = _write(tmp_path, {"bath": {"modes": [[1.0, 0.1]]}})
    assert cli.run("asymptote", cfg, tmp_path / "o") == cli.EXIT_CONFIG


def test_fit_rejection_is_numerical_failure(tmp_path):
    # The grid stops long before the power-law tail.
    assert cli.run("khalfin", _write(tmp_path, WEAK), tmp_path / "o") == cli.EXIT_NUMERICAL


def test_strict_regime_warning(tmp_path):
    doc = {**WEAK, "tscan": {"scan": {"beta_omega_min": 0.5, "beta_omega_max": 50.0, "samples": 6}}}
    cfg = _write(tmp_path, doc)
    assert cli.run("tscan", cfg, tmp_path / "lax") == cli.EXIT_OK
    man = json.loads((tmp_path / "lax" / "manifest.json").read_text())
    assert any("RegimeWarning" in w for w in man["warnings"])
    assert cli.run("tscan", cfg, tmp_path / "strict", strict=True) == cli.EXIT_REGIME


def test_command_override_section(tmp_path):
    doc = {**WEAK, "asymptote": {"betas": [0.5, 4.0]}}
    assert cli.run("asymptote", _write(tmp_path, doc), tmp_path / "o") == cli.EXIT_OK
    _, rows = _read_csv(tmp_path / "o" / "asymptote.csv")
    assert [r[0] for r in rows] == [0.5, 4.0]


def test_validate_passes_and_fails(tmp_path, monkeypatch):
    cfg = _write(tmp_path, {"bath": {"modes": [[1.0, 0.1]]}})
    assert cli.run("validate", cfg, tmp_path / "ok") == cli.EXIT_OK
    import qbm.validation

    monkeypatch.setattr(qbm.validation, "run_checks", lambda seed=0: [CheckResult("broken", 1.0, 1e-12)])
    assert cli.run("validate", cfg, tmp_path / "bad") == cli.EXIT_FAILED_CHECK
    man = json.loads((tmp_path / "bad" / "manifest.json").read_text())
    assert man["results"]["failed"] == ["broken"]


def test_console_entry_point(tmp_path):
    cfg = _write(tmp_path, {"bath": {"modes": [[1.0, 0.1]]}})
    proc = subprocess.run([sys.executable, "-m", "qbm.cli", "spectrum", "--config", str(cfg), "--out",
                           str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "qbm.cli", "nonsense", "--config", "x", "--out", "y"],
                          capture_output=True, text=True)
    assert proc.returncode == 2


@pytest.mark.parametrize("command", ["asymptote", "population", "tscan"])
def test_manifest_config_reproduces_output(tmp_path, command):
    doc = {**WEAK, "asymptote": {"betas": [0.5, 4.0]}, "tscan": {"scan": {"samples": 6}}}
    assert cli.run(command, _write(tmp_path, doc), tmp_path / "a") == cli.EXIT_OK
    resolved = json.loads((tmp_path / "a" / "manifest.json").read_text())["config"]
    assert cli.run(command, _write(tmp_path, resolved, "resolved.json"), tmp_path / "b") == cli.EXIT_OK
    name = f"{command}.csv"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
