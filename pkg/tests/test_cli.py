import json
from pathlib import Path

import pytest

from critprobe.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from critprobe.config import load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(mode, config, out, *extra):
    return main([mode, "--config", str(config), "--out", str(out), *extra])


def tree(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_config_error_writes_nothing(tmp_path, capsys):
    out = tmp_path / "run"
    status = run("sweep", CONFIGS / "quartic_sweep.ini", out, "--override", "window.E1=0.5")
    assert status == EXIT_CONFIG and not out.exists()
    assert "E1" in capsys.readouterr().err


def test_unknown_potential_is_config_error(tmp_path):
    out = tmp_path / "run"
    assert run("sweep", CONFIGS / "quartic_sweep.ini", out, "--override", "potential.name=sextic") == EXIT_CONFIG
    assert not out.exists()


def test_numerical_failure_is_quarantined(tmp_path, capsys):
    out = tmp_path / "run"
    status = run("sweep", CONFIGS / "quartic_sweep.ini", out, "--override", "potential.L=0.6")
    err = capsys.readouterr().err
    assert status == EXIT_NUMERIC
    assert "quantum" in err and "hint" in err
    assert (out / "quarantine" / "resolved_config.ini").is_file()
    assert not (out / "report.json").exists() and not (out / "plots").exists()


@pytest.fixture(scope="module")
def classical_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("classical")
    a, b = base / "a", base / "b"
    assert run("classical", CONFIGS / "harmonic_classical.ini", a) == EXIT_OK
    assert run("classical", CONFIGS / "harmonic_classical.ini", b) == EXIT_OK
    return a, b


def test_classical_reruns_are_identical(classical_runs):
    a, b = classical_runs
    assert tree(a) == tree(b)
    data = json.loads((a / "classical.json").read_text())
    assert data["period_bound"]["T"] == pytest.approx(3.14159265, rel=1e-6)
    assert data["bound_respected"]


def test_resolved_config_reproduces_the_run(classical_runs, tmp_path):
    a, _ = classical_runs
    resolved = a / "resolved_config.ini"
    cfg = load_config(resolved)
    assert resolved.read_text().splitlines()[0] == f"# config_hash={cfg.config_hash()}"
    c = tmp_path / "c"
    assert run("classical", resolved, c) == EXIT_OK
    assert tree(c) == tree(a)


def test_seed_changes_the_hash(classical_runs, tmp_path):
    a, _ = classical_runs
    c = tmp_path / "c"
    assert run("classical", CONFIGS / "harmonic_classical.ini", c, "--seed", "5") == EXIT_OK
    assert (c / "resolved_config.ini").read_text() != (a / "resolved_config.ini").read_text()


def test_two_dimensional_weyl_from_the_oracle(tmp_path):
    out = tmp_path / "w"
    assert run("weyl", CONFIGS / "harmonic2d_weyl.ini", out) == EXIT_OK
    data = json.loads((out / "weyl.json").read_text())
    assert data["n"] == 2 and min(data["hbars"]) <= 0.02
    assert data["deviation_at_smallest_hbar"] <= 0.05
