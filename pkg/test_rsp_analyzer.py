"""
End-to-end tests of the rsp_analyzer command line
Runs main() with a small search config from a scratch working directory
"""

import json
from pathlib import Path

import pytest

import rsp_analyzer
from src.storage.result_store import read_csv
from src.utils.errors import (
    EXIT_INPUT_ERROR,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_VALIDATION_FAILURE,
    ConvergenceError,
)

STATES = Path(__file__).parent / "config" / "states"
# a short search may stop before its simplex collapses
NUMERIC_EXITS = (EXIT_OK, EXIT_NOT_CONVERGED)

SMALL_CONFIG = """\
starts: 2
max_iter: 200
quad_points: 32
beta_samples: 8
seed: 42
threads: 1
logging:
  level: WARNING
"""


@pytest.fixture
def cli(tmp_path, monkeypatch):
    """Run main() with the small config and return the exit code."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("RSP_CONFIG", raising=False)
    config = tmp_path / "small.yaml"
    config.write_text(SMALL_CONFIG)

    def run(*argv):
        return rsp_analyzer.main(["--config", str(config), *argv])

    return run


def test_region_inside(cli, capsys):
    assert cli("region", "0.5", "0.3", "0.1") == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["in_region"] is True
    assert data["inequalities"] == pytest.approx([0.1, 0.9, 1.3, 1.7])


def test_region_outside(cli, capsys):
    assert cli("region", "1", "1", "1") == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["in_region"] is False
    assert data["min_eigenvalue"] == pytest.approx(-0.5)


def test_validate_passes(cli, capsys):
    assert cli("validate", "--instances", "5") == EXIT_OK
    captured = capsys.readouterr()
    data = json.loads(captured.out)
    assert data["passed"] is True
    assert "[OK]" in captured.err


def test_validate_catches_broken_rotation(cli, capsys, monkeypatch):
    import src.protocol.rsp_protocol as protocol

    real = protocol.rotation_matrix
    monkeypatch.setattr(protocol, "rotation_matrix", lambda n, gamma: real(n, gamma).T)

    assert cli("validate", "--instances", "5") == EXIT_VALIDATION_FAILURE
    data = json.loads(capsys.readouterr().out)
    failed = {check["name"] for check in data["checks"] if not check["passed"]}
    assert "oracle_bloch_vs_formula" in failed


def test_werner_sweep_csv(cli, tmp_path):
    out = tmp_path / "werner.csv"
    assert cli("--out", str(out), "werner", "--steps", "11") in NUMERIC_EXITS

    rows = read_csv(str(out))
    assert list(rows[0]) == rsp_analyzer.WERNER_HEADER
    assert [float(row["lambda"]) for row in rows] == pytest.approx([i / 10 for i in range(11)])
    for row in rows:
        lam = float(row["lambda"])
        assert float(row["F_closed"]) == pytest.approx(0.5 * (1 + lam))
        assert float(row["P_closed"]) == pytest.approx(lam ** 2)
        assert float(row["F_num"]) == pytest.approx(float(row["F_closed"]), abs=5e-3)
        assert float(row["P_num"]) == pytest.approx(float(row["P_closed"]), abs=5e-3)


def test_sweep_bell_csv(cli, tmp_path):
    out = tmp_path / "bell.csv"
    code = cli("--out", str(out), "sweep-bell", "--lambda-step", "1.0", "--lambda3", "0")
    assert code in NUMERIC_EXITS

    rows = read_csv(str(out))
    assert list(rows[0]) == rsp_analyzer.SWEEP_BELL_HEADER
    assert len(rows) == 9
    for row in rows:
        if row["in_region"] == "true":
            assert float(row["F_num"]) >= float(row["F_exact"]) - 5e-3
        else:
            assert row["F_num"] == ""

    physical = tmp_path / "physical.csv"
    cli("--out", str(physical), "sweep-bell", "--lambda-step", "1.0", "--lambda3", "0", "--physical-only")
    assert all(row["in_region"] == "true" for row in read_csv(str(physical)))


def test_compare_separable_and_entangled(cli, capsys):
    code = cli("compare", str(STATES / "separable_iso.json"), str(STATES / "entangled_iso.json"))
    assert code in NUMERIC_EXITS

    data = json.loads(capsys.readouterr().out)
    assert data["winner"] == 1
    assert data["numeric_agrees"] is True
    assert data["states"][0]["payoff_valid"] == pytest.approx(1 / 9)
    assert data["states"][1]["payoff_valid"] == pytest.approx(1 / 25)


def test_analyze_state_file(cli, capsys):
    code = cli("--beta-samples", "8", "analyze", str(STATES / "werner_0.5.json"))
    assert code in NUMERIC_EXITS

    report = json.loads(capsys.readouterr().out)
    assert report["state"]["label"] == "werner_0.5"
    assert report["fidelity"] == pytest.approx(0.75, abs=5e-3)
    assert len(report["sweep"]["samples"]) == 8


def test_analyze_rejects_unphysical_state(cli, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"bell_diagonal": [1, 1, 1]}))
    assert cli("analyze", str(path)) == EXIT_INPUT_ERROR


def test_missing_state_file_is_input_error(cli, tmp_path):
    assert cli("analyze", str(tmp_path / "nope.json")) == EXIT_INPUT_ERROR


def test_bad_option_values_are_input_errors(cli):
    assert cli("--quad-points", "7", "region", "0", "0", "0") == EXIT_INPUT_ERROR
    assert cli("werner", "--steps", "1") == EXIT_INPUT_ERROR


def test_sweep_files_csv(cli, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bell_diagonal": [1, 1, 1]}))
    missing = tmp_path / "missing.json"
    out = tmp_path / "files.csv"
    code = cli("--out", str(out), "sweep-files", str(STATES / "werner_0.5.json"), str(missing), str(bad))
    assert code in NUMERIC_EXITS

    rows = read_csv(str(out))
    assert list(rows[0]) == rsp_analyzer.FILES_HEADER
    assert [row["file"] for row in rows] == [str(STATES / "werner_0.5.json"), str(missing), str(bad)]

    werner_row, missing_row, bad_row = rows
    assert werner_row["label"] == "werner_0.5"
    assert float(werner_row["F_num"]) == pytest.approx(0.75, abs=5e-3)
    assert float(werner_row["D"]) == pytest.approx(0.25)
    assert "not found" in missing_row["error"]
    assert missing_row["F_num"] == ""
    assert bad_row["physical"] == "false"
    assert bad_row["F_num"] == "" and bad_row["error"] == ""


def test_exhausted_refinement_still_writes_report(cli, capsys, monkeypatch):
    import src.protocol.great_circle as great_circle

    real = great_circle.circle_average

    def exhausted(integrand, gc, q):
        if q.refine:
            raise ConvergenceError("refinement ran out of points")
        return real(integrand, gc, q)

    monkeypatch.setattr(great_circle, "circle_average", exhausted)
    code = cli("--quad-refine", "--beta-samples", "8", "analyze", str(STATES / "werner_0.5.json"))
    assert code == EXIT_NOT_CONVERGED

    report = json.loads(capsys.readouterr().out)
    assert report["converged"] is False
    assert report["fidelity"] == pytest.approx(0.75, abs=5e-3)
