import json
import math
from pathlib import Path
from typing import Any, Dict, List, Tuple

import pytest

from quiver_capacity.capacity import solve
from quiver_capacity.main import build_parser, main, solver_options_from_args

EPI = {"kind": "ajn", "d": [1, 1], "n": [1], "c": [1, 1], "p": [2], "A": [[[[1.0]]], [[[1.0]]]]}
ORTHOGONAL = {"kind": "ajn", "d": [1, 1], "n": [2], "c": [1, 1], "p": [1], "A": [[[[1.0], [0.0]]], [[[0.0], [1.0]]]]}
INFEASIBLE = {"kind": "ajn", "d": [2], "n": [1], "c": [1], "p": [2], "A": [[[[1.0, 0.0]]]]}
DIRECT_SUM = {
    "kind": "ajn",
    "d": [2, 2],
    "n": [2],
    "c": [1, 1],
    "p": [2],
    "A": [[[[1.0, 0.0], [0.0, 1.0]]], [[[1.0, 0.0], [0.0, 1.0]]]],
}


def write_json(directory: Path, name: str, document: Any) -> str:
    path = directory / name
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


def run_cli(capsys, argv: List[str], log_dir: Path) -> Tuple[int, str, str]:
    with pytest.raises(SystemExit) as exit_info:
        main(argv + ["--log-dir", str(log_dir)])
    captured = capsys.readouterr()
    return exit_info.value.code, captured.out, captured.err


def run_json(capsys, argv: List[str], log_dir: Path) -> Tuple[int, Dict[str, Any]]:
    code, out, _ = run_cli(capsys, argv, log_dir)
    return code, json.loads(out)


def test_capacity_of_entropy_power_datum(tmp_path, capsys):
    path = write_json(tmp_path, "epi.json", EPI)
    code, report = run_json(capsys, ["capacity", path], tmp_path / "logs")
    assert code == 0
    assert report["command"] == "capacity"
    assert report["status"] == "Converged"
    assert report["cap"] == pytest.approx(4.0, rel=1e-9)
    assert report["ajn_constant"] == pytest.approx(-math.log(2.0), abs=1e-9)
    assert (tmp_path / "logs" / "info.log").exists()


def test_capacity_of_infeasible_datum(tmp_path, capsys):
    path = write_json(tmp_path, "infeasible.json", INFEASIBLE)
    code, report = run_json(capsys, ["capacity", path], tmp_path / "logs")
    assert code == 2
    assert report["status"] == "Infeasible"
    assert report["cap"] == 0.0
    assert report["ajn_constant"] == "inf"


def test_capacity_output_is_deterministic(tmp_path, capsys):
    path = write_json(tmp_path, "direct_sum.json", DIRECT_SUM)
    _, first, _ = run_cli(capsys, ["capacity", path], tmp_path / "logs")
    _, second, _ = run_cli(capsys, ["capacity", path], tmp_path / "logs")
    assert first == second


def test_malformed_datum_exits_with_usage_code(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"kind": "ajn", "d": [1,', encoding="utf-8")
    code, out, err = run_cli(capsys, ["capacity", str(path)], tmp_path / "logs")
    assert code == 1
    assert out == ""
    assert "DatumParseError" in err


def test_unknown_flag_exits_with_usage_code(tmp_path, capsys):
    path = write_json(tmp_path, "epi.json", EPI)
    code, _, _ = run_cli(capsys, ["capacity", path, "--no-such-flag"], tmp_path / "logs")
    assert code == 1


def test_out_of_range_option_exits_with_usage_code(tmp_path, capsys):
    path = write_json(tmp_path, "epi.json", EPI)
    code, _, err = run_cli(capsys, ["capacity", path, "--damping", "1.5"], tmp_path / "logs")
    assert code == 1
    assert "damping" in err


def test_scale_entropy_power_datum(tmp_path, capsys):
    path = write_json(tmp_path, "epi.json", EPI)
    code, report = run_json(capsys, ["scale", path], tmp_path / "logs")
    assert code == 0
    sinks = report["group_element"]["sinks"]
    assert sinks[0][0][0] == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-9)
    assert report["character"] == pytest.approx(2.0, rel=1e-9)
    assert report["log_abs_character"] == pytest.approx(-report["ajn_constant"], abs=1e-9)
    assert report["geometric"] is True
    assert report["scaled_datum"]["kind"] == "ajn"
    assert report["scaled_datum"]["A"][0][0][0][0] == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-9)


def test_scale_of_infeasible_datum_reports_no_group_element(tmp_path, capsys):
    path = write_json(tmp_path, "infeasible.json", INFEASIBLE)
    code, report = run_json(capsys, ["scale", path], tmp_path / "logs")
    assert code == 2
    assert "group_element" not in report


def test_check_finds_violator(tmp_path, capsys):
    path = write_json(tmp_path, "infeasible.json", INFEASIBLE)
    code, report = run_json(capsys, ["check", path], tmp_path / "logs")
    assert code == 2
    assert report["status"] == "Infeasible"
    assert report["feasible"] is False
    assert report["violator"]["slack"] == 1
    assert report["violator"]["dimensions"] == [1]


def test_check_feasible_and_geometric(tmp_path, capsys):
    path = write_json(tmp_path, "epi.json", EPI)
    code, report = run_json(capsys, ["check", path], tmp_path / "logs")
    assert code == 0
    assert report["feasible"] is True
    assert report["geometric"] is False

    path = write_json(tmp_path, "orthogonal.json", ORTHOGONAL)
    code, report = run_json(capsys, ["check", path], tmp_path / "logs")
    assert code == 0
    assert report["status"] == "Feasible"
    assert report["geometric"] is True
    assert "violator" not in report


def test_gap_at_identity(tmp_path, capsys):
    path = write_json(tmp_path, "epi.json", EPI)
    sigma = write_json(tmp_path, "sigma.json", [[[1.0]], [[1.0]]])
    code, report = run_json(capsys, ["gap", path, "--sigma", sigma], tmp_path / "logs")
    assert code == 0
    assert report["status"] == "Evaluated"
    assert report["gap"] == pytest.approx(-math.log(2.0), abs=1e-12)
    assert report["cap_at"] == pytest.approx(4.0, rel=1e-12)
    assert report["identity_residual"] < 1e-12


def test_gap_rejects_indefinite_sigma(tmp_path, capsys):
    path = write_json(tmp_path, "epi.json", EPI)
    sigma = write_json(tmp_path, "sigma.json", [[[1.0]], [[-1.0]]])
    code, _, err = run_cli(capsys, ["gap", path, "--sigma", sigma], tmp_path / "logs")
    assert code == 1
    assert "NotPositiveDefinite" in err


def test_gap_requires_sigma(tmp_path, capsys):
    path = write_json(tmp_path, "epi.json", EPI)
    code, _, _ = run_cli(capsys, ["gap", path], tmp_path / "logs")
    assert code == 1


def test_probe_unique_extremizer(tmp_path, capsys):
    path = write_json(tmp_path, "epi.json", EPI)
    code, report = run_json(capsys, ["probe", path, "--restarts", "5"], tmp_path / "logs")
    assert code == 0
    assert report["status"] == "Unique"
    assert report["end_dimension"] == 1
    assert report["schur"] is True
    assert report["converged_restarts"] == 5


def test_probe_direct_sum_is_not_unique(tmp_path, capsys):
    path = write_json(tmp_path, "direct_sum.json", DIRECT_SUM)
    code, report = run_json(capsys, ["probe", path, "--restarts", "6"], tmp_path / "logs")
    assert code == 0
    assert report["status"] == "NonUnique"
    assert report["end_dimension"] == 4
    assert report["schur"] is False
    assert len(report["witness"]) == 2


def test_probe_threads_do_not_change_the_report(tmp_path, capsys):
    path = write_json(tmp_path, "direct_sum.json", DIRECT_SUM)
    _, serial, _ = run_cli(capsys, ["probe", path, "--restarts", "6"], tmp_path / "logs")
    _, threaded, _ = run_cli(capsys, ["probe", path, "--restarts", "6", "--threads", "3"], tmp_path / "logs")
    assert serial == threaded


def test_probe_infeasible_datum(tmp_path, capsys):
    path = write_json(tmp_path, "infeasible.json", INFEASIBLE)
    code, report = run_json(capsys, ["probe", path], tmp_path / "logs")
    assert code == 2
    assert "uniqueness" not in report


def test_pretty_output(tmp_path, capsys):
    path = write_json(tmp_path, "epi.json", EPI)
    code, out, _ = run_cli(capsys, ["capacity", path, "--pretty"], tmp_path / "logs")
    assert code == 0
    assert out.startswith("quiver-capacity capacity: Converged")
    assert "  cap: 4" in out


def test_flags_override_environment(monkeypatch):
    monkeypatch.setenv("QUIVER_CAPACITY_TOL", "1e-6")
    monkeypatch.setenv("QUIVER_CAPACITY_MAX_ITER", "50")
    args = build_parser().parse_args(["capacity", "datum.json", "--max-iter", "5", "--budget", "7"])
    opts = solver_options_from_args(args)
    assert opts.tol == 1e-6
    assert opts.max_iter == 5
    assert opts.violator_budget == 7
    assert opts.restarts == 20


def test_capacity_command_uses_solver_options(tmp_path, capsys, mocker):
    spy = mocker.patch("quiver_capacity.commands.capacity.solve", wraps=solve)
    path = write_json(tmp_path, "epi.json", EPI)
    code, _ = run_json(capsys, ["capacity", path, "--tol", "1e-9", "--max-iter", "40"], tmp_path / "logs")
    assert code == 0
    spy.assert_called_once()
    opts = spy.call_args.args[1]
    assert opts.tol == 1e-9
    assert opts.max_iter == 40
