import json

import pytest

import state_space
from cli import EXIT_FAILURE, EXIT_USAGE, main
from models import NetworkInstance, SimulationReport, SolutionDocument


def last_json(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def test_generate_writes_instance(tmp_path):
    path = tmp_path / "seed_7.json"
    assert main(["generate", "--seed", "7", "--out", str(path)]) == 0
    instance = NetworkInstance.model_validate_json(path.read_text())
    assert instance.seed == 7
    assert (instance.I, instance.J) == (2, 2)


def test_solve_dominance_on_one_instance(tmp_path):
    instance = tmp_path / "instance.json"
    main(["generate", "--seed", "7", "--out", str(instance)])

    upsilon = {}
    for policy in ("cf", "ocpr"):
        out = tmp_path / f"{policy}.json"
        assert main(["solve", "--instance", str(instance), "--policy", policy, "--out", str(out)]) == 0
        document = SolutionDocument.model_validate_json(out.read_text())
        assert document.n_states == 270
        assert document.converged
        upsilon[policy] = document.upsilon

    assert upsilon["ocpr"] <= upsilon["cf"] + 1e-8


def test_solve_reachable_with_transition_dump(tmp_path):
    out = tmp_path / "solution.json"
    dump = tmp_path / "transitions.txt"
    args = ["solve", "--seed", "7", "--policy", "ocr", "--reachable-only", "--dump-transitions", str(dump), "--out", str(out)]
    assert main(args) == 0
    document = SolutionDocument.model_validate_json(out.read_text())
    assert document.n_states <= 270
    assert dump.exists()


def test_simulate_solution(tmp_path):
    solution = tmp_path / "solution.json"
    report_path = tmp_path / "report.json"
    trace = tmp_path / "trace.csv"
    main(["solve", "--seed", "7", "--policy", "cf", "--out", str(solution)])

    code = main(
        ["simulate", "--solution", str(solution), "--replications", "500", "--seed", "1",
         "--trace", str(trace), "--out", str(report_path)]
    )
    assert code == 0
    report = SimulationReport.model_validate_json(report_path.read_text())
    assert report.replications == 500
    assert report.halfwidth_95 > 0
    assert abs(report.mean - report.solver_value) <= 3 * report.halfwidth_95 + 1e-4
    assert report.mean_counts["relocations"] == 0
    assert trace.exists()


def test_table1_is_reproducible(tmp_path, capsys):
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name / "table1.csv"
        args = ["table1", "--instances", "2", "--cost-setting", "1", "--rho", "1.0",
                "--policy", "cf", "--policy", "ocpr", "--out", str(out)]
        assert main(args) == 0
        payload = last_json(capsys)
        assert payload["rows"] == 4
        assert (tmp_path / name / "table1_summary.csv").exists()
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_table1_with_config_file(tmp_path, capsys):
    config = tmp_path / "table1.yaml"
    config.write_text("n_instances: 1\ncost_settings: [3]\nrho_list: [0.5]\npolicy_classes: [cf, oc]\n")
    out = tmp_path / "results.csv"
    assert main(["table1", "--config", str(config), "--out", str(out)]) == 0
    assert last_json(capsys)["rows"] == 2
    assert out.read_text().splitlines()[1].startswith("3,0.5,2,7,CF,")


def test_sweep(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--seed", "7", "--points", "2", "--out", str(out)]) == 0
    assert last_json(capsys)["rows"] == 4
    assert out.read_text().splitlines()[0] == "c_ps,c_rs,prev_fraction,reloc_fraction,upsilon"


def test_validate_structural(tmp_path):
    out = tmp_path / "validation.json"
    assert main(["validate", "--seed", "7", "--structural-only", "--samples", "20", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert all(check["passed"] for check in report["checks"])


def test_unknown_policy_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["solve", "--policy", "fastest"])
    assert excinfo.value.code == EXIT_USAGE
    assert last_json(capsys)["error_code"] == "USAGE_ERROR"


def test_missing_instance_file(tmp_path, capsys):
    code = main(["solve", "--instance", str(tmp_path / "missing.json")])
    assert code == EXIT_FAILURE
    assert last_json(capsys)["error_code"] == "FILE_NOT_FOUND"


def test_malformed_instance_file(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"I": 2, "J": 2, "R": [[50, 50], [50, 50]]}')
    code = main(["solve", "--instance", str(path)])
    assert code == EXIT_FAILURE
    error = last_json(capsys)
    assert error["error_code"] == "INVALID_INPUT"
    assert error["details"]["errors"]


def test_oversized_model_reports_solver_error(capsys, monkeypatch):
    monkeypatch.setattr(state_space, "MAX_STATES", 100)
    code = main(["solve", "--seed", "7"])
    assert code == EXIT_FAILURE
    error = last_json(capsys)
    assert error["error_code"] == "STATE_SPACE_TOO_LARGE"
    assert error["details"]["size"] == 270
