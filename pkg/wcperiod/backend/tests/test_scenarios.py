import copy
import json

import pandas as pd
import pytest

from models.certificate_models import Theorem, Verdict
from services.errors import ScenarioError
from services.scenarios import (
    EXIT_CERTIFICATE_FAILED,
    EXIT_OK,
    EXIT_RESONANCE,
    RunMode,
    load_scenario,
    parse_scenario,
    run_scenario,
    serialize_scenario,
    with_overrides,
)

EXAMPLE = {
    "name": "example",
    "problem": {"kind": "ode", "matrix": [[[2, 0], [-4, 0]], [[6, 0], [-8, 0]]]},
    "omega": 3.141592653589793,
    "c": [-1, 0],
    "norm": "l2",
    "nonlinearity": {"builtin": "example_3_1", "parameters": {"a": 0.2}},
    "solver": {"grid": 129, "tol": 1e-10, "max_iter": 200, "method": "picard"},
}


def document(**changes) -> str:
    data = copy.deepcopy(EXAMPLE)
    data.update(changes)
    return json.dumps(data, indent=2)


def test_shipped_scenarios_parse_and_round_trip(scenario_dir):
    paths = sorted(scenario_dir.glob("*.json"))
    assert len(paths) >= 6
    for path in paths:
        scenario = load_scenario(path)
        again = parse_scenario(serialize_scenario(scenario))
        assert again.model_dump() == scenario.model_dump()


def test_example_document_fields(scenario_dir):
    scenario = load_scenario(scenario_dir / "example_3_1.json")
    assert scenario.problem.entries() == [[2, -4], [6, -8]]
    assert scenario.multiplier == -1
    assert scenario.nonlinearity.parameters == {"a": 0.2}


def test_invalid_omega_is_reported_with_its_line():
    text = document(omega=-1)
    line = next(number for number, content in enumerate(text.splitlines(), 1) if '"omega"' in content)
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    [message] = info.value.errors
    assert "omega" in message
    assert message.startswith(f"line {line}:")


def test_malformed_json_is_reported_with_its_line():
    with pytest.raises(ScenarioError) as info:
        parse_scenario('{\n  "name": "x",\n  "omega": ,\n}')
    assert info.value.errors[0].startswith("line 3")


def test_component_count_must_match_dimension():
    nonlinearity = {"components": ["t", "t", "t"], "parameters": {}}
    with pytest.raises(ScenarioError):
        parse_scenario(document(nonlinearity=nonlinearity))


def test_unknown_builtin():
    with pytest.raises(ScenarioError):
        parse_scenario(document(nonlinearity={"builtin": "nope"}))


def test_spectral_problem_needs_field_nonlinearity():
    with pytest.raises(ScenarioError):
        parse_scenario(document(problem={"kind": "spectral", "generator": "heat_dirichlet", "K": 8}))


def test_command_line_overrides_take_precedence():
    scenario = parse_scenario(document())
    changed = with_overrides(scenario, grid=65, norm="linf")
    assert changed.solver.grid == 65
    assert changed.solver.tol == scenario.solver.tol
    assert changed.norm.value == "linf"
    with pytest.raises(ScenarioError):
        with_overrides(scenario, grid=3)


def test_certified_solve_writes_artifacts(tmp_path, scenario_dir):
    scenario = load_scenario(scenario_dir / "example_3_1.json")
    outcome = run_scenario(scenario, RunMode.SOLVE, tmp_path)
    assert outcome.exit_code == EXIT_OK
    assert outcome.primary == Theorem.T31
    assert outcome.oracle_gap <= 1e-6
    assert outcome.bound_respected is True

    frame = pd.read_csv(tmp_path / "trajectory.csv")
    assert list(frame.columns) == ["t", "re_y1", "im_y1", "re_y2", "im_y2"]
    assert len(frame) == 257
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["exit_code"] == EXIT_OK
    assert report["residuals"]["boundary"] <= 1e-8
    certificates = json.loads((tmp_path / "certificate.json").read_text())
    assert {entry["theorem"] for entry in certificates["certificates"]} == {"T31", "T41"}


def test_failed_certificate_still_solves(tmp_path):
    scenario = parse_scenario(document(nonlinearity={"builtin": "example_3_1", "parameters": {"a": 0.6}}))
    outcome = run_scenario(scenario, RunMode.SOLVE, tmp_path)
    assert outcome.exit_code == EXIT_CERTIFICATE_FAILED
    assert outcome.trajectory is not None
    assert (tmp_path / "trajectory.csv").exists()


def test_resonance_exit_code(tmp_path):
    zeros = {"kind": "ode", "matrix": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]}
    scenario = parse_scenario(document(problem=zeros, c=[1, 0]))
    outcome = run_scenario(scenario, RunMode.SOLVE, tmp_path)
    assert outcome.exit_code == EXIT_RESONANCE
    assert outcome.trajectory is None
    assert json.loads((tmp_path / "report.json").read_text())["outcome"] == "resonance"


def test_trajectory_csv_is_deterministic(tmp_path):
    scenario = parse_scenario(document())
    run_scenario(scenario, RunMode.SOLVE, tmp_path / "first")
    run_scenario(scenario, RunMode.SOLVE, tmp_path / "second")
    first = (tmp_path / "first" / "trajectory.csv").read_bytes()
    assert first == (tmp_path / "second" / "trajectory.csv").read_bytes()


def test_expression_scenario_certifies(scenario_dir):
    outcome = run_scenario(load_scenario(scenario_dir / "example_3_1_expression.json"), RunMode.CERTIFY)
    assert outcome.exit_code == EXIT_OK
    assert outcome.trajectory is None
    assert outcome.primary_certificate.certified


def test_heat_scenario_past_the_uniqueness_threshold(scenario_dir):
    outcome = run_scenario(load_scenario(scenario_dir / "heat_5_6.json"), RunMode.CERTIFY)
    verdicts = {certificate.theorem: certificate.verdict for certificate in outcome.certificates}
    assert verdicts == {Theorem.T51: Verdict.FAILED, Theorem.T52: Verdict.CERTIFIED}
    assert outcome.exit_code == EXIT_CERTIFICATE_FAILED


def test_missing_constants_fail_certification():
    nonlinearity = {"components": ["a*sin(t)", "0*y1"], "parameters": {"a": 0.1}}
    outcome = run_scenario(parse_scenario(document(nonlinearity=nonlinearity)), RunMode.CERTIFY)
    assert outcome.exit_code == EXIT_CERTIFICATE_FAILED
    assert outcome.certificates == []
