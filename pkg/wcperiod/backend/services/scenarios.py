"""
Scenario documents: parsing, problem construction, execution and artifacts.

A run produces up to three files (certificate report, trajectory CSV and
residual report) and an exit code:

    0  certified and solved
    2  resonance
    3  primary certificate failed (the solve is still attempted) or could not be evaluated
    4  solver nonconvergence or a library error inside a solver

with precedence 2 > 3 > 4 > 0.
"""

import dataclasses
import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from models.certificate_models import Certificate, Theorem
from models.domain_models import PeriodicitySpec
from models.scenario_models import OdeProblem, Scenario, SolverMethod, SpectralProblem
from models.trajectory_models import FieldTrajectory, SolutionTrajectory
from services.catalog import FIELD_BUILTINS, ODE_BUILTINS
from services.certificates import (
    certify_theorem1,
    certify_theorem2,
    certify_theorem3,
    certify_theorem4,
)
from services.errors import ExpressionError, NonConvergenceError, ResonanceError, ScenarioError, WCPeriodError
from services.expressions import compile_nonlinearity
from services.kernels import GreenKernelODE
from services.linalg import NormKind
from services.nonlinearity import FieldNonlinearity, NonlinearitySpec
from services.ode_solver import oracle_gap, picard_solve, poincare_solve
from services.spectral import (
    DiagonalGenerator,
    exponential_propagate,
    generator_constants,
    mild_extend,
    mild_picard_solve,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RESONANCE = 2
EXIT_CERTIFICATE_FAILED = 3
EXIT_NONCONVERGENCE = 4
EXIT_USAGE = 64
EXIT_PARSE = 65

BOUND_SLACK = 1e-3
SPECTRAL_ORACLE_STEPS = 10_000
SPECTRAL_ORACLE_WINDOWS = 1.5


class RunMode(str, Enum):
    CERTIFY = "certify"
    SOLVE = "solve"
    ORACLE_COMPARE = "oracle-compare"


def _line_of(text: str, loc: Tuple[Any, ...]) -> Optional[int]:
    """Line of the innermost key of a validation location, searched in document order."""
    position = 0
    found = None
    for key in loc:
        if not isinstance(key, str):
            continue
        idx = text.find(f'"{key}"', position)
        if idx < 0:
            continue
        position = found = idx
    return None if found is None else text.count("\n", 0, found) + 1


def parse_scenario(text: str) -> Scenario:
    """
    Parse and validate a scenario document.

    Raises:
        ScenarioError: with one message per problem, each prefixed by its line.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
    if not isinstance(data, dict):
        raise ScenarioError(["line 1: scenario must be a JSON object"])
    try:
        return Scenario(**data)
    except ValidationError as exc:
        messages = []
        for error in exc.errors():
            loc = tuple(error.get("loc", ()))
            line = _line_of(text, loc)
            where = ".".join(str(part) for part in loc) or "scenario"
            prefix = f"line {line}: " if line is not None else ""
            messages.append(f"{prefix}{where}: {error.get('msg')}")
        raise ScenarioError(messages) from exc


def serialize_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario.model_dump(mode="json", exclude_none=True), indent=2) + "\n"


def load_scenario(path: Union[str, Path]) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def with_overrides(
    scenario: Scenario,
    grid: Optional[int] = None,
    tol: Optional[float] = None,
    norm: Optional[NormKind] = None,
) -> Scenario:
    """Command-line flags take precedence over the document."""
    solver_updates = {key: value for key, value in (("grid", grid), ("tol", tol)) if value is not None}
    data = scenario.model_dump()
    data["solver"].update(solver_updates)
    if norm is not None:
        data["norm"] = NormKind(norm)
    try:
        return Scenario(**data)
    except ValidationError as exc:
        raise ScenarioError([f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors()]) from exc


def _override_constants(g, scenario: Scenario):
    if scenario.constants is None:
        return g
    updates = {
        key: value
        for key, value in scenario.constants.model_dump().items()
        if value is not None
    }
    return dataclasses.replace(g, **updates)


def build_ode_nonlinearity(scenario: Scenario) -> NonlinearitySpec:
    config = scenario.nonlinearity
    if config.builtin is not None:
        try:
            g = ODE_BUILTINS[config.builtin](norm=scenario.norm, **config.parameters)
        except TypeError as exc:
            raise ScenarioError([f"nonlinearity.parameters: {exc}"]) from exc
    else:
        declared = scenario.constants
        try:
            g = compile_nonlinearity(
                config.components,
                parameters=config.parameters,
                name=scenario.name,
                L=declared.L if declared else None,
                g1=declared.g1 if declared else None,
                g2=declared.g2 if declared else None,
            )
        except ExpressionError as exc:
            raise ScenarioError([f"nonlinearity.components: {exc}"]) from exc
    return _override_constants(g, scenario)


def build_field_problem(scenario: Scenario) -> Tuple[DiagonalGenerator, FieldNonlinearity, PeriodicitySpec]:
    problem = scenario.problem
    if problem.generator.value == "heat_dirichlet":
        gen = DiagonalGenerator.heat_dirichlet(problem.K)
    else:
        gen = DiagonalGenerator.schrodinger_periodic(problem.K)
    try:
        g = FIELD_BUILTINS[scenario.nonlinearity.builtin](**scenario.nonlinearity.parameters)
    except TypeError as exc:
        raise ScenarioError([f"nonlinearity.parameters: {exc}"]) from exc
    spec = PeriodicitySpec(omega=scenario.omega, c=scenario.multiplier, norm=NormKind.L2)
    return gen, _override_constants(g, scenario), spec


@dataclasses.dataclass
class ScenarioOutcome:
    """Everything a run produced; ``exit_code`` follows the module docstring."""

    name: str
    exit_code: int = EXIT_OK
    outcome: str = "ok"
    certificates: List[Certificate] = dataclasses.field(default_factory=list)
    primary: Optional[Theorem] = None
    trajectory: Optional[Union[SolutionTrajectory, FieldTrajectory]] = None
    oracle: Optional[SolutionTrajectory] = None
    oracle_gap: Optional[float] = None
    converged: Optional[bool] = None
    bound_respected: Optional[bool] = None
    messages: List[str] = dataclasses.field(default_factory=list)

    @property
    def primary_certificate(self) -> Optional[Certificate]:
        for certificate in self.certificates:
            if certificate.theorem == self.primary:
                return certificate
        return None

    def report(self) -> Dict[str, Any]:
        traj = self.trajectory
        return {
            "scenario": self.name,
            "exit_code": self.exit_code,
            "outcome": self.outcome,
            "primary_theorem": self.primary.value if self.primary else None,
            "converged": self.converged,
            "iterations": traj.iterations if traj is not None else None,
            "final_update": traj.final_update if traj is not None else None,
            "residuals": traj.residuals.model_dump() if traj is not None and traj.residuals else None,
            "sup_norm": traj.sup_norm() if traj is not None else None,
            "oracle_gap": self.oracle_gap,
            "bound_respected": self.bound_respected,
            "messages": list(self.messages),
        }


def _ode_certificates(kernel: GreenKernelODE, g: NonlinearitySpec, scenario: Scenario) -> Tuple[List[Certificate], Optional[Theorem]]:
    certificates = []
    if g.L is not None:
        certificates.append(certify_theorem1(kernel, g, use_bound=scenario.solver.bound))
    if g.g1 is not None and g.g2 is not None:
        certificates.append(certify_theorem2(kernel, g, use_bound=scenario.solver.bound))
    primary = Theorem.T31 if g.L is not None else (Theorem.T41 if certificates else None)
    return certificates, primary


def _field_certificates(constants, spec, g: FieldNonlinearity) -> Tuple[List[Certificate], Optional[Theorem]]:
    certificates = []
    if g.L is not None:
        certificates.append(certify_theorem3(constants, spec, g))
    if g.g1 is not None and g.g2 is not None:
        certificates.append(certify_theorem4(constants, spec, g, compact_semigroup=constants.gamma < 0))
    primary = Theorem.T51 if g.L is not None else (Theorem.T52 if certificates else None)
    return certificates, primary


def _record_solver_failure(outcome: ScenarioOutcome, scenario: Scenario, exc: WCPeriodError) -> None:
    outcome.converged = False
    outcome.messages.append(f"solver failed: {exc}")
    logger.warning("Scenario %s: solver failed: %s", scenario.name, exc)


def _solve_ode(kernel: GreenKernelODE, g: NonlinearitySpec, scenario: Scenario, method: SolverMethod, outcome: ScenarioOutcome) -> None:
    solver = scenario.solver
    try:
        if method == SolverMethod.POINCARE:
            outcome.trajectory = poincare_solve(kernel, g, tol=solver.tol, max_iter=solver.max_iter, grid_size=solver.grid)
        else:
            outcome.trajectory = picard_solve(kernel, g, grid_size=solver.grid, tol=solver.tol, max_iter=solver.max_iter)
        if method == SolverMethod.BOTH:
            outcome.oracle = poincare_solve(kernel, g, tol=solver.tol, max_iter=solver.max_iter, grid_size=solver.grid)
            outcome.oracle_gap = oracle_gap(outcome.trajectory, outcome.oracle)
        outcome.converged = True
    except NonConvergenceError as exc:
        outcome.converged = False
        outcome.trajectory = outcome.trajectory or exc.trajectory
        outcome.messages.append(str(exc))
        logger.warning("Scenario %s: %s", scenario.name, exc)
    except (ResonanceError, ScenarioError):
        raise
    except WCPeriodError as exc:
        _record_solver_failure(outcome, scenario, exc)


def _solve_field(gen: DiagonalGenerator, g: FieldNonlinearity, spec: PeriodicitySpec, scenario: Scenario, method: SolverMethod, outcome: ScenarioOutcome) -> None:
    solver = scenario.solver
    try:
        traj = mild_picard_solve(
            gen, g, spec, time_grid=solver.grid, tol=solver.tol, max_iter=solver.max_iter, points=scenario.problem.points
        )
        outcome.trajectory = traj
        outcome.converged = True
    except NonConvergenceError as exc:
        outcome.converged = False
        outcome.trajectory = exc.trajectory
        outcome.messages.append(str(exc))
        logger.warning("Scenario %s: %s", scenario.name, exc)
        return
    except (ResonanceError, ScenarioError):
        raise
    except WCPeriodError as exc:
        _record_solver_failure(outcome, scenario, exc)
        return
    if method != SolverMethod.PICARD:
        horizon = SPECTRAL_ORACLE_WINDOWS * spec.omega
        try:
            start = mild_extend(traj, 0.0)
            propagated = exponential_propagate(
                gen, g, start, 0.0, horizon, steps=SPECTRAL_ORACLE_STEPS, points=scenario.problem.points
            )
            outcome.oracle_gap = float(np.linalg.norm(propagated.coefficients - mild_extend(traj, horizon).coefficients))
        except WCPeriodError as exc:
            _record_solver_failure(outcome, scenario, exc)


def _check_bound(outcome: ScenarioOutcome) -> None:
    primary = outcome.primary_certificate
    if primary is None or not primary.certified or not outcome.converged or primary.bound is None:
        return
    outcome.bound_respected = outcome.trajectory.sup_norm() <= primary.bound * (1.0 + BOUND_SLACK)
    if not outcome.bound_respected:
        outcome.messages.append(
            f"solution norm {outcome.trajectory.sup_norm():.6g} exceeds the a-priori bound {primary.bound:.6g}"
        )


def run_scenario(
    scenario: Scenario,
    mode: RunMode = RunMode.SOLVE,
    out_dir: Optional[Union[str, Path]] = None,
) -> ScenarioOutcome:
    """
    Run the certificates and (unless ``mode`` is certify) the solvers of a scenario.

    Artifacts are written under ``out_dir`` when it is given.
    """
    mode = RunMode(mode)
    outcome = ScenarioOutcome(name=scenario.name)
    method = SolverMethod.BOTH if mode == RunMode.ORACLE_COMPARE else scenario.solver.method
    logger.info("Running scenario %s (%s, method=%s)", scenario.name, mode.value, method.value)

    evaluation_failed = False
    try:
        if isinstance(scenario.problem, OdeProblem):
            spec = PeriodicitySpec(omega=scenario.omega, c=scenario.multiplier, norm=scenario.norm)
            g = build_ode_nonlinearity(scenario)
            kernel = GreenKernelODE(scenario.problem.entries(), spec)
            outcome.certificates, outcome.primary = _ode_certificates(kernel, g, scenario)
            if mode != RunMode.CERTIFY:
                _solve_ode(kernel, g, scenario, method, outcome)
        else:
            gen, field_g, spec = build_field_problem(scenario)
            constants = generator_constants(gen, spec)
            outcome.certificates, outcome.primary = _field_certificates(constants, spec, field_g)
            if mode != RunMode.CERTIFY:
                _solve_field(gen, field_g, spec, scenario, method, outcome)
    except ResonanceError as exc:
        outcome.exit_code = EXIT_RESONANCE
        outcome.outcome = "resonance"
        outcome.messages.append(str(exc))
        logger.warning("Scenario %s: %s", scenario.name, exc)
        if out_dir is not None:
            write_artifacts(outcome, scenario, out_dir)
        return outcome
    except ScenarioError:
        raise
    except WCPeriodError as exc:
        # the nonlinearity or the linear part could not be evaluated
        outcome.certificates, outcome.primary = [], None
        outcome.messages.append(f"certificate evaluation failed: {exc}")
        logger.warning("Scenario %s: certificate evaluation failed: %s", scenario.name, exc)
        evaluation_failed = True

    _check_bound(outcome)
    primary = outcome.primary_certificate
    if primary is None or not primary.certified:
        outcome.exit_code = EXIT_CERTIFICATE_FAILED
        outcome.outcome = "certificate_failed"
        if primary is None and not evaluation_failed:
            outcome.messages.append("no certificate: the nonlinearity declares neither L nor (g1, g2)")
    elif outcome.converged is False:
        outcome.exit_code = EXIT_NONCONVERGENCE
        outcome.outcome = "nonconvergence"

    if out_dir is not None:
        write_artifacts(outcome, scenario, out_dir)
    logger.info("Scenario %s finished with exit code %s", scenario.name, outcome.exit_code)
    return outcome


def trajectory_frame(traj: Union[SolutionTrajectory, FieldTrajectory]) -> pd.DataFrame:
    """Columns t, re_y1, im_y1, ... (modal coefficients for field trajectories)."""
    values = traj.values if isinstance(traj, SolutionTrajectory) else traj.coefficients
    columns: Dict[str, np.ndarray] = {"t": traj.grid}
    for i in range(values.shape[1]):
        columns[f"re_y{i + 1}"] = values[:, i].real
        columns[f"im_y{i + 1}"] = values[:, i].imag
    return pd.DataFrame(columns)


def write_trajectory_csv(traj: Union[SolutionTrajectory, FieldTrajectory], path: Union[str, Path]) -> None:
    trajectory_frame(traj).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_json_safe(item) for item in value]
    return value


def write_artifacts(outcome: ScenarioOutcome, scenario: Scenario, out_dir: Union[str, Path]) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    certificate_doc = {
        "scenario": scenario.name,
        "primary_theorem": outcome.primary.value if outcome.primary else None,
        "certificates": [certificate.model_dump(mode="json") for certificate in outcome.certificates],
    }
    (out_dir / scenario.outputs.certificate).write_text(
        json.dumps(_json_safe(certificate_doc), indent=2) + "\n", encoding="utf-8"
    )
    (out_dir / scenario.outputs.report).write_text(
        json.dumps(_json_safe(outcome.report()), indent=2) + "\n", encoding="utf-8"
    )
    if outcome.trajectory is not None:
        write_trajectory_csv(outcome.trajectory, out_dir / scenario.outputs.trajectory_csv)
    logger.info("Artifacts of %s written to %s", scenario.name, out_dir)
