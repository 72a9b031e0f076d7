"""Solving scenarios over HTTP."""

import logging

from fastapi import APIRouter

from models.api_models import SolveResponse
from models.scenario_models import Scenario
from routers.certificates import run_for_http
from services.scenarios import RunMode, trajectory_frame

router = APIRouter()
logger = logging.getLogger(__name__)


@router.post("/solve", response_model=SolveResponse)
def solve(payload: Scenario) -> SolveResponse:
    """Certify and solve; nonconvergence and failed certificates are outcomes, not errors."""
    outcome = run_for_http(payload, RunMode.SOLVE)
    report = outcome.report()
    rows = []
    if outcome.trajectory is not None:
        rows = trajectory_frame(outcome.trajectory).to_dict(orient="records")
    logger.info("Solved %s: outcome=%s", outcome.name, outcome.outcome)
    return SolveResponse(
        scenario=outcome.name,
        exit_code=outcome.exit_code,
        outcome=outcome.outcome,
        primary_theorem=report["primary_theorem"],
        certificates=outcome.certificates,
        messages=outcome.messages,
        converged=outcome.converged,
        iterations=report["iterations"],
        final_update=report["final_update"],
        residuals=outcome.trajectory.residuals if outcome.trajectory is not None else None,
        sup_norm=report["sup_norm"],
        oracle_gap=outcome.oracle_gap,
        bound_respected=outcome.bound_respected,
        trajectory=rows,
    )
