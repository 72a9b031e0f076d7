"""Certificate evaluation and the certificate archive."""

import json
import logging
import math
from typing import List, Optional

from fastapi import APIRouter, Depends, HTTPException
from sqlalchemy.orm import Session

from database import get_db
from models import orm
from models.api_models import CertificateRecord, CertifyResponse
from models.scenario_models import Scenario
from services.errors import ScenarioError, WCPeriodError
from services.scenarios import EXIT_RESONANCE, RunMode, ScenarioOutcome, run_scenario

router = APIRouter()
logger = logging.getLogger(__name__)

MAX_LIMIT = 500


def run_for_http(scenario: Scenario, mode: RunMode) -> ScenarioOutcome:
    """Run a scenario and translate library errors into HTTP errors."""
    try:
        outcome = run_scenario(scenario, mode=mode)
    except ScenarioError as exc:
        raise HTTPException(status_code=422, detail=exc.errors)
    except WCPeriodError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    if outcome.exit_code == EXIT_RESONANCE:
        raise HTTPException(status_code=409, detail="; ".join(outcome.messages))
    return outcome


def _finite(value: Optional[float]) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None


def archive_outcome(db: Session, outcome: ScenarioOutcome) -> None:
    for certificate in outcome.certificates:
        db.add(
            orm.CertificateRecordDB(
                scenario=outcome.name,
                theorem=certificate.theorem.value,
                verdict=certificate.verdict.value,
                reason=certificate.reason,
                contraction=_finite(certificate.contraction),
                bound=_finite(certificate.bound),
                constants_json=json.dumps(certificate.constants),
                inputs_digest=certificate.inputs_digest,
            )
        )
    db.commit()
    logger.info("Archived %s certificates of %s", len(outcome.certificates), outcome.name)


@router.post("/certify", response_model=CertifyResponse)
def certify(payload: Scenario, db: Session = Depends(get_db)) -> CertifyResponse:
    """Evaluate the certificates of a scenario and archive them."""
    outcome = run_for_http(payload, RunMode.CERTIFY)
    archive_outcome(db, outcome)
    report = outcome.report()
    return CertifyResponse(
        scenario=outcome.name,
        exit_code=outcome.exit_code,
        outcome=outcome.outcome,
        primary_theorem=report["primary_theorem"],
        certificates=outcome.certificates,
        messages=outcome.messages,
    )


@router.get("", response_model=List[CertificateRecord])
def list_certificates(
    theorem: Optional[str] = None,
    limit: int = 50,
    db: Session = Depends(get_db),
) -> List[CertificateRecord]:
    """Archived certificates, newest first."""
    if limit < 1 or limit > MAX_LIMIT:
        raise HTTPException(status_code=422, detail=f"limit must be between 1 and {MAX_LIMIT}")
    query = db.query(orm.CertificateRecordDB)
    if theorem:
        query = query.filter(orm.CertificateRecordDB.theorem == theorem)
    records = query.order_by(orm.CertificateRecordDB.id.desc()).limit(limit).all()
    return [
        CertificateRecord(
            id=record.id,
            scenario=record.scenario,
            theorem=record.theorem,
            verdict=record.verdict,
            reason=record.reason,
            contraction=record.contraction,
            bound=record.bound,
            constants=json.loads(record.constants_json),
            inputs_digest=record.inputs_digest,
            created_at=record.created_at,
        )
        for record in records
    ]
