"""Published constants of the worked examples."""

from fastapi import APIRouter, HTTPException

from models.api_models import ReproduceResponse, ReproduceRow
from services.reproduce import EXAMPLES, all_within_tolerance, reproduce

router = APIRouter()


@router.get("/{example_id}", response_model=ReproduceResponse)
def reproduce_example(example_id: str) -> ReproduceResponse:
    if example_id not in EXAMPLES:
        raise HTTPException(status_code=404, detail=f"Unknown example {example_id!r}")
    table = reproduce(example_id)
    rows = [ReproduceRow(**record) for record in table.to_dict(orient="records")]
    return ReproduceResponse(example_id=example_id, all_ok=all_within_tolerance(table), rows=rows)
