import logging

from fastapi import FastAPI, Response, status
from fastapi.middleware.cors import CORSMiddleware

from database import Base, engine
from models import orm  # noqa: F401  (registers the archive table)
from routers import certificates, reproduce, solutions
from services.config import LOG_LEVEL

logging.basicConfig(level=getattr(logging, LOG_LEVEL.upper(), logging.WARNING))

app = FastAPI(title="wcperiod api")


app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(certificates.router, prefix="/api/certificates", tags=["Certificates"])
app.include_router(solutions.router, prefix="/api/solutions", tags=["Solutions"])
app.include_router(reproduce.router, prefix="/api/reproduce", tags=["Reproduce"])


@app.get("/", include_in_schema=False)
def root() -> dict[str, str]:
    return {"status": "ok", "docs": "/docs"}


@app.get("/favicon.ico", include_in_schema=False)
def favicon() -> Response:
    return Response(status_code=status.HTTP_204_NO_CONTENT)


@app.on_event("startup")
def create_tables() -> None:
    Base.metadata.create_all(bind=engine)
