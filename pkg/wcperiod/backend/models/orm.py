from sqlalchemy import Column, DateTime, Float, Integer, String, Text
from database import Base
import datetime


class CertificateRecordDB(Base):
    """Append-only archive of evaluated certificates."""

    __tablename__ = "certificates"

    id = Column(Integer, primary_key=True, index=True, autoincrement=True)
    scenario = Column(String, nullable=False, index=True)
    theorem = Column(String, nullable=False, index=True)
    verdict = Column(String, nullable=False)
    reason = Column(String, nullable=True)
    contraction = Column(Float, nullable=True)
    bound = Column(Float, nullable=True)
    constants_json = Column(Text, nullable=False)
    inputs_digest = Column(Text, nullable=False)
    created_at = Column(DateTime, default=datetime.datetime.utcnow, nullable=False)
