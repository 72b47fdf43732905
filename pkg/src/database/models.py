"""
Database models for the run registry.
"""

from sqlalchemy import Boolean, Column, DateTime, Float, Integer, String, Text
from sqlalchemy.orm import declarative_base
from sqlalchemy.sql import func

Base = declarative_base()


class RunRecord(Base):
    """One completed controller run and its summary metrics."""

    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True)
    command = Column(String(20), nullable=False)  # run, compare, sweep
    event = Column(String(255), nullable=False)
    mode = Column(String(30), nullable=False)
    horizon = Column(Integer, nullable=False)
    seed = Column(Integer, nullable=False)
    config_hash = Column(String(64), nullable=False, index=True)

    peak_outflow = Column(Float)
    peak_rwl = Column(Float)
    lowest_rwl = Column(Float)
    schedule_changes = Column(Integer)
    total_penalty = Column(Float)
    max_penalty = Column(Float)
    fallback_steps = Column(Integer, default=0)
    degraded = Column(Boolean, default=False)

    trace_path = Column(Text)
    created_at = Column(DateTime, default=func.now())

    def __repr__(self):
        return (f"<RunRecord {self.id} {self.command} {self.event} {self.mode} "
                f"H={self.horizon} seed={self.seed}>")
