"""
CRUD operations for the run registry.
"""

from sqlalchemy.orm import Session
from sqlalchemy import desc
from typing import List, Optional

from .models import RunRecord


class RunRecordCRUD:
    @staticmethod
    def create(db: Session, **kwargs) -> RunRecord:
        """Create a new run record."""
        record = RunRecord(**kwargs)
        db.add(record)
        db.commit()
        db.refresh(record)
        return record

    @staticmethod
    def get_by_id(db: Session, record_id: int) -> Optional[RunRecord]:
        return db.query(RunRecord).filter(RunRecord.id == record_id).first()

    @staticmethod
    def get_by_config_hash(db: Session, config_hash: str) -> List[RunRecord]:
        """All runs made with one configuration, oldest first."""
        return (db.query(RunRecord)
                .filter(RunRecord.config_hash == config_hash)
                .order_by(RunRecord.id)
                .all())

    @staticmethod
    def list_runs(db: Session, event: str = None, mode: str = None,
                  skip: int = 0, limit: int = 100) -> List[RunRecord]:
        """Most recent runs first, optionally filtered by event and mode."""
        query = db.query(RunRecord)
        if event:
            query = query.filter(RunRecord.event == event)
        if mode:
            query = query.filter(RunRecord.mode == mode)
        return query.order_by(desc(RunRecord.id)).offset(skip).limit(limit).all()

    @staticmethod
    def record_metrics(db: Session, command: str, event: str, mode: str, horizon: int, seed: int,
                       config_hash: str, metrics, degraded: bool = False,
                       trace_path: str = None) -> RunRecord:
        """Create a record from a Metrics summary."""
        return RunRecordCRUD.create(
            db,
            command=command,
            event=event,
            mode=mode,
            horizon=horizon,
            seed=seed,
            config_hash=config_hash,
            degraded=degraded,
            trace_path=trace_path,
            **metrics.to_dict(),
        )
