"""
Run registry connection handling.

The registry is optional: the CLI opens it only when RUN_DATABASE_URL (or
database.url in the run configuration) is set, records the run summaries and
closes it again.
"""

import logging
from contextlib import contextmanager
from typing import Generator

from sqlalchemy import create_engine, text
from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import Session, sessionmaker
from sqlalchemy.pool import StaticPool

from src.utils.exceptions import OutputError

from .models import Base

logger = logging.getLogger(__name__)


def _engine_options(url: str) -> dict:
    if url.startswith("sqlite"):
        # in-memory registries must share one connection across threads
        return {"connect_args": {"check_same_thread": False}, "poolclass": StaticPool}
    return {"pool_pre_ping": True, "pool_recycle": 300}


class DatabaseManager:
    """Engine and session factory of one run registry."""

    def __init__(self, url: str):
        self.url = url
        try:
            self.engine = create_engine(url, echo=False, **_engine_options(url))
        except (SQLAlchemyError, ValueError) as e:
            raise OutputError(f"cannot open run registry {url!r}: {e}") from e
        self.SessionLocal = sessionmaker(bind=self.engine, autoflush=False, expire_on_commit=False)
        logger.debug(f"Run registry engine ready ({self.engine.url.get_backend_name()})")

    def create_tables(self):
        try:
            Base.metadata.create_all(bind=self.engine)
        except SQLAlchemyError as e:
            raise OutputError(f"cannot create run registry tables: {e}") from e

    @contextmanager
    def get_db_session(self) -> Generator[Session, None, None]:
        """Session that commits on success and rolls back on any error."""
        session = self.SessionLocal()
        try:
            yield session
            session.commit()
        except Exception as e:
            session.rollback()
            logger.error(f"❌ Run registry session failed: {e}")
            raise
        finally:
            session.close()

    def check_connection(self) -> bool:
        try:
            with self.get_db_session() as session:
                session.execute(text("SELECT 1"))
            return True
        except SQLAlchemyError as e:
            logger.error(f"❌ Run registry unreachable: {e}")
            return False

    def close(self):
        self.engine.dispose()


def init_database(url: str) -> DatabaseManager:
    """Open the registry at `url` and make sure its tables exist."""
    manager = DatabaseManager(url)
    if not manager.check_connection():
        manager.close()
        raise OutputError(f"run registry {manager.engine.url.render_as_string(hide_password=True)} is unreachable")
    manager.create_tables()
    logger.info(f"💾 Recording runs in {manager.engine.url.render_as_string(hide_password=True)}")
    return manager
