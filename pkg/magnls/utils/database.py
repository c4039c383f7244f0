"""Database helpers for the run ledger."""
import logging
from contextlib import contextmanager
from typing import Any, Dict, Optional, Tuple

from flask import has_app_context
from sqlalchemy import text
from sqlalchemy.exc import SQLAlchemyError

from magnls import db
from magnls.utils.reports import dumps

logger = logging.getLogger(__name__)


def check_database_connection() -> Tuple[bool, Optional[str]]:
    """
    Test database connectivity.

    Returns:
        Tuple of (success: bool, error_message: Optional[str])
    """
    try:
        with db.engine.connect() as conn:
            conn.execute(text('SELECT 1'))
        logger.info("Database connection test successful")
        return True, None
    except Exception as e:
        error_msg = f"Database connection test failed: {str(e)}"
        logger.error(error_msg)
        return False, error_msg


@contextmanager
def database_transaction():
    """
    Context manager for database transactions with automatic rollback on error.

    Usage:
        with database_transaction() as session:
            session.add(record)
    """
    try:
        yield db.session
        db.session.commit()
        logger.debug("Database transaction committed successfully")
    except Exception as e:
        db.session.rollback()
        logger.error(f"Database transaction rolled back due to error: {e}")
        raise


def record_run(command: str, config_hash: str, status: str, exit_code: int,
               verdict: Optional[str] = None, output_dir: Optional[str] = None,
               summary: Optional[Dict[str, Any]] = None):
    """
    Append one run to the ledger.

    Best-effort: without an application context, or on any database error, the
    failure is logged and None is returned.

    Returns:
        The stored RunRecord, or None
    """
    if not has_app_context():
        logger.debug(f"No application context; ledger entry for {command} skipped")
        return None
    from magnls.models.run import RunRecord
    try:
        with database_transaction() as session:
            record = RunRecord(command=command, config_hash=config_hash, status=status,
                               exit_code=exit_code, verdict=verdict, output_dir=output_dir,
                               summary=dumps(summary) if summary is not None else None)
            session.add(record)
        return record
    except SQLAlchemyError as e:
        logger.warning(f"Run ledger write failed for {command}: {e}")
        return None
