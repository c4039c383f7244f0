"""Tests for the run ledger helpers."""
from unittest.mock import patch

import pytest
from sqlalchemy.exc import SQLAlchemyError

from magnls.models.run import RunRecord
from magnls.utils.database import check_database_connection, database_transaction, record_run


class TestDatabaseHelpers:
    """Test cases for ledger helpers."""

    def test_connection_check(self, app):
        """Test the in-memory ledger is reachable."""
        ok, error = check_database_connection()
        assert ok
        assert error is None

    def test_record_run(self, app, db):
        """Test a run row is stored with its JSON summary."""
        record = record_run('evolve', 'c' * 64, 'ok', 0, verdict='ReachedTFinal',
                            output_dir='runs/evolve', summary={'steps': 12})
        assert record is not None
        stored = db.session.get(RunRecord, record.id)
        assert stored.to_dict()['summary'] == {'steps': 12}
        assert stored.verdict == 'ReachedTFinal'

    def test_record_run_without_context(self):
        """Test the ledger write is skipped outside an application context."""
        assert record_run('verify', 'd' * 64, 'ok', 0) is None

    def test_record_run_failure_is_logged(self, app):
        """Test database errors never propagate."""
        with patch('magnls.utils.database.db.session.commit', side_effect=SQLAlchemyError('down')):
            assert record_run('verify', 'e' * 64, 'ok', 0) is None

    def test_transaction_rolls_back(self, app, db):
        """Test the transaction context rolls back on error."""
        with pytest.raises(RuntimeError):
            with database_transaction() as session:
                session.add(RunRecord(command='x', config_hash='f' * 64, status='ok', exit_code=0))
                raise RuntimeError('abort')
        assert RunRecord.query.count() == 0
