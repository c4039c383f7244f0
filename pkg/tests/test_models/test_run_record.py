"""Tests for the run ledger model."""
from magnls.models.run import RunRecord


class TestRunRecord:
    """Test cases for RunRecord persistence."""

    def test_create_and_serialize(self, app, db):
        """Test a stored run round-trips its JSON summary."""
        run = RunRecord(command='classify', config_hash='a' * 64, status='ok', exit_code=0,
                        verdict='GlobalBelowThreshold', output_dir='runs/classify',
                        summary='{"verdict": "GlobalBelowThreshold"}')
        db.session.add(run)
        db.session.commit()

        data = db.session.get(RunRecord, run.id).to_dict()
        assert data['command'] == 'classify'
        assert data['exit_code'] == 0
        assert data['summary'] == {'verdict': 'GlobalBelowThreshold'}
        assert data['created_at'] is not None

    def test_repr(self):
        """Test the debugging representation."""
        run = RunRecord(id=3, command='verify', config_hash='b' * 64, status='ok', exit_code=0)
        assert repr(run) == '<RunRecord 3 verify ok>'
