"""Run ledger model recording every CLI scenario."""
import json
from datetime import datetime, timezone

UTC = timezone.utc  # equivalent to datetime.UTC (3.11+)

from magnls import db


class RunRecord(db.Model):
    """One executed scenario and its outcome."""

    __tablename__ = 'runs'

    id = db.Column(db.Integer, primary_key=True, autoincrement=True)
    command = db.Column(db.Text, nullable=False)
    config_hash = db.Column(db.String(64), nullable=False, index=True)
    status = db.Column(db.Text, nullable=False)
    exit_code = db.Column(db.Integer, nullable=False, default=0)
    verdict = db.Column(db.Text, nullable=True)
    output_dir = db.Column(db.Text, nullable=True)
    summary = db.Column(db.Text, nullable=True)
    created_at = db.Column(db.DateTime, nullable=False,
                           default=lambda: datetime.now(UTC).replace(tzinfo=None))

    def to_dict(self):
        """Convert RunRecord instance to dictionary for API responses."""
        return {
            'id': self.id,
            'command': self.command,
            'config_hash': self.config_hash,
            'status': self.status,
            'exit_code': self.exit_code,
            'verdict': self.verdict,
            'output_dir': self.output_dir,
            'summary': json.loads(self.summary) if self.summary else None,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }

    def __repr__(self):
        return f'<RunRecord {self.id} {self.command} {self.status}>'
