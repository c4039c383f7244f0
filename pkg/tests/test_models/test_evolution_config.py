"""Tests for stepper configuration and outcomes."""
import pytest

from magnls.models.diagnostics import CSV_COLUMNS, DiagnosticsRecord
from magnls.models.evolution import EvolveConfig, EvolveOutcome, EvolveStatus
from magnls.utils.errors import ConfigError


def _record(t, mass=1.0, energy=0.5, R=0.25):
    return DiagnosticsRecord(t=t, mass=mass, energy_E=energy, energy_E0=energy, angular_R=R,
                             grad_norm_sq=1.0, mag_kinetic_sq=1.0, rho_norm_sq=1.0,
                             lp_norm=0.5, virial_F=1.5, virial_Fprime=0.0,
                             boundary_mass_fraction=0.0)


class TestEvolveConfig:
    """Test cases for EvolveConfig validation."""

    def test_defaults(self):
        """Test the documented defaults."""
        cfg = EvolveConfig()
        assert cfg.blowup_grad_ratio == 25.0
        assert cfg.tail_fraction_max == 1e-4
        assert cfg.adapt
        assert cfg.cfl is None

    @pytest.mark.parametrize('field, value', [
        ('dt_initial', -1e-3), ('t_final', 0.0), ('blowup_grad_ratio', 1.0),
        ('tail_fraction_max', 1.0), ('record_stride', 0), ('max_steps', 0),
    ])
    def test_invalid_values(self, field, value):
        """Test each bound names its field."""
        with pytest.raises(ConfigError) as exc_info:
            EvolveConfig(**{field: value})
        assert exc_info.value.field == f'evolve.{field}'

    def test_from_dict_rejects_unknown_keys(self):
        """Test misspelled stepper keys are reported."""
        with pytest.raises(ConfigError) as exc_info:
            EvolveConfig.from_dict({'dt': 0.1})
        assert exc_info.value.field == 'evolve'

    def test_from_dict_and_to_dict(self):
        """Test a partial mapping keeps the other defaults."""
        cfg = EvolveConfig.from_dict({'t_final': 5.0, 'record_stride': 2})
        data = cfg.to_dict()
        assert data['t_final'] == 5.0
        assert data['record_stride'] == 2
        assert data['dt_initial'] == 1e-3


class TestEvolveOutcome:
    """Test cases for EvolveOutcome summaries."""

    def test_drift_and_summary(self, gaussian):
        """Test relative drifts between first and last records."""
        outcome = EvolveOutcome(EvolveStatus.REACHED_T_FINAL, 1.0,
                                [_record(0.0), _record(1.0, mass=1.001, energy=0.5005, R=0.25)],
                                gaussian, steps=10)
        drift = outcome.drift()
        assert drift['mass'] == pytest.approx(1e-3)
        assert drift['energy_E'] == pytest.approx(5e-4)
        assert drift['angular_R'] == 0.0
        summary = outcome.summary()
        assert summary['status'] == 'ReachedTFinal'
        assert summary['steps'] == 10
        assert summary['blowup_time_estimate'] is None


class TestDiagnosticsRecord:
    """Test cases for the CSV row layout."""

    def test_row_matches_columns(self):
        """Test the row follows the fixed column order and omits the tail fraction."""
        record = _record(0.5)
        row = record.csv_row()
        assert len(row) == len(CSV_COLUMNS)
        assert CSV_COLUMNS[0] == 't' and row[0] == 0.5
        assert record.to_dict()['F'] == 1.5
        assert 'spectral_tail' not in record.to_dict()
