"""Tests for initial-data constructors and scenario runs."""
import json
import os

import numpy as np
import pytest

from magnls.models.grid import Field, Grid, Params
from magnls.models.run import RunRecord
from magnls.models.scenario import ScenarioConfig
from magnls.services.dynamics_service import DynamicsService
from magnls.services.functional_service import FunctionalService
from magnls.services.scenario_service import EVOLVE_GRID, ScenarioService, ScenarioServiceError
from magnls.services.soliton_service import SolitonService
from magnls.services.verification_service import VerificationService
from magnls.utils.checkpoint import write_checkpoint
from magnls.utils.errors import ConfigError

SMALL_GRID = {'dims': [32, 32, 32], 'half_widths': [8.0, 8.0, 8.0]}


def make_config(tmp_path, **overrides):
    data = {
        'command': 'classify',
        'params': {'alpha': 1, 'b': 1},
        'grid': SMALL_GRID,
        'data': {'kind': 'gaussian', 'amplitude': 2.0},
        'output_dir': str(tmp_path / 'out'),
    }
    data.update(overrides)
    return ScenarioConfig.from_dict(data)


def read_report(config):
    with open(os.path.join(config.output_dir, 'report.json')) as handle:
        return json.load(handle)


class TestBuildInitialData:
    """Test cases for the data constructors and their resolution guard."""

    def test_gaussian_with_mass(self, small_grid, params2):
        f = ScenarioService.build_initial_data({'kind': 'gaussian', 'mass': 3.0}, small_grid, params2)
        assert FunctionalService.mass(f) == pytest.approx(3.0, rel=1e-12)

    def test_gaussian_chirp(self, small_grid, params2):
        """Test the chirp sign makes F' negative."""
        f = ScenarioService.build_initial_data({'kind': 'gaussian', 'chirp': 0.2}, small_grid, params2)
        assert FunctionalService.norms(f, params2).virial_Fprime < 0

    def test_narrow_gaussian_refused(self, small_grid, params2):
        """Test a feature under eight grid points names the offending field."""
        with pytest.raises(ConfigError) as exc_info:
            ScenarioService.build_initial_data({'kind': 'gaussian', 'widths': 0.1}, small_grid,
                                               params2)
        assert exc_info.value.field == 'data.widths'
        assert exc_info.value.exit_code == 1

    def test_compressed_soliton_refused(self, soliton_alpha2, soliton_grid, params2):
        profile, _ = soliton_alpha2
        with pytest.raises(ConfigError) as exc_info:
            ScenarioService.build_initial_data({'kind': 'scaled-soliton', 'a': 1.0, 'lam': 10.0},
                                               soliton_grid, params2, profile)
        assert exc_info.value.field == 'data.lam'

    def test_soliton_needs_profile(self, soliton_grid, params2):
        with pytest.raises(ScenarioServiceError) as exc_info:
            ScenarioService.build_initial_data({'kind': 'scaled-soliton', 'a': 1.0, 'lam': 1.0},
                                               soliton_grid, params2)
        assert exc_info.value.kind == 'invalid'

    def test_strong_field_bump_refused(self, small_grid):
        """Test the Landau length sqrt(2/|b|) is part of the resolution guard."""
        with pytest.raises(ConfigError) as exc_info:
            ScenarioService.build_initial_data({'kind': 'transverse-gaussian-bump', 'lam': 1.0},
                                               small_grid, Params(b=100.0, alpha=2.0))
        assert exc_info.value.field == 'params.b'

    def test_transverse_bump_mass(self, small_grid, params2):
        f = ScenarioService.build_initial_data(
            {'kind': 'transverse-gaussian-bump', 'lam': 1.0, 'c': 2.0}, small_grid, params2)
        assert FunctionalService.mass(f) == pytest.approx(2.0, rel=1e-7)

    def test_cutoff_soliton(self, soliton_alpha2, soliton_grid, params2):
        """Test the cut-off soliton is normalized to c and vanishes past the radius."""
        profile, _ = soliton_alpha2
        f = ScenarioService.build_initial_data(
            {'kind': 'cutoff-soliton', 'lam': 1.0, 'c': 5.0, 'radius': 6.0},
            soliton_grid, params2, profile)
        assert FunctionalService.mass(f) == pytest.approx(5.0, rel=1e-12)
        assert np.all(f.values[soliton_grid.r_sq >= 36.0] == 0)

    def test_checkpoint_grid_mismatch(self, tmp_path, gaussian, params2):
        path = write_checkpoint(str(tmp_path / 'g.mnls'), gaussian, params2, 0.0)
        with pytest.raises(ConfigError) as exc_info:
            ScenarioService.build_initial_data({'kind': 'checkpoint', 'path': path},
                                               Grid((16, 16, 16), (8.0, 8.0, 8.0)), params2)
        assert exc_info.value.field == 'data.path'

    def test_checkpoint_round_trip(self, tmp_path, gaussian, params2):
        path = write_checkpoint(str(tmp_path / 'g.mnls'), gaussian, params2, 0.5)
        f = ScenarioService.build_initial_data({'kind': 'checkpoint', 'path': path},
                                               gaussian.grid, params2)
        assert np.array_equal(f.values, gaussian.values)

    def test_unknown_kind(self, small_grid, params2):
        with pytest.raises(ConfigError) as exc_info:
            ScenarioService.build_initial_data({'kind': 'plane-wave'}, small_grid, params2)
        assert exc_info.value.field == 'data.kind'


class TestRun:
    """Test cases for the run driver, its report and the ledger."""

    def test_classify_writes_report(self, app, tmp_path):
        """Test a subcritical classification exits 0 and lands in the ledger."""
        config = make_config(tmp_path)
        exit_code, artifacts = ScenarioService.run(config)
        assert exit_code == 0
        report = read_report(config)
        assert report['status'] == 'ok'
        assert report['verdict'] == 'GlobalMassSubcritical'
        assert report['config']['params']['alpha'] == 1.0
        assert len(report['config_hash']) == 64
        assert artifacts['report'].endswith('report.json')
        record = RunRecord.query.one()
        assert record.command == 'classify'
        assert record.verdict == 'GlobalMassSubcritical'
        assert record.config_hash == report['config_hash']

    def test_runs_without_app_context(self, tmp_path):
        """Test the ledger is skipped outside the application."""
        exit_code, _ = ScenarioService.run(make_config(tmp_path))
        assert exit_code == 0

    def test_dichotomy_refused_below_critical(self, app, tmp_path):
        config = make_config(tmp_path, command='dichotomy-suite', data=None)
        exit_code, _ = ScenarioService.run(config)
        assert exit_code == 2
        report = read_report(config)
        assert report['status'] == 'refused'
        assert report['result']['code'] == 'REFUSED'
        assert RunRecord.query.one().exit_code == 2

    def test_resolution_failure_exits_one(self, app, tmp_path):
        config = make_config(tmp_path, data={'kind': 'gaussian', 'widths': 0.1})
        exit_code, _ = ScenarioService.run(config)
        assert exit_code == 1
        assert read_report(config)['result']['code'] == 'INVALID_CONFIG'

    def test_numerical_failure_exits_three(self, app, tmp_path, monkeypatch):
        def explode(config):
            raise FloatingPointError('overflow in exp')

        monkeypatch.setattr(ScenarioService, 'classify_config', staticmethod(explode))
        config = make_config(tmp_path)
        exit_code, _ = ScenarioService.run(config)
        assert exit_code == 3
        assert read_report(config)['status'] == 'numerical'

    def test_failed_verification_exits_three(self, app, tmp_path, monkeypatch):
        """Test a suite with violations is reported as a failed check."""
        monkeypatch.setattr(VerificationService, 'run',
                            staticmethod(lambda *args, **kwargs: {'passed': False, 'violations': 1}))
        config = make_config(tmp_path, command='verify', data=None, samples=2)
        exit_code, artifacts = ScenarioService.run(config)
        assert exit_code == 3
        assert read_report(config)['status'] == 'check_failed'
        assert os.path.exists(artifacts['verify'])

    def test_evolve_artifacts(self, app, tmp_path):
        """Test a short evolution writes the series, final state and summary."""
        config = make_config(tmp_path, command='evolve',
                             evolve={'dt_initial': 1e-3, 't_final': 0.02, 'record_stride': 5})
        exit_code, artifacts = ScenarioService.run(config)
        assert exit_code == 0
        assert set(artifacts) == {'series', 'final', 'summary', 'report'}
        with open(artifacts['series']) as handle:
            header = handle.readline().strip().split(',')
        assert header[0] == 't'
        report = read_report(config)
        assert report['verdict'] == 'ReachedTFinal'
        assert report['result']['virial_parabola_root'] is None or \
            report['result']['virial_parabola_root'] > 0

    def test_relaxation_disagreement_exits_three(self, app, tmp_path, monkeypatch):
        """Test a soliton whose relaxation mass disagrees is a failed check."""
        profile, qc = SolitonService.get_profile(2.0, 1e-10)
        monkeypatch.setattr(SolitonService, 'relax_q',
                            staticmethod(lambda alpha: (1.01 * qc.mass_Q, profile.q0)))
        config = make_config(tmp_path, command='solve-q', params={'alpha': 2}, data=None)
        exit_code, artifacts = ScenarioService.run(config)
        assert exit_code == 3
        report = read_report(config)
        assert report['status'] == 'check_failed'
        assert not report['result']['relaxation']['agreed']
        assert os.path.exists(artifacts['constants'])


class TestDichotomySuite:
    """Test cases for the paired data and run lengths of the dichotomy suite."""

    def test_critical_pair_mass_ratios(self, app, tmp_path, soliton_critical):
        """Test the global and blow-up data carry 0.9 and 1.2 times the mass of Q."""
        profile, qc = soliton_critical
        config = make_config(tmp_path, command='dichotomy-suite', params={'alpha': '4/3', 'b': 1},
                             grid=None, data=None)
        pairs = ScenarioService._critical_pairs(config, EVOLVE_GRID, profile, qc, 1e-8, 1e-9)
        ratios = {label: FunctionalService.mass(u0) / qc.mass_Q for label, _, u0, _ in pairs}
        assert ratios['global'] == pytest.approx(0.9, rel=1e-6)
        assert ratios['blowup'] == pytest.approx(1.2, rel=1e-4)
        verdicts = {label: report.verdict.value for label, _, _, report in pairs}
        assert verdicts == {'global': 'GlobalMassCritical', 'blowup': 'BlowupKiefferLoss1'}

    def test_global_runs_last_to_five(self, app, tmp_path, monkeypatch, soliton_critical):
        """Test only the global run is stretched to t = 5."""
        _, qc = soliton_critical
        evolve = DynamicsService.evolve
        lengths = []

        def record(u0, p, cfg, checkpoint_dir=None):
            lengths.append((FunctionalService.mass(u0) / qc.mass_Q, cfg.t_final))
            return evolve(Field.zeros(u0.grid), p, cfg)

        monkeypatch.setattr(DynamicsService, 'evolve', staticmethod(record))
        config = make_config(tmp_path, command='dichotomy-suite', params={'alpha': '4/3', 'b': 1},
                             grid=None, data=None, evolve={'t_final': 2.0})
        ScenarioService.run(config)
        lengths.sort()
        assert [t for _, t in lengths] == [5.0, 2.0]
        assert lengths[0][0] == pytest.approx(0.9, rel=1e-6)
