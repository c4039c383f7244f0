"""Tests for the split-step integrator and blow-up detection."""
import numpy as np
import pytest

from magnls.models.diagnostics import DiagnosticsRecord
from magnls.models.evolution import EvolveConfig, EvolveStatus
from magnls.models.grid import Field, Grid, Params
from magnls.services.dynamics_service import (
    DynamicsService,
    DynamicsServiceError,
    _directional,
    _linear_phases,
)
from magnls.services.field_service import FieldService
from magnls.services.functional_service import FunctionalService


def make_record(t, grad):
    return DiagnosticsRecord(t=t, mass=1.0, energy_E=0.0, energy_E0=0.0, angular_R=0.0,
                             grad_norm_sq=grad, mag_kinetic_sq=grad, rho_norm_sq=1.0,
                             lp_norm=1.0, virial_F=1.0, virial_Fprime=0.0,
                             boundary_mass_fraction=0.0, spectral_tail=0.0)


def l2_distance(u, v):
    return np.sqrt(FunctionalService.mass(Field(u.grid, u.values - v.values)))


def off_axis_vortex(grid):
    """Smooth datum with no rotational symmetry and non-zero angular momentum."""
    x1, x2, x3 = grid.coords
    envelope = np.exp(-0.5 * ((x1 - 0.5) ** 2 / 2.25 + x2 ** 2 / 1.96 + x3 ** 2 / 2.25))
    return Field(grid, 0.5 * (x1 + 0.3 + 1j * x2) * envelope)


class TestStep:
    """Test cases for the single split step."""

    def test_rejects_nonpositive_dt(self, gaussian, params2):
        with pytest.raises(DynamicsServiceError) as exc_info:
            DynamicsService.step(gaussian, params2, 0.0)
        assert exc_info.value.kind == 'invalid'

    def test_step_preserves_mass(self, vortex_gaussian, params2):
        """Test every substep is unitary on the grid."""
        state = vortex_gaussian
        for _ in range(5):
            state = DynamicsService.step(state, params2, 0.01)
        assert FunctionalService.mass(state) == pytest.approx(
            FunctionalService.mass(vortex_gaussian), rel=1e-12)
        assert not state.post_blowup

    def test_linear_second_order(self, gaussian):
        """Test the linear flow converges at order two under dt halving."""
        p = Params(b=1.0, alpha=2.0)

        def run(dt):
            state = gaussian
            for _ in range(int(round(1.0 / dt))):
                state = DynamicsService.step(state, p, dt, nonlinear=False)
            return state

        reference = run(0.05 / 16)
        coarse = l2_distance(run(0.05), reference)
        fine = l2_distance(run(0.025), reference)
        assert 3.0 < coarse / fine < 5.0

    def test_virial_second_derivative(self, gaussian, params2):
        """Test a central difference of F along the flow matches F'' within 1%."""
        dt = 5e-4
        u0 = DynamicsService.step(gaussian, params2, dt)
        u1 = DynamicsService.step(u0, params2, dt)
        u2 = DynamicsService.step(u1, params2, dt)
        F = [FunctionalService.norms(u, params2).virial_F for u in (u0, u1, u2)]
        difference = (F[2] - 2.0 * F[1] + F[0]) / dt ** 2
        expected = FunctionalService.virial_Fsecond(u1, params2)
        assert difference == pytest.approx(expected, rel=1e-2)
        assert abs(expected) > 1e-2

    def test_nyquist_plane_wave_phase(self, small_grid):
        """Test the b = 0 kinetic substeps turn every mode, Nyquist included, by e^{-i k^2 dt}."""
        x1, x2, _ = small_grid.coords
        k_nyquist = np.pi * small_grid.dims[0] / (2.0 * small_grid.half_widths[0])
        k_low = 3.0 * np.pi / small_grid.half_widths[1]
        nyquist_mode = np.cos(k_nyquist * x1) * np.ones(small_grid.dims)
        low_mode = np.cos(k_low * x2) * np.ones(small_grid.dims)
        dt = 0.01
        phases = _linear_phases(small_grid, 0.0, dt)
        result = nyquist_mode + low_mode
        for axis, phase in enumerate(phases):
            result = _directional(result, phase, axis)
        expected = (np.exp(-1j * k_nyquist ** 2 * dt) * nyquist_mode +
                    np.exp(-1j * k_low ** 2 * dt) * low_mode)
        assert np.max(np.abs(result - expected)) < 1e-10


class TestEvolve:
    """Test cases for the integration driver."""

    def test_conservation(self, gaussian, params2):
        """Test mass, energy and angular momentum drift stay small."""
        cfg = EvolveConfig(dt_initial=1e-3, t_final=0.2, record_stride=20)
        outcome = DynamicsService.evolve(gaussian, params2, cfg)
        assert outcome.status is EvolveStatus.REACHED_T_FINAL
        assert outcome.t_end == pytest.approx(0.2)
        drift = outcome.drift()
        assert drift['mass'] < 1e-12
        assert drift['energy_E'] < 1e-4
        assert drift['angular_R'] < 1e-5
        assert outcome.series[0].t == 0.0
        assert outcome.series[-1].t == pytest.approx(0.2)

    def test_drift_shrinks_under_dt_halving(self, small_grid, params2):
        """Test energy and angular momentum drifts fall at least 3.5x when dt is halved."""
        u0 = off_axis_vortex(small_grid)

        def drift(dt):
            cfg = EvolveConfig(dt_initial=dt, t_final=0.5, adapt=False, record_stride=1000)
            outcome = DynamicsService.evolve(u0, params2, cfg)
            assert outcome.status is EvolveStatus.REACHED_T_FINAL
            return outcome.drift()

        coarse, fine = drift(1e-2), drift(5e-3)
        assert coarse['mass'] < 1e-12
        for name in ('energy_E', 'angular_R'):
            assert coarse[name] >= 3.5 * fine[name]

    @pytest.mark.slow
    def test_conservation_at_desk_scale(self, params2):
        """Test the t = 1 drifts on 64^3 with dt = 1e-3, and their decay under dt halving."""
        u0 = off_axis_vortex(Grid((64, 64, 64), (12.0, 12.0, 12.0)))

        def drift(dt):
            cfg = EvolveConfig(dt_initial=dt, t_final=1.0, adapt=False, record_stride=1000)
            return DynamicsService.evolve(u0, params2, cfg).drift()

        coarse, fine = drift(1e-3), drift(5e-4)
        assert coarse['mass'] < 1e-10
        assert coarse['energy_E'] < 1e-6
        assert coarse['angular_R'] < 1e-6
        for name in ('energy_E', 'angular_R'):
            assert coarse[name] >= 3.5 * fine[name]

    def test_zero_datum(self, small_grid, params2):
        """Test the zero datum stays zero without stepping."""
        outcome = DynamicsService.evolve(Field.zeros(small_grid), params2, EvolveConfig(t_final=0.5))
        assert outcome.status is EvolveStatus.REACHED_T_FINAL
        assert outcome.steps == 0
        assert outcome.series[-1].t == 0.5

    def test_under_resolved_datum(self, small_grid, params2):
        """Test grid-scale noise is reported as resolution loss at t = 0."""
        rng = np.random.default_rng(1)
        noisy = Field(small_grid, 1e-3 * rng.normal(size=small_grid.dims))
        outcome = DynamicsService.evolve(noisy, params2, EvolveConfig(t_final=0.5))
        assert outcome.status is EvolveStatus.RESOLUTION_LOSS
        assert outcome.t_end == 0.0
        assert 'under-resolved' in outcome.annotations['reason']

    def test_flagged_datum_rejected(self, small_grid, params2):
        values = small_grid.zeros()
        values[0, 0, 0] = np.inf
        with pytest.raises(DynamicsServiceError):
            DynamicsService.evolve(Field(small_grid, values, post_blowup=True), params2,
                                   EvolveConfig())

    def test_step_budget(self, gaussian, params2):
        """Test an exhausted step budget ends as resolution loss."""
        cfg = EvolveConfig(dt_initial=1e-3, t_final=1.0, max_steps=5, adapt=False)
        outcome = DynamicsService.evolve(gaussian, params2, cfg)
        assert outcome.status is EvolveStatus.RESOLUTION_LOSS
        assert outcome.steps == 5

    def test_checkpoints_written(self, tmp_path, gaussian, params2):
        cfg = EvolveConfig(dt_initial=1e-2, t_final=0.1, record_stride=1, checkpoint_stride=5,
                           adapt=False)
        DynamicsService.evolve(gaussian, params2, cfg, checkpoint_dir=str(tmp_path))
        assert sorted(p.name for p in tmp_path.iterdir()) == ['checkpoint_000005.mnls',
                                                              'checkpoint_000010.mnls']


class TestBlowupDetection:
    """Test cases for the blow-up time fit and the virial parabola."""

    def test_extrapolates_inverse_gradient(self):
        """Test |grad u|^2 = 1/(T - t) gives back T."""
        T = 0.8
        series = [make_record(t, 1.0 / (T - t)) for t in np.linspace(0.0, 0.79, 40)]
        estimate = DynamicsService.detect_blowup(series, EvolveConfig(blowup_grad_ratio=25.0))
        assert estimate == pytest.approx(T, rel=1e-6)

    def test_no_growth(self):
        series = [make_record(t, 1.0) for t in np.linspace(0.0, 1.0, 10)]
        assert DynamicsService.detect_blowup(series, EvolveConfig()) is None

    def test_empty_series(self):
        with pytest.raises(DynamicsServiceError):
            DynamicsService.detect_blowup([], EvolveConfig())

    def test_parabola_root(self):
        """Test the positive zero of F0 + F1 t + 8 E0 t^2."""
        assert DynamicsService.virial_parabola_root(1.0, 0.0, -1.0) == pytest.approx(
            1.0 / np.sqrt(8.0))
        assert DynamicsService.virial_parabola_root(1.0, -2.0, 0.0) == pytest.approx(0.5)
        assert DynamicsService.virial_parabola_root(1.0, 1.0, 1.0) is None
        assert DynamicsService.virial_parabola(1.0, 0.0, -1.0, 0.5) == pytest.approx(-1.0)


class TestSolitonOrbit:

    def test_distance_vanishes_on_scaled_soliton(self, soliton_alpha2, soliton_grid):
        """Test mu Q sits on the orbit, shifted or not."""
        profile, qc = soliton_alpha2
        u = FieldService.sample_radial(profile, soliton_grid, 0.6, 1.0)
        assert DynamicsService.h1_distance_to_soliton_orbit(u, profile, qc) < 1e-6
        shifted = FieldService.translate(u, (3, 0, -2))
        assert DynamicsService.h1_distance_to_soliton_orbit(shifted, profile, qc) < 1e-6

    def test_distance_positive_off_orbit(self, soliton_alpha2, soliton_grid):
        profile, qc = soliton_alpha2
        u = FieldService.sample_radial(profile, soliton_grid, 1.0, 1.5)
        assert DynamicsService.h1_distance_to_soliton_orbit(u, profile, qc) > 0.05

    def test_zero_field_rejected(self, soliton_alpha2, small_grid):
        profile, qc = soliton_alpha2
        with pytest.raises(DynamicsServiceError):
            DynamicsService.h1_distance_to_soliton_orbit(Field.zeros(small_grid), profile, qc)
