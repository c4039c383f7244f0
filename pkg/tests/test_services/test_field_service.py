"""Tests for the spectral field operators."""
import numpy as np
import pytest

from magnls.models.grid import Field, Grid, Params
from magnls.services.field_service import FieldService, FieldServiceError
from magnls.services.functional_service import FunctionalService


class TestFieldService:
    """Test cases for FieldService."""

    def test_laplacian_of_gaussian(self, gaussian):
        """Test the spectral Laplacian matches (r^2 - 3) e^{-r^2/2}."""
        grid = gaussian.grid
        expected = (grid.r_sq - 3.0) * np.exp(-0.5 * grid.r_sq)
        result = FieldService.apply_laplacian(gaussian)
        assert np.max(np.abs(result.values - expected)) < 1e-6

    def test_gradient_of_gaussian(self, gaussian):
        """Test each partial derivative equals -x_j e^{-r^2/2}."""
        grid = gaussian.grid
        envelope = np.exp(-0.5 * grid.r_sq)
        for axis, d in enumerate(FieldService.gradient(gaussian)):
            expected = -grid.coords[axis] * envelope
            assert np.max(np.abs(d - expected)) < 1e-6

    def test_lz_eigenfunction(self, vortex_gaussian):
        """Test (x1 + i x2) e^{-r^2/2} is an L_z eigenfunction with eigenvalue 1."""
        result = FieldService.apply_Lz(vortex_gaussian)
        assert np.max(np.abs(result.values - vortex_gaussian.values)) < 1e-6

    def test_lz_annihilates_radial(self, gaussian):
        """Test L_z of a radial field vanishes."""
        result = FieldService.apply_Lz(gaussian)
        assert np.max(np.abs(result.values)) < 1e-6

    def test_magnetic_laplacian_decomposition(self, vortex_gaussian):
        """Test (grad + iA)^2 f = Laplacian f - b L_z f - (b^2/4) rho^2 f."""
        p = Params(b=2.0, alpha=2.0)
        grid = vortex_gaussian.grid
        lap = FieldService.apply_laplacian(vortex_gaussian).values
        expected = lap - 2.0 * vortex_gaussian.values - grid.rho_sq * vortex_gaussian.values
        result = FieldService.apply_magnetic_laplacian(vortex_gaussian, p)
        assert np.max(np.abs(result.values - expected)) < 1e-6

    def test_vector_potential_gauge(self, small_grid):
        """Test A = (b/2)(-x2, x1, 0)."""
        a1, a2, a3 = FieldService.vector_potential(small_grid, Params(b=3.0, alpha=2.0))
        x1, x2, _ = small_grid.coords
        assert np.allclose(a1, -1.5 * x2)
        assert np.allclose(a2, 1.5 * x1)
        assert a3 == 0.0

    def test_covariant_gradient(self, vortex_gaussian):
        """Test the squared components integrate to ||(grad + iA) f||^2."""
        p = Params(b=1.5, alpha=2.0)
        components = FieldService.covariant_gradient(vortex_gaussian, p)
        total = sum(FunctionalService.mass(c) for c in components)
        assert total == pytest.approx(FunctionalService.magnetic_kinetic(vortex_gaussian, p),
                                      rel=1e-9)
        assert np.allclose(components[2].values, FieldService.gradient(vortex_gaussian)[2])

    def test_partial_drops_nyquist(self, small_grid):
        """Test the highest grid mode has zero derivative."""
        x1 = small_grid.coords[0]
        nyquist = np.pi * small_grid.dims[0] / (2.0 * small_grid.half_widths[0])
        f = Field(small_grid, np.cos(nyquist * x1) * np.ones(small_grid.dims))
        assert np.max(np.abs(FieldService.partial(f, 0))) < 1e-10

    def test_resample_scaled_gaussian(self, gaussian):
        """Test lam^{3/2} f(lam x) against the analytic dilated Gaussian."""
        lam = 0.8
        grid = gaussian.grid
        expected = lam ** 1.5 * np.exp(-0.5 * lam ** 2 * grid.r_sq)
        result = FieldService.resample_scaled(gaussian, lam)
        assert np.max(np.abs(result.values - expected)) < 1e-6

    def test_resample_identity(self, vortex_gaussian):
        """Test lambda = 1 reproduces the field."""
        result = FieldService.resample_scaled(vortex_gaussian, 1.0)
        assert np.max(np.abs(result.values - vortex_gaussian.values)) < 1e-10

    @pytest.mark.parametrize('lam', [0.0, -1.0])
    def test_resample_rejects_nonpositive(self, gaussian, lam):
        """Test a non-positive dilation is an invalid request."""
        with pytest.raises(FieldServiceError) as exc_info:
            FieldService.resample_scaled(gaussian, lam)
        assert exc_info.value.kind == 'invalid'

    def test_translate_moves_peak(self, gaussian):
        """Test a whole-cell shift moves the maximum and keeps the values."""
        shifted = FieldService.translate(gaussian, (2, -1, 0))
        before = np.unravel_index(np.argmax(np.abs(gaussian.values)), gaussian.grid.dims)
        after = np.unravel_index(np.argmax(np.abs(shifted.values)), gaussian.grid.dims)
        assert after == ((before[0] + 2) % 32, (before[1] - 1) % 32, before[2])
        assert np.isclose(np.sum(np.abs(shifted.values) ** 2), np.sum(np.abs(gaussian.values) ** 2))

    def test_boundary_fraction(self, gaussian, small_grid):
        """Test a centred Gaussian has no boundary mass and a constant has the mask share."""
        assert FieldService.boundary_mass_fraction(gaussian) < 1e-12
        constant = Field(small_grid, np.ones(small_grid.dims))
        share = np.count_nonzero(np.broadcast_to(small_grid.boundary_mask, small_grid.dims))
        assert FieldService.boundary_mass_fraction(constant) == pytest.approx(share / small_grid.size)
        assert FieldService.boundary_mass_fraction(Field.zeros(small_grid)) == 0.0

    def test_spectral_tail_fraction(self, gaussian, small_grid):
        """Test a resolved Gaussian has a negligible tail and grid noise a large one."""
        assert FieldService.spectral_tail_fraction(gaussian) < 1e-6
        rng = np.random.default_rng(3)
        noise = Field(small_grid, rng.normal(size=small_grid.dims))
        assert FieldService.spectral_tail_fraction(noise) > 0.3

    def test_sample_radial_matches_profile(self, soliton_alpha2, soliton_grid):
        """Test the sampled soliton peaks at a * lam^{3/2} * Q(0) at the origin."""
        profile, _ = soliton_alpha2
        field = FieldService.sample_radial(profile, soliton_grid, 0.5, 1.2)
        centre = tuple(n // 2 for n in soliton_grid.dims)
        assert field.values[centre].real == pytest.approx(0.5 * 1.2 ** 1.5 * profile.q0, rel=1e-8)
        assert np.max(np.abs(field.values.imag)) == 0.0

    def test_sample_radial_zero_amplitude(self, soliton_alpha2, small_grid):
        """Test a zero amplitude gives the zero field."""
        profile, _ = soliton_alpha2
        field = FieldService.sample_radial(profile, small_grid, 0.0, 1.0)
        assert not np.any(field.values)

    def test_radial_tail_continuation(self, soliton_alpha2):
        """Test values beyond the table follow the fitted e^{-r}/r tail."""
        profile, _ = soliton_alpha2
        r = np.array([profile.r_max + 1.0, profile.r_max + 5.0])
        values = FieldService.radial_values(profile, r)
        assert np.allclose(values, profile.tail_amplitude * np.exp(-r) / r)

    def test_non_finite_rejected(self):
        """Test operators refuse a non-finite field."""
        grid = Grid((8, 8, 8), (2.0, 2.0, 2.0))
        values = grid.zeros()
        values[0, 0, 0] = np.nan
        field = Field(grid, values, post_blowup=True)
        field_finite = Field(grid, np.ones(grid.dims))
        assert FieldService.forward(field_finite).shape == grid.dims
        object.__setattr__(field, 'post_blowup', False)
        with pytest.raises(FieldServiceError):
            FieldService.forward(field)
