"""Tests for grids, fields and equation parameters."""
import numpy as np
import pytest

from magnls.models.grid import Field, Grid, GridError, MASS_CRITICAL_ALPHA, Params


class TestParams:
    """Test cases for Params validation."""

    def test_valid_params(self):
        """Test construction with a supercritical power."""
        p = Params(b=1.5, alpha=2.0)
        assert p.is_supercritical
        assert not p.is_mass_critical
        assert p.to_dict() == {'b': 1.5, 'alpha': 2.0}

    def test_mass_critical_flag(self):
        """Test the mass-critical power is recognized."""
        p = Params(b=1.0, alpha=MASS_CRITICAL_ALPHA)
        assert p.is_mass_critical
        assert not p.is_supercritical

    @pytest.mark.parametrize('b, alpha', [(0.0, 2.0), (np.inf, 2.0), (1.0, 0.0), (1.0, 4.0)])
    def test_invalid_params(self, b, alpha):
        """Test zero field and powers outside (0, 4) are rejected."""
        with pytest.raises(GridError) as exc_info:
            Params(b=b, alpha=alpha)
        assert exc_info.value.kind == 'invalid'


class TestGrid:
    """Test cases for Grid geometry."""

    def test_spacings_and_axes(self, small_grid):
        """Test cell-left sampling of [-L, L)."""
        assert small_grid.spacings == (0.5, 0.5, 0.5)
        x1 = small_grid.axes[0]
        assert x1[0] == -8.0
        assert x1[-1] == pytest.approx(7.5)
        assert small_grid.size == 32 ** 3

    @pytest.mark.parametrize('dims', [(31, 32, 32), (6, 32, 32)])
    def test_rejects_bad_dims(self, dims):
        """Test odd or tiny dimensions are rejected."""
        with pytest.raises(GridError):
            Grid(dims, (8.0, 8.0, 8.0))

    def test_rejects_nonpositive_width(self):
        """Test half-widths must be positive."""
        with pytest.raises(GridError):
            Grid((16, 16, 16), (8.0, 0.0, 8.0))

    def test_equality_ignores_number_types(self):
        """Test grids built from ints and floats compare equal."""
        assert Grid([16, 16, 16], [8, 8, 8]) == Grid((16, 16, 16), (8.0, 8.0, 8.0))

    def test_boundary_mask_is_ellipsoid_complement(self, small_grid):
        """Test the boundary region starts at 0.8 L on each axis."""
        mask = small_grid.boundary_mask
        assert not mask[16, 16, 16]
        assert mask[0, 16, 16]
        x1 = small_grid.axes[0]
        i = int(np.argmin(np.abs(x1 - 6.5)))
        assert mask[i, 16, 16]
        i = int(np.argmin(np.abs(x1 - 6.0)))
        assert not mask[i, 16, 16]

    def test_wavenumbers_standard_order(self, small_grid):
        """Test wavenumbers run pi m / L in DFT order."""
        k = small_grid.wavenumbers[0]
        assert k[0] == 0.0
        assert k[1] == pytest.approx(np.pi / 8.0)
        assert k[16] == pytest.approx(-2.0 * np.pi)


class TestField:
    """Test cases for Field construction."""

    def test_reshapes_flat_values(self, small_grid):
        """Test flat arrays are reshaped to the grid dims."""
        f = Field(small_grid, np.ones(small_grid.size))
        assert f.values.shape == small_grid.dims
        assert f.values.dtype == np.complex128

    def test_rejects_wrong_size(self, small_grid):
        """Test a value count mismatch raises."""
        with pytest.raises(GridError):
            Field(small_grid, np.ones(10))

    def test_non_finite_needs_post_blowup_flag(self, small_grid):
        """Test NaN values are only accepted on flagged fields."""
        values = small_grid.zeros()
        values[0, 0, 0] = np.nan
        with pytest.raises(GridError):
            Field(small_grid, values)
        assert Field(small_grid, values, post_blowup=True).post_blowup

    def test_scaled(self, gaussian):
        """Test scalar multiplication keeps the grid."""
        doubled = gaussian.scaled(2.0)
        assert doubled.grid == gaussian.grid
        np.testing.assert_allclose(doubled.values, 2.0 * gaussian.values)
