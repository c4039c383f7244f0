"""Spectral operators, radial sampling and resampling on the periodic grid."""
import logging
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from magnls.models.grid import Field
from magnls.utils import spectral
from magnls.utils.errors import MagnlsError

logger = logging.getLogger(__name__)


class FieldServiceError(MagnlsError):
    """Custom exception for field operator errors."""
    pass


class FieldService:
    """Service class for differential and multiplication operators on fields."""

    @staticmethod
    def _check(f):
        if f.values.shape != f.grid.dims:
            raise FieldServiceError(
                f"Field shape {f.values.shape} does not match grid {f.grid.dims}",
                kind='invalid')
        if not f.post_blowup and not np.all(np.isfinite(f.values)):
            raise FieldServiceError("Operator applied to a non-finite field")

    @staticmethod
    def forward(f):
        """Unnormalized forward DFT of the field values."""
        FieldService._check(f)
        return spectral.fftn(f.values)

    @staticmethod
    def inverse(grid, coefficients):
        return Field(grid, spectral.ifftn(coefficients))

    @staticmethod
    def apply_laplacian(f):
        """
        Spectral Laplacian, exact for band-limited fields.

        Args:
            f: Finite field

        Returns:
            Field holding the Laplacian of f

        Raises:
            FieldServiceError: If the value count does not match the grid
        """
        f_hat = FieldService.forward(f)
        return Field(f.grid, spectral.ifftn(-f.grid.k_sq * f_hat))

    @staticmethod
    def partial(f, axis, f_hat=None):
        """Spectral first derivative along one axis with the Nyquist mode removed."""
        if f_hat is None:
            f_hat = FieldService.forward(f)
        k = f.grid.kvecs[axis]
        n = f.grid.dims[axis]
        multiplier = 1j * k
        multiplier = np.where(np.isclose(np.abs(k), np.pi * n / (2.0 * f.grid.half_widths[axis])),
                              0.0, multiplier)
        return spectral.ifftn(multiplier * f_hat)

    @staticmethod
    def gradient(f, f_hat=None):
        """Tuple of the three spectral partial derivatives as arrays."""
        if f_hat is None:
            f_hat = FieldService.forward(f)
        return tuple(FieldService.partial(f, axis, f_hat) for axis in range(3))

    @staticmethod
    def nyquist_kinetic(f, f_hat=None):
        """
        Part of sum k^2 |f_hat|^2 carried by Nyquist wavenumbers.

        The first derivatives drop these entries while the Laplacian keeps them;
        adding this term to ||grad f||^2 from the gradient gives -<Laplacian f, f>.
        """
        if f_hat is None:
            f_hat = FieldService.forward(f)
        grid = f.grid
        weight = sum(np.where(np.isclose(np.abs(k), np.pi * n / (2.0 * L)), k ** 2, 0.0)
                     for k, n, L in zip(grid.kvecs, grid.dims, grid.half_widths))
        return float(spectral.total(weight * np.abs(f_hat) ** 2) * grid.cell_volume / grid.size)

    @staticmethod
    def apply_Lz(f, gradient=None):
        """
        Angular momentum operator L_z f = i(x2 d1 f - x1 d2 f).

        Args:
            f: Finite field
            gradient: Precomputed spectral gradient arrays (optional)

        Returns:
            Field holding L_z f
        """
        d1, d2, _ = gradient if gradient is not None else FieldService.gradient(f)
        x1, x2, _ = f.grid.coords
        return Field(f.grid, 1j * (x2 * d1 - x1 * d2))

    @staticmethod
    def vector_potential(grid, p):
        """Symmetric gauge A = (b/2)(-x2, x1, 0) as broadcastable arrays."""
        x1, x2, _ = grid.coords
        return -0.5 * p.b * x2, 0.5 * p.b * x1, 0.0

    @staticmethod
    def covariant_gradient(f, p, gradient=None):
        """
        Components of (grad + iA) f.

        Args:
            f: Finite field
            p: Equation parameters (b enters through A)
            gradient: Precomputed spectral gradient arrays (optional)

        Returns:
            Tuple of three Fields; the third has no A contribution
        """
        d1, d2, d3 = gradient if gradient is not None else FieldService.gradient(f)
        a1, a2, _ = FieldService.vector_potential(f.grid, p)
        u = f.values
        return (Field(f.grid, d1 + 1j * a1 * u),
                Field(f.grid, d2 + 1j * a2 * u),
                Field(f.grid, d3))

    @staticmethod
    def apply_magnetic_laplacian(f, p):
        """(grad + iA)^2 f = Laplacian f - b L_z f - (b^2/4) rho^2 f."""
        lap = FieldService.apply_laplacian(f).values
        lz = FieldService.apply_Lz(f).values
        return Field(f.grid, lap - p.b * lz - 0.25 * p.b ** 2 * f.grid.rho_sq * f.values)

    @staticmethod
    def radial_values(profile, r):
        """Evaluate Q at radii r, continuing past the table with the e^{-r}/r tail."""
        r = np.asarray(r, dtype=float)
        spline = _spline_for(profile)
        inside = r <= profile.r_max
        out = np.empty_like(r)
        out[inside] = spline(r[inside])
        outer = r[~inside]
        if outer.size:
            if not profile.tail_amplitude > 0:
                raise FieldServiceError("Profile tail fit unavailable beyond r_max",
                                        kind='invalid')
            out[~inside] = profile.tail_amplitude * np.exp(-outer) / outer
        return out

    @staticmethod
    def sample_radial(profile, grid, amplitude, scale, center=(0.0, 0.0, 0.0)):
        """
        Sample amplitude * scale^{3/2} * Q(scale * |x - center|) on the grid.

        Args:
            profile: Radial soliton table
            grid: Target grid
            amplitude: Prefactor a
            scale: Dilation lambda > 0
            center: Centre of the sampled bump

        Returns:
            Field of the rescaled soliton

        Raises:
            FieldServiceError: If scale is not positive
        """
        if not scale > 0:
            raise FieldServiceError(f"scale must be positive, got {scale}", kind='invalid')
        if amplitude == 0:
            return Field.zeros(grid)
        x1, x2, x3 = grid.coords
        c1, c2, c3 = center
        r = np.sqrt((x1 - c1) ** 2 + (x2 - c2) ** 2 + (x3 - c3) ** 2)
        values = FieldService.radial_values(profile, scale * r.ravel()).reshape(grid.dims)
        return Field(grid, amplitude * scale ** 1.5 * values)

    @staticmethod
    def resample_scaled(f, lam):
        """
        Return lam^{3/2} f(lam x) by trigonometric interpolation of f.

        The evaluation points form a tensor grid, so the interpolation is applied
        one axis at a time with dense DFT evaluation matrices.
        """
        if not lam > 0:
            raise FieldServiceError(f"lambda must be positive, got {lam}", kind='invalid')
        values = spectral.fftn(f.values) / f.grid.size
        for axis in range(3):
            n = f.grid.dims[axis]
            L = f.grid.half_widths[axis]
            k = f.grid.wavenumbers[axis]
            weights = np.ones(n)
            weights[n // 2] = 0.5
            points = lam * f.grid.axes[axis] + L
            # Nyquist split evenly between +k and -k keeps real data real.
            basis = weights[None, :] * np.exp(1j * np.outer(points, k))
            nyquist = weights[None, n // 2] * np.exp(-1j * np.outer(points, k[n // 2:n // 2 + 1]))
            basis[:, n // 2:n // 2 + 1] += nyquist
            values = np.moveaxis(np.tensordot(basis, values, axes=([1], [axis])), 0, axis)
        return Field(f.grid, lam ** 1.5 * values)

    @staticmethod
    def translate(f, shifts):
        """Shift a field by whole grid cells along each axis."""
        return Field(f.grid, np.roll(f.values, shift=tuple(int(s) for s in shifts), axis=(0, 1, 2)))

    @staticmethod
    def boundary_mass_fraction(f):
        density = np.abs(f.values) ** 2
        total = spectral.total(density)
        if total == 0:
            return 0.0
        return float(spectral.total(np.where(f.grid.boundary_mask, density, 0.0)) / total)

    @staticmethod
    def spectral_tail_fraction(f, f_hat=None):
        if f_hat is None:
            f_hat = spectral.fftn(f.values)
        power = np.abs(f_hat) ** 2
        total = spectral.total(power)
        if total == 0:
            return 0.0
        return float(spectral.total(np.where(f.grid.tail_mask, power, 0.0)) / total)


@lru_cache(maxsize=32)
def _spline_for(profile):
    return CubicSpline(profile.r_nodes, profile.q_values,
                       bc_type=((1, 0.0), (1, float(profile.dq_values[-1]))))
