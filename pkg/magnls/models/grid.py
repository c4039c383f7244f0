"""Computational box, sampled fields and equation parameters."""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Tuple

import numpy as np

from magnls.utils import spectral
from magnls.utils.errors import MagnlsError

MASS_CRITICAL_ALPHA = 4.0 / 3.0


class GridError(MagnlsError):
    """Raised for malformed grids, fields or parameters."""

    def __init__(self, message):
        super().__init__(message, kind='invalid')


@dataclass(frozen=True)
class Params:
    """Magnetic strength b and nonlinearity power alpha."""
    b: float
    alpha: float

    def __post_init__(self):
        if not np.isfinite(self.b) or self.b == 0:
            raise GridError(f"b must be finite and non-zero, got {self.b}")
        if not 0 < self.alpha < 4:
            raise GridError(f"alpha must lie in (0, 4), got {self.alpha}")

    @property
    def is_mass_critical(self):
        return abs(self.alpha - MASS_CRITICAL_ALPHA) < 1e-12

    @property
    def is_supercritical(self):
        return self.alpha > MASS_CRITICAL_ALPHA and not self.is_mass_critical

    def to_dict(self):
        return {'b': self.b, 'alpha': self.alpha}


@dataclass(frozen=True)
class Grid:
    """Periodic box [-L_j, L_j) sampled with n_j cell-left points per axis."""
    dims: Tuple[int, int, int]
    half_widths: Tuple[float, float, float]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        widths = tuple(float(w) for w in self.half_widths)
        if len(dims) != 3 or len(widths) != 3:
            raise GridError("Grid needs exactly three dims and three half-widths")
        for n in dims:
            if n < 8 or n % 2:
                raise GridError(f"Grid dims must be even and >= 8, got {dims}")
        for w in widths:
            if not w > 0:
                raise GridError(f"Half-widths must be positive, got {widths}")
        object.__setattr__(self, 'dims', dims)
        object.__setattr__(self, 'half_widths', widths)

    @property
    def shape(self):
        return self.dims

    @property
    def size(self):
        return self.dims[0] * self.dims[1] * self.dims[2]

    @cached_property
    def spacings(self):
        return tuple(2.0 * L / n for n, L in zip(self.dims, self.half_widths))

    @cached_property
    def cell_volume(self):
        h1, h2, h3 = self.spacings
        return h1 * h2 * h3

    @cached_property
    def axes(self):
        """1D coordinate arrays x_j = -L_j + j*h_j."""
        return tuple(-L + h * np.arange(n)
                     for n, L, h in zip(self.dims, self.half_widths, self.spacings))

    @cached_property
    def wavenumbers(self):
        return tuple(spectral.wavenumbers(n, L) for n, L in zip(self.dims, self.half_widths))

    @cached_property
    def coords(self):
        """Broadcastable coordinate arrays (x1, x2, x3)."""
        x1, x2, x3 = self.axes
        return x1[:, None, None], x2[None, :, None], x3[None, None, :]

    @cached_property
    def kvecs(self):
        k1, k2, k3 = self.wavenumbers
        return k1[:, None, None], k2[None, :, None], k3[None, None, :]

    @cached_property
    def rho_sq(self):
        x1, x2, _ = self.coords
        return x1 ** 2 + x2 ** 2

    @cached_property
    def r_sq(self):
        x1, x2, x3 = self.coords
        return x1 ** 2 + x2 ** 2 + x3 ** 2

    @cached_property
    def k_sq(self):
        k1, k2, k3 = self.kvecs
        return k1 ** 2 + k2 ** 2 + k3 ** 2

    @cached_property
    def boundary_mask(self):
        """Points outside the ellipsoid sum (x_j / L_j)^2 <= 0.64."""
        x1, x2, x3 = self.coords
        L1, L2, L3 = self.half_widths
        return (x1 / L1) ** 2 + (x2 / L2) ** 2 + (x3 / L3) ** 2 > 0.64

    @cached_property
    def tail_mask(self):
        """Fourier modes with some |k_j| above two thirds of the axis cutoff."""
        masks = []
        for j, k in enumerate(self.kvecs):
            k_max = np.pi * self.dims[j] / (2.0 * self.half_widths[j])
            masks.append(np.abs(k) > (2.0 / 3.0) * k_max)
        return masks[0] | masks[1] | masks[2]

    def zeros(self):
        return np.zeros(self.dims, dtype=np.complex128)

    def to_dict(self):
        return {'dims': list(self.dims), 'half_widths': list(self.half_widths)}


@dataclass(frozen=True, eq=False)
class Field:
    """Complex amplitudes on a Grid. post_blowup allows non-finite values."""
    grid: Grid
    values: np.ndarray
    post_blowup: bool = field(default=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.size != self.grid.size:
            raise GridError(
                f"Field has {values.size} values, grid expects {self.grid.size}")
        values = values.reshape(self.grid.dims)
        if not self.post_blowup and not np.all(np.isfinite(values)):
            raise GridError("Field contains non-finite values")
        object.__setattr__(self, 'values', values)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, grid.zeros())

    def with_values(self, values):
        return Field(self.grid, values)

    def scaled(self, factor):
        return Field(self.grid, self.values * factor)

    def __repr__(self):
        return f'<Field dims={self.grid.dims}>'
