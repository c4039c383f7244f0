"""Conserved quantities, energies and auxiliary functionals of a field."""
import logging
from dataclasses import dataclass

import numpy as np

from magnls.models.classification import Inequality
from magnls.models.diagnostics import DiagnosticsRecord
from magnls.models.grid import Field
from magnls.services.field_service import FieldService
from magnls.utils import spectral
from magnls.utils.errors import MagnlsError

logger = logging.getLogger(__name__)

DEFAULT_BOUNDARY_TOL = 1e-8


class FunctionalServiceError(MagnlsError):
    """Custom exception for functional evaluation errors."""
    pass


@dataclass(frozen=True)
class FieldNorms:
    """All quadratic and L^p quantities of one field, from one set of derivatives."""
    mass: float
    grad_sq: float
    angular_R: float
    angular_R_imag: float
    rho_sq: float
    mag_kinetic_sq: float
    lp: float
    virial_F: float
    virial_V: float
    boundary_fraction: float

    @property
    def virial_Fprime(self):
        return 4.0 * self.virial_V


def _integral(grid, density):
    return spectral.total(density) * grid.cell_volume


def _lp_density(values, alpha):
    modulus = np.abs(values)
    out = np.zeros_like(modulus)
    nonzero = modulus > 0
    out[nonzero] = np.exp((alpha + 2.0) * np.log(modulus[nonzero]))
    return out


class FunctionalService:
    """Service class for the functionals evaluated on fields."""

    @staticmethod
    def norms(f, p, strict=True):
        """
        Compute every norm entering the energies and virial quantities.

        Args:
            f: Finite field
            p: Equation parameters
            strict: Raise on an angular momentum residual instead of logging it

        Returns:
            FieldNorms bundle

        Raises:
            FunctionalServiceError: If strict and Im R exceeds 1e-6 * mass
        """
        grid = f.grid
        u = f.values
        f_hat = FieldService.forward(f)
        gradient = FieldService.gradient(f, f_hat)
        nyquist = FieldService.nyquist_kinetic(f, f_hat)
        d1, d2, d3 = gradient
        x1, x2, x3 = grid.coords
        a1, a2, _ = FieldService.vector_potential(grid, p)

        density = np.abs(u) ** 2
        mass = float(_integral(grid, density))
        grad_sq = float(sum(_integral(grid, np.abs(d) ** 2) for d in gradient)) + nyquist
        lz = 1j * (x2 * d1 - x1 * d2)
        raw_R = _integral(grid, lz * np.conj(u))
        mag_kinetic = float(_integral(grid, np.abs(d1 + 1j * a1 * u) ** 2) +
                            _integral(grid, np.abs(d2 + 1j * a2 * u) ** 2) +
                            _integral(grid, np.abs(d3) ** 2)) + nyquist
        rho_sq = float(_integral(grid, grid.rho_sq * density))
        lp = float(_integral(grid, _lp_density(u, p.alpha)))
        virial_F = float(_integral(grid, grid.r_sq * density))
        x_dot_grad = x1 * d1 + x2 * d2 + x3 * d3
        virial_V = float(np.imag(_integral(grid, x_dot_grad * np.conj(u))))
        boundary = FieldService.boundary_mass_fraction(f)

        if mass > 0 and abs(raw_R.imag) > 1e-6 * mass:
            message = f"Angular momentum has imaginary residual {raw_R.imag:.3e}; field under-resolved"
            if strict:
                raise FunctionalServiceError(message)
            logger.warning(message)
        return FieldNorms(mass=mass, grad_sq=grad_sq, angular_R=float(raw_R.real),
                          angular_R_imag=float(raw_R.imag), rho_sq=rho_sq,
                          mag_kinetic_sq=mag_kinetic, lp=lp, virial_F=virial_F,
                          virial_V=virial_V, boundary_fraction=boundary)

    @staticmethod
    def mass(f):
        return float(_integral(f.grid, np.abs(f.values) ** 2))

    @staticmethod
    def lp_norm(f, p):
        """||f||^{alpha+2} in L^{alpha+2}."""
        return float(_integral(f.grid, _lp_density(f.values, p.alpha)))

    @staticmethod
    def grad_norm_sq(f):
        f_hat = FieldService.forward(f)
        gradient = FieldService.gradient(f, f_hat)
        return (float(sum(_integral(f.grid, np.abs(d) ** 2) for d in gradient)) +
                FieldService.nyquist_kinetic(f, f_hat))

    @staticmethod
    def grad_norm_sq_spectral(f):
        """||grad f||^2 by Parseval; an independent quadrature path."""
        f_hat = spectral.fftn(f.values)
        power = spectral.total(f.grid.k_sq * np.abs(f_hat) ** 2)
        return float(power * f.grid.cell_volume / f.grid.size)

    @staticmethod
    def rho_norm_sq(f):
        return float(_integral(f.grid, f.grid.rho_sq * np.abs(f.values) ** 2))

    @staticmethod
    def angular_momentum(f, with_residual=False):
        """
        R(f) = i * integral of (x2 d1 f - x1 d2 f) conj(f).

        Args:
            f: Finite field
            with_residual: Also return the imaginary part of the raw integral

        Returns:
            Real R, or (R, imaginary residual)

        Raises:
            FunctionalServiceError: If the imaginary residual exceeds 1e-6 * mass
        """
        lz = FieldService.apply_Lz(f).values
        raw = _integral(f.grid, lz * np.conj(f.values))
        mass = FunctionalService.mass(f)
        if mass > 0 and abs(raw.imag) > 1e-6 * mass:
            raise FunctionalServiceError(
                f"Angular momentum has imaginary residual {raw.imag:.3e}; field under-resolved")
        if with_residual:
            return float(raw.real), float(raw.imag)
        return float(raw.real)

    @staticmethod
    def magnetic_kinetic(f, p, decomposition=False):
        """
        ||(grad + iA) f||^2 through the covariant gradient, plus the Nyquist share
        of ||grad f||^2 that the first derivatives drop.

        With ``decomposition`` the triple (||grad f||^2, b R(f), (b^2/4)||rho f||^2)
        is returned as well.
        """
        f_hat = FieldService.forward(f)
        gradient = FieldService.gradient(f, f_hat)
        nyquist = FieldService.nyquist_kinetic(f, f_hat)
        components = FieldService.covariant_gradient(f, p, gradient=gradient)
        value = float(sum(_integral(f.grid, np.abs(c.values) ** 2) for c in components)) + nyquist
        if not decomposition:
            return value
        grad_sq = float(sum(_integral(f.grid, np.abs(d) ** 2) for d in gradient)) + nyquist
        lz = FieldService.apply_Lz(f, gradient=gradient).values
        bR = p.b * float(_integral(f.grid, lz * np.conj(f.values)).real)
        rho_term = 0.25 * p.b ** 2 * FunctionalService.rho_norm_sq(f)
        total = grad_sq + bR + rho_term
        if value > 0 and abs(total - value) > 1e-8 * value:
            logger.warning(f"Magnetic norm decomposition residual {abs(total - value) / value:.3e}")
        return value, (grad_sq, bR, rho_term)

    @staticmethod
    def energy_E(f, p, norms=None):
        n = norms or FunctionalService.norms(f, p)
        return 0.5 * n.mag_kinetic_sq - n.lp / (p.alpha + 2.0)

    @staticmethod
    def energy_E0(f, p, norms=None):
        n = norms or FunctionalService.norms(f, p)
        return 0.5 * n.grad_sq + p.b ** 2 / 8.0 * n.rho_sq - n.lp / (p.alpha + 2.0)

    @staticmethod
    def energy_free(f, p, norms=None):
        """E^0: the energy without magnetic terms."""
        n = norms or FunctionalService.norms(f, p)
        return 0.5 * n.grad_sq - n.lp / (p.alpha + 2.0)

    @staticmethod
    def _check_boundary(n, boundary_tol, strict):
        if n.boundary_fraction > boundary_tol:
            message = (f"Boundary mass fraction {n.boundary_fraction:.3e} exceeds "
                       f"{boundary_tol:.1e}; weighted integrals unreliable")
            if strict:
                raise FunctionalServiceError(message, kind='refused')
            logger.warning(message)

    @staticmethod
    def virial_F(f, p, norms=None, boundary_tol=DEFAULT_BOUNDARY_TOL, strict=False):
        n = norms or FunctionalService.norms(f, p)
        FunctionalService._check_boundary(n, boundary_tol, strict)
        return n.virial_F

    @staticmethod
    def virial_Fprime(f, p, norms=None, boundary_tol=DEFAULT_BOUNDARY_TOL, strict=False):
        """F'(f) = 4 Im integral of (x . grad f) conj(f)."""
        n = norms or FunctionalService.norms(f, p)
        FunctionalService._check_boundary(n, boundary_tol, strict)
        return n.virial_Fprime

    @staticmethod
    def virial_Fsecond(f, p, norms=None):
        n = norms or FunctionalService.norms(f, p)
        return (8.0 * n.grad_sq - 2.0 * p.b ** 2 * n.rho_sq -
                12.0 * p.alpha / (p.alpha + 2.0) * n.lp)

    @staticmethod
    def pohozaev_H(f, p, norms=None):
        n = norms or FunctionalService.norms(f, p)
        return (n.grad_sq - 0.25 * p.b ** 2 * n.rho_sq -
                1.5 * p.alpha / (p.alpha + 2.0) * n.lp)

    @staticmethod
    def H_omega(f, p, omega, norms=None):
        n = norms or FunctionalService.norms(f, p)
        return n.mag_kinetic_sq + omega * n.mass

    @staticmethod
    def nehari_K(f, p, omega, norms=None):
        n = norms or FunctionalService.norms(f, p)
        return n.mag_kinetic_sq + omega * n.mass - n.lp

    @staticmethod
    def action_S(f, p, omega, norms=None):
        n = norms or FunctionalService.norms(f, p)
        return FunctionalService.energy_E(f, p, norms=n) + 0.5 * omega * n.mass

    @staticmethod
    def nehari_scale(f, p, omega, norms=None):
        """Factor lambda0 = (H_omega(f) / ||f||^{alpha+2})^{1/alpha} with K(lambda0 f) = 0."""
        n = norms or FunctionalService.norms(f, p)
        h_omega = n.mag_kinetic_sq + omega * n.mass
        if not (h_omega > 0 and n.lp > 0):
            raise FunctionalServiceError(
                f"Nehari rescale undefined (H_omega={h_omega:.3e}, lp={n.lp:.3e})")
        return (h_omega / n.lp) ** (1.0 / p.alpha)

    @staticmethod
    def omega_rayleigh(f, p, norms=None):
        """Multiplier (||f||^{alpha+2} - ||(grad + iA) f||^2) / M(f)."""
        n = norms or FunctionalService.norms(f, p)
        return (n.lp - n.mag_kinetic_sq) / n.mass

    @staticmethod
    def el_operator(f, p, omega):
        """-(grad + iA)^2 f + omega f - |f|^alpha f as an array."""
        u = f.values
        mag_lap = FieldService.apply_magnetic_laplacian(f, p).values
        return -mag_lap + omega * u - np.abs(u) ** p.alpha * u

    @staticmethod
    def el_residual(f, p, omega):
        """L2 norm of the Euler-Lagrange operator."""
        r = FunctionalService.el_operator(f, p, omega)
        return float(np.sqrt(_integral(f.grid, np.abs(r) ** 2)))

    @staticmethod
    def g_threshold(lam, c_opt, p):
        """G(lambda) = lambda^2/2 - C_opt lambda^{3 alpha/2} / (alpha + 2)."""
        if lam < 0:
            raise FunctionalServiceError(f"lambda must be non-negative, got {lam}",
                                         kind='invalid')
        return 0.5 * lam ** 2 - c_opt * lam ** (1.5 * p.alpha) / (p.alpha + 2.0)

    @staticmethod
    def g_maximizer(c_opt, p):
        """Critical point of G; equals the soliton gradient-mass product."""
        if not p.is_supercritical:
            raise FunctionalServiceError("G has an interior maximum only for alpha > 4/3",
                                         kind='invalid')
        return (2.0 * (p.alpha + 2.0) / (3.0 * p.alpha * c_opt)) ** (2.0 / (3.0 * p.alpha - 4.0))

    @staticmethod
    def cs_virial_gap(f, c_opt, p, norms=None):
        """
        RHS minus LHS of the Cauchy-Schwarz virial inequality.

        (Im int conj(f) x.grad f)^2 <= ||x f||^2 (||grad f||^2 - T^{4/(3 alpha)}),
        with T = ||f||^{alpha+2} / (C_opt ||f||^{(4-alpha)/2}).
        """
        n = norms or FunctionalService.norms(f, p)
        if n.mass == 0:
            return 0.0
        T = n.lp / (c_opt * n.mass ** ((4.0 - p.alpha) / 4.0))
        rhs = n.virial_F * (n.grad_sq - T ** (4.0 / (3.0 * p.alpha)))
        return rhs - n.virial_V ** 2

    @staticmethod
    def magnetic_gn(f, c_opt, p, norms=None):
        """||f||^{alpha+2} <= C_opt ||(grad + iA) f||^{3 alpha/2} ||f||^{(4-alpha)/2}."""
        n = norms or FunctionalService.norms(f, p)
        rhs = c_opt * n.mag_kinetic_sq ** (0.75 * p.alpha) * n.mass ** ((4.0 - p.alpha) / 4.0)
        return Inequality(n.lp, rhs, '<=')

    @staticmethod
    def mass_critical_gn(f, mass_Q, p, norms=None):
        """||f||^{10/3} <= (5/3)(||f|| / ||Q||)^{4/3} ||(grad + iA) f||^2 at alpha = 4/3."""
        n = norms or FunctionalService.norms(f, p)
        rhs = 5.0 / 3.0 * (n.mass / mass_Q) ** (2.0 / 3.0) * n.mag_kinetic_sq
        return Inequality(n.lp, rhs, '<=')

    @staticmethod
    def diamagnetic(f, p):
        """||grad |f|||^2 <= ||(grad + iA) f||^2; meaningful for nowhere-vanishing f."""
        modulus = Field(f.grid, np.abs(f.values))
        return Inequality(FunctionalService.grad_norm_sq(modulus),
                          FunctionalService.magnetic_kinetic(f, p), '<=')

    @staticmethod
    def sigma_norms(f, p, norms=None):
        """Squared Sigma_A and Sigma norms and the two equivalence bounds between them."""
        n = norms or FunctionalService.norms(f, p)
        a_sq = 0.25 * p.b ** 2 * n.rho_sq
        sigma_A = n.mag_kinetic_sq + n.virial_F + n.mass
        sigma = n.grad_sq + n.virial_F + n.mass
        return {
            'sigma_A_sq': sigma_A,
            'sigma_sq': sigma,
            'grad_by_magnetic': Inequality(n.grad_sq, 2.0 * (n.mag_kinetic_sq + a_sq), '<='),
            'magnetic_by_grad': Inequality(n.mag_kinetic_sq, 2.0 * n.grad_sq + 6.0 * a_sq, '<='),
        }

    @staticmethod
    def threshold_cap(energy, mass, mass_Q):
        """Bound 2E / (1 - (M / M(Q))^{2/3}) on the magnetic kinetic norm below M(Q)."""
        ratio = mass / mass_Q
        if ratio >= 1:
            raise FunctionalServiceError("Kinetic cap needs mass below M(Q)", kind='refused')
        return 2.0 * energy / (1.0 - ratio ** (2.0 / 3.0))

    @staticmethod
    def snapshot(f, p, t, strict=True):
        """Diagnostics record for one time."""
        n = FunctionalService.norms(f, p, strict=strict)
        return DiagnosticsRecord(
            t=float(t),
            mass=n.mass,
            energy_E=FunctionalService.energy_E(f, p, norms=n),
            energy_E0=FunctionalService.energy_E0(f, p, norms=n),
            angular_R=n.angular_R,
            grad_norm_sq=n.grad_sq,
            mag_kinetic_sq=n.mag_kinetic_sq,
            rho_norm_sq=n.rho_sq,
            lp_norm=n.lp,
            virial_F=n.virial_F,
            virial_Fprime=n.virial_Fprime,
            boundary_mass_fraction=n.boundary_fraction,
            spectral_tail=FieldService.spectral_tail_fraction(f),
        )
