"""Seeded identity and inequality suites over random smooth fields."""
import logging

import numpy as np
from joblib import Parallel, delayed

from magnls.models.grid import Field, Grid, MASS_CRITICAL_ALPHA, Params
from magnls.services.functional_service import FunctionalService
from magnls.services.soliton_service import SolitonService
from magnls.utils import spectral
from magnls.utils.errors import MagnlsError

logger = logging.getLogger(__name__)

SUITE_ALPHAS = (MASS_CRITICAL_ALPHA, 2.0, 3.0)
DEFAULT_GRID = Grid((48, 48, 48), (8.0, 8.0, 8.0))

IDENTITY_BOUNDS = {
    'magnetic_norm_decomposition': 1e-10,
    'energy_rotation_split': 1e-9,
    'virial_pohozaev': 1e-10,
    'reduced_minus_free_energy': 1e-10,
    'nehari_rescale': 1e-9,
    'action_minus_half_nehari': 1e-9,
}

INEQUALITIES = ('diamagnetic', 'spectral_gap', 'magnetic_gn', 'mass_critical_gn',
                'cs_virial', 'sigma_grad_by_magnetic', 'sigma_magnetic_by_grad')

# Relative slack for the Cauchy-Schwarz virial gap, which is exact on R^3.
CS_SLACK = 1e-8


class VerificationServiceError(MagnlsError):
    """Custom exception for property-suite errors."""
    pass


def sample_generator(seed, index):
    """Counter-based generator for sample ``index`` of the run keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, index, 0, 0]))


def _trig_polynomial(grid, rng, modes=2):
    """Real trigonometric polynomial in the lowest box modes, scaled to max |.| = 1."""
    out = np.zeros(grid.dims)
    x1, x2, x3 = grid.coords
    L1, L2, L3 = grid.half_widths
    for m1 in range(-modes, modes + 1):
        for m2 in range(-modes, modes + 1):
            for m3 in range(0, modes + 1):
                phase = np.pi * (m1 * x1 / L1 + m2 * x2 / L2 + m3 * x3 / L3)
                a, c = rng.normal(size=2)
                out = out + a * np.cos(phase) + c * np.sin(phase)
    peak = np.abs(out).max()
    return out / peak if peak > 0 else out


def random_smooth_field(grid, rng):
    """
    Nowhere-vanishing decaying field A exp(-sum (x_j - c_j)^2 / (2 s_j^2)) (1 + s/4) e^{i theta}.

    s and theta are random low-mode trigonometric polynomials, so |f| > 0 and the
    field is resolved on grids with spacing below about a third of the widths.
    """
    widths = rng.uniform(0.9, 1.25, size=3)
    center = rng.uniform(-0.5, 0.5, size=3)
    amplitude = rng.uniform(0.2, 1.5)
    x1, x2, x3 = grid.coords
    envelope = np.exp(-((x1 - center[0]) ** 2 / (2 * widths[0] ** 2) +
                        (x2 - center[1]) ** 2 / (2 * widths[1] ** 2) +
                        (x3 - center[2]) ** 2 / (2 * widths[2] ** 2)))
    modulus = 1.0 + 0.25 * _trig_polynomial(grid, rng)
    theta = rng.uniform(0.0, 2.0) * _trig_polynomial(grid, rng)
    return Field(grid, amplitude * envelope * modulus * np.exp(1j * theta))


def _relative(a, b, scale):
    return abs(a - b) / max(scale, 1e-300)


class VerificationService:
    """Service class for the randomized identity and inequality suites."""

    @staticmethod
    def _constants(tol):
        return {alpha: SolitonService.get_constants(alpha, tol) for alpha in SUITE_ALPHAS}

    @staticmethod
    def check_sample(seed, index, grid, constants, b=None, alpha=None):
        """
        Evaluate every identity residual and inequality margin on one sample.

        Args:
            seed: Suite seed
            index: Sample counter
            grid: Grid for the sample
            constants: Mapping alpha -> QConstants covering SUITE_ALPHAS
            b: Fixed magnetic strength, or None to draw one
            alpha: Fixed power from SUITE_ALPHAS, or None to draw one

        Returns:
            Dict with 'identities' residuals and 'inequalities' margins
        """
        rng = sample_generator(seed, index)
        if b is None:
            b = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0))
        if alpha is None:
            alpha = float(SUITE_ALPHAS[rng.integers(len(SUITE_ALPHAS))])
        p = Params(b=b, alpha=alpha)
        omega = float(-abs(b) + rng.uniform(0.1, 2.0))
        f = random_smooth_field(grid, rng)
        n = FunctionalService.norms(f, p)
        qc = constants[alpha]
        critical = constants[MASS_CRITICAL_ALPHA]

        magkin_scale = max(n.mag_kinetic_sq, 1e-300)
        energy = FunctionalService.energy_E(f, p, norms=n)
        energy0 = FunctionalService.energy_E0(f, p, norms=n)
        fsecond = FunctionalService.virial_Fsecond(f, p, norms=n)
        H = FunctionalService.pohozaev_H(f, p, norms=n)
        scaled = f.scaled(FunctionalService.nehari_scale(f, p, omega, norms=n))
        sn = FunctionalService.norms(scaled, p)
        K_scaled = FunctionalService.nehari_K(scaled, p, omega, norms=sn)
        S = FunctionalService.action_S(f, p, omega, norms=n)
        K = FunctionalService.nehari_K(f, p, omega, norms=n)

        identities = {
            'magnetic_norm_decomposition': _relative(
                n.mag_kinetic_sq, n.grad_sq + b * n.angular_R + 0.25 * b ** 2 * n.rho_sq,
                magkin_scale),
            'energy_rotation_split': _relative(energy, energy0 + 0.5 * b * n.angular_R,
                                               max(abs(energy), magkin_scale)),
            'virial_pohozaev': _relative(8.0 * H, fsecond, 8.0 * (n.grad_sq + n.rho_sq + n.lp)),
            'reduced_minus_free_energy': _relative(
                energy0 - FunctionalService.energy_free(f, p, norms=n), b ** 2 / 8.0 * n.rho_sq,
                max(abs(energy0), n.grad_sq)),
            'nehari_rescale': abs(K_scaled) / max(sn.mag_kinetic_sq + abs(omega) * sn.mass, 1e-300),
            'action_minus_half_nehari': _relative(S - 0.5 * K, alpha / (2.0 * (alpha + 2.0)) * n.lp,
                                                  max(abs(S), n.lp, magkin_scale)),
        }

        cs_scale = n.virial_F * n.grad_sq
        sigma = FunctionalService.sigma_norms(f, p, norms=n)
        inequalities = {
            'diamagnetic': FunctionalService.diamagnetic(f, p).margin / magkin_scale,
            'spectral_gap': (n.mag_kinetic_sq - abs(b) * n.mass) / magkin_scale,
            'magnetic_gn': FunctionalService.magnetic_gn(f, qc.c_opt, p, norms=n).margin / n.lp,
            'mass_critical_gn': FunctionalService.mass_critical_gn(
                f, critical.mass_Q, Params(b=b, alpha=MASS_CRITICAL_ALPHA)).margin / magkin_scale,
            'cs_virial': (FunctionalService.cs_virial_gap(f, qc.c_opt, p, norms=n) +
                          CS_SLACK * cs_scale) / max(cs_scale, 1e-300),
            'sigma_grad_by_magnetic': sigma['grad_by_magnetic'].margin / magkin_scale,
            'sigma_magnetic_by_grad': sigma['magnetic_by_grad'].margin / magkin_scale,
        }
        return {'index': index, 'b': b, 'alpha': alpha,
                'boundary_fraction': n.boundary_fraction,
                'identities': identities, 'inequalities': inequalities}

    @staticmethod
    def run(seed, samples=1000, grid=None, tol=1e-10, b=None, alpha=None, n_jobs=None):
        """
        Run both suites over ``samples`` seeded fields.

        Samples are drawn from independent counter-based streams and gathered
        in index order, so the report does not depend on the thread count.

        Args:
            seed: Non-negative integer key
            samples: Number of fields
            grid: Sample grid (defaults to 48^3 on [-8, 8)^3)
            tol: Soliton solver tolerance for the sharp constants
            b: Optional fixed magnetic strength
            alpha: Optional fixed power from SUITE_ALPHAS
            n_jobs: joblib thread count (defaults to the FFT worker count)

        Returns:
            Report dict with per-identity worst residuals, per-inequality
            violation counts and the overall pass flag

        Raises:
            VerificationServiceError: On invalid arguments
        """
        if seed < 0:
            raise VerificationServiceError(f"seed must be non-negative, got {seed}", kind='invalid')
        if samples < 1:
            raise VerificationServiceError(f"samples must be positive, got {samples}", kind='invalid')
        if alpha is not None and alpha not in SUITE_ALPHAS:
            raise VerificationServiceError(
                f"alpha must be one of {SUITE_ALPHAS}, got {alpha}", kind='invalid')
        grid = grid or DEFAULT_GRID
        constants = VerificationService._constants(tol)
        jobs = n_jobs or spectral.get_workers()
        logger.info(f"Running property suites: seed={seed}, samples={samples}, jobs={jobs}")
        results = Parallel(n_jobs=jobs, backend='threading')(
            delayed(VerificationService.check_sample)(seed, i, grid, constants, b, alpha)
            for i in range(samples))
        return VerificationService.summarize(seed, samples, grid, results)

    @staticmethod
    def summarize(seed, samples, grid, results):
        identities = {}
        for name, bound in IDENTITY_BOUNDS.items():
            values = [r['identities'][name] for r in results]
            worst = max(values)
            identities[name] = {'max_residual': worst, 'bound': bound,
                                'failures': sum(v >= bound for v in values),
                                'passed': worst < bound}
        inequalities = {}
        for name in INEQUALITIES:
            margins = [r['inequalities'][name] for r in results]
            violators = [r['index'] for r in results if r['inequalities'][name] < 0]
            inequalities[name] = {'violations': len(violators), 'worst_margin': min(margins),
                                  'violating_samples': violators[:20]}
        violations = (sum(v['violations'] for v in inequalities.values()) +
                      sum(v['failures'] for v in identities.values()))
        report = {
            'seed': seed,
            'samples': samples,
            'grid': grid.to_dict(),
            'identities': identities,
            'inequalities': inequalities,
            'max_boundary_fraction': max(r['boundary_fraction'] for r in results),
            'violations': violations,
            'passed': violations == 0,
        }
        if violations:
            logger.warning(f"Property suites found {violations} violations")
        else:
            logger.info(f"Property suites passed on {samples} samples")
        return report
