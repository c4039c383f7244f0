"""Split-step time integration of the magnetic NLS with blow-up detection."""
import logging
import os

import numpy as np

from magnls.models.evolution import EvolveOutcome, EvolveStatus
from magnls.models.grid import Field
from magnls.services.field_service import FieldService
from magnls.services.functional_service import FunctionalService
from magnls.utils import spectral
from magnls.utils.checkpoint import write_checkpoint
from magnls.utils.errors import MagnlsError

logger = logging.getLogger(__name__)

# Records are taken every step once the gradient ratio passes this share of the threshold.
DENSE_RECORD_SHARE = 0.25


class DynamicsServiceError(MagnlsError):
    """Custom exception for time-integration errors."""
    pass


def _first_order_k(grid, axis):
    """Wavenumbers along one axis with the Nyquist entry zeroed, as a 1D array."""
    k = grid.wavenumbers[axis].copy()
    k[grid.dims[axis] // 2] = 0.0
    return k


def _linear_phases(grid, b, tau):
    """
    Exact propagators of the three directional substeps over time tau.

    Axis 0 carries -d1^2 + i b x2 d1, axis 1 carries -d2^2 - i b x1 d2 and
    axis 2 carries -d3^2. Each acts diagonally after a 1D transform along
    its own axis, pointwise in the other coordinates. The second derivatives
    keep the Nyquist wavenumber, as the spectral Laplacian does; the first
    derivatives drop it.
    """
    k1, k2, k3 = grid.kvecs
    d1 = _first_order_k(grid, 0)[:, None, None]
    d2 = _first_order_k(grid, 1)[None, :, None]
    x1, x2, _ = grid.coords
    phase1 = np.exp(-1j * (k1 ** 2 - b * x2 * d1) * tau)
    phase2 = np.exp(-1j * (k2 ** 2 + b * x1 * d2) * tau)
    phase3 = np.exp(-1j * k3 ** 2 * tau)
    return phase1, phase2, phase3


def _directional(values, phase, axis):
    return spectral.ifft_axis(phase * spectral.fft_axis(values, axis), axis)


def _pointwise(values, grid, p, tau, nonlinear):
    potential = 0.25 * p.b ** 2 * grid.rho_sq
    if nonlinear:
        potential = potential - np.abs(values) ** p.alpha
    return np.exp(-1j * potential * tau) * values


class DynamicsService:
    """Service class for evolving fields under the magnetic NLS flow."""

    @staticmethod
    def step(state, p, dt, nonlinear=True):
        """
        Advance one Strang-composed split step.

        The composition is V/2, X1/2, X2/2, X3, X2/2, X1/2, V/2 where V is the
        pointwise potential plus nonlinear phase and Xj the directional substeps.
        Every substep is unitary on the grid, so the discrete mass is invariant.

        Args:
            state: Current field
            p: Equation parameters
            dt: Time step, positive
            nonlinear: Include the focusing nonlinearity

        Returns:
            Field after one step, flagged post_blowup if values became non-finite

        Raises:
            DynamicsServiceError: If dt is not positive
        """
        if not dt > 0:
            raise DynamicsServiceError(f"dt must be positive, got {dt}", kind='invalid')
        grid = state.grid
        phase1, phase2, phase3 = _linear_phases(grid, p.b, 0.5 * dt)
        phase3 = phase3 ** 2
        u = _pointwise(state.values, grid, p, 0.5 * dt, nonlinear)
        u = _directional(u, phase1, 0)
        u = _directional(u, phase2, 1)
        u = _directional(u, phase3, 2)
        u = _directional(u, phase2, 1)
        u = _directional(u, phase1, 0)
        u = _pointwise(u, grid, p, 0.5 * dt, nonlinear)
        finite = bool(np.all(np.isfinite(u)))
        return Field(grid, u, post_blowup=not finite)

    @staticmethod
    def _spectral_state(u):
        """(Parseval gradient norm, spectral tail fraction) from one transform."""
        grid = u.grid
        u_hat = spectral.fftn(u.values)
        grad_sq = float(spectral.total(grid.k_sq * np.abs(u_hat) ** 2) *
                        grid.cell_volume / grid.size)
        tail = FieldService.spectral_tail_fraction(u, f_hat=u_hat)
        return grad_sq, tail

    @staticmethod
    def evolve(u0, p, cfg, checkpoint_dir=None):
        """
        Integrate from u0 until t_final, blow-up detection or resolution loss.

        Args:
            u0: Finite initial field
            p: Equation parameters
            cfg: EvolveConfig
            checkpoint_dir: Directory for field checkpoints (used when
                cfg.checkpoint_stride > 0)

        Returns:
            EvolveOutcome with the recorded diagnostics series

        Raises:
            DynamicsServiceError: If u0 is non-finite or identically zero
        """
        if u0.post_blowup:
            raise DynamicsServiceError("Initial field is flagged non-finite", kind='invalid')
        mass0 = FunctionalService.mass(u0)
        grad0, tail0 = DynamicsService._spectral_state(u0)
        series = [FunctionalService.snapshot(u0, p, 0.0, strict=False)]
        annotations = {'grad_ratio': 1.0, 'spectral_tail': tail0}
        if series[0].boundary_mass_fraction > 1e-8:
            logger.warning(f"Initial boundary mass fraction {series[0].boundary_mass_fraction:.2e} "
                           f"exceeds 1e-8")
        if mass0 == 0.0:
            logger.info("Zero initial datum; the flow is trivial")
            return EvolveOutcome(EvolveStatus.REACHED_T_FINAL, cfg.t_final,
                                 series + [FunctionalService.snapshot(u0, p, cfg.t_final)],
                                 u0, steps=0, annotations=annotations)
        if tail0 >= cfg.tail_fraction_max:
            annotations['reason'] = 'initial datum under-resolved'
            logger.info(f"Initial spectral tail {tail0:.2e} already above {cfg.tail_fraction_max:.1e}")
            return EvolveOutcome(EvolveStatus.RESOLUTION_LOSS, 0.0, series, u0,
                                 steps=0, annotations=annotations)

        cfl = cfg.cfl if cfg.cfl is not None else cfg.dt_initial * max(grad0, 1e-300) / mass0
        t = 0.0
        u = u0
        steps = 0
        records = 0
        status = EvolveStatus.REACHED_T_FINAL
        grad_sq = grad0

        while t < cfg.t_final:
            if steps >= cfg.max_steps:
                status = EvolveStatus.RESOLUTION_LOSS
                annotations['reason'] = f'step budget of {cfg.max_steps} exhausted'
                break
            dt = cfg.dt_initial
            if cfg.adapt:
                dt = min(dt, cfl * mass0 / max(grad_sq, 1e-300))
            dt = min(dt, cfg.t_final - t)
            u_next = DynamicsService.step(u, p, dt, nonlinear=cfg.nonlinear)
            steps += 1
            if u_next.post_blowup:
                status = EvolveStatus.RESOLUTION_LOSS
                annotations['reason'] = 'non-finite state'
                u = u_next
                t += dt
                break
            u = u_next
            t = cfg.t_final if cfg.t_final - (t + dt) < 1e-14 * cfg.t_final else t + dt

            grad_sq, tail = DynamicsService._spectral_state(u)
            ratio = grad_sq / grad0
            annotations['grad_ratio'] = ratio
            annotations['spectral_tail'] = tail
            logger.debug(f"t={t:.6f} dt={dt:.3e} grad ratio={ratio:.3f} tail={tail:.2e}")

            if tail >= cfg.tail_fraction_max:
                if ratio >= cfg.blowup_grad_ratio:
                    status = EvolveStatus.NUMERICAL_BLOWUP
                else:
                    status = EvolveStatus.RESOLUTION_LOSS
                    annotations['reason'] = 'spectral tail reached without gradient growth'
                break

            dense = ratio >= DENSE_RECORD_SHARE * cfg.blowup_grad_ratio
            if dense or steps % cfg.record_stride == 0 or t >= cfg.t_final:
                series.append(FunctionalService.snapshot(u, p, t, strict=False))
                records += 1
                if checkpoint_dir and cfg.checkpoint_stride and records % cfg.checkpoint_stride == 0:
                    write_checkpoint(os.path.join(checkpoint_dir, f'checkpoint_{records:06d}.mnls'),
                                     u, p, t)

        if not u.post_blowup and series[-1].t < t:
            series.append(FunctionalService.snapshot(u, p, t, strict=False))

        outcome = EvolveOutcome(status=status, t_end=t, series=series, final_state=u,
                                steps=steps, annotations=annotations)
        if status is EvolveStatus.NUMERICAL_BLOWUP:
            outcome.blowup_time_estimate = DynamicsService.detect_blowup(series, cfg)
        logger.info(f"Evolution finished: {status.value} at t={t:.6f} after {steps} steps")
        return outcome

    @staticmethod
    def detect_blowup(series, cfg):
        """
        Estimate the blow-up time from the recorded gradient norms.

        Once the gradient ratio threshold is crossed, 1/|grad u|^2 is fitted
        linearly in t over the last records and extrapolated to zero.

        Args:
            series: Non-empty list of DiagnosticsRecord
            cfg: EvolveConfig providing blowup_grad_ratio

        Returns:
            Estimated blow-up time (never before the last record), or None

        Raises:
            DynamicsServiceError: If the series is empty
        """
        if not series:
            raise DynamicsServiceError("Empty diagnostics series", kind='invalid')
        grad0 = series[0].grad_norm_sq
        if grad0 <= 0:
            return None
        ratios = [r.grad_norm_sq / grad0 for r in series]
        if max(ratios) < cfg.blowup_grad_ratio:
            return None
        window = series[-min(len(series), 8):]
        if len(window) < 2:
            return None
        t = np.array([r.t for r in window])
        inverse = np.array([1.0 / r.grad_norm_sq for r in window])
        slope, intercept = np.polyfit(t, inverse, 1)
        if slope >= 0:
            return None
        return float(max(-intercept / slope, t[-1]))

    @staticmethod
    def virial_parabola(F0, F1, E0, t):
        """Upper bound F0 + F1 t + 8 E0 t^2 on the virial F along the flow."""
        t = np.asarray(t, dtype=float)
        return F0 + F1 * t + 8.0 * E0 * t ** 2

    @staticmethod
    def virial_parabola_root(F0, F1, E0):
        """Smallest positive zero of the virial parabola, or None."""
        roots = np.roots([8.0 * E0, F1, F0]) if E0 != 0 else (
            np.array([-F0 / F1]) if F1 != 0 else np.array([]))
        positive = [float(r.real) for r in np.atleast_1d(roots)
                    if abs(r.imag) < 1e-12 and r.real > 0]
        return min(positive) if positive else None

    @staticmethod
    def h1_distance_to_soliton_orbit(u, profile, qc):
        """
        Relative H^1 distance of |u| to the orbit of mu Q(. - y), mu = ||u|| / ||Q||.

        The centre y is the mass centroid of u; the phase is removed by taking |u|.
        The result is normalized by ||mu Q||_{H^1}.
        """
        grid = u.grid
        mass = FunctionalService.mass(u)
        if mass == 0:
            raise DynamicsServiceError("Distance undefined for the zero field", kind='invalid')
        mu = np.sqrt(mass / qc.mass_Q)
        density = np.abs(u.values) ** 2
        centroid = tuple(float(spectral.total(c * density) / spectral.total(density))
                         for c in np.broadcast_arrays(*grid.coords))
        soliton = FieldService.sample_radial(profile, grid, mu, 1.0, centroid)
        diff = Field(grid, np.abs(u.values) - soliton.values.real)
        distance_sq = FunctionalService.grad_norm_sq(diff) + FunctionalService.mass(diff)
        reference_sq = mu ** 2 * (qc.grad_Q_sq + qc.mass_Q)
        return float(np.sqrt(distance_sq / reference_sq))

