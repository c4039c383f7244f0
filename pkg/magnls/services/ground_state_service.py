"""Standing waves: mass-constrained minimizers, capped minimizers and action ground states."""
import logging
import os

import numpy as np

from magnls.models.classification import Inequality
from magnls.models.ground_state import GroundStateResult
from magnls.models.grid import Field
from magnls.services.dynamics_service import DynamicsService
from magnls.services.field_service import FieldService
from magnls.services.functional_service import FunctionalService, FunctionalServiceError
from magnls.utils import spectral
from magnls.utils.checkpoint import write_checkpoint
from magnls.utils.errors import MagnlsError
from magnls.utils.reports import write_json

logger = logging.getLogger(__name__)

ACCEPT_SLACK = 1e-14
STEP_GROWTH = 1.25
MIN_STEP = 1e-12
WITNESS_SCALES = (1.0, 2.0, 4.0, 8.0, 16.0)


class GroundStateServiceError(MagnlsError):
    """Custom exception for standing-wave solver errors."""
    pass


def _gaussian_h_norms(c, alpha):
    """||h'||^2 and ||h||^{alpha+2} for h(s) = c^{1/2} pi^{-1/4} exp(-s^2/2)."""
    q = alpha + 2.0
    return {
        'dh_sq': 0.5 * c,
        'lp_h': c ** (0.5 * q) * np.pi ** (-0.25 * q) * np.sqrt(2.0 * np.pi / q),
    }


def _transverse_lp(b, alpha):
    """||g||^{alpha+2} over R^2 for the unit lowest Landau level g."""
    q = alpha + 2.0
    return (abs(b) / (2.0 * np.pi)) ** (0.5 * q) * 4.0 * np.pi / (q * abs(b))


def _precondition(values, grid, shift):
    return spectral.ifftn(spectral.fftn(values) / (grid.k_sq + shift))


def _renormalize(values, grid, c):
    mass = float(spectral.total(np.abs(values) ** 2) * grid.cell_volume)
    return values * np.sqrt(c / mass)


def _scaling_terms(n, p, omega, lam):
    """(S, dS, d2S, K) of phi^lambda from the base norms of phi."""
    beta = 1.5 * p.alpha
    q = p.alpha + 2.0
    rho_term = 0.25 * p.b ** 2 * n.rho_sq
    bR = p.b * n.angular_R
    magkin = lam ** 2 * n.grad_sq + bR + rho_term / lam ** 2
    lp = lam ** beta * n.lp
    S = 0.5 * magkin - lp / q + 0.5 * omega * n.mass
    dS = lam * n.grad_sq - rho_term / lam ** 3 - beta * lam ** (beta - 1.0) * n.lp / q
    d2S = (n.grad_sq + 3.0 * rho_term / lam ** 4 -
           beta * (beta - 1.0) * lam ** (beta - 2.0) * n.lp / q)
    K = magkin + omega * n.mass - lp
    return S, dS, d2S, K


class GroundStateService:
    """Service class for constrained minimizers and the strong-instability analysis."""

    @staticmethod
    def transverse_family(grid, p, lam, c):
        """
        Sample f_lambda(x) = g(x1, x2) lambda^{1/2} h(lambda x3) with ||f_lambda||^2 = c.

        g is the normalized lowest Landau level sqrt(|b|/2pi) exp(-|b| rho^2/4)
        and h the Gaussian of mass c.
        """
        if not lam > 0:
            raise GroundStateServiceError(f"lambda must be positive, got {lam}", kind='invalid')
        if not c > 0:
            raise GroundStateServiceError(f"mass must be positive, got {c}", kind='invalid')
        x3 = grid.coords[2]
        g = np.sqrt(abs(p.b) / (2.0 * np.pi)) * np.exp(-0.25 * abs(p.b) * grid.rho_sq)
        s = lam * x3
        h = np.sqrt(c) * np.pi ** -0.25 * np.exp(-0.5 * s ** 2)
        return Field(grid, g * np.sqrt(lam) * h)

    @staticmethod
    def transverse_family_energy(lam, c, p, hnorms=None):
        """
        Closed-form E(f_lambda) = |b|c/2 + lam^2/2 ||h'||^2
        - lam^{alpha/2}/(alpha+2) ||g||^{alpha+2} ||h||^{alpha+2}.

        Args:
            lam: Longitudinal scale, positive
            c: Mass of the family
            p: Equation parameters
            hnorms: Optional {'dh_sq', 'lp_h'} for a profile other than the Gaussian

        Returns:
            Energy of the family member
        """
        if not lam > 0:
            raise GroundStateServiceError(f"lambda must be positive, got {lam}", kind='invalid')
        hn = hnorms or _gaussian_h_norms(c, p.alpha)
        return (0.5 * abs(p.b) * c + 0.5 * lam ** 2 * hn['dh_sq'] -
                lam ** (0.5 * p.alpha) / (p.alpha + 2.0) * _transverse_lp(p.b, p.alpha) * hn['lp_h'])

    @staticmethod
    def _family_scales(grid, count=16):
        """Longitudinal scales the grid can hold: inside the box and 8 points per width."""
        L3 = grid.half_widths[2]
        h3 = grid.spacings[2]
        lam_min = 8.5 / L3
        lam_max = 6.07 / (8.0 * h3)
        if lam_min > lam_max:
            logger.warning(f"Grid cannot both contain and resolve the transverse family "
                           f"(scales {lam_min:.3f} > {lam_max:.3f}); using their geometric mean")
            return np.array([np.sqrt(lam_min * lam_max)])
        return np.geomspace(lam_min, lam_max, count)

    @staticmethod
    def _family_warm_start(grid, p, c, kinetic_cap=None):
        """Member of f_lambda with least closed-form energy, optionally under a kinetic cap."""
        hn = _gaussian_h_norms(c, p.alpha)
        best = None
        for lam in GroundStateService._family_scales(grid):
            if kinetic_cap is not None and abs(p.b) * c + lam ** 2 * hn['dh_sq'] > kinetic_cap:
                continue
            energy = GroundStateService.transverse_family_energy(lam, c, p, hn)
            if best is None or energy < best[1]:
                best = (lam, energy)
        if best is None:
            return None
        logger.debug(f"Warm start lambda={best[0]:.4f} with E={best[1]:.6g}")
        return best[0]

    @staticmethod
    def _decay_rate(phi):
        """
        Exponential rate delta from the shell envelope of log|phi| over the last resolved decade.

        Returns:
            Fitted delta, or nan when fewer than three shells are available
        """
        grid = phi.grid
        modulus = np.abs(phi.values)
        peak = float(modulus.max())
        if peak == 0:
            return float('nan')
        density = modulus ** 2
        weight = spectral.total(density)
        centroid = [float(spectral.total(c * density) / weight)
                    for c in np.broadcast_arrays(*grid.coords)]
        x1, x2, x3 = grid.coords
        r = np.sqrt((x1 - centroid[0]) ** 2 + (x2 - centroid[1]) ** 2 + (x3 - centroid[2]) ** 2)
        width = max(grid.spacings)
        r_cut = 0.8 * min(grid.half_widths)
        shells = (r / width).astype(int).ravel()
        envelope = np.zeros(shells.max() + 1)
        np.maximum.at(envelope, shells, modulus.ravel() / peak)
        radii = (np.arange(envelope.size) + 0.5) * width
        usable = (radii <= r_cut) & (envelope > 1e-12)
        radii, envelope = radii[usable], envelope[usable]
        if radii.size < 3:
            return float('nan')
        floor = envelope.min()
        window = envelope <= 10.0 * floor
        if window.sum() < 3:
            window = envelope <= 100.0 * floor
        if window.sum() < 3:
            window = np.zeros_like(window)
            window[-3:] = True
        slope, _ = np.polyfit(radii[window], np.log(envelope[window]), 1)
        return float(-slope)

    @staticmethod
    def _finish(phi, p, omega, objective, iterations, converged, provenance,
                boundary_trapped=False):
        n = FunctionalService.norms(phi, p, strict=False)
        _, _, d2S, _ = _scaling_terms(n, p, omega, 1.0)
        result = GroundStateResult(
            phi=phi,
            omega=float(omega),
            objective=float(objective),
            residual_el=FunctionalService.el_residual(phi, p, omega),
            k_omega=float(FunctionalService.nehari_K(phi, p, omega, norms=n)),
            h_value=float(FunctionalService.pohozaev_H(phi, p, norms=n)),
            decay_delta=GroundStateService._decay_rate(phi),
            scaling_second_deriv=float(d2S),
            iterations=iterations,
            converged=converged,
            boundary_trapped=boundary_trapped,
            provenance=provenance,
        )
        if n.boundary_fraction > 1e-8:
            logger.warning(f"Ground state carries boundary mass fraction {n.boundary_fraction:.2e}")
        return result

    @staticmethod
    def minimize_action(omega, p, grid, tol=1e-6, max_iter=5000):
        """
        Minimize S_omega on the Nehari set K_omega = 0.

        Each iteration takes a preconditioned gradient step on S_omega and projects
        back with the exact rescale (H_omega / ||f||^{alpha+2})^{1/alpha}. Steps that
        raise the action or collapse the iterate are retried at half size.

        Args:
            omega: Frequency, must exceed -|b|
            p: Equation parameters
            grid: Computational grid
            tol: Bound on the L2 Euler-Lagrange residual
            max_iter: Iteration budget

        Returns:
            GroundStateResult with objective S_omega(phi)

        Raises:
            GroundStateServiceError: If omega <= -|b|, or the step collapses
        """
        if not omega > -abs(p.b):
            raise GroundStateServiceError(
                f"omega={omega} must exceed -|b|={-abs(p.b)}", kind='refused')
        kappa = np.sqrt(omega + abs(p.b))
        x3 = grid.coords[2]
        values = np.exp(-0.25 * abs(p.b) * grid.rho_sq - 0.5 * kappa * x3 ** 2).astype(np.complex128)
        f = Field(grid, values)
        f = f.scaled(FunctionalService.nehari_scale(f, p, omega))
        action = FunctionalService.action_S(f, p, omega)
        shift = 1.0 + abs(p.b) + max(omega, 0.0)
        tau = 0.5
        residual = float('inf')
        converged = False
        iteration = 0

        for iteration in range(1, max_iter + 1):
            gradient = FunctionalService.el_operator(f, p, omega)
            residual = float(np.sqrt(spectral.total(np.abs(gradient) ** 2) * grid.cell_volume))
            if residual < tol:
                converged = True
                break
            direction = _precondition(gradient, grid, shift)
            while True:
                trial = Field(grid, f.values - tau * direction)
                try:
                    trial = trial.scaled(FunctionalService.nehari_scale(trial, p, omega))
                except FunctionalServiceError:
                    trial = None
                trial_action = (FunctionalService.action_S(trial, p, omega)
                                if trial is not None else float('inf'))
                if trial_action <= action + ACCEPT_SLACK * abs(action):
                    break
                tau *= 0.5
                if tau < MIN_STEP:
                    raise GroundStateServiceError(
                        f"Action descent stalled at residual {residual:.3e} after {iteration} "
                        f"iterations")
            f, action = trial, trial_action
            tau = min(tau * STEP_GROWTH, 2.0)
            if iteration % 100 == 0:
                logger.debug(f"action iteration {iteration}: S={action:.12g} residual={residual:.3e}")

        if converged:
            logger.info(f"Action ground state for omega={omega} converged in {iteration} "
                        f"iterations, S={action:.10g}")
        else:
            logger.warning(f"Action minimization hit max_iter={max_iter} at residual {residual:.3e}")
        return GroundStateService._finish(
            f, p, omega, action, iteration, converged,
            {'problem': 'd(omega)', 'omega': omega, 'b': p.b, 'alpha': p.alpha, 'tol': tol})

    @staticmethod
    def _scaling_witness(grid, p, c):
        """E(f^lambda) for a Gaussian of mass c over growing lambda."""
        values = np.exp(-0.5 * grid.r_sq).astype(np.complex128)
        f = Field(grid, _renormalize(values, grid, c))
        n = FunctionalService.norms(f, p)
        beta = 1.5 * p.alpha
        return [(lam, 0.5 * lam ** 2 * n.grad_sq + p.b ** 2 / (8.0 * lam ** 2) * n.rho_sq -
                 lam ** beta * n.lp / (p.alpha + 2.0)) for lam in WITNESS_SCALES]

    @staticmethod
    def _mass_flow(f, p, c, tol, max_iter, kinetic_cap=None):
        """
        Normalized gradient flow on E over the sphere M = c.

        Returns:
            Tuple (field, energy, omega, iterations, converged, capped) where
            capped reports that the last step was limited by the kinetic cap.
        """
        grid = f.grid
        shift = 1.0 + abs(p.b)
        energy = FunctionalService.energy_E(f, p)
        grad_start = FunctionalService.grad_norm_sq(f)
        tau = 0.5
        converged = False
        capped = False
        iteration = 0
        previous = energy

        for iteration in range(1, max_iter + 1):
            n = FunctionalService.norms(f, p, strict=False)
            omega = FunctionalService.omega_rayleigh(f, p, norms=n)
            gradient = FunctionalService.el_operator(f, p, omega)
            residual = float(np.sqrt(spectral.total(np.abs(gradient) ** 2) * grid.cell_volume))
            if residual < tol and abs(previous - energy) < tol:
                converged = True
                break
            direction = _precondition(gradient, grid, shift)
            capped = False
            while True:
                trial = Field(grid, _renormalize(f.values - tau * direction, grid, c))
                tn = FunctionalService.norms(trial, p, strict=False)
                if kinetic_cap is not None and tn.mag_kinetic_sq > kinetic_cap:
                    capped = True
                    trial_energy = float('inf')
                else:
                    trial_energy = FunctionalService.energy_E(trial, p, norms=tn)
                if trial_energy <= energy + ACCEPT_SLACK * abs(energy):
                    break
                tau *= 0.5
                if tau < MIN_STEP:
                    return f, energy, omega, iteration, False, capped
            previous, energy, f = energy, trial_energy, trial
            tau = min(tau * STEP_GROWTH, 2.0)
            if tn.grad_sq > 1e4 * max(grad_start, 1e-300):
                raise GroundStateServiceError(
                    f"Energy unbounded below: gradient norm grew {tn.grad_sq / grad_start:.1e}x "
                    f"while E decreased to {energy:.6g}")
            if iteration % 100 == 0:
                logger.debug(f"mass flow iteration {iteration}: E={energy:.12g} residual={residual:.3e}")
        omega = FunctionalService.omega_rayleigh(f, p)
        return f, energy, omega, iteration, converged, capped

    @staticmethod
    def minimize_I_c(c, p, grid, tol=1e-6, qc=None, max_iter=5000):
        """
        Minimize E over the mass sphere M(f) = c.

        Args:
            c: Prescribed mass, positive
            p: Equation parameters with alpha <= 4/3
            grid: Computational grid
            tol: Bound on the Euler-Lagrange residual and the energy decrement
            qc: Soliton constants, required at alpha = 4/3
            max_iter: Iteration budget

        Returns:
            GroundStateResult with objective E(phi) and the Rayleigh multiplier

        Raises:
            GroundStateServiceError: If c <= 0; refused for alpha = 4/3 with c >= M(Q)
                and for supercritical alpha, where E is unbounded below on the sphere
        """
        if not c > 0:
            raise GroundStateServiceError(f"mass must be positive, got {c}", kind='invalid')
        if p.is_mass_critical:
            if qc is None:
                raise GroundStateServiceError("Mass-critical I(c) needs the soliton constants",
                                              kind='invalid')
            if c >= qc.mass_Q:
                raise GroundStateServiceError(
                    f"c={c:.6g} >= M(Q)={qc.mass_Q:.6g}: no minimizer exists", kind='refused')
        elif p.is_supercritical:
            witness = GroundStateService._scaling_witness(grid, p, c)
            listing = ', '.join(f"E({lam:g})={e:.4g}" for lam, e in witness)
            logger.info(f"I(c) unbounded below for alpha={p.alpha}: {listing}")
            raise GroundStateServiceError(
                f"E is unbounded below on S(c) for alpha={p.alpha} > 4/3; scaling witness {listing}",
                kind='refused')

        lam = GroundStateService._family_warm_start(grid, p, c)
        f = GroundStateService.transverse_family(grid, p, lam, c)
        f = Field(grid, _renormalize(f.values, grid, c))
        f, energy, omega, iterations, converged, _ = GroundStateService._mass_flow(
            f, p, c, tol, max_iter)
        if converged:
            logger.info(f"I(c) minimizer for c={c} converged in {iterations} iterations, "
                        f"E={energy:.10g}, omega={omega:.8g}")
        else:
            logger.warning(f"I(c) flow stopped after {iterations} iterations without converging")
        return GroundStateService._finish(
            f, p, omega, energy, iterations, converged,
            {'problem': 'I(c)', 'c': c, 'b': p.b, 'alpha': p.alpha, 'tol': tol,
             'warm_start_lambda': lam, 'upper_bound': 0.5 * abs(p.b) * c})

    @staticmethod
    def minimize_Im_c(c, m, p, grid, tol=1e-6, start='interior', max_iter=5000):
        """
        Minimize E over S(c) intersected with ||(grad + iA) f||^2 <= m.

        Args:
            c: Prescribed mass
            m: Kinetic cap
            p: Equation parameters, 4/3 < alpha < 4
            grid: Computational grid
            tol: Convergence tolerance
            start: 'interior' (warm start inside D(m/4) when possible), 'shell'
                (start in D(m) minus D(m/2)) or an explicit Field of mass c
            max_iter: Iteration budget

        Returns:
            GroundStateResult; boundary_trapped is set when the converged state
            has ||(grad + iA) phi||^2 > m/2

        Raises:
            GroundStateServiceError: On invalid inputs, or refused when S(c) misses D(m)
        """
        if not p.is_supercritical:
            raise GroundStateServiceError(f"I^m(c) needs 4/3 < alpha < 4, got {p.alpha}",
                                          kind='invalid')
        if not (c > 0 and m > 0):
            raise GroundStateServiceError(f"c and m must be positive, got c={c}, m={m}",
                                          kind='invalid')
        if abs(p.b) * c >= m:
            raise GroundStateServiceError(
                f"|b|c={abs(p.b) * c:.6g} >= m={m:.6g}: S(c) does not meet D(m)", kind='refused')

        hn = _gaussian_h_norms(c, p.alpha)
        lam = None
        if isinstance(start, Field):
            f = Field(grid, _renormalize(start.values, grid, c))
        elif start == 'shell':
            lam = float(np.sqrt((0.75 * m - abs(p.b) * c) / hn['dh_sq']))
            f = GroundStateService.transverse_family(grid, p, lam, c)
        elif start == 'interior':
            for cap in (0.25 * m, 0.5 * m, m):
                lam = GroundStateService._family_warm_start(grid, p, c, kinetic_cap=cap)
                if lam is not None:
                    break
            if lam is None:
                raise GroundStateServiceError(
                    f"No member of the warm-start family fits under m={m}", kind='refused')
            f = GroundStateService.transverse_family(grid, p, lam, c)
        else:
            raise GroundStateServiceError(f"Unknown start {start!r}", kind='invalid')
        f = Field(grid, _renormalize(f.values, grid, c))
        if FunctionalService.magnetic_kinetic(f, p) > m:
            raise GroundStateServiceError("Start lies outside D(m) on this grid", kind='refused')

        f, energy, omega, iterations, converged, capped = GroundStateService._mass_flow(
            f, p, c, tol, max_iter, kinetic_cap=m)
        magkin = FunctionalService.magnetic_kinetic(f, p)
        trapped = magkin > 0.5 * m or (capped and not converged)
        if trapped:
            logger.info(f"I^m(c) iterate trapped at the cap: ||(grad+iA)phi||^2={magkin:.6g} "
                        f"> m/2={0.5 * m:.6g}")
        bound_term = c ** ((4.0 - p.alpha) / 4.0) * m ** ((3.0 * p.alpha - 4.0) / 4.0)
        provenance = {
            'problem': 'I^m(c)', 'c': c, 'm': m, 'b': p.b, 'alpha': p.alpha, 'tol': tol,
            'start': start if isinstance(start, str) else 'field',
            'warm_start_lambda': lam,
            'magnetic_kinetic': magkin,
            'omega_bound_term': bound_term,
            'multiplier_constant_needed': (1.0 + omega / abs(p.b)) / bound_term,
            'omega_in_range': bool(-abs(p.b) < omega < 0),
        }
        return GroundStateService._finish(f, p, omega, energy, iterations, converged,
                                          provenance, boundary_trapped=trapped)

    @staticmethod
    def fit_multiplier_constant(results):
        """
        Smallest K with omega <= -|b|(1 - K c^{(4-alpha)/4} m^{(3alpha-4)/4}) over a sweep.

        Args:
            results: I^m(c) results (trapped ones are skipped)

        Returns:
            Dict with the fitted K and the per-result requirement
        """
        needed = [r.provenance['multiplier_constant_needed'] for r in results
                  if r.provenance.get('problem') == 'I^m(c)' and not r.boundary_trapped]
        if not needed:
            raise GroundStateServiceError("No interior I^m(c) results to fit", kind='invalid')
        return {'K': float(max(needed)), 'samples': [float(k) for k in needed],
                'positive': bool(max(needed) > 0)}

    @staticmethod
    def cross_residual(result_c, p, d_result=None):
        """
        Check an I(c) minimizer against the action problem at its own multiplier.

        Returns:
            Dict with the Euler-Lagrange residual, K_omega, H and, when a d(omega)
            result is given, the action gap S_omega(phi_c) - d(omega)
        """
        phi, omega = result_c.phi, result_c.omega
        n = FunctionalService.norms(phi, p, strict=False)
        report = {
            'omega': omega,
            'el_residual': FunctionalService.el_residual(phi, p, omega),
            'k_omega': FunctionalService.nehari_K(phi, p, omega, norms=n),
            'h_value': FunctionalService.pohozaev_H(phi, p, norms=n),
            'action': FunctionalService.action_S(phi, p, omega, norms=n),
        }
        if d_result is not None:
            report['d_omega'] = d_result.objective
            report['action_gap'] = report['action'] - d_result.objective
        return report

    @staticmethod
    def descent_check(f, p, omega, direction, eps=1e-4):
        """
        Compare the analytic directional derivative with a central difference.

        With omega None the functional is E, otherwise S_omega.

        Returns:
            Tuple (analytic, finite difference, relative discrepancy)
        """
        w = 0.0 if omega is None else omega
        gradient = FunctionalService.el_operator(f, p, w)
        analytic = float(np.real(spectral.total(np.conj(gradient) * direction.values)) *
                         f.grid.cell_volume)

        def value(g):
            return FunctionalService.action_S(g, p, w, norms=FunctionalService.norms(g, p, strict=False))

        plus = value(Field(f.grid, f.values + eps * direction.values))
        minus = value(Field(f.grid, f.values - eps * direction.values))
        numeric = (plus - minus) / (2.0 * eps)
        scale = max(abs(analytic), abs(numeric), 1e-300)
        return analytic, numeric, abs(analytic - numeric) / scale

    @staticmethod
    def diamagnetic_comparison(f, p):
        """
        E(f) = E^0(f) + (b^2/8)||rho f||^2 + (b/2)R(f), and E(f) >= E^0(|f|) + the same terms.

        Returns:
            Dict with the identity residual and the inequality
        """
        n = FunctionalService.norms(f, p, strict=False)
        energy = FunctionalService.energy_E(f, p, norms=n)
        extra = p.b ** 2 / 8.0 * n.rho_sq + 0.5 * p.b * n.angular_R
        identity = FunctionalService.energy_free(f, p, norms=n) + extra
        modulus = Field(f.grid, np.abs(f.values))
        lower = (0.5 * FunctionalService.grad_norm_sq(modulus) -
                 FunctionalService.lp_norm(f, p) / (p.alpha + 2.0) + extra)
        return {
            'identity_residual': abs(energy - identity) / max(abs(energy), n.mag_kinetic_sq, 1e-300),
            'inequality': Inequality(energy, lower, '>='),
        }

    @staticmethod
    def scaling_curve(phi, p, omega, lambdas):
        """
        (S, dS/dlambda, d2S/dlambda2, K) of phi^lambda(x) = lambda^{3/2} phi(lambda x).

        Uses the exact powers lambda^2, lambda^-2 and lambda^{3alpha/2} of the base
        norms; M and R are invariant under the scaling.

        Raises:
            GroundStateServiceError: If some lambda <= 0
        """
        lambdas = [float(lam) for lam in lambdas]
        if any(not lam > 0 for lam in lambdas):
            raise GroundStateServiceError("Scaling parameters must be positive", kind='invalid')
        n = FunctionalService.norms(phi, p, strict=False)
        return [tuple(float(v) for v in _scaling_terms(n, p, omega, lam)) for lam in lambdas]

    @staticmethod
    def scaling_direct(phi, p, omega, lambdas):
        """(S, H, K) of phi^lambda resampled on the grid; oracle for scaling_curve."""
        out = []
        for lam in lambdas:
            g = FieldService.resample_scaled(phi, lam)
            n = FunctionalService.norms(g, p, strict=False)
            out.append((FunctionalService.action_S(g, p, omega, norms=n),
                        FunctionalService.pohozaev_H(g, p, norms=n),
                        FunctionalService.nehari_K(g, p, omega, norms=n)))
        return out

    @staticmethod
    def invariant_membership(record, phi_norms, p, omega, d_omega, rtol=1e-6):
        """
        Membership of one recorded state in {K_omega < 0, H < 0, S_omega < d(omega)}.

        Also reports the inequality H <= 2(S_omega - d(omega)) and whether M and R
        still match the ground state.
        """
        q = p.alpha + 2.0
        K = record.mag_kinetic_sq + omega * record.mass - record.lp_norm
        H = (record.grad_norm_sq - 0.25 * p.b ** 2 * record.rho_norm_sq -
             1.5 * p.alpha / q * record.lp_norm)
        S = record.energy_E + 0.5 * omega * record.mass
        key = Inequality(H, 2.0 * (S - d_omega), '<=')
        return {
            't': record.t,
            'k_omega': K,
            'h_value': H,
            'action': S,
            'in_set': bool(K < 0 and H < 0 and S < d_omega),
            'key_inequality': key.to_dict(),
            'mass_matched': abs(record.mass - phi_norms.mass) <= rtol * phi_norms.mass,
            'angular_matched': abs(record.angular_R - phi_norms.angular_R) <= rtol * phi_norms.mass,
        }

    @staticmethod
    def instability_experiment(phi, p, omega, lam, cfg, d_omega=None, checkpoint_dir=None):
        """
        Evolve the dilated ground state phi^lambda and track the invariant set.

        Args:
            phi: Converged ground state
            p: Equation parameters
            omega: Its frequency
            lam: Dilation; lambda > 1 is the covered case, others are control runs
            cfg: EvolveConfig
            d_omega: Ground-state action level (defaults to S_omega(phi))
            checkpoint_dir: Optional checkpoint directory

        Returns:
            EvolveOutcome whose annotations carry the membership records,
            the virial bound 16(S_omega(u0) - d(omega)) and the modulus drift

        Raises:
            GroundStateServiceError: Refused when d2S/dlambda2 at 1 is positive
        """
        if not lam > 0:
            raise GroundStateServiceError(f"lambda must be positive, got {lam}", kind='invalid')
        n = FunctionalService.norms(phi, p, strict=False)
        _, _, d2S, _ = _scaling_terms(n, p, omega, 1.0)
        if d2S > 0:
            raise GroundStateServiceError(
                f"d2S/dlambda2 at 1 is {d2S:.6g} > 0; the instability hypothesis fails",
                kind='refused')
        if d_omega is None:
            d_omega = FunctionalService.action_S(phi, p, omega, norms=n)
        u0 = phi if lam == 1.0 else FieldService.resample_scaled(phi, lam)
        S0 = FunctionalService.action_S(u0, p, omega)
        outcome = DynamicsService.evolve(u0, p, cfg, checkpoint_dir=checkpoint_dir)

        membership = [GroundStateService.invariant_membership(r, n, p, omega, d_omega)
                      for r in outcome.series]
        bound = 16.0 * (S0 - d_omega)
        fsecond = [8.0 * m['h_value'] for m in membership]
        outcome.annotations.update({
            'lambda': lam,
            'covered_by_hypothesis': lam > 1.0,
            'scaling_second_deriv': d2S,
            'd_omega': d_omega,
            'action_u0': S0,
            'invariant_membership': membership,
            'invariant_set_held': all(m['in_set'] for m in membership),
            'key_inequality_held': all(m['key_inequality']['margin'] >= 0 for m in membership),
            'fsecond_bound': bound,
            'fsecond_bound_held': all(v <= bound for v in fsecond),
        })
        if not outcome.final_state.post_blowup:
            peak = float(np.abs(phi.values).max())
            drift = float(np.abs(np.abs(outcome.final_state.values) - np.abs(phi.values)).max())
            outcome.annotations['modulus_drift'] = drift / peak if peak > 0 else drift
        logger.info(f"Instability run lambda={lam}: {outcome.status.value}, "
                    f"invariant set held={outcome.annotations['invariant_set_held']}")
        return outcome

    @staticmethod
    def archive(result, p, directory, name='ground_state'):
        """
        Write the ground-state checkpoint and its JSON sidecar.

        Returns:
            Tuple (checkpoint path, sidecar path)
        """
        checkpoint = write_checkpoint(os.path.join(directory, f'{name}.mnls'), result.phi, p, 0.0)
        sidecar = write_json(os.path.join(directory, f'{name}.json'), result.sidecar())
        return checkpoint, sidecar
