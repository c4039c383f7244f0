"""Global-existence versus blow-up criteria evaluated on initial data."""
import logging

import numpy as np

from magnls.models.classification import ClassificationReport, Inequality, Verdict
from magnls.models.grid import MASS_CRITICAL_ALPHA, Field
from magnls.services.field_service import FieldService
from magnls.services.functional_service import DEFAULT_BOUNDARY_TOL, FunctionalService
from magnls.utils.errors import MagnlsError

logger = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-9
QUADRATURE_RTOL = 1e-9


class ClassificationServiceError(MagnlsError):
    """Custom exception for classification errors."""
    pass


def _is_critical(alpha):
    return abs(alpha - MASS_CRITICAL_ALPHA) < 1e-12


class ClassificationService:
    """Service class turning initial data into evidence-carrying verdicts."""

    @staticmethod
    def _start(u0, p, boundary_tol, rtol):
        """Norms, the strict boundary gate and a report skeleton with the shared quantities."""
        n = FunctionalService.norms(u0, p)
        FunctionalService._check_boundary(n, boundary_tol, strict=True)
        report = ClassificationReport(verdict=Verdict.INDETERMINATE, alpha=p.alpha, b=p.b,
                                      tolerances={'equality_rtol': rtol,
                                                  'boundary_tol': boundary_tol})
        E = FunctionalService.energy_E(u0, p, norms=n)
        E0 = FunctionalService.energy_E0(u0, p, norms=n)
        report.quantities.update({
            'M': n.mass,
            'E': E,
            'E0': E0,
            'E_free': FunctionalService.energy_free(u0, p, norms=n),
            'R': n.angular_R,
            'grad_sq': n.grad_sq,
            'mag_kinetic_sq': n.mag_kinetic_sq,
            'rho_sq': n.rho_sq,
            'lp': n.lp,
            'F': n.virial_F,
            'Fprime': n.virial_Fprime,
            'Fsecond': FunctionalService.virial_Fsecond(u0, p, norms=n),
            'H': FunctionalService.pohozaev_H(u0, p, norms=n),
            'virial_im': n.virial_V,
            'boundary_fraction': n.boundary_fraction,
        })
        parseval = FunctionalService.grad_norm_sq_spectral(u0)
        scale = max(n.grad_sq, 1e-300)
        report.quantities['grad_sq_parseval'] = parseval
        report.evidence['quadrature_crosscheck'] = Inequality(
            abs(parseval - n.grad_sq) / scale, QUADRATURE_RTOL, '<=')
        return n, report

    @staticmethod
    def _energy_scale(n, p):
        return max(0.5 * n.grad_sq + p.b ** 2 / 8.0 * n.rho_sq, n.lp / (p.alpha + 2.0), 1e-300)

    @staticmethod
    def classify_kieffer_loss(u0, p, boundary_tol=DEFAULT_BOUNDARY_TOL, rtol=DEFAULT_RTOL):
        """
        Evaluate the three reduced-energy blow-up conditions and the E < 0 condition.

        Conditions, in order: E0 < 0; E0 = 0 with Im int x.grad u0 conj(u0) < 0;
        E0 > 0 with that integral below -sqrt(2 E0) ||x u0||. E(u0) < 0 is
        reported next to them as NegativeEnergyBlowup.

        Args:
            u0: Initial datum with negligible boundary mass
            p: Equation parameters
            boundary_tol: Allowed boundary mass fraction
            rtol: Relative tolerance for the E0 = 0 test

        Returns:
            ClassificationReport

        Raises:
            FunctionalServiceError: If the boundary mass makes weighted integrals unreliable
        """
        n, report = ClassificationService._start(u0, p, boundary_tol, rtol)
        E0 = report.quantities['E0']
        E = report.quantities['E']
        V = n.virial_V
        zero_band = rtol * ClassificationService._energy_scale(n, p)

        report.evidence['kl1_E0_negative'] = Inequality(E0, -zero_band, '<')
        report.evidence['kl2_E0_zero'] = Inequality(abs(E0), zero_band, '<=')
        report.evidence['kl2_virial_negative'] = Inequality(V, 0.0, '<')
        report.evidence['kl3_E0_positive'] = Inequality(E0, zero_band, '>')
        bound = -np.sqrt(2.0 * max(E0, 0.0)) * np.sqrt(n.virial_F)
        report.evidence['kl3_virial'] = Inequality(V, float(bound), '<')
        report.evidence['energy_E_negative'] = Inequality(E, 0.0, '<')

        if p.alpha < MASS_CRITICAL_ALPHA and not _is_critical(p.alpha):
            report.verdict = Verdict.GLOBAL_MASS_SUBCRITICAL
            report.notes.append('mass-subcritical power: every solution is global')
            return report

        ev = report.evidence
        if ev['kl1_E0_negative'].holds:
            report.verdict = Verdict.BLOWUP_KIEFFER_LOSS_1
        elif ev['kl2_E0_zero'].holds and ev['kl2_virial_negative'].holds:
            report.verdict = Verdict.BLOWUP_KIEFFER_LOSS_2
        elif ev['kl3_E0_positive'].holds and ev['kl3_virial'].holds:
            report.verdict = Verdict.BLOWUP_KIEFFER_LOSS_3
        elif ev['energy_E_negative'].holds:
            report.verdict = Verdict.NEGATIVE_ENERGY_BLOWUP
        if ev['energy_E_negative'].holds and report.verdict is not Verdict.NEGATIVE_ENERGY_BLOWUP:
            report.notes.append('E(u0) < 0 as well: negative-energy blow-up criterion also holds')
        logger.debug(f"Reduced-energy criteria verdict: {report.verdict.value}")
        return report

    @staticmethod
    def classify_mass_critical(u0, p, qc, boundary_tol=DEFAULT_BOUNDARY_TOL, rtol=DEFAULT_RTOL):
        """
        Classify data at alpha = 4/3 against the soliton mass.

        Args:
            u0: Initial datum
            p: Parameters with alpha = 4/3
            qc: Soliton constants at alpha = 4/3

        Returns:
            ClassificationReport: GlobalMassCritical below M(Q), Indeterminate at
            M(Q) within rtol, otherwise the reduced-energy criteria

        Raises:
            ClassificationServiceError: If alpha is not 4/3
        """
        if not _is_critical(p.alpha) or not _is_critical(qc.alpha):
            raise ClassificationServiceError(
                f"Mass-critical classification needs alpha = 4/3, got {p.alpha}", kind='invalid')
        report = ClassificationService.classify_kieffer_loss(u0, p, boundary_tol, rtol)
        M = report.quantities['M']
        ratio = M / qc.mass_Q
        report.quantities['mass_ratio'] = ratio
        report.quantities['M_Q'] = qc.mass_Q
        report.evidence['mass_below_Q'] = Inequality(M, qc.mass_Q, '<')

        if ratio < 1.0 - rtol:
            E = report.quantities['E']
            cap = FunctionalService.threshold_cap(E, M, qc.mass_Q)
            report.quantities['kinetic_cap'] = cap
            report.evidence['kinetic_cap'] = Inequality(report.quantities['mag_kinetic_sq'],
                                                        cap, '<=')
            report.verdict = Verdict.GLOBAL_MASS_CRITICAL
        elif abs(ratio - 1.0) <= rtol:
            report.verdict = Verdict.INDETERMINATE
            report.notes.append('mass equals M(Q): minimal-mass blow-up is open')
        elif report.verdict is Verdict.INDETERMINATE:
            report.notes.append('mass above M(Q) but no blow-up criterion holds')
        logger.info(f"Mass-critical classification: ratio={ratio:.6f} -> {report.verdict.value}")
        return report

    @staticmethod
    def lambda0(E0, M, qc, with_residual=False):
        """
        lambda0 = 16 E0 (1 - e0_mq / (E0 M^sigma_c)), checked against the implicit equation.

        The implicit form is 3 alpha C M^p / (2(alpha+2)) =
        ((alpha+2)(16 E0 - lambda0) / (4(3 alpha - 4) C M^p))^{(4 - 3 alpha)/(3 alpha)}
        with p = (4 - alpha)/4 and C the Gagliardo-Nirenberg constant.

        Args:
            E0: Reduced energy, positive
            M: Mass
            qc: Supercritical soliton constants
            with_residual: Also return the relative residual between the two forms

        Returns:
            lambda0, or (lambda0, residual)

        Raises:
            ClassificationServiceError: If E0 <= 0 or the constants are not supercritical
        """
        if not E0 > 0:
            raise ClassificationServiceError(f"lambda0 needs E0 > 0, got {E0}", kind='invalid')
        if not np.isfinite(qc.sigma_c) or qc.alpha <= MASS_CRITICAL_ALPHA:
            raise ClassificationServiceError("lambda0 needs supercritical constants", kind='invalid')
        alpha = qc.alpha
        value = 16.0 * E0 * (1.0 - qc.e0_mq / (E0 * M ** qc.sigma_c))
        mass_power = M ** ((4.0 - alpha) / 4.0)
        left = 3.0 * alpha * qc.c_opt * mass_power / (2.0 * (alpha + 2.0))
        bracket = left ** (3.0 * alpha / (4.0 - 3.0 * alpha))
        implicit = 16.0 * E0 - 4.0 * (3.0 * alpha - 4.0) * qc.c_opt * mass_power * bracket / (alpha + 2.0)
        residual = abs(value - implicit) / (16.0 * E0)
        if with_residual:
            return value, residual
        return value

    @staticmethod
    def classify_above(u0, p, qc, boundary_tol=DEFAULT_BOUNDARY_TOL, rtol=DEFAULT_RTOL):
        """
        Check the four above-threshold blow-up conditions and their lambda0 reformulation.

        The second condition is evaluated as
        ratio * (1 - F'^2 / (32 E0 F)) <= 1, equivalent to F'^2 >= 2 F lambda0;
        the form with 8 in the denominator is reported as ``cond_above_2_literal``.

        Returns:
            ClassificationReport with verdict BlowupAboveThreshold or Indeterminate

        Raises:
            ClassificationServiceError: If E0 <= 0 or F(u0) = 0
        """
        ClassificationService._require_supercritical(p, qc)
        n, report = ClassificationService._start(u0, p, boundary_tol, rtol)
        q = report.quantities
        E0, M, F = q['E0'], q['M'], n.virial_F
        if not E0 > 0:
            raise ClassificationServiceError(
                f"Above-threshold conditions degenerate for E0 = {E0:.3e}", kind='refused')
        if not F > 0:
            raise ClassificationServiceError("Above-threshold conditions need F(u0) > 0",
                                             kind='refused')
        sigma = qc.sigma_c
        Fprime = n.virial_Fprime
        ratio = E0 * M ** sigma / qc.e0_mq
        lam0, residual = ClassificationService.lambda0(E0, M, qc, with_residual=True)
        z_prime = Fprime / (2.0 * np.sqrt(F))
        q.update({'threshold_ratio': ratio, 'lambda0': lam0, 'lambda0_residual': residual,
                  'z_prime': z_prime, 'lp_M_sigma': n.lp * M ** sigma})

        ev = report.evidence
        ev['cond_above_1'] = Inequality(E0 * M ** sigma, qc.e0_mq, '>=')
        ev['cond_above_2'] = Inequality(ratio * (1.0 - Fprime ** 2 / (32.0 * E0 * F)), 1.0, '<=')
        ev['cond_above_2_literal'] = Inequality(ratio * (1.0 - Fprime ** 2 / (8.0 * E0 * F)),
                                                1.0, '<=')
        ev['cond_above_3'] = Inequality(n.lp * M ** sigma, qc.lp_mass_product, '>')
        ev['cond_above_4'] = Inequality(n.virial_V, 0.0, '<=')
        ev['lambda0_nonnegative'] = Inequality(lam0, 0.0, '>=')
        ev['z_prime_squared'] = Inequality(z_prime ** 2, 0.5 * lam0, '>=')
        ev['z_prime_nonpositive'] = Inequality(z_prime, 0.0, '<=')
        ev['fsecond_below_lambda0'] = Inequality(
            q['Fsecond'] + 4.0 * p.b ** 2 * n.rho_sq, lam0, '<')
        ev['lambda0_crosscheck'] = Inequality(residual, rtol, '<=')

        direct = all(ev[k].holds for k in
                     ('cond_above_1', 'cond_above_2', 'cond_above_3', 'cond_above_4'))
        reformulated = all(ev[k].holds for k in
                           ('lambda0_nonnegative', 'z_prime_squared', 'z_prime_nonpositive',
                            'fsecond_below_lambda0'))
        q['formulations_agree'] = float(direct == reformulated)
        if direct != reformulated:
            report.notes.append('direct and lambda0 formulations disagree within roundoff')
            logger.warning("Above-threshold formulations disagree; margins are at roundoff level")
        report.verdict = Verdict.BLOWUP_ABOVE_THRESHOLD if direct else Verdict.INDETERMINATE
        return report

    @staticmethod
    def _require_supercritical(p, qc):
        if not p.is_supercritical:
            raise ClassificationServiceError(
                f"Supercritical classification needs 4/3 < alpha < 4, got {p.alpha}", kind='invalid')
        if not np.isfinite(qc.sigma_c) or abs(qc.alpha - p.alpha) > 1e-12:
            raise ClassificationServiceError(
                f"Soliton constants for alpha={qc.alpha} do not match alpha={p.alpha}",
                kind='invalid')

    @staticmethod
    def classify_supercritical(u0, p, qc, boundary_tol=DEFAULT_BOUNDARY_TOL, rtol=DEFAULT_RTOL):
        """
        Classify mass-supercritical data against the mass-energy threshold.

        Negative-energy criteria come first, then the reduced-energy threshold
        (below / at), then the magnetic-energy global criteria, then the
        above-threshold conditions and finally the remaining reduced-energy criteria.

        Args:
            u0: Initial datum
            p: Parameters with 4/3 < alpha < 4
            qc: Matching soliton constants

        Returns:
            ClassificationReport

        Raises:
            ClassificationServiceError: If alpha or the constants are out of range
        """
        ClassificationService._require_supercritical(p, qc)
        report = ClassificationService.classify_kieffer_loss(u0, p, boundary_tol, rtol)
        q = report.quantities
        ev = report.evidence
        sigma = qc.sigma_c
        M, E0, E = q['M'], q['E0'], q['E']
        gmp = qc.grad_mass_product
        grad_product = np.sqrt(q['grad_sq']) * M ** (0.5 * sigma)
        magnetic_product = np.sqrt(q['mag_kinetic_sq']) * M ** (0.5 * sigma)
        ratio = E0 * M ** sigma / qc.e0_mq
        magnetic_ratio = E * M ** sigma / qc.e0_mq
        q.update({'E0_M_sigma': E0 * M ** sigma, 'E_M_sigma': E * M ** sigma,
                  'grad_product': float(grad_product),
                  'magnetic_grad_product': float(magnetic_product),
                  'threshold_ratio': ratio, 'magnetic_threshold_ratio': magnetic_ratio,
                  'e0_mq': qc.e0_mq, 'grad_mass_product': gmp})
        ev['E0_nonnegative'] = Inequality(E0, 0.0, '>=')
        ev['energy_below_threshold'] = Inequality(E0 * M ** sigma, qc.e0_mq, '<')
        ev['gradient_below_threshold'] = Inequality(float(grad_product), gmp, '<')

        if report.verdict in (Verdict.BLOWUP_KIEFFER_LOSS_1, Verdict.NEGATIVE_ENERGY_BLOWUP):
            return report

        grad_gap = (grad_product - gmp) / gmp
        if ratio < 1.0 - rtol:
            if grad_gap < -rtol:
                report.verdict = Verdict.GLOBAL_BELOW_THRESHOLD
            elif grad_gap > rtol:
                report.verdict = Verdict.BLOWUP_BELOW_THRESHOLD
            else:
                report.verdict = Verdict.INDETERMINATE
                report.notes.append('gradient product equals the threshold below the energy '
                                    'threshold; no datum achieves this')
            return report

        if abs(ratio - 1.0) <= rtol:
            ev['at_threshold'] = Inequality(abs(ratio - 1.0), rtol, '<=')
            if grad_gap < -rtol:
                report.verdict = Verdict.GLOBAL_AT_THRESHOLD
            elif grad_gap > rtol:
                report.verdict = Verdict.CONDITIONAL_AT_THRESHOLD
                report.notes.append('at threshold with super-threshold gradient: blow-up or '
                                    'convergence to the soliton orbit along a time sequence')
            else:
                report.verdict = Verdict.INDETERMINATE
                report.notes.append('both threshold quantities at equality; no datum achieves this')
            return report

        # Magnetic-energy global criteria can decide data above the reduced-energy threshold.
        ev['E_nonnegative'] = Inequality(E, 0.0, '>=')
        ev['magnetic_energy_below_threshold'] = Inequality(E * M ** sigma, qc.e0_mq, '<')
        ev['magnetic_gradient_below_threshold'] = Inequality(float(magnetic_product), gmp, '<')
        if E >= 0 and magnetic_product < gmp * (1.0 - rtol):
            if magnetic_ratio < 1.0 - rtol:
                report.verdict = Verdict.GLOBAL_BELOW_THRESHOLD
                report.notes.append('global by the magnetic-energy criterion')
                return report
            if abs(magnetic_ratio - 1.0) <= rtol:
                report.verdict = Verdict.GLOBAL_AT_THRESHOLD
                report.notes.append('global by the magnetic-energy criterion at equality')
                return report

        above = ClassificationService.classify_above(u0, p, qc, boundary_tol, rtol)
        fallback = report.verdict
        report.merge(above)
        if above.verdict is Verdict.BLOWUP_ABOVE_THRESHOLD:
            report.verdict = Verdict.BLOWUP_ABOVE_THRESHOLD
        else:
            report.verdict = fallback
        logger.info(f"Supercritical classification: ratio={ratio:.6f}, "
                    f"grad product={grad_product:.6f}/{gmp:.6f} -> {report.verdict.value}")
        return report

    @staticmethod
    def classify(u0, p, qc=None, boundary_tol=DEFAULT_BOUNDARY_TOL, rtol=DEFAULT_RTOL):
        """Dispatch on alpha to the matching classifier."""
        if _is_critical(p.alpha):
            if qc is None:
                raise ClassificationServiceError("Soliton constants required at alpha = 4/3",
                                                 kind='invalid')
            return ClassificationService.classify_mass_critical(u0, p, qc, boundary_tol, rtol)
        if p.alpha < MASS_CRITICAL_ALPHA:
            return ClassificationService.classify_kieffer_loss(u0, p, boundary_tol, rtol)
        if qc is None:
            raise ClassificationServiceError("Soliton constants required for alpha > 4/3",
                                             kind='invalid')
        return ClassificationService.classify_supercritical(u0, p, qc, boundary_tol, rtol)

    @staticmethod
    def critical_blowup_scale(a, qc, p, factor=1.5):
        """
        Scale lambda making E0(a lambda^{3/2} Q(lambda x)) negative at alpha = 4/3.

        E0 = a^2 lambda^2 ((b^2/8) lambda^{-4} ||rho Q||^2 - (3/10)(a^{4/3} - 1) ||Q||^{10/3}),
        negative beyond lambda_c; the returned value is factor * lambda_c.

        Raises:
            ClassificationServiceError: If a <= 1 (E0 stays positive) or alpha is not 4/3
        """
        if not _is_critical(p.alpha):
            raise ClassificationServiceError("critical_blowup_scale needs alpha = 4/3",
                                             kind='invalid')
        if not a > 1:
            raise ClassificationServiceError(f"Amplitude must exceed 1, got {a}", kind='refused')
        weight = 0.3 * (a ** (4.0 / 3.0) - 1.0) * qc.lp_Q
        lam_c = (p.b ** 2 / 8.0 * qc.rho_Q_sq / weight) ** 0.25
        return factor * lam_c

    @staticmethod
    def scaled_soliton_E0(a, lam, qc, p):
        """Closed form of E0(a lambda^{3/2} Q(lambda x))."""
        return (0.5 * a ** 2 * lam ** 2 * qc.grad_Q_sq +
                p.b ** 2 / 8.0 * a ** 2 * lam ** -2 * qc.rho_Q_sq -
                a ** (p.alpha + 2.0) * lam ** (1.5 * p.alpha) * qc.lp_Q / (p.alpha + 2.0))

    @staticmethod
    def find_above_threshold_datum(grid, p, profile, qc, amplitudes=(0.8, 0.9, 1.0),
                                   scales=(1.0, 1.25, 1.5, 1.75), chirp_margin=1.5):
        """
        Search chirped scaled solitons e^{-i mu |x|^2} a lambda^{3/2} Q(lambda x) above threshold.

        For a real profile g, the chirp leaves M, ||g||_{alpha+2}, F and ||rho g|| unchanged,
        adds 2 mu^2 F to E0 and gives F' = -8 mu F. The second condition then reduces to
        E0(g) M^sigma_c <= e0_mq, independent of mu, and the first fixes a minimal mu.

        Returns:
            Tuple (Field, {'a', 'lam', 'mu'}, ClassificationReport) with verdict
            BlowupAboveThreshold

        Raises:
            ClassificationServiceError: If no candidate passes all four conditions
        """
        ClassificationService._require_supercritical(p, qc)
        sigma = qc.sigma_c
        best = None
        for a in amplitudes:
            for lam in scales:
                g = FieldService.sample_radial(profile, grid, a, lam)
                n = FunctionalService.norms(g, p)
                M = n.mass
                E0_g = FunctionalService.energy_E0(g, p, norms=n)
                room = qc.e0_mq / M ** sigma - E0_g
                lp_margin = n.lp * M ** sigma / qc.lp_mass_product - 1.0
                if room <= 0 or lp_margin <= 0 or n.boundary_fraction > DEFAULT_BOUNDARY_TOL:
                    continue
                score = min(room * M ** sigma / qc.e0_mq, lp_margin)
                mu = chirp_margin * np.sqrt(room / (2.0 * n.virial_F))
                if best is None or score > best[0]:
                    best = (score, a, lam, mu, g)
        if best is None:
            raise ClassificationServiceError("No above-threshold candidate in the sweep",
                                             kind='refused')
        _, a, lam, mu, g = best
        u0 = Field(grid, np.exp(-1j * mu * grid.r_sq) * g.values)
        report = ClassificationService.classify_above(u0, p, qc)
        if report.verdict is not Verdict.BLOWUP_ABOVE_THRESHOLD:
            raise ClassificationServiceError(
                f"Chirped candidate a={a}, lam={lam}, mu={mu:.4f} failed verification",
                kind='refused')
        logger.info(f"Above-threshold datum: a={a}, lam={lam}, mu={mu:.4f}")
        return u0, {'a': a, 'lam': lam, 'mu': float(mu)}, report
