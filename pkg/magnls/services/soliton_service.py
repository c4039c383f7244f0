"""Radial soliton Q: shooting solve, independent relaxation check and sharp constants."""
import logging

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad, simpson, solve_ivp
from scipy.linalg import solve_banded

from magnls.models.grid import MASS_CRITICAL_ALPHA
from magnls.models.soliton import QConstants, RadialProfile
from magnls.utils.cache import profile_cache
from magnls.utils.errors import MagnlsError

logger = logging.getLogger(__name__)

R_MAX = 30.0
NODE_SPACING = 0.005
R_START = 1e-6
POHOZAEV_REJECT = 1e-6
# The ODE residual is balanced over cells of this many nodes.
RESIDUAL_CELL_NODES = 50
RESIDUAL_GAUSS_POINTS = 8


class SolitonServiceError(MagnlsError):
    """Custom exception for soliton solver errors."""
    pass


def _rhs(r, y, alpha):
    q, dq = y
    return [dq, -2.0 * dq / r + q - np.abs(q) ** alpha * q]


def _crosses_zero(r, y, alpha):
    return y[0]


_crosses_zero.terminal = True
_crosses_zero.direction = -1


def _turns_up(r, y, alpha):
    return y[1]


_turns_up.terminal = True
_turns_up.direction = 1


def _is_critical(alpha):
    return abs(alpha - MASS_CRITICAL_ALPHA) < 1e-12


class SolitonService:
    """Service class for the free soliton and the constants derived from it."""

    @staticmethod
    def _shoot(q0, alpha, rtol):
        """Integrate from the Taylor start; returns (solution, 'over' | 'under' | None)."""
        curvature = (q0 - q0 ** (alpha + 1.0)) / 3.0
        y0 = [q0 + 0.5 * curvature * R_START ** 2, curvature * R_START]
        sol = solve_ivp(_rhs, (R_START, R_MAX), y0, method='DOP853', args=(alpha,),
                        rtol=rtol, atol=1e-16, events=(_crosses_zero, _turns_up),
                        dense_output=True)
        if not sol.success:
            raise SolitonServiceError(f"Radial integration failed: {sol.message}")
        if sol.t_events[0].size:
            return sol, 'over'
        if sol.t_events[1].size:
            return sol, 'under'
        return sol, None

    @staticmethod
    def _bracket(alpha, rtol):
        lo = 1.0 + 1e-3
        _, kind = SolitonService._shoot(lo, alpha, rtol)
        if kind != 'under':
            raise SolitonServiceError(f"Lower shooting value {lo} does not undershoot")
        hi = 2.0
        for _ in range(60):
            _, kind = SolitonService._shoot(hi, alpha, rtol)
            if kind == 'over':
                return lo, hi
            lo, hi = hi, 2.0 * hi
        raise SolitonServiceError(f"Shooting bracket failed to enclose Q(0) for alpha={alpha}")

    @staticmethod
    def solve_q(alpha, tol=1e-10):
        """
        Solve for the positive radial soliton by shooting on Q(0).

        Args:
            alpha: Nonlinearity power in (0, 4)
            tol: Bound on the ODE residual, taken as the sup over node cells of its
                r^2-weighted mean

        Returns:
            RadialProfile on uniform nodes over [0, 30]

        Raises:
            SolitonServiceError: If bracketing fails, the candidate is not monotone,
                or the residual exceeds tol
        """
        if not 0 < alpha < 4:
            raise SolitonServiceError(f"alpha must lie in (0, 4), got {alpha}", kind='invalid')
        if not tol > 0:
            raise SolitonServiceError(f"tol must be positive, got {tol}", kind='invalid')

        rtol = min(1e-12, tol / 100.0)
        rtol = max(rtol, 1e-13)
        lo, hi = SolitonService._bracket(alpha, rtol)
        iterations = 0
        while hi - lo > 4.0 * np.finfo(float).eps * hi and iterations < 200:
            mid = 0.5 * (lo + hi)
            _, kind = SolitonService._shoot(mid, alpha, rtol)
            if kind == 'over':
                hi = mid
            else:
                lo = mid
            iterations += 1
        logger.debug(f"Shooting converged after {iterations} bisections: Q(0) in [{lo!r}, {hi!r}]")

        sol_lo, _ = SolitonService._shoot(lo, alpha, rtol)
        sol_hi, _ = SolitonService._shoot(hi, alpha, rtol)
        r_end = min(sol_lo.t[-1], sol_hi.t[-1])
        r_nodes = np.arange(0.0, R_MAX + 0.5 * NODE_SPACING, NODE_SPACING)

        # Trust the shot until the two bracketing trajectories separate.
        radii = r_nodes[(r_nodes >= R_START) & (r_nodes < r_end)]
        q_lo = sol_lo.sol(radii)[0]
        q_hi = sol_hi.sol(radii)[0]
        q_mid = 0.5 * (q_lo + q_hi)
        split = np.nonzero(np.abs(q_hi - q_lo) > 1e-6 * np.abs(q_mid))[0]
        stop = split[0] if split.size else radii.size
        if stop < 2:
            raise SolitonServiceError("Shooting trajectories separate immediately")
        r_match = radii[stop - 1]
        q_match = q_mid[stop - 1]
        if q_match > 1e-4 * lo:
            raise SolitonServiceError(
                f"Shooting lost precision at r={r_match:.2f} before the profile decayed")

        decade = (radii <= r_match) & (q_mid <= 10.0 * q_match)
        slope, _ = np.polyfit(radii[decade], np.log(radii[decade] * q_mid[decade]), 1)
        tail_rate = -slope
        tail_amplitude = q_match * r_match * np.exp(r_match)

        q_values = np.empty_like(r_nodes)
        dq_values = np.empty_like(r_nodes)
        q0 = 0.5 * (lo + hi)
        curvature = (q0 - q0 ** (alpha + 1.0)) / 3.0
        taylor = r_nodes < R_START
        q_values[taylor] = q0 + 0.5 * curvature * r_nodes[taylor] ** 2
        dq_values[taylor] = curvature * r_nodes[taylor]
        shot = (r_nodes >= R_START) & (r_nodes <= r_match)
        y = 0.5 * (sol_lo.sol(r_nodes[shot]) + sol_hi.sol(r_nodes[shot]))
        q_values[shot] = y[0]
        dq_values[shot] = y[1]
        tail = r_nodes > r_match
        rt = r_nodes[tail]
        q_values[tail] = tail_amplitude * np.exp(-rt) / rt
        dq_values[tail] = -tail_amplitude * np.exp(-rt) * (rt + 1.0) / rt ** 2

        if np.any(q_values <= 0) or np.any(np.diff(q_values) >= 0):
            raise SolitonServiceError("Candidate profile is not positive and decreasing")

        residual = SolitonService._residual(sol_lo, sol_hi, r_nodes[shot], alpha,
                                            tail_amplitude, rt)
        if residual > tol:
            raise SolitonServiceError(f"Soliton residual {residual:.3e} exceeds tol {tol:.1e}")

        profile = RadialProfile(alpha=float(alpha), r_nodes=r_nodes, q_values=q_values,
                                dq_values=dq_values, tail_rate=float(tail_rate),
                                tail_amplitude=float(tail_amplitude),
                                residual=float(residual), tol=float(tol))
        logger.info(f"Solved Q for alpha={alpha}: Q(0)={q0:.12f}, residual={residual:.2e}, "
                    f"tail rate={tail_rate:.5f}")
        return profile

    @staticmethod
    def _residual(sol_lo, sol_hi, r_shot, alpha, tail_amplitude, r_tail):
        """
        Sup over cells of the r^2-weighted mean of |Q'' + 2Q'/r - Q + Q^(alpha+1)|.

        On a cell [r0, r1] that mean is the flux balance
        (r1^2 Q'(r1) - r0^2 Q'(r0) - int r^2 (Q - Q^(alpha+1)) dr) / int r^2 dr,
        so no derivative of the interpolated trajectory is taken.
        """
        def state(x):
            return 0.5 * (sol_lo.sol(x) + sol_hi.sol(x))

        edges = np.unique(np.append(r_shot[::RESIDUAL_CELL_NODES], r_shot[-1]))
        r0, r1 = edges[:-1], edges[1:]
        nodes, weights = leggauss(RESIDUAL_GAUSS_POINTS)
        half = 0.5 * (r1 - r0)
        s = 0.5 * (r0 + r1)[:, None] + half[:, None] * nodes[None, :]
        q = state(s.ravel())[0].reshape(s.shape)
        source = half * np.sum(weights * s ** 2 * (q - q ** (alpha + 1.0)), axis=1)
        flux = r1 ** 2 * state(r1)[1] - r0 ** 2 * state(r0)[1]
        volume = (r1 ** 3 - r0 ** 3) / 3.0
        shot_residual = np.max(np.abs(flux - source) / volume)
        # e^{-r}/r solves the linear part exactly; only the nonlinear term remains.
        tail_residual = 0.0
        if r_tail.size:
            tail_residual = np.max((tail_amplitude * np.exp(-r_tail) / r_tail) ** (alpha + 1.0))
        return float(max(shot_residual, tail_residual))

    @staticmethod
    def _radial_integral(profile, integrand, tail_integrand):
        r = profile.r_nodes
        body = simpson(integrand, x=r)
        tail, _ = quad(tail_integrand, profile.r_max, np.inf, limit=200)
        return 4.0 * np.pi * (body + tail)

    @staticmethod
    def q_constants(profile):
        """
        Compute the norms of Q and every threshold constant built from them.

        Args:
            profile: Converged radial profile

        Returns:
            QConstants with Pohozaev residuals recorded

        Raises:
            SolitonServiceError: If a Pohozaev residual exceeds 1e-6
        """
        alpha = profile.alpha
        r, q, dq = profile.r_nodes, profile.q_values, profile.dq_values
        A = profile.tail_amplitude

        def tail_q(x):
            return A * np.exp(-x) / x

        def tail_dq(x):
            return -A * np.exp(-x) * (x + 1.0) / x ** 2

        mass = SolitonService._radial_integral(profile, r ** 2 * q ** 2,
                                               lambda x: x ** 2 * tail_q(x) ** 2)
        grad = SolitonService._radial_integral(profile, r ** 2 * dq ** 2,
                                               lambda x: x ** 2 * tail_dq(x) ** 2)
        lp = SolitonService._radial_integral(profile, r ** 2 * q ** (alpha + 2.0),
                                             lambda x: x ** 2 * tail_q(x) ** (alpha + 2.0))
        x_sq = SolitonService._radial_integral(profile, r ** 4 * q ** 2,
                                               lambda x: x ** 4 * tail_q(x) ** 2)

        residuals = {
            'mass_vs_grad': abs(mass - (4.0 - alpha) / (3.0 * alpha) * grad) / mass,
            'mass_vs_lp': abs(mass - (4.0 - alpha) / (2.0 * (alpha + 2.0)) * lp) / mass,
        }

        if _is_critical(alpha):
            sigma_c = float('inf')
            gmp = float(np.sqrt(grad))
            e0_mq = 0.0
            lp_mass = lp
            c_opt = lp / (grad ** (0.75 * alpha) * mass ** ((4.0 - alpha) / 4.0))
        else:
            sigma_c = (4.0 - alpha) / (3.0 * alpha - 4.0)
            gmp = float(np.sqrt(grad) * mass ** (0.5 * sigma_c))
            if alpha > MASS_CRITICAL_ALPHA:
                e0_mq = (3.0 * alpha - 4.0) / (6.0 * alpha) * gmp ** 2
                c_opt = 2.0 * (alpha + 2.0) / (3.0 * alpha) * gmp ** (-(3.0 * alpha - 4.0) / 2.0)
                lp_mass = 4.0 * (alpha + 2.0) * e0_mq / (3.0 * alpha - 4.0)
                e0_direct = (0.5 * grad - lp / (alpha + 2.0)) * mass ** sigma_c
                residuals['e0_routes'] = abs(e0_direct - e0_mq) / abs(e0_mq)
            else:
                e0_mq = (0.5 * grad - lp / (alpha + 2.0)) * mass ** sigma_c
                c_opt = lp / (grad ** (0.75 * alpha) * mass ** ((4.0 - alpha) / 4.0))
                lp_mass = lp * mass ** sigma_c

        worst = max(residuals['mass_vs_grad'], residuals['mass_vs_lp'])
        if worst > POHOZAEV_REJECT:
            raise SolitonServiceError(
                f"Pohozaev residual {worst:.3e} exceeds {POHOZAEV_REJECT:.0e}; profile unconverged")

        return QConstants(
            alpha=float(alpha),
            mass_Q=float(mass),
            grad_Q_sq=float(grad),
            lp_Q=float(lp),
            sigma_c=float(sigma_c),
            c_opt=float(c_opt),
            e0_mq=float(e0_mq),
            grad_mass_product=float(gmp),
            lp_mass_product=float(lp_mass),
            rho_Q_sq=float(2.0 / 3.0 * x_sq),
            x_Q_sq=float(x_sq),
            q0=profile.q0,
            pohozaev_residuals={k: float(v) for k, v in residuals.items()},
        )

    @staticmethod
    def relax_q(alpha, r_max=R_MAX, n=3000, tol=1e-13, max_iter=5000):
        """
        Independent M(Q) by finite differences on u = rQ with Petviashvili iteration.

        Solves -u'' + u = r^{-alpha} |u|^alpha u with u(0) = u(r_max) = 0 at two
        resolutions and Richardson-extrapolates the mass.

        Returns:
            Tuple (extrapolated mass, Q(0) estimate on the fine grid)
        """
        masses = []
        q0 = None
        for points in (n, 2 * n):
            h = r_max / points
            r = h * np.arange(1, points)
            banded = np.zeros((3, r.size))
            banded[0, 1:] = -1.0 / h ** 2
            banded[1, :] = 2.0 / h ** 2 + 1.0
            banded[2, :-1] = -1.0 / h ** 2
            gamma = (alpha + 1.0) / alpha
            u = r * np.exp(-r)

            def apply_L(v):
                out = banded[1] * v
                out[:-1] += banded[0, 1:] * v[1:]
                out[1:] += banded[2, :-1] * v[:-1]
                return out

            for iteration in range(max_iter):
                nonlinear = np.abs(u) ** alpha * u / r ** alpha
                stabilizer = np.dot(apply_L(u), u) / np.dot(nonlinear, u)
                u_next = stabilizer ** gamma * solve_banded((1, 1), banded, nonlinear)
                change = np.linalg.norm(u_next - u) / np.linalg.norm(u_next)
                u = u_next
                if change < tol and abs(stabilizer - 1.0) < 1e-10:
                    break
            else:
                raise SolitonServiceError(f"Relaxation did not converge for alpha={alpha}")
            logger.debug(f"Relaxation on {points} points converged in {iteration + 1} iterations")
            masses.append(4.0 * np.pi * h * np.sum(u ** 2))
            q0 = u[0] / r[0]
        return (4.0 * masses[1] - masses[0]) / 3.0, q0

    @staticmethod
    def get_profile(alpha, tol=1e-10):
        """
        Cached solve: returns (profile, constants) for (alpha, tol).

        Args:
            alpha: Nonlinearity power
            tol: Solver tolerance

        Returns:
            Tuple (RadialProfile, QConstants)
        """
        cached = profile_cache.get(alpha, tol)
        if cached is not None and cached[0].residual <= tol:
            logger.debug(f"Profile cache hit for alpha={alpha}")
            return cached
        profile = SolitonService.solve_q(alpha, tol)
        constants = SolitonService.q_constants(profile)
        profile_cache.set(alpha, tol, profile, constants)
        return profile, constants

    @staticmethod
    def get_constants(alpha, tol=1e-10):
        return SolitonService.get_profile(alpha, tol)[1]
