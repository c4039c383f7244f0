"""Scenario runs: initial-data constructors, command dispatch and run artifacts."""
import json
import logging
import os
from dataclasses import replace

import numpy as np
from flask import current_app, has_app_context
from joblib import Parallel, delayed

from magnls.models.evolution import EvolveStatus
from magnls.models.grid import Field, Grid
from magnls.services.classification_service import ClassificationService
from magnls.services.dynamics_service import DynamicsService
from magnls.services.field_service import FieldService
from magnls.services.functional_service import DEFAULT_BOUNDARY_TOL, FunctionalService
from magnls.services.ground_state_service import GroundStateService
from magnls.services.soliton_service import SolitonService
from magnls.services.verification_service import DEFAULT_GRID as VERIFY_GRID
from magnls.services.verification_service import VerificationService
from magnls.utils import spectral
from magnls.utils.checkpoint import read_checkpoint, write_checkpoint
from magnls.utils.database import record_run
from magnls.utils.errors import ConfigError, MagnlsError
from magnls.utils.reports import config_hash, write_json, write_series_csv

logger = logging.getLogger(__name__)

EVOLVE_GRID = Grid((64, 64, 64), (12.0, 12.0, 12.0))
RESOLUTION_POINTS = 8
# Feature width is the diameter where the profile exceeds this share of its peak.
PEAK_SHARE = 0.01
BLOWUP_TIME_SLACK = 1.2
# M(u0)/M(Q) of the global and blow-up runs; the amplitude is the square root.
CRITICAL_MASS_RATIOS = (0.9, 1.2)
# Global runs of the dichotomy suite must last this long.
DICHOTOMY_T_FINAL = 5.0
SUPERCRITICAL_GLOBAL = ((0.5, 1.0), (0.6, 1.0), (0.7, 1.0), (0.8, 1.0))
SUPERCRITICAL_BLOWUP = ((1.0, 1.25), (1.0, 1.5), (1.0, 1.75), (1.0, 2.0))
DEFAULT_LAMBDAS = (0.9, 0.95, 1.0, 1.05, 1.1)
# Concentrated enough that d2S/dlambda2 < 0 at b = 1.
INSTABILITY_OMEGA = 2.0
RELAX_AGREEMENT = 1e-6


class ScenarioServiceError(MagnlsError):
    """Custom exception for scenario-level failures."""
    pass


def _smooth_cutoff(s):
    """C-infinity cutoff: 1 for s <= 1/2, 0 for s >= 1."""
    t = np.clip(2.0 * np.asarray(s, dtype=float) - 1.0, 0.0, 1.0)

    def psi(x):
        out = np.zeros_like(x)
        positive = x > 0
        out[positive] = np.exp(-1.0 / x[positive])
        return out

    inner, outer = psi(1.0 - t), psi(t)
    return inner / (inner + outer)


def _core_radius(profile):
    """Radius where Q falls to PEAK_SHARE of Q(0)."""
    below = profile.q_values < PEAK_SHARE * profile.q0
    if not below.any():
        return profile.r_max
    return float(profile.r_nodes[np.argmax(below)])


def _resolution_guard(width, grid, field_name):
    points = width / max(grid.spacings)
    if points < RESOLUTION_POINTS:
        raise ConfigError(field_name, f"feature width {width:.4g} spans {points:.1f} grid points; "
                                      f"at least {RESOLUTION_POINTS} are needed")


def _gaussian_width(sigma):
    return 2.0 * sigma * np.sqrt(2.0 * np.log(1.0 / PEAK_SHARE))


def _tolerances(config):
    boundary_tol, rtol = DEFAULT_BOUNDARY_TOL, 1e-9
    if has_app_context():
        boundary_tol = current_app.config.get('MAGNLS_BOUNDARY_TOL', boundary_tol)
        rtol = current_app.config.get('MAGNLS_EQUALITY_RTOL', rtol)
    return (float(config.options.get('boundary_tol', boundary_tol)),
            float(config.options.get('rtol', rtol)))


def _option(config, name, default=None, required=False):
    if name not in config.options:
        if required:
            raise ConfigError(f'options.{name}', f'is required for {config.command}')
        return default
    try:
        return float(config.options[name])
    except (TypeError, ValueError):
        raise ConfigError(f'options.{name}', 'must be a number')


class ScenarioService:
    """Service class running one configured scenario end to end."""

    @staticmethod
    def build_initial_data(spec, grid, p, profile=None):
        """
        Realize a data constructor on the grid.

        Args:
            spec: Validated data mapping with a 'kind' key
            grid: Target grid
            p: Equation parameters
            profile: Soliton profile, needed by the soliton-based kinds

        Returns:
            Field

        Raises:
            ConfigError: When the grid cannot resolve the datum or a checkpoint
                does not match the grid
        """
        kind = spec['kind']
        if kind in ('scaled-soliton', 'cutoff-soliton') and profile is None:
            raise ScenarioServiceError(f"{kind} needs the soliton profile", kind='invalid')

        if kind == 'scaled-soliton':
            lam = float(spec['lam'])
            _resolution_guard(2.0 * _core_radius(profile) / lam, grid, 'data.lam')
            center = tuple(float(c) for c in spec.get('center', (0.0, 0.0, 0.0)))
            return FieldService.sample_radial(profile, grid, float(spec['a']), lam, center)

        if kind == 'transverse-gaussian-bump':
            lam = float(spec['lam'])
            _resolution_guard(_gaussian_width(1.0 / lam), grid, 'data.lam')
            _resolution_guard(_gaussian_width(np.sqrt(2.0 / abs(p.b))), grid, 'params.b')
            return GroundStateService.transverse_family(grid, p, lam, float(spec.get('c', 1.0)))

        if kind == 'gaussian':
            widths = spec.get('widths', (1.0, 1.0, 1.0))
            if isinstance(widths, (int, float)):
                widths = (widths,) * 3
            widths = tuple(float(w) for w in widths)
            _resolution_guard(_gaussian_width(min(widths)), grid, 'data.widths')
            center = tuple(float(c) for c in spec.get('center', (0.0, 0.0, 0.0)))
            exponent = sum((x - c) ** 2 / (2.0 * w ** 2)
                           for x, c, w in zip(grid.coords, center, widths))
            values = np.exp(-exponent) * np.exp(-1j * float(spec.get('chirp', 0.0)) * grid.r_sq)
            f = Field(grid, values)
            if 'mass' in spec:
                return f.scaled(np.sqrt(float(spec['mass']) / FunctionalService.mass(f)))
            return f.scaled(float(spec.get('amplitude', 1.0)))

        if kind == 'cutoff-soliton':
            lam = float(spec['lam'])
            radius = float(spec['radius'])
            _resolution_guard(2.0 * _core_radius(profile) / lam, grid, 'data.lam')
            _resolution_guard(radius, grid, 'data.radius')
            if radius > min(grid.half_widths):
                logger.warning(f"Cutoff radius {radius} exceeds the box half-width")
            bump = FieldService.sample_radial(profile, grid, 1.0, lam)
            values = _smooth_cutoff(np.sqrt(grid.r_sq) / radius) * bump.values
            f = Field(grid, values)
            mass = FunctionalService.mass(f)
            if mass == 0:
                raise ConfigError('data.radius', 'cutoff removes the whole soliton')
            return f.scaled(np.sqrt(float(spec['c']) / mass))

        if kind == 'checkpoint':
            field_, stored, t = read_checkpoint(spec['path'])
            if field_.grid != grid:
                raise ConfigError('data.path', f"checkpoint grid {field_.grid.to_dict()} does not "
                                               f"match the run grid {grid.to_dict()}")
            if stored != p:
                logger.warning(f"Checkpoint parameters {stored.to_dict()} differ from the run's "
                               f"{p.to_dict()}")
            logger.info(f"Loaded checkpoint {spec['path']} taken at t={t}")
            return field_

        raise ConfigError('data.kind', f'unsupported kind {kind}')

    @staticmethod
    def run(config):
        """
        Execute a scenario, write its report and append a ledger row.

        Args:
            config: ScenarioConfig

        Returns:
            Tuple (exit code, {artifact name: path})
        """
        handlers = {
            'solve-q': ScenarioService._solve_q,
            'verify': ScenarioService._verify,
            'classify': ScenarioService._classify,
            'evolve': ScenarioService._evolve,
            'ground-state': ScenarioService._ground_state,
            'instability': ScenarioService._instability,
            'dichotomy-suite': ScenarioService._dichotomy_suite,
        }
        out = config.output_dir
        os.makedirs(out, exist_ok=True)
        digest = config_hash(config.to_dict())
        logger.info(f"Running {config.command} (config {digest[:12]}) into {out}")
        artifacts = {}
        verdict = None
        try:
            payload, verdict, exit_code, artifacts = handlers[config.command](config)
            status = 'ok' if exit_code == 0 else 'check_failed'
        except MagnlsError as e:
            logger.error(f"{config.command} failed ({e.kind}): {e}")
            payload, status, exit_code = e.to_dict(), e.kind, e.exit_code
        except (FloatingPointError, np.linalg.LinAlgError) as e:
            logger.error(f"{config.command} hit a numerical failure: {e}")
            payload, status, exit_code = {'error': str(e), 'code': 'NUMERICAL_FAILURE'}, 'numerical', 3

        report = {
            'command': config.command,
            'config': config.to_dict(),
            'config_hash': digest,
            'status': status,
            'exit_code': exit_code,
            'verdict': verdict,
            'result': payload,
        }
        artifacts['report'] = write_json(os.path.join(out, 'report.json'), report)
        record_run(config.command, digest, status, exit_code, verdict=verdict, output_dir=out,
                   summary={'verdict': verdict, 'artifacts': sorted(artifacts)})
        return exit_code, artifacts

    @staticmethod
    def _soliton(config):
        return SolitonService.get_profile(config.params.alpha, config.tol)

    @staticmethod
    def _needs_soliton(config):
        kind = (config.data or {}).get('kind')
        return config.params.alpha >= 4.0 / 3.0 - 1e-12 or kind in ('scaled-soliton',
                                                                     'cutoff-soliton')

    @staticmethod
    def _solve_q(config):
        profile, qc = ScenarioService._soliton(config)
        relaxed_mass, relaxed_q0 = SolitonService.relax_q(config.params.alpha)
        agreement = abs(relaxed_mass - qc.mass_Q) / qc.mass_Q
        agreed = agreement <= RELAX_AGREEMENT
        if not agreed:
            logger.warning(f"Shooting and relaxation masses differ by {agreement:.2e}")
        path = write_json(os.path.join(config.output_dir, 'constants.json'), qc.to_dict())
        payload = {
            'constants': qc.to_dict(),
            'q0': profile.q0,
            'ode_residual': profile.residual,
            'tail_rate': profile.tail_rate,
            'relaxation': {'mass_Q': relaxed_mass, 'q0': relaxed_q0,
                           'relative_agreement': agreement,
                           'agreed': agreed},
        }
        return payload, None, 0 if agreed else 3, {'constants': path}

    @staticmethod
    def _verify(config):
        fixed = bool(config.options.get('fixed_params', False))
        report = VerificationService.run(
            config.seed, samples=config.samples, grid=config.grid or VERIFY_GRID, tol=config.tol,
            b=config.params.b if fixed else None, alpha=config.params.alpha if fixed else None)
        path = write_json(os.path.join(config.output_dir, 'verify.json'), report)
        return report, None, 0 if report['passed'] else 3, {'verify': path}

    @staticmethod
    def _initial(config, grid):
        profile, qc = (ScenarioService._soliton(config) if ScenarioService._needs_soliton(config)
                       else (None, None))
        u0 = ScenarioService.build_initial_data(config.data, grid, config.params, profile)
        return u0, profile, qc

    @staticmethod
    def classify_config(config):
        """Build the configured datum and classify it; returns a ClassificationReport."""
        grid = config.grid or EVOLVE_GRID
        u0, _, qc = ScenarioService._initial(config, grid)
        boundary_tol, rtol = _tolerances(config)
        return ClassificationService.classify(u0, config.params, qc, boundary_tol, rtol)

    @staticmethod
    def _classify(config):
        report = ScenarioService.classify_config(config)
        return report.to_dict(), report.verdict.value, 0, {}

    @staticmethod
    def _write_outcome(outcome, p, directory, prefix=''):
        series = write_series_csv(os.path.join(directory, f'{prefix}series.csv'), outcome.series)
        artifacts = {f'{prefix}series': series}
        if not outcome.final_state.post_blowup:
            artifacts[f'{prefix}final'] = write_checkpoint(
                os.path.join(directory, f'{prefix}final.mnls'), outcome.final_state, p,
                outcome.t_end)
        return artifacts

    @staticmethod
    def _virial_root(outcome):
        first = outcome.series[0]
        return DynamicsService.virial_parabola_root(first.virial_F, first.virial_Fprime,
                                                    first.energy_E0)

    @staticmethod
    def _evolve(config):
        grid = config.grid or EVOLVE_GRID
        u0, _, _ = ScenarioService._initial(config, grid)
        checkpoints = (os.path.join(config.output_dir, 'checkpoints')
                       if config.evolve.checkpoint_stride else None)
        outcome = DynamicsService.evolve(u0, config.params, config.evolve, checkpoint_dir=checkpoints)
        artifacts = ScenarioService._write_outcome(outcome, config.params, config.output_dir)
        payload = outcome.summary()
        payload['virial_parabola_root'] = ScenarioService._virial_root(outcome)
        artifacts['summary'] = write_json(os.path.join(config.output_dir, 'summary.json'), payload)
        return payload, outcome.status.value, 0, artifacts

    @staticmethod
    def _solve_ground_state(config, grid):
        p = config.params
        problem = config.options.get('problem', 'action')
        max_iter = int(config.options.get('max_iter', 5000))
        tol = _option(config, 'gs_tol', 1e-6)
        if problem == 'action':
            return GroundStateService.minimize_action(_option(config, 'omega', 0.0), p, grid,
                                                      tol=tol, max_iter=max_iter)
        c = _option(config, 'c', required=True)
        if problem == 'I_c':
            qc = SolitonService.get_constants(p.alpha, config.tol) if p.is_mass_critical else None
            return GroundStateService.minimize_I_c(c, p, grid, tol=tol, qc=qc, max_iter=max_iter)
        m = _option(config, 'm', required=True)
        return GroundStateService.minimize_Im_c(c, m, p, grid, tol=tol,
                                                start=config.options.get('start', 'interior'),
                                                max_iter=max_iter)

    @staticmethod
    def _ground_state(config):
        grid = config.grid or EVOLVE_GRID
        p = config.params
        result = ScenarioService._solve_ground_state(config, grid)
        checkpoint, sidecar = GroundStateService.archive(result, p, config.output_dir)
        lambdas = config.options.get('lambdas', DEFAULT_LAMBDAS)
        curve = GroundStateService.scaling_curve(result.phi, p, result.omega, lambdas)
        payload = result.sidecar()
        payload['scaling_curve'] = [
            {'lambda': float(lam), 'S': S, 'dS': dS, 'd2S': d2S, 'K': K}
            for lam, (S, dS, d2S, K) in zip(lambdas, curve)]
        payload['diamagnetic'] = GroundStateService.diamagnetic_comparison(result.phi, p)
        return payload, None, 0 if result.converged else 3, {'ground_state': checkpoint,
                                                             'sidecar': sidecar}

    @staticmethod
    def _stored_ground_state(config, grid):
        path = config.options['ground_state']
        phi, stored, _ = read_checkpoint(path)
        if phi.grid != grid:
            raise ConfigError('options.ground_state', 'checkpoint grid does not match the run grid')
        if stored != config.params:
            raise ConfigError('options.ground_state',
                              f"stored parameters {stored.to_dict()} differ from the run's")
        sidecar = os.path.splitext(path)[0] + '.json'
        if 'omega' in config.options or not os.path.exists(sidecar):
            return phi, _option(config, 'omega', required=True)
        with open(sidecar, encoding='utf-8') as handle:
            return phi, float(json.load(handle)['omega'])

    @staticmethod
    def _instability(config):
        p = config.params
        grid = config.grid or EVOLVE_GRID
        if 'ground_state' in config.options:
            phi, omega = ScenarioService._stored_ground_state(config, grid)
        else:
            omega = _option(config, 'omega', INSTABILITY_OMEGA)
            result = GroundStateService.minimize_action(omega, p, grid,
                                                        tol=_option(config, 'gs_tol', 1e-6))
            if not result.converged:
                raise ScenarioServiceError("Ground state did not converge", kind='numerical')
            phi, omega = result.phi, result.omega
        d_omega = FunctionalService.action_S(phi, p, omega)
        lams = [_option(config, 'lam', 1.05)]
        if config.options.get('control', True) and lams[0] != 1.0:
            lams.append(1.0)

        artifacts = {}
        runs = {}
        for lam in lams:
            prefix = f'lambda_{lam:g}_'
            checkpoints = (os.path.join(config.output_dir, f'{prefix}checkpoints')
                           if config.evolve.checkpoint_stride else None)
            outcome = GroundStateService.instability_experiment(phi, p, omega, lam, config.evolve,
                                                               d_omega=d_omega,
                                                               checkpoint_dir=checkpoints)
            artifacts.update(ScenarioService._write_outcome(outcome, p, config.output_dir, prefix))
            runs[f'{lam:g}'] = outcome.summary()
        payload = {'omega': omega, 'd_omega': d_omega, 'runs': runs}
        return payload, runs[f'{lams[0]:g}']['status'], 0, artifacts

    @staticmethod
    def _run_pair(label, u0, data, config, report, directory):
        cfg = config.evolve
        if label == 'global':
            cfg = replace(cfg, t_final=_option(config, 'global_t_final', DICHOTOMY_T_FINAL))
        outcome = DynamicsService.evolve(u0, config.params, cfg)
        write_series_csv(os.path.join(directory, f'series_{label}.csv'), outcome.series)
        observed_blowup = outcome.status is EvolveStatus.NUMERICAL_BLOWUP
        predicted = report.verdict
        matched = ((predicted.predicts_blowup and observed_blowup) or
                   (predicted.predicts_global and outcome.status is EvolveStatus.REACHED_T_FINAL))
        return {
            'label': label,
            'data': data,
            'verdict': predicted.value,
            'classification': report.to_dict(),
            'outcome': outcome.summary(),
            'matched': matched,
            'virial_parabola_root': ScenarioService._virial_root(outcome),
        }, outcome

    @staticmethod
    def _classified(grid, p, qc, profile, a, lam, boundary_tol, rtol):
        spec = {'kind': 'scaled-soliton', 'a': a, 'lam': lam}
        u0 = ScenarioService.build_initial_data(spec, grid, p, profile)
        return spec, u0, ClassificationService.classify(u0, p, qc, boundary_tol, rtol)

    @staticmethod
    def _critical_pairs(config, grid, profile, qc, boundary_tol, rtol):
        below, above = (float(np.sqrt(ratio)) for ratio in CRITICAL_MASS_RATIOS)
        lam = ClassificationService.critical_blowup_scale(above, qc, config.params)
        return [('global',) + ScenarioService._classified(grid, config.params, qc, profile, below,
                                                          1.0, boundary_tol, rtol),
                ('blowup',) + ScenarioService._classified(grid, config.params, qc, profile, above,
                                                          lam, boundary_tol, rtol)]

    @staticmethod
    def _supercritical_pairs(config, grid, profile, qc, boundary_tol, rtol):
        pairs = []
        for label, candidates, wanted in (('global', SUPERCRITICAL_GLOBAL, 'predicts_global'),
                                          ('blowup', SUPERCRITICAL_BLOWUP, 'predicts_blowup')):
            for a, lam in candidates:
                try:
                    item = ScenarioService._classified(grid, config.params, qc, profile, a, lam,
                                                       boundary_tol, rtol)
                except MagnlsError as e:
                    logger.debug(f"Candidate a={a}, lam={lam} skipped: {e}")
                    continue
                if getattr(item[2].verdict, wanted):
                    pairs.append((label,) + item)
                    break
            else:
                raise ScenarioServiceError(f"No {label} candidate on this grid", kind='refused')
        if config.options.get('above_threshold', True):
            try:
                u0, chosen, report = ClassificationService.find_above_threshold_datum(
                    grid, config.params, profile, qc)
                pairs.append(('above', dict(kind='chirped-scaled-soliton', **chosen), u0, report))
            except MagnlsError as e:
                logger.info(f"Above-threshold run skipped: {e}")
        return pairs

    @staticmethod
    def _pair_checks(entry, outcome, p, qc):
        checks = {}
        first = outcome.series[0]
        if entry['label'] == 'global' and p.is_mass_critical:
            cap = FunctionalService.threshold_cap(first.energy_E, first.mass, qc.mass_Q)
            checks['kinetic_cap'] = cap
            checks['kinetic_cap_held'] = all(r.mag_kinetic_sq <= cap for r in outcome.series)
        elif entry['label'] == 'global':
            products = [np.sqrt(r.grad_norm_sq) * r.mass ** (0.5 * qc.sigma_c)
                        for r in outcome.series]
            checks['gradient_product_max'] = max(products)
            checks['gradient_product_held'] = max(products) < qc.grad_mass_product
        else:
            root = entry['virial_parabola_root']
            estimate = outcome.blowup_time_estimate
            checks['blowup_time_bound'] = BLOWUP_TIME_SLACK * root if root is not None else None
            checks['blowup_time_held'] = (root is not None and estimate is not None and
                                          estimate <= BLOWUP_TIME_SLACK * root)
        return checks

    @staticmethod
    def _dichotomy_suite(config):
        p = config.params
        if p.alpha < 4.0 / 3.0 - 1e-12:
            raise ScenarioServiceError("The dichotomy suite needs alpha >= 4/3; below it every "
                                       "datum is global", kind='refused')
        grid = config.grid or EVOLVE_GRID
        profile, qc = ScenarioService._soliton(config)
        boundary_tol, rtol = _tolerances(config)
        build = (ScenarioService._critical_pairs if p.is_mass_critical
                 else ScenarioService._supercritical_pairs)
        pairs = build(config, grid, profile, qc, boundary_tol, rtol)

        jobs = min(len(pairs), spectral.get_workers())
        results = Parallel(n_jobs=jobs, backend='threading')(
            delayed(ScenarioService._run_pair)(label, u0, data, config, report, config.output_dir)
            for label, data, u0, report in pairs)

        entries = []
        for entry, outcome in results:
            entry['checks'] = ScenarioService._pair_checks(entry, outcome, p, qc)
            entries.append(entry)
        passed = all(e['matched'] and all(v for k, v in e['checks'].items() if k.endswith('_held'))
                     for e in entries)
        payload = {'alpha': p.alpha, 'b': p.b, 'runs': entries, 'passed': passed}
        artifacts = {f"series_{e['label']}": os.path.join(config.output_dir,
                                                          f"series_{e['label']}.csv")
                     for e in entries}
        if not passed:
            logger.warning("Dichotomy suite: observed outcomes disagree with the verdicts")
        return payload, 'matched' if passed else 'mismatch', 0 if passed else 3, artifacts
