"""Scenario configuration for the command-line runs."""
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Optional

from magnls.models.evolution import EvolveConfig
from magnls.models.grid import Grid, GridError, MASS_CRITICAL_ALPHA, Params
from magnls.utils.errors import ConfigError

COMMANDS = ('solve-q', 'verify', 'classify', 'evolve', 'ground-state', 'instability',
            'dichotomy-suite')

DATA_KINDS = {
    'scaled-soliton': ({'a', 'lam'}, {'center'}),
    'transverse-gaussian-bump': ({'lam'}, {'c'}),
    'gaussian': (set(), {'widths', 'chirp', 'center', 'mass', 'amplitude'}),
    'cutoff-soliton': ({'lam', 'c', 'radius'}, set()),
    'checkpoint': ({'path'}, set()),
}

GROUND_STATE_PROBLEMS = ('action', 'I_c', 'Im_c')

_TOP_LEVEL = {'command', 'params', 'grid', 'data', 'evolve', 'output_dir', 'seed', 'samples',
              'tol', 'options'}

# Decimal spellings of 4/3 such as 1.3333 land within this distance.
CRITICAL_SNAP = 5e-4

logger = logging.getLogger(__name__)


def parse_alpha(value):
    """
    Read alpha from a number or a string such as '2', '1.3333' or '4/3'.

    Values within CRITICAL_SNAP of 4/3 are taken as exactly 4/3.

    Raises:
        ConfigError: If the value is not a number
    """
    try:
        alpha = float(Fraction(value.strip())) if isinstance(value, str) else float(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError('params.alpha', f'not a number: {value!r}')
    if alpha != MASS_CRITICAL_ALPHA and abs(alpha - MASS_CRITICAL_ALPHA) < CRITICAL_SNAP:
        logger.info(f"alpha={alpha} taken as the mass-critical power 4/3")
        alpha = MASS_CRITICAL_ALPHA
    return alpha


def _validate_data(spec):
    if not isinstance(spec, dict):
        raise ConfigError('data', 'must be an object')
    kind = spec.get('kind')
    if kind not in DATA_KINDS:
        raise ConfigError('data.kind', f"must be one of {sorted(DATA_KINDS)}, got {kind!r}")
    required, optional = DATA_KINDS[kind]
    keys = set(spec) - {'kind'}
    missing = required - keys
    if missing:
        raise ConfigError(f'data.{sorted(missing)[0]}', 'is required')
    unknown = keys - required - optional
    if unknown:
        raise ConfigError(f'data.{sorted(unknown)[0]}', f'unknown for kind {kind}')
    for name in ('lam', 'c', 'radius', 'mass', 'amplitude'):
        if name in spec:
            try:
                value = float(spec[name])
            except (TypeError, ValueError):
                raise ConfigError(f'data.{name}', 'must be a number')
            if not value > 0:
                raise ConfigError(f'data.{name}', 'must be positive')
    if 'a' in spec and not isinstance(spec['a'], (int, float)):
        raise ConfigError('data.a', 'must be a number')
    if 'mass' in spec and 'amplitude' in spec:
        raise ConfigError('data.mass', 'give either mass or amplitude, not both')
    for name in ('center', 'widths'):
        if name in spec:
            value = spec[name]
            if name == 'widths' and isinstance(value, (int, float)):
                value = [value] * 3
            if not isinstance(value, (list, tuple)) or len(value) != 3:
                raise ConfigError(f'data.{name}', 'must hold three numbers')
            if name == 'widths' and any(not float(w) > 0 for w in value):
                raise ConfigError('data.widths', 'must be positive')
    if kind == 'checkpoint' and not os.path.exists(spec['path']):
        raise ConfigError('data.path', f"file not found: {spec['path']}")
    return dict(spec)


@dataclass
class ScenarioConfig:
    """A complete, validated run description; serializes into its report."""
    command: str
    params: Params
    grid: Optional[Grid] = None
    data: Optional[Dict[str, Any]] = None
    evolve: EvolveConfig = field(default_factory=EvolveConfig)
    output_dir: str = 'runs'
    seed: int = 0
    samples: int = 1000
    tol: float = 1e-10
    options: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        """
        Build a config from a JSON-like mapping.

        Raises:
            ConfigError: Naming the first offending field
        """
        if not isinstance(data, dict):
            raise ConfigError('config', 'must be a JSON object')
        unknown = set(data) - _TOP_LEVEL
        if unknown:
            raise ConfigError(sorted(unknown)[0], 'unknown configuration key')
        command = data.get('command')
        if command not in COMMANDS:
            raise ConfigError('command', f"must be one of {list(COMMANDS)}, got {command!r}")

        params = data.get('params') or {}
        alpha = params.get('alpha', 2.0 if command == 'verify' else None)
        if alpha is None:
            raise ConfigError('params.alpha', 'is required')
        try:
            params = Params(b=float(params.get('b', 1.0)), alpha=parse_alpha(alpha))
        except (TypeError, ValueError) as e:
            raise ConfigError('params', str(e))
        except GridError as e:
            raise ConfigError('params', str(e))

        grid = data.get('grid')
        try:
            if grid is not None:
                grid = Grid(tuple(grid['dims']), tuple(grid['half_widths']))
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError('grid', f'needs dims and half_widths: {e}')
        except GridError as e:
            raise ConfigError('grid', str(e))

        spec = data.get('data')
        if spec is not None:
            spec = _validate_data(spec)
        elif command in ('classify', 'evolve'):
            raise ConfigError('data', f'is required for {command}')

        try:
            evolve = EvolveConfig.from_dict(data.get('evolve') or {})
        except TypeError as e:
            raise ConfigError('evolve', str(e))

        seed = data.get('seed', 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError('seed', 'must be a non-negative integer')
        samples = data.get('samples', 1000)
        if not isinstance(samples, int) or samples < 1:
            raise ConfigError('samples', 'must be a positive integer')
        tol = data.get('tol', 1e-10)
        if not isinstance(tol, (int, float)) or not tol > 0:
            raise ConfigError('tol', 'must be positive')
        options = data.get('options') or {}
        if not isinstance(options, dict):
            raise ConfigError('options', 'must be an object')
        problem = options.get('problem', 'action')
        if command == 'ground-state' and problem not in GROUND_STATE_PROBLEMS:
            raise ConfigError('options.problem', f"must be one of {list(GROUND_STATE_PROBLEMS)}")
        if 'ground_state' in options and not os.path.exists(options['ground_state']):
            raise ConfigError('options.ground_state', f"file not found: {options['ground_state']}")

        return cls(command=command, params=params, grid=grid, data=spec, evolve=evolve,
                   output_dir=str(data.get('output_dir') or 'runs'), seed=seed,
                   samples=samples, tol=float(tol), options=dict(options))

    def to_dict(self):
        return {
            'command': self.command,
            'params': self.params.to_dict(),
            'grid': self.grid.to_dict() if self.grid is not None else None,
            'data': self.data,
            'evolve': self.evolve.to_dict(),
            'output_dir': self.output_dir,
            'seed': self.seed,
            'samples': self.samples,
            'tol': self.tol,
            'options': self.options,
        }
