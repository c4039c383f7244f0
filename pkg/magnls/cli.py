"""Command-line interface: one click command per scenario."""
import json
import logging
import os

import click
from flask import current_app, has_app_context

from magnls.models.scenario import ScenarioConfig
from magnls.services.scenario_service import ScenarioService
from magnls.utils.errors import MagnlsError
from magnls.utils.reports import dumps

logger = logging.getLogger(__name__)

DEFAULT_DIMS = (64, 64, 64)
DEFAULT_BOX = (12.0, 12.0, 12.0)

# Flags that feed the data constructor unless the command routes them to options.
_DATA_FLAGS = {'a': 'a', 'lam': 'lam', 'c': 'c', 'mu': 'chirp', 'widths': 'widths',
               'center': 'center', 'radius': 'radius', 'mass': 'mass',
               'amplitude': 'amplitude', 'checkpoint': 'path'}
_OPTION_FLAGS = {
    'ground-state': ('c', 'omega', 'm', 'problem'),
    'instability': ('lam', 'omega', 'ground_state'),
}


def _triplet(cast):
    def convert(ctx, param, value):
        if value is None:
            return None
        try:
            parts = [cast(v) for v in value.split(',')]
        except ValueError:
            raise click.BadParameter('expected three comma-separated numbers')
        if len(parts) == 1:
            parts = parts * 3
        if len(parts) != 3:
            raise click.BadParameter('expected three comma-separated numbers')
        return parts
    return convert


def scenario_options(func):
    """Shared flags of every scenario command."""
    options = [
        click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                     help='JSON scenario file; flags override its entries'),
        click.option('--alpha', type=str, help="Nonlinearity power, e.g. 2 or 4/3"),
        click.option('--b', type=float, help='Magnetic field strength'),
        click.option('--grid', callback=_triplet(int), help='Grid points n1,n2,n3'),
        click.option('--box', callback=_triplet(float), help='Half-widths L1,L2,L3'),
        click.option('--dt', type=float, help='Initial time step'),
        click.option('--t-final', 't_final', type=float, help='Final time'),
        click.option('--tol', type=float, help='Soliton solver tolerance'),
        click.option('--seed', type=int, help='Seed of the property suites'),
        click.option('--samples', type=int, help='Number of random fields'),
        click.option('--out', 'output_dir', type=click.Path(file_okay=False),
                     help='Output directory'),
        click.option('--data', 'data_kind', type=str, help='Initial-data constructor kind'),
        click.option('--a', type=float, help='Soliton amplitude factor'),
        click.option('--lam', type=float, help='Dilation parameter'),
        click.option('--c', type=float, help='Mass of the datum or of the minimizer'),
        click.option('--mu', type=float, help='Chirp of the Gaussian datum'),
        click.option('--widths', callback=_triplet(float), help='Gaussian widths'),
        click.option('--center', callback=_triplet(float), help='Datum centre'),
        click.option('--radius', type=float, help='Cutoff radius'),
        click.option('--mass', type=float, help='Gaussian mass'),
        click.option('--amplitude', type=float, help='Gaussian amplitude'),
        click.option('--checkpoint', type=click.Path(exists=True, dir_okay=False),
                     help='Checkpoint file used as datum'),
        click.option('--omega', type=float, help='Standing-wave frequency'),
        click.option('--m', type=float, help='Magnetic kinetic cap of I^m(c)'),
        click.option('--problem', type=click.Choice(['action', 'I_c', 'Im_c']),
                     help='Ground-state problem'),
        click.option('--ground-state', 'ground_state', type=click.Path(exists=True, dir_okay=False),
                     help='Archived ground state for the instability run'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_config(command, flags):
    """
    Merge the JSON scenario file with command-line flags.

    Returns:
        Validated ScenarioConfig

    Raises:
        ConfigError: On any invalid entry
    """
    data = {}
    if flags.get('config_path'):
        with open(flags['config_path'], encoding='utf-8') as handle:
            try:
                data = json.load(handle)
            except json.JSONDecodeError as e:
                raise click.BadParameter(f'invalid JSON: {e}', param_hint='--config')
    data['command'] = command

    params = dict(data.get('params') or {})
    for name in ('alpha', 'b'):
        if flags.get(name) is not None:
            params[name] = flags[name]
    data['params'] = params

    if flags.get('grid') or flags.get('box'):
        grid = dict(data.get('grid') or {})
        grid['dims'] = flags.get('grid') or grid.get('dims') or list(DEFAULT_DIMS)
        grid['half_widths'] = flags.get('box') or grid.get('half_widths') or list(DEFAULT_BOX)
        data['grid'] = grid

    evolve = dict(data.get('evolve') or {})
    if flags.get('dt') is not None:
        evolve['dt_initial'] = flags['dt']
    if flags.get('t_final') is not None:
        evolve['t_final'] = flags['t_final']
    data['evolve'] = evolve

    for name in ('tol', 'seed', 'samples', 'output_dir'):
        if flags.get(name) is not None:
            data[name] = flags[name]
    if not data.get('output_dir'):
        base = current_app.config['MAGNLS_OUTPUT_DIR'] if has_app_context() else 'runs'
        data['output_dir'] = os.path.join(base, command)

    routed = _OPTION_FLAGS.get(command, ())
    options = dict(data.get('options') or {})
    for name in routed:
        if flags.get(name) is not None:
            options[name] = flags[name]
    for name in ('omega', 'm', 'problem', 'ground_state'):
        if name not in routed and flags.get(name) is not None:
            raise click.UsageError(f'--{name.replace("_", "-")} does not apply to {command}')
    data['options'] = options

    spec = dict(data.get('data') or {})
    if flags.get('data_kind'):
        spec = {'kind': flags['data_kind']}
    for flag, key in _DATA_FLAGS.items():
        if flag not in routed and flags.get(flag) is not None:
            spec[key] = flags[flag]
    if flags.get('checkpoint') and 'kind' not in spec:
        spec['kind'] = 'checkpoint'
    if spec:
        data['data'] = spec
    return ScenarioConfig.from_dict(data)


def _execute(command, flags):
    from magnls import configure_logging
    configure_logging(current_app.config['MAGNLS_LOG_LEVEL'])
    try:
        config = build_config(command, flags)
    except MagnlsError as e:
        click.echo(f'Error: {e}', err=True)
        return e.exit_code
    exit_code, artifacts = ScenarioService.run(config)
    click.echo(dumps({'command': command, 'exit_code': exit_code, 'artifacts': artifacts}))
    return exit_code


COMMAND_HELP = {
    'solve-q': 'Solve for the soliton Q and write its sharp constants.',
    'verify': 'Run the seeded identity and inequality suites.',
    'classify': 'Classify an initial datum by the dichotomy criteria.',
    'evolve': 'Integrate an initial datum and record diagnostics.',
    'ground-state': 'Compute a standing wave: action, I_c or Im_c problem.',
    'instability': 'Evolve a dilated ground state and track the invariant set.',
    'dichotomy-suite': 'Paired global and blow-up runs checked against their verdicts.',
}


@click.group('magnls')
def cli():
    """Magnetic NLS spectral toolkit."""


def _register(name, help_text):
    @cli.command(name, help=help_text)
    @scenario_options
    @click.pass_context
    def command(ctx, **flags):
        if has_app_context():
            code = _execute(name, flags)
        else:
            from magnls import create_app
            with create_app().app_context():
                code = _execute(name, flags)
        ctx.exit(code)
    return command


for _name, _help in COMMAND_HELP.items():
    _register(_name, _help)


def main():
    cli()
