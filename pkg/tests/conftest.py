"""Pytest configuration and fixtures."""
import numpy as np
import pytest

from magnls import create_app
from magnls import db as database
from magnls.models.grid import Field, Grid, MASS_CRITICAL_ALPHA, Params
from magnls.services.soliton_service import SolitonService


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the desk-scale evolution tests')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: desk-scale run, enabled with --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def app(tmp_path):
    """Create application for testing."""
    app = create_app({
        'TESTING': True,
        'SQLALCHEMY_DATABASE_URI': 'sqlite:///:memory:',
        'DATABASE_URL': 'sqlite:///:memory:',
        'SECRET_KEY': 'test-secret-key',
        'MAGNLS_CACHE_DIR': str(tmp_path / 'profiles'),
        'MAGNLS_OUTPUT_DIR': str(tmp_path / 'runs'),
        'MAGNLS_THREADS': 1,
    })

    with app.app_context():
        database.create_all()
        yield app
        database.session.remove()
        database.drop_all()


@pytest.fixture
def client(app):
    """Create test client."""
    return app.test_client()


@pytest.fixture
def runner(app):
    """Create test runner."""
    return app.test_cli_runner()


@pytest.fixture
def db(app):
    """Database fixture for testing."""
    return database


@pytest.fixture(scope='session')
def soliton_alpha2():
    """(profile, constants) of Q for alpha = 2."""
    return SolitonService.get_profile(2.0, 1e-10)


@pytest.fixture(scope='session')
def soliton_critical():
    """(profile, constants) of Q for alpha = 4/3."""
    return SolitonService.get_profile(MASS_CRITICAL_ALPHA, 1e-10)


@pytest.fixture
def small_grid():
    """32^3 box of half-width 8: enough for unit Gaussians."""
    return Grid((32, 32, 32), (8.0, 8.0, 8.0))


@pytest.fixture
def soliton_grid():
    """64^3 box of half-width 12: resolves and contains Q."""
    return Grid((64, 64, 64), (12.0, 12.0, 12.0))


@pytest.fixture
def params2():
    return Params(b=1.0, alpha=2.0)


@pytest.fixture
def gaussian(small_grid):
    """Real unit Gaussian, centred."""
    return Field(small_grid, np.exp(-0.5 * small_grid.r_sq))


@pytest.fixture
def vortex_gaussian(small_grid):
    """(x1 + i x2) e^{-|x|^2/2}: angular momentum equals its mass."""
    x1, x2, _ = small_grid.coords
    return Field(small_grid, (x1 + 1j * x2) * np.exp(-0.5 * small_grid.r_sq))
