"""Flask application factory for the magnetic NLS toolkit."""
import logging
import os

from flask import Flask
from flask_sqlalchemy import SQLAlchemy

from magnls.config import Config

__version__ = '0.1.0'

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

# Initialize extensions
db = SQLAlchemy()


def configure_logging(level='INFO'):
    """Set the root log format and level."""
    logging.basicConfig(format=LOG_FORMAT, force=True)
    logging.getLogger().setLevel(level.upper() if isinstance(level, str) else level)


def create_app(test_config=None):
    """Create and configure Flask application."""
    app = Flask(__name__)

    app.config.from_object(Config)
    if test_config is not None:
        app.config.update(test_config)

    # Initialize extensions
    db.init_app(app)

    from magnls.utils import spectral
    from magnls.utils.cache import profile_cache
    spectral.set_workers(app.config['MAGNLS_THREADS'])
    profile_cache.configure(app.config.get('MAGNLS_CACHE_DIR'))

    # Import models so the ledger table is known to the metadata
    from magnls.models.run import RunRecord  # noqa: F401

    # Ensure instance folder exists
    os.makedirs(app.instance_path, exist_ok=True)

    # Register blueprints
    from magnls.blueprints.api import api_bp
    app.register_blueprint(api_bp)

    # Register error handlers
    from magnls.utils.error_handlers import register_error_handlers
    register_error_handlers(app)

    from magnls.cli import cli
    app.cli.add_command(cli)

    with app.app_context():
        try:
            db.create_all()
            app.logger.info('Run ledger ready')
        except Exception as e:
            app.logger.error(f'Run ledger unavailable: {e}')

    return app
