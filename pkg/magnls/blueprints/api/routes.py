"""Report API: health, soliton constants, classification and the run ledger."""
import logging

import numpy as np
import scipy
from flask import current_app, jsonify, request
from sqlalchemy import exc

from magnls import __version__, db
from magnls.blueprints.api import api_bp
from magnls.models.run import RunRecord
from magnls.models.scenario import ScenarioConfig, parse_alpha
from magnls.services.scenario_service import ScenarioService
from magnls.services.soliton_service import SolitonService
from magnls.utils import spectral
from magnls.utils.cache import profile_cache
from magnls.utils.database import check_database_connection
from magnls.utils.errors import ConfigError

logger = logging.getLogger(__name__)


@api_bp.route('/health', methods=['GET'])
def health():
    """
    Service status, library versions, thread count and profile-cache stats.

    Returns:
        JSON response with the health summary
    """
    database_ok, database_error = check_database_connection()
    return jsonify({
        'status': 'ok' if database_ok else 'degraded',
        'versions': {'magnls': __version__, 'numpy': np.__version__, 'scipy': scipy.__version__},
        'threads': spectral.get_workers(),
        'cache': profile_cache.get_stats(),
        'database': {'ok': database_ok, 'error': database_error},
    }), 200


@api_bp.route('/solitons/<alpha>', methods=['GET'])
def get_soliton_constants(alpha):
    """
    Sharp constants of the soliton Q for a nonlinearity power.

    Query parameters:
        tol: Solver tolerance (default 1e-10)

    Returns:
        JSON response with the QConstants fields
    """
    alpha = parse_alpha(alpha)
    try:
        tol = float(request.args.get('tol', 1e-10))
    except ValueError:
        raise ConfigError('tol', 'must be a number')
    if not tol > 0:
        raise ConfigError('tol', 'must be positive')
    if not 0 < alpha < 4:
        raise ConfigError('alpha', f'must lie in (0, 4), got {alpha}')
    constants = SolitonService.get_constants(alpha, tol)
    return jsonify({'alpha': alpha, 'tol': tol, 'constants': constants.to_dict()}), 200


@api_bp.route('/classify', methods=['POST'])
def classify():
    """
    Classify one initial datum.

    Expected JSON payload:
    {
        "alpha": number or string,
        "b": number,
        "grid": [n1, n2, n3],
        "box": [L1, L2, L3],
        "data": {"kind": ..., constructor fields}
    }

    Returns:
        JSON response with the ClassificationReport
    """
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        raise ConfigError('body', 'must be a JSON object')
    if 'alpha' not in data:
        raise ConfigError('alpha', 'is required')
    grid = None
    if 'grid' in data or 'box' in data:
        grid = {'dims': data.get('grid', [64, 64, 64]), 'half_widths': data.get('box', [12, 12, 12])}
    config = ScenarioConfig.from_dict({
        'command': 'classify',
        'params': {'alpha': data['alpha'], 'b': data.get('b', 1.0)},
        'grid': grid,
        'data': data.get('data'),
        'options': {'boundary_tol': current_app.config['MAGNLS_BOUNDARY_TOL'],
                    'rtol': current_app.config['MAGNLS_EQUALITY_RTOL']},
    })
    report = ScenarioService.classify_config(config)
    logger.info(f"API classification: {report.verdict.value}")
    return jsonify({'report': report.to_dict()}), 200


@api_bp.route('/runs', methods=['GET'])
def list_runs():
    """
    Ledger rows, newest first.

    Query parameters:
        limit: Maximum number of rows (default 50)

    Returns:
        JSON response with the run list
    """
    try:
        limit = min(max(int(request.args.get('limit', 50)), 1), 500)
    except ValueError:
        raise ConfigError('limit', 'must be an integer')
    try:
        runs = RunRecord.query.order_by(RunRecord.created_at.desc(), RunRecord.id.desc()) \
            .limit(limit).all()
        return jsonify({'runs': [run.to_dict() for run in runs]}), 200
    except exc.SQLAlchemyError:
        return jsonify({
            'error': 'Database connection error. Please try again later.',
            'code': 'DATABASE_ERROR'
        }), 500


@api_bp.route('/runs/<int:run_id>', methods=['GET'])
def get_run(run_id):
    """
    One ledger row.

    Returns:
        JSON response with the run, or 404 JSON when unknown
    """
    try:
        run = db.session.get(RunRecord, run_id)
    except exc.SQLAlchemyError:
        return jsonify({
            'error': 'Database connection error. Please try again later.',
            'code': 'DATABASE_ERROR'
        }), 500
    if run is None:
        return jsonify({'error': f'Run {run_id} not found', 'code': 'NOT_FOUND'}), 404
    return jsonify({'run': run.to_dict()}), 200
