"""Centralized JSON error handling for the Flask application."""
from flask import jsonify
from werkzeug.exceptions import HTTPException

from magnls.utils.errors import API_CODES, MagnlsError


def register_error_handlers(app):
    """Register error handlers with the Flask application."""

    @app.errorhandler(MagnlsError)
    def handle_magnls_error(error):
        """Map toolkit failures to their API code and status."""
        _, status = API_CODES[error.kind]
        if error.kind == 'numerical':
            app.logger.error(f'Numerical failure: {error}')
        return jsonify(error.to_dict()), status

    @app.errorhandler(404)
    def not_found_error(error):
        """Handle 404 Not Found errors."""
        return jsonify({
            "error": "Resource not found",
            "code": "NOT_FOUND"
        }), 404

    @app.errorhandler(500)
    def internal_error(error):
        """Handle 500 Internal Server errors."""
        return jsonify({
            "error": "Internal server error",
            "code": "INTERNAL_ERROR"
        }), 500

    @app.errorhandler(HTTPException)
    def handle_http_exception(error):
        """Handle all other HTTP exceptions."""
        return jsonify({
            "error": error.description,
            "code": f"HTTP_{error.code}"
        }), error.code

    @app.errorhandler(Exception)
    def handle_general_exception(error):
        """Handle all unhandled exceptions."""
        app.logger.error(f'Unhandled exception: {error}')
        return jsonify({
            "error": "An unexpected error occurred",
            "code": "UNEXPECTED_ERROR"
        }), 500
