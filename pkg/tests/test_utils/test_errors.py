"""Tests for the error base classes."""
import pytest

from magnls.utils.errors import ConfigError, MagnlsError


class TestMagnlsError:
    """Test cases for error kinds, exit codes and API payloads."""

    @pytest.mark.parametrize('kind, exit_code, code', [
        ('invalid', 1, 'INVALID_CONFIG'), ('refused', 2, 'REFUSED'),
        ('numerical', 3, 'NUMERICAL_FAILURE'),
    ])
    def test_kinds(self, kind, exit_code, code):
        """Test each kind maps to its exit code and API code."""
        error = MagnlsError('boom', kind=kind)
        assert error.exit_code == exit_code
        assert error.to_dict() == {'error': 'boom', 'code': code}

    def test_default_kind_is_numerical(self):
        """Test unspecified failures count as numerical."""
        assert MagnlsError('x').kind == 'numerical'

    def test_unknown_kind(self):
        """Test unknown kinds are a programming error."""
        with pytest.raises(ValueError):
            MagnlsError('x', kind='fatal')

    def test_config_error_names_field(self):
        """Test ConfigError prefixes the field."""
        error = ConfigError('data.lam', 'must be positive')
        assert str(error) == 'data.lam: must be positive'
        assert error.field == 'data.lam'
        assert error.kind == 'invalid'
