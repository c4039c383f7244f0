"""Error base class shared by every service."""

EXIT_CODES = {
    'invalid': 1,
    'refused': 2,
    'numerical': 3,
}

API_CODES = {
    'invalid': ('INVALID_CONFIG', 400),
    'refused': ('REFUSED', 422),
    'numerical': ('NUMERICAL_FAILURE', 500),
}


class MagnlsError(Exception):
    """Base exception carrying a failure kind (invalid, refused or numerical)."""

    def __init__(self, message, kind='numerical'):
        if kind not in EXIT_CODES:
            raise ValueError(f"Unknown error kind: {kind}")
        super().__init__(message)
        self.kind = kind

    @property
    def exit_code(self):
        return EXIT_CODES[self.kind]

    def to_dict(self):
        code, _ = API_CODES[self.kind]
        return {'error': str(self), 'code': code}


class ConfigError(MagnlsError):
    """Malformed scenario configuration; the message names the field."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}", kind='invalid')
        self.field = field
