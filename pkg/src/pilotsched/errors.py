class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending parameter when known."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class AuditError(ValueError):
    pass
