"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class FairBayesError(Exception):
    exit_code = 4


class ConfigError(FairBayesError):
    """Invalid configuration, schema, or privileged-group designation."""

    exit_code = 2


class SchemaError(ConfigError):
    pass


class DataError(FairBayesError):
    """Input data is malformed or inconsistent with what a model expects."""

    exit_code = 3


class UnknownGroupError(DataError):
    def __init__(self, group):
        self.group = tuple(group)
        super().__init__(f"group {self.group!r} was not seen during training")
