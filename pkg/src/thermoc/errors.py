"""Shared exception types."""


class ContractViolation(ValueError):
    """An operation was called outside its stated preconditions."""


class TraceParseError(ValueError):
    """A traffic trace file line could not be parsed or validated."""


class ConfigError(ValueError):
    """A configuration file or override is invalid; message names the key."""


class SchemaError(ValueError):
    """A dataset file does not match the expected column schema."""
