"""Exception hierarchy for scenario configuration problems."""


class ConfigError(Exception):
    """Base class for anything that makes a scenario unusable."""


class ConfigParseError(ConfigError):
    """The scenario document is not valid JSON."""


class SchemaError(ConfigError):
    """A key is missing, unknown, or has the wrong type or range."""


class PhysicsError(ConfigError):
    """The scenario is well formed but violates a modelling assumption."""
