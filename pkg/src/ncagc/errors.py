"""Exception types shared across the package.

The CLI maps ConfigError/DataError to exit code 2 and NumericalError to
exit code 3.
"""


class NcagcError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(NcagcError):
    """Invalid configuration value or inconsistent run setup."""


class DataError(NcagcError):
    """Dataset file missing, malformed, or failing validation."""


class NumericalError(NcagcError):
    """A numerical computation produced non-finite values or failed to converge.

    Carries optional context so callers can report where the failure happened.
    """

    def __init__(self, message, component=None, epoch=None, layer=None):
        self.component = component
        self.epoch = epoch
        self.layer = layer
        parts = [message]
        if component is not None:
            parts.append(f"component={component}")
        if epoch is not None:
            parts.append(f"epoch={epoch}")
        if layer is not None:
            parts.append(f"layer={layer}")
        super().__init__(" | ".join(parts))
