class ZenoDriveError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(ZenoDriveError, ValueError):
    pass


class CutoffTooSmallError(ZenoDriveError):
    """Fock truncation would discard more probability than the tolerance allows."""


class ProtocolCannotConvergeError(ZenoDriveError):
    """The input state has no overlap with the target, or the heralded branch has zero weight."""


class ConfigError(ZenoDriveError):
    pass
