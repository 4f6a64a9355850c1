"""Exception hierarchy shared by every stage of the pipeline."""


class WgqkdError(Exception):
    """Base class for all errors raised by this package."""


# scattering
class NonConvergent(WgqkdError):
    pass


class TruncationTooSmall(WgqkdError):
    pass


class GridTooShort(WgqkdError):
    pass


# sources
class NegativeProbability(WgqkdError):
    pass


class NotNormalized(WgqkdError):
    pass


class DuplicateIndex(WgqkdError):
    pass


class TailTooHeavy(WgqkdError):
    pass


# channel
class ZeroYield(WgqkdError):
    pass


# estimator
class MissingVacuumState(WgqkdError):
    pass


class TruncationMismatch(WgqkdError):
    pass


class Infeasible(WgqkdError):
    pass


class DegenerateIntensities(WgqkdError):
    pass


class VanishingYield(WgqkdError):
    pass


# keyrate
class DomainError(WgqkdError, ValueError):
    pass


class NoPositiveRate(WgqkdError):
    pass


# cli
class ConfigParseError(WgqkdError):
    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
