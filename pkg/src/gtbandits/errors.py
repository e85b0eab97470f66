"""Exception types raised across the package."""
import math


class GtbError(Exception):
    """Base class for all library errors."""


class AsymmetricMatrix(GtbError):
    def __init__(self, i, j):
        super().__init__(f"adjacency is not symmetric at ({i}, {j})")
        self.i, self.j = i, j


class MissingSelfLoop(GtbError):
    def __init__(self, i):
        super().__init__(f"arm {i} has no self-loop")
        self.i = i


class InstanceTooLarge(GtbError):
    def __init__(self, size, cap):
        shown = size if size < 10 ** 18 else f"~1e{int(math.log10(size))}"
        super().__init__(f"problem size {shown} exceeds cap {cap}")
        self.size, self.cap = size, cap


class IndexOutOfRange(GtbError):
    pass


class InvalidArm(GtbError):
    pass


class InvalidInstance(GtbError):
    pass


class HorizonExceeded(GtbError):
    pass


class OddHorizon(GtbError):
    pass


class GenerationFailed(GtbError):
    pass


class NonDeterministicHistory(GtbError):
    pass


class InvariantViolation(GtbError):
    """An internal invariant broke; indicates a bug rather than bad input."""


class NotBlockDiagonal(GtbError):
    pass


class StochasticInstance(GtbError):
    pass


class BadParameters(GtbError):
    pass


class BadArguments(GtbError):
    pass


class OracleMismatch(GtbError):
    pass


class ConfigError(GtbError):
    pass
