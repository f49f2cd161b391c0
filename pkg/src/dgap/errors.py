"""Exception hierarchy shared by all dgap modules."""


class DGapError(Exception):
    """Base class for every error raised by dgap."""


class InputError(DGapError, ValueError):
    """Malformed or inconsistent input (dimension mismatch, bad parameters, schema)."""


class CapabilityError(DGapError):
    """The requested operation is not available for this set, point, or problem."""


class ConfigError(InputError):
    """Solver parameters violate the admissibility chain.

    ``violations`` lists one human-readable message per violated inequality.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class LineSearchFailed(DGapError):
    """No backtracking exponent up to ``m_max`` gave sufficient decrease."""

    def __init__(self, message, m_max=None):
        super().__init__(message)
        self.m_max = m_max
