"""Exception hierarchy shared across the package."""


class SysriskError(Exception):
    """Base class for all package errors."""


class ValidationError(SysriskError):
    """A construction-time invariant was violated (named in the message)."""


class DimensionMismatchError(ValidationError):
    """Operands do not share consistent scenario/institution dimensions."""


class IndeterminateValueError(SysriskError):
    """A numeric routine could neither converge nor certify unboundedness."""


class SolverError(SysriskError):
    """An internal solver (LP, line search) failed in an unexpected way."""
