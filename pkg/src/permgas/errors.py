"""Exception taxonomy with stable CLI exit codes.

Exit codes: 0 ok, 2 parameter error, 3 cap exceeded, 4 nontermination,
5 internal invariant breach.
"""


class PermgasError(Exception):
    """Base class; every subclass carries the exit code the CLI uses."""

    exit_code = 5


class ParameterError(PermgasError):
    """Invalid user-supplied parameter (bad density, empty box, ...)."""

    exit_code = 2


class DomainError(ParameterError):
    """Argument outside the domain of an operation (region not in box, ...)."""


class StructureError(ParameterError):
    """Malformed combinatorial object (non-bijective table, bad cycle, ...)."""


class ConsistencyError(ParameterError):
    """Objects reference points that do not exist in the active environment."""


class BoundaryError(ParameterError):
    """Boundary permutation incompatible with the requested volume."""


class CapExceededError(PermgasError):
    """An enumeration cap (max_points and friends) was exceeded."""

    exit_code = 3


class NonterminationError(PermgasError):
    """The backward window grew past its configured maximum."""

    exit_code = 4


class InvariantBreachError(PermgasError):
    """An internal cross-check failed; indicates a bug, not bad input."""

    exit_code = 5


class WindowTooSmallError(PermgasError):
    """A mark's ancestor set cannot be certified within the available window."""

    exit_code = 4
