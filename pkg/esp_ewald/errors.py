"""Exception hierarchy for the Ewald library."""


class EwaldError(Exception):
    """Base class for all library errors."""


class ParameterError(EwaldError, ValueError):
    """Invalid precision, cutoff, box, order or override."""


class ProlateConvergenceError(EwaldError, RuntimeError):
    """Legendre expansion of the prolate function failed to converge."""


class NeutralityError(EwaldError, ValueError):
    """System is not charge neutral."""


class GridError(EwaldError, ValueError):
    """Grid shape mismatch or window/grid incompatibility."""


class SystemFormatError(EwaldError, ValueError):
    """Malformed particle file or generator spec."""
