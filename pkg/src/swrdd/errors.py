"""Exception hierarchy shared by the solver modules."""


class SWRError(Exception):
    """Base class for all solver errors."""


class ZeroPivot(SWRError):
    """A tridiagonal factorization hit a (numerically) zero pivot."""


class Breakdown(SWRError):
    """A Krylov recurrence degenerated before reaching the tolerance."""


class NotConverged(SWRError):
    """An iteration exhausted its budget."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InnerNotConverged(NotConverged):
    """The preconditioner's inner Krylov solve did not converge."""


class InvalidOrder(SWRError):
    """Transmission family / order combination that is not defined."""


class UnsupportedPotential(SWRError):
    """Algorithm requested for a potential kind it cannot handle."""


class GridMismatch(SWRError):
    """Two solutions live on different grids."""


class ParseError(SWRError):
    """Invalid configuration file or command-line configuration."""
