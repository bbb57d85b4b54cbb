"""
Exception hierarchy for the Pareto MCTS toolkit.

Input problems subclass ValueError, broken internal contracts subclass RuntimeError, and everything
derives from ParetoMCTSError so the HTTP layer can map the whole family at once.
"""


class ParetoMCTSError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(ParetoMCTSError, ValueError):
    """Reward vectors (or arrays) of different dimension were combined."""


class EmptyInputError(ParetoMCTSError, ValueError):
    """An operation that needs at least one element received none."""


class NonFiniteInputError(ParetoMCTSError, ValueError):
    """NaN or infinite coordinates or targets."""


class FactorizationError(ParetoMCTSError, RuntimeError):
    """Cholesky factorization failed even after the maximum jitter."""


class NoFeasiblePrimitiveError(ParetoMCTSError, RuntimeError):
    """Every motion primitive from a pose leaves the workspace."""


class GridFormatError(ParetoMCTSError, ValueError):
    """A grid file or grid operation is malformed; the message carries row/column context."""


class OutOfExtentError(ParetoMCTSError, ValueError):
    """A location lies outside the workspace extent."""


class SelectionContractError(ParetoMCTSError, RuntimeError):
    """Tree selection reached a child that was never visited."""


class MissionConfigError(ParetoMCTSError, ValueError):
    """A mission config file is missing, unreadable or inconsistent."""
