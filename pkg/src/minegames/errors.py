"""Exception types shared across the package."""


class MineGamesError(Exception):
    """Base class for all package errors."""


class InvalidPowerError(MineGamesError, ValueError):
    """Hashing-power fractions outside the admissible domain."""


class UnreachableStateError(MineGamesError, ValueError):
    """A lead state that the transition table can never produce."""


class InvalidTruncationError(MineGamesError, ValueError):
    """Truncation bound too small for the model to make sense."""


class DomainError(MineGamesError, ValueError):
    """Argument outside a closed form's domain (e.g. at a pole)."""


class TransientRegimeError(MineGamesError, RuntimeError):
    """The truncated chain was flagged transient; long-run averages do not exist."""


class NumericalFailureError(MineGamesError, RuntimeError):
    """A linear solve or iteration failed to reach its required residual."""


class SolverBracketError(MineGamesError, RuntimeError):
    """A bisection could not bracket (or close in on) its root."""


class PolicyError(MineGamesError, ValueError):
    """A policy prescribes an infeasible action for a reachable state."""


class GameSizeError(MineGamesError, ValueError):
    """Too many pools for exhaustive profile enumeration."""
