"""Error types raised across the package."""


class BoundBayesError(Exception):
    """Base class for every error raised by boundbayes."""


class DomainError(BoundBayesError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateError(BoundBayesError):
    """A degenerate configuration was sent to an operation that cannot represent it."""


class DegenerateTailError(BoundBayesError):
    """Rejection sampling would accept too rarely to terminate in practice."""


class RootNotBracketedError(BoundBayesError):
    """No sign change was found in the scanned window."""


class SignChangeViolation(BoundBayesError):
    """A risk difference changed sign more than once or in the wrong direction."""


class QuadratureError(BoundBayesError):
    """A numerical integral failed to reach the requested accuracy."""
