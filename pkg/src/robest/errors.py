"""Exception types shared across the package."""


class RobestError(Exception):
    """Base class for all package-specific errors."""


class Degenerate(RobestError, ValueError):
    """Problem geometry does not admit a (unique) solve."""


class RankDeficient(Degenerate):
    """Weighted linear system lost column rank."""


class NoFeasibleSet(RobestError, RuntimeError):
    """Greedy removed every measurement without meeting the residual bound."""


class EmptyInlierSet(RobestError, RuntimeError):
    """Adaptive trimming selected an empty inlier set (unusable threshold)."""


class DegenerateClusters(RobestError, RuntimeError):
    """All residuals identical at the initial estimate; cluster separation is 0."""


class TooLarge(RobestError, ValueError):
    """Instance too large for exhaustive subset enumeration."""


class InvalidBound(RobestError, ValueError):
    """Sub-optimality bound undefined: rejecting measurements did not decrease
    the residual (signals solver misuse)."""


class InsufficientSamples(RobestError, ValueError):
    """Too few samples for the requested statistic."""


class TooFew(RobestError, ValueError):
    """Fewer than two values; two-cluster separation is undefined."""


class MissingVertex(RobestError, KeyError):
    """Edge references a vertex that is not in the graph."""


class SingularNormalEquations(RobestError, RuntimeError):
    """Damped normal equations unsolvable even at the damping cap."""


class DisconnectedOdometry(RobestError, ValueError):
    """Odometry edges do not connect all vertices."""


class RateOutOfRange(RobestError, ValueError):
    """Outlier rate must lie in [0, 1)."""


class DegenerateGeometry(RobestError, RuntimeError):
    """Generator produced unusable geometry after the allowed retries."""


class ConfigError(RobestError, ValueError):
    """Experiment configuration invalid; message names the offending field."""


class ParseError(RobestError, ValueError):
    """g2o text rejected; carries the offending line number and a reason."""

    def __init__(self, line_number, reason):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")
