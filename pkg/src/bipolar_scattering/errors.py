"""Exception and warning types raised by the scattering engine."""


class ScatteringError(Exception):
    """Base class for engine errors."""


class PotentialError(ScatteringError, ValueError):
    pass


class NonMonotonicSteps(PotentialError):
    pass


class SizeMismatch(PotentialError):
    pass


class InfiniteInteriorRegion(PotentialError):
    pass


class EnergyAtStepEdge(ScatteringError, ValueError):
    """E coincides with a region potential: zero momentum turning point."""


class NoIncidentWave(ScatteringError, ValueError):
    """The incident asymptote is classically forbidden, so nothing can be launched."""


class AheadOfWavefront(ScatteringError):
    """The sampled point has not yet been reached by the component wave."""


class Unbounded(ScatteringError):
    """No step lies downstream of the trajectory."""


class DegenerateMomenta(ScatteringError, ZeroDivisionError):
    pass


class SemiInfiniteForbidden(ScatteringError):
    """A tunneling leg was requested into a forbidden region with no far edge."""


class SingularMatching(ScatteringError, ZeroDivisionError):
    pass


class BranchPole(ScatteringError):
    pass


class NoSignal(ScatteringError):
    """A monitor has no recorded crossings."""


class ConfigError(ScatteringError, ValueError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NotConverged(ScatteringError):
    """Raised when ``max_cycles`` is exhausted; ``result`` holds the best estimate."""

    def __init__(self, result, message=None):
        self.result = result
        super().__init__(
            message
            or f"not converged after {result.cycles_used} cycles "
            f"(last jump {result.error_bar:.3e})"
        )


class GridTooCoarse(UserWarning):
    pass
