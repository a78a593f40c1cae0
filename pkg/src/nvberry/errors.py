"""Exception hierarchy shared by all nvberry modules."""


class NVBerryError(Exception):
    """Base class for every error raised by nvberry."""


class InvalidConfig(NVBerryError, ValueError):
    pass


class ZeroDivisor(NVBerryError, ZeroDivisionError):
    pass


class SingularGeometry(NVBerryError, ValueError):
    """cos(theta - beta) vanishes, so the critical drive ratio diverges."""


class ZeroDenominator(NVBerryError, ZeroDivisionError):
    pass


class NotHermitian(NVBerryError, ValueError):
    pass


class AmbiguousTracking(NVBerryError):
    """Branch assignment between two frames is not unique enough to trust."""

    def __init__(self, message, margin=None, t=None):
        super().__init__(message)
        self.margin = margin
        self.t = t


class GapFloorViolation(NVBerryError):
    """Two tracked eigenvalues came closer than the configured gap floor.

    This signals adiabatic breakdown for the scenario, not a numerical bug.
    """

    def __init__(self, message, min_gap=None, t=None, pair=None):
        super().__init__(message)
        self.min_gap = min_gap
        self.t = t
        self.pair = pair


class DegenerateGap(GapFloorViolation):
    pass


class PhaseUnwrapFailure(NVBerryError):
    pass


class OpenTrajectory(NVBerryError, ValueError):
    pass


class StepTooCoarse(NVBerryError, ValueError):
    pass


class FringeExtremum(NVBerryError, ValueError):
    pass


class ZeroSlope(NVBerryError, ZeroDivisionError):
    pass


class SlopeUnresolved(NVBerryError):
    pass


class NoFeasiblePoint(NVBerryError):
    pass
