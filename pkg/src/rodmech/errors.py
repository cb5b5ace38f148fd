class RodmechError(Exception):
    """Base class for all errors raised by this package."""


class NotAntisymmetric(RodmechError, ValueError):
    pass


class AngleOutOfRange(RodmechError, ValueError):
    pass


class CompositionSingular(RodmechError, ArithmeticError):
    pass


class IncrementTooLarge(RodmechError, ArithmeticError):
    """The incremental rotation of one step would reach pi/2."""


class NonFiniteState(RodmechError, ArithmeticError):
    """The state overflowed; usually a time step beyond the stability limit."""


class CoincidentCenters(RodmechError, ArithmeticError):
    pass


class InvalidGeometry(RodmechError, ValueError):
    pass


class NonuniformGrid(RodmechError, ValueError):
    pass


class ZeroReferenceEnergy(RodmechError, ValueError):
    pass


class MismatchedSpan(RodmechError, ValueError):
    pass


class ConfigError(RodmechError, ValueError):
    pass


class SimulationError(RodmechError):
    """A stepper failure, tagged with the step index at which it happened."""

    def __init__(self, step, cause):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause
