"""Exception hierarchy.

Everything raised on purpose by the toolkit derives from :class:`GeoQGateError`.
Numerical failures (degeneracy, gap closure, integrator trouble) additionally
derive from :class:`NumericalFailure`, which the CLI maps to exit code 2.
"""


class GeoQGateError(Exception):
    pass


class ConfigError(GeoQGateError, ValueError):
    """Invalid configuration or argument outside its documented domain."""


class NumericalFailure(GeoQGateError, ArithmeticError):
    pass


class NonHermitianInput(ConfigError):
    pass


class DimensionMismatch(ConfigError):
    pass


class StepTooCoarse(NumericalFailure):
    pass


class DegenerateSpectrum(NumericalFailure):
    pass


class GaugeDiscontinuity(NumericalFailure):
    pass


class GapClosure(NumericalFailure):
    pass


class OriginSingularity(NumericalFailure):
    pass


class EndpointMismatch(ConfigError):
    pass


class OpenLoop(ConfigError):
    pass


class NonpositiveDuration(ConfigError):
    pass


class OutOfDomain(ConfigError):
    pass


class NonuniformGrid(ConfigError):
    pass


class NonUnitary(ConfigError):
    pass


class ZeroTemperature(ConfigError):
    pass


class TooManySites(ConfigError):
    pass


# The Ising builder reports spins rather than sites.
TooManySpins = TooManySites


class ObjectiveEvaluationFailed(GeoQGateError):
    pass
