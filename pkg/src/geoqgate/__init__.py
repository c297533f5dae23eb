"""Counterdiabatic geometric gates: gauge potentials, open-path geometric invariants and noisy gate fidelity."""

from .errors import (
    GeoQGateError,
    ConfigError,
    NumericalFailure,
    NonHermitianInput,
    DimensionMismatch,
    StepTooCoarse,
    DegenerateSpectrum,
    GaugeDiscontinuity,
    GapClosure,
    OriginSingularity,
    EndpointMismatch,
    OpenLoop,
    NonpositiveDuration,
    OutOfDomain,
    NonuniformGrid,
    NonUnitary,
    ZeroTemperature,
    TooManySites,
    ObjectiveEvaluationFailed,
)

__version__ = "0.1.0"

__all__ = [
    "GeoQGateError",
    "ConfigError",
    "NumericalFailure",
    "NonHermitianInput",
    "DimensionMismatch",
    "StepTooCoarse",
    "DegenerateSpectrum",
    "GaugeDiscontinuity",
    "GapClosure",
    "OriginSingularity",
    "EndpointMismatch",
    "OpenLoop",
    "NonpositiveDuration",
    "OutOfDomain",
    "NonuniformGrid",
    "NonUnitary",
    "ZeroTemperature",
    "TooManySites",
    "ObjectiveEvaluationFailed",
]
