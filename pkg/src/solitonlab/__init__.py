"""Numerical toolkit for rotational self-similar solutions of curvature flows."""
from .errors import ArgError, DomainError, MultipleRootsWarning, RootFindFailed, SolitonLabError
from .speed import (Custom, GaussPower, HarmonicMeanPower, MeanCurvature, NormASquared, PowerMean,
                    QuadraticHK, SpeedFunction)

__all__ = [
    "ArgError", "DomainError", "MultipleRootsWarning", "RootFindFailed", "SolitonLabError",
    "Custom", "GaussPower", "HarmonicMeanPower", "MeanCurvature", "NormASquared", "PowerMean",
    "QuadraticHK", "SpeedFunction",
]
__version__ = "0.1.0"
