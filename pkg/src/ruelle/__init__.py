"""Predicted resonance spectra and exactly tractable correlation models."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    DivergentIntegral,
    InsufficientDecades,
    NonzeroMean,
    NotHyperbolic,
    NotSymplectic,
    NumericFailure,
    PhaseCountMismatch,
    QuadratureFailure,
    RuelleError,
    UsageError,
    ZeroSeries,
)
from .spectral import IntMatrix, SpectrumData, random_symplectic, spectrum

__all__ = [
    "DivergentIntegral",
    "InsufficientDecades",
    "IntMatrix",
    "NonzeroMean",
    "NotHyperbolic",
    "NotSymplectic",
    "NumericFailure",
    "PhaseCountMismatch",
    "QuadratureFailure",
    "RuelleError",
    "SpectrumData",
    "UsageError",
    "ZeroSeries",
    "random_symplectic",
    "spectrum",
]
