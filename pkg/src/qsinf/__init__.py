"""Finite-dimensional quantum statistical inference toolkit."""

from . import epr, instrument, measure, qcore, qinfo, qmodels, rng, serialize, tomo, trajectory
from .qcore import BlochVector, DensityMatrix, StateVector

__all__ = [
    "BlochVector",
    "DensityMatrix",
    "StateVector",
    "epr",
    "instrument",
    "measure",
    "qcore",
    "qinfo",
    "qmodels",
    "rng",
    "serialize",
    "tomo",
    "trajectory",
]

__version__ = "0.1.0"
