"""High-precision integer-valued polynomial growth, capacity and lattice tools."""
from mpmath import mp

from ._precision import DEFAULT_PREC, CertifiedReal, golden
from .errors import IvpcapError
from .ivp import GrowthSpec, IvpCoeffs, Norm, Side

# a library of 256-bit computations; raise the global floor once on import
if mp.prec < DEFAULT_PREC:
    mp.prec = DEFAULT_PREC

__all__ = [
    "DEFAULT_PREC",
    "CertifiedReal",
    "GrowthSpec",
    "IvpCoeffs",
    "IvpcapError",
    "Norm",
    "Side",
    "golden",
]
__version__ = "0.1.0"
