"""Working precision, real parsing and the certified-real container."""
from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass

import mpmath
from mpmath import mp, mpf

DEFAULT_PREC = int(os.environ.get("IVPCAP_PRECISION", "256"))


def set_default_precision(bits: int) -> None:
    """Change the package-wide default working precision (bits, at least 64)."""
    global DEFAULT_PREC
    if int(bits) < 64:
        raise ValueError("precision must be at least 64 bits")
    DEFAULT_PREC = int(bits)
    mp.prec = DEFAULT_PREC


def resolve_prec(prec: int | None) -> int:
    return DEFAULT_PREC if prec is None else int(prec)


@contextmanager
def working(prec: int | None = None):
    """Run a block at ``prec`` bits (module default when ``None``)."""
    with mp.workprec(resolve_prec(prec)):
        yield


def golden() -> mpf:
    with mp.workprec(max(mp.prec, DEFAULT_PREC)):
        return (1 + mpmath.sqrt(5)) / 2


def parse_real(text) -> mpf:
    """Parse a decimal string, number, or the keyword ``golden``.

    The result carries at least the package default precision, so ``golden``
    never arrives as a user-truncated decimal.
    """
    if isinstance(text, str):
        key = text.strip().lower()
        if key in ("golden", "phi"):
            return golden()
        with mp.workprec(max(mp.prec, DEFAULT_PREC)):
            return mpf(key)
    return mpf(text)


def to_str(x, digits: int | None = None) -> str:
    """Decimal string with enough digits to round-trip the working precision."""
    if digits is None:
        digits = max(15, int(mp.prec * 0.30103) + 1)
    return mpmath.nstr(mpf(x), digits, strip_zeros=False, min_fixed=-5, max_fixed=5)


def ulp_bound(magnitude, n_ops: int = 1) -> mpf:
    """Worst-case accumulated rounding for ``n_ops`` operations at ``magnitude``."""
    return abs(mpf(magnitude)) * (n_ops + 1) * mpf(2) ** (1 - mp.prec)


@dataclass(frozen=True)
class CertifiedReal:
    """A value with an absolute error bound: truth lies in [value-error, value+error]."""

    value: mpf
    error: mpf

    def __post_init__(self):
        if self.error < 0:
            raise ValueError("error bound must be nonnegative")

    @property
    def lo(self) -> mpf:
        return self.value - self.error

    @property
    def hi(self) -> mpf:
        return self.value + self.error

    def contains(self, x, slack=0) -> bool:
        return abs(mpf(x) - self.value) <= self.error + slack

    def to_json(self) -> dict:
        return {"value": to_str(self.value), "error": to_str(self.error, 6)}

    def __float__(self):
        return float(self.value)
