"""Generating functions of integer-valued polynomials and Möbius changes of variable.

``g_P(z) = sum_n P(n) z^n`` continues to ``C minus {1}`` as
``(1/(1-z)) * sum_k c_k (z/(1-z))^k``.  Under ``w = psi(z) = z/(1-z)`` the
circles ``|z| = 1/A`` and ``|z| = B`` become circles in the ``w`` plane whose
union carries the Gram matrices of :mod:`ivpcap.gram`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import mpmath
import numpy as np
from mpmath import mp, mpc, mpf

from ._precision import CertifiedReal, parse_real, to_str, working
from .errors import InvalidBase, InvalidSpec, PoleAtOne, QuadratureNotConverged
from .ivp import GrowthSpec, IvpCoeffs, Norm, Side, growth_functional

ComplexHP = mpc


def complex_to_json(z) -> list[str]:
    z = mpc(z)
    return [to_str(z.real), to_str(z.imag)]


def complex_from_json(pair) -> mpc:
    return mpc(mpf(pair[0]), mpf(pair[1]))


@dataclass(frozen=True)
class CircleSpec:
    center: mpc
    radius: mpf

    def __post_init__(self):
        object.__setattr__(self, "center", mpc(self.center))
        object.__setattr__(self, "radius", mpf(self.radius))
        if not self.radius > 0:
            raise InvalidSpec("circle radius must be positive")

    def point(self, theta) -> mpc:
        return self.center + self.radius * mpmath.expj(theta)

    def distance(self, w) -> mpf:
        """Distance from ``w`` to the circle (not the disk)."""
        return abs(abs(mpc(w) - self.center) - self.radius)

    def to_json(self) -> dict:
        return {"center": complex_to_json(self.center), "radius": to_str(self.radius)}


def _pole_guard(dist, what: str):
    if dist < mpf(2) ** (-(mp.prec // 2)):
        raise PoleAtOne(f"{what} is within 2^-{mp.prec // 2} of the pole")


def gen_func_eval(p: IvpCoeffs, z, prec: int | None = None) -> mpc:
    """Value of the analytically continued generating function at ``z``."""
    with working(prec):
        z = mpc(z)
        one_minus = 1 - z
        _pole_guard(abs(one_minus), "z")
        w = z / one_minus
        acc = mpc(0)
        for c in reversed(p.coeffs):
            acc = acc * w + c
        return acc / one_minus


def mobius_psi(z, prec: int | None = None) -> mpc:
    """``psi(z) = z / (1 - z)``."""
    with working(prec):
        z = mpc(z)
        _pole_guard(abs(1 - z), "z")
        return z / (1 - z)


def mobius_phi(w, prec: int | None = None) -> mpc:
    """``phi(w) = w / (1 + w)``, the inverse of :func:`mobius_psi`."""
    with working(prec):
        w = mpc(w)
        _pole_guard(abs(1 + w), "w")
        return w / (1 + w)


def mobius_phi_prime(w) -> mpc:
    w = mpc(w)
    return 1 / (1 + w) ** 2


def psi_circle(r) -> CircleSpec:
    """Image under ``psi`` of the circle ``|z| = r``, ``r != 1``."""
    r = parse_real(r)
    if r == 1 or not r > 0:
        raise InvalidSpec("radius must be positive and different from 1")
    return CircleSpec(mpc(r * r / (1 - r * r)), r / abs(1 - r * r))


class Orientation(str, enum.Enum):
    POSITIVE_SIDE = "positive"
    NEGATIVE_SIDE = "negative"


def image_circle(base, orientation: Orientation = Orientation.POSITIVE_SIDE) -> CircleSpec:
    """Circle carrying the positive-side (``|z| = 1/A``) or negative-side
    (``|z| = B``) constraint after the change of variables."""
    base = parse_real(base)
    if not base > 1:
        raise InvalidBase(f"base must exceed 1, got {base}")
    b2 = base * base
    if Orientation(orientation) is Orientation.POSITIVE_SIDE:
        return CircleSpec(mpc(1 / (b2 - 1)), base / (b2 - 1))
    return CircleSpec(mpc(b2 / (1 - b2)), base / (b2 - 1))


# -- quadrature oracles ------------------------------------------------------


class Measure(str, enum.Enum):
    ARC = "arc"
    AREA = "area"
    EXTERIOR_AREA = "exterior_area"


def _horner_g(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vectorized ``g_P(z)`` in double precision."""
    w = z / (1 - z)
    acc = np.zeros_like(z)
    for c in coeffs[::-1]:
        acc = acc * w + c
    return acc / (1 - z)


def _arc_mean(f, radius: float, n: int) -> float:
    """Trapezoid mean of ``|f|^2`` over ``n`` equispaced points of ``radius*T``."""
    z = radius * np.exp(2j * np.pi * np.arange(n) / n)
    return float(np.mean(np.abs(f(z)) ** 2))


def _disk_mean(f, radius: float, n_theta: int, n_gl: int) -> float:
    """``(1/(pi r^2)) * integral of |f|^2 over the disk of radius r``.

    With ``s = (rho/r)^2`` the integral becomes ``int_0^1 arcmean(r sqrt(s)) ds``,
    evaluated by Gauss-Legendre in ``s`` and the trapezoid rule in angle.
    """
    x, w = np.polynomial.legendre.leggauss(n_gl)
    s = (x + 1) / 2
    rho = radius * np.sqrt(s)[:, None]
    z = rho * np.exp(2j * np.pi * np.arange(n_theta) / n_theta)[None, :]
    means = np.mean(np.abs(f(z)) ** 2, axis=1)
    return float(np.dot(w / 2, means))


def _refine(level_value, max_level: int, tol: float):
    prev = level_value(0)
    for level in range(1, max_level + 1):
        cur = level_value(level)
        diff = abs(cur - prev)
        if diff <= tol * max(1.0, abs(cur)):
            return cur, diff
        prev = cur
    raise QuadratureNotConverged(f"no agreement after {max_level} refinements")


def quadrature_identity_check(
    p: IvpCoeffs,
    r,
    measure: Measure = Measure.ARC,
    *,
    tol: float = 1e-13,
    max_level: int = 8,
    prec: int | None = None,
) -> tuple[CertifiedReal, CertifiedReal]:
    """Compare a quadrature of ``|g_P|^2`` with the matching coefficient series.

    ``ARC`` with ``r < 1``: normalized arc integral on ``|w| = r`` vs
    ``sum P(n)^2 r^{2n}``; with ``r > 1``: vs ``sum_{n>=1} P(-n)^2 r^{-2n}``.
    ``AREA`` (``r < 1``): normalized disk integral vs ``sum P(n)^2 r^{2n}/(n+1)``.
    ``EXTERIOR_AREA`` (``r > 1``): ``(r^2/pi) int_{|w|>r} |g|^2 |w|^{-4} dA`` vs
    ``sum_{n>=1} P(-n)^2 r^{-2n}/(n+1)``.

    The quadrature side runs in double precision with node doubling until two
    levels agree to ``tol``; the series side is computed at working precision.
    """
    measure = Measure(measure)
    with working(prec):
        r = parse_real(r)
        if abs(r - 1) < mpf(2) ** -20:
            raise InvalidSpec("radius must stay away from 1")
        inner = r < 1
        if measure is Measure.AREA and not inner:
            raise InvalidSpec("area identity needs r < 1")
        if measure is Measure.EXTERIOR_AREA and inner:
            raise InvalidSpec("exterior area identity needs r > 1")

        coeffs = np.array([float(c) for c in p.coeffs], dtype=complex)
        rf = float(r)

        def g(z):
            return _horner_g(coeffs, z)

        def h(u):
            # g(1/u); the quadrature nodes never touch u = 0
            return _horner_g(coeffs, 1 / u)

        if measure is Measure.ARC:
            lhs_fn = lambda lv: _arc_mean(g, rf, 32 * 2 ** lv)  # noqa: E731
        elif measure is Measure.AREA:
            lhs_fn = lambda lv: _disk_mean(g, rf, 32 * 2 ** lv, 8 * 2 ** lv)  # noqa: E731
        else:
            lhs_fn = lambda lv: _disk_mean(h, 1 / rf, 32 * 2 ** lv, 8 * 2 ** lv)  # noqa: E731

        if p.is_zero():
            zero = CertifiedReal(mpf(0), mpf(0))
            return zero, zero
        value, diff = _refine(lhs_fn, max_level, tol)
        # double-precision rounding of a mean of n moderate terms
        rounding = 64 * np.finfo(float).eps * abs(value)
        lhs = CertifiedReal(mpf(value), mpf(diff + rounding))

        weighted = measure is not Measure.ARC
        mode = Norm.L2_WEIGHTED if weighted else Norm.L2
        if inner:
            spec = GrowthSpec(a=1 / r, mode=mode)
            rhs = growth_functional(p, spec, Side.POSITIVE)
        else:
            spec = GrowthSpec(a=2, b=r, mode=mode)
            rhs = growth_functional(p, spec, Side.NEGATIVE)
        return lhs, rhs
