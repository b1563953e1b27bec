"""Logarithmic capacity of two disjoint disks.

The closed form uses the Jacobi theta function ``theta_1`` with nome
``q = 1/(AB)``; an independent estimate comes from the growth rate of the
Szegő norms of the union of the two image circles.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass

import mpmath
from mpmath import mp, mpc, mpf

from ._precision import CertifiedReal, golden, parse_real, resolve_prec, to_str, working
from .errors import InvalidBase, NoBracket, NomeOutOfRange, NotPositiveDefinite
from .genfunc import Orientation, image_circle
from .gram import circle_gram, op_norms


@dataclass(frozen=True)
class CapacityValue:
    value: mpf
    error: mpf
    method: str = "theta"

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("capacity must be positive")

    def to_json(self, a=None, b=None) -> dict:
        out = {}
        if a is not None:
            out["a"] = to_str(a)
        if b is not None:
            out["b"] = to_str(b)
        out.update({"gamma": to_str(self.value), "error": to_str(self.error, 6),
                    "method": self.method})
        return out


@dataclass(frozen=True)
class ThetaParams:
    nome: mpf

    def __post_init__(self):
        q = mpf(self.nome)
        if not 0 < q < 1:
            raise NomeOutOfRange(f"nome must lie in (0, 1), got {q}")
        object.__setattr__(self, "nome", q)


def theta1(z, q, prec: int | None = None) -> tuple[mpc, mpf]:
    """``theta_1(z, q) = 2 sum (-1)^n q^((n+1/2)^2) sin((2n+1) z)`` and its error bound."""
    with working(prec):
        q = ThetaParams(q).nome
        z = mpc(z)
        growth = mpmath.exp(abs(mpmath.im(z)))
        tol = mpf(2) ** (-mp.prec) * max(1, abs(mpmath.sin(z)))
        acc = mpc(0)
        absum = mpf(0)
        n = 0
        while True:
            term = q ** ((n + mpf(1) / 2) ** 2) * mpmath.sin((2 * n + 1) * z)
            acc += (-1) ** n * term
            absum += abs(term)
            # |sin((2m+1) z)| <= growth^(2m+1); later terms shrink geometrically
            nxt = q ** ((n + mpf(3) / 2) ** 2) * growth ** (2 * n + 3)
            ratio = q ** (2 * n + 4) * growth ** 2
            if ratio < 1 and nxt / (1 - ratio) < tol:
                tail = nxt / (1 - ratio)
                break
            n += 1
        val = 2 * acc
        # cancellation: rounding scales with the sum of term magnitudes
        err = 2 * tail + 2 * absum * (n + 64) * mpf(2) ** (-mp.prec)
        return val, err


def theta1_prime0(q, prec: int | None = None) -> CertifiedReal:
    """``theta_1'(0, q)`` from its series, cross-checked with
    ``2 q^(1/4) prod (1 - q^(2n))^3``."""
    with working(prec):
        q = ThetaParams(q).nome
        acc = mpf(0)
        absum = mpf(0)
        n = 0
        tol = mpf(2) ** (-mp.prec)
        while True:
            term = (2 * n + 1) * q ** ((n + mpf(1) / 2) ** 2)
            acc += (-1) ** n * term
            absum += term
            nxt = (2 * n + 3) * q ** ((n + mpf(3) / 2) ** 2)
            ratio = q ** (2 * n + 4) * mpf(2 * n + 5) / (2 * n + 3)
            if ratio < 1 and nxt / (1 - ratio) < tol * absum:
                tail = nxt / (1 - ratio)
                break
            n += 1
        series = 2 * acc
        prod = mpf(1)
        k = 1
        while True:
            f = q ** (2 * k)
            prod *= (1 - f) ** 3
            if f < tol:
                break
            k += 1
        product = 2 * q ** (mpf(1) / 4) * prod
        err = 2 * tail + 2 * absum * (4 * n + 16) * mpf(2) ** (-mp.prec)
        # the product converges geometrically: truncation error <= 3 * next factor
        perr = abs(product) * (3 * q ** (2 * k + 2) / (1 - q ** 2) + (4 * k + 16) * tol)
        if abs(series - product) > 4 * (err + perr):
            raise ArithmeticError("theta_1'(0) series and product forms disagree")
        return CertifiedReal(series, err)


def _check_base(x) -> mpf:
    x = parse_real(x)
    if not x > 1:
        raise InvalidBase(f"base must exceed 1, got {x}")
    return x


def capacity_two_disks(a, b, prec: int | None = None) -> CapacityValue:
    """Logarithmic capacity of the union of the two image disks of bases ``a``, ``b``."""
    with working(prec):
        a, b = _check_base(a), _check_base(b)
        la, lb = mpmath.log(a), mpmath.log(b)
        q = 1 / (a * b)
        tp = theta1_prime0(q)
        ta, ea = theta1(mpc(0, la), q)
        tb, eb = theta1(mpc(0, lb), q)
        pref = mpmath.exp((la * la + lb * lb) / (2 * (la + lb))) / 2
        denom = mpmath.sqrt(abs(ta * tb))
        value = pref * tp.value / denom
        rel = tp.error / abs(tp.value) + (ea / abs(ta) + eb / abs(tb)) / 2
        err = abs(value) * (rel + 32 * mpf(2) ** (-mp.prec))
        return CapacityValue(value, err, "theta")


def single_disk_capacity(base) -> mpf:
    """Radius ``base/(base^2-1)`` of one image disk."""
    base = _check_base(base)
    return base / (base * base - 1)


def bump_average(values, k0: int, k1: int) -> mpf:
    """Average of ``values[k0..k1]`` with the smooth bump ``exp(-1/(x(1-x)))``.

    Smooth windows average quasi-periodic oscillations away at a rate faster
    than any power of the window length.
    """
    num = mpf(0)
    den = mpf(0)
    span = k1 - k0 + 2
    for k in range(k0, k1 + 1):
        x = mpf(k - k0 + 1) / span
        w = mpmath.exp(-1 / (x * (1 - x)))
        num += w * values[k]
        den += w
    return num / den


def _op_norms_two_circles(a, b, kmax: int, prec: int):
    while True:
        try:
            with working(prec):
                circles = [image_circle(a, Orientation.POSITIVE_SIDE)]
                weights = [a]
                if b is not None:
                    circles.append(image_circle(b, Orientation.NEGATIVE_SIDE))
                    weights.append(1 / b)
                return op_norms(circle_gram(circles, weights, kmax)), prec
        except NotPositiveDefinite:
            if prec > 8192:
                raise
            prec *= 2


def capacity_via_op_norms(a, b=None, kmax: int = 80, *, estimator: str = "bump",
                          prec: int | None = None) -> CapacityValue:
    """Capacity estimate from the growth of Szegő norms on the image circles.

    ``estimator="bump"`` (default) exponentiates a bump-weighted average of
    ``log(beta_{k+1}/beta_k)`` over ``k in [kmax/2, kmax)``; the error bar is twice
    its largest change against the windows ``[kmax/4, kmax)`` and
    ``[3 kmax/8, 7 kmax/8)``.  ``estimator="median"`` takes the
    median ratio over the top quartile, with the spread as error bar.  With
    ``b=None`` only the positive-side circle is used.
    """
    if kmax < 20:
        raise ValueError("kmax must be at least 20")
    base_prec = max(resolve_prec(prec), 256 + 6 * kmax)
    with working(base_prec):
        a = _check_base(a)
        b = None if b is None else _check_base(b)
    norms, used = _op_norms_two_circles(a, b, kmax, base_prec)
    with working(used):
        ratios = norms.ratios()
        if estimator == "median":
            top = ratios[(3 * kmax) // 4:]
            med = statistics.median(top)
            spread = (max(top) - min(top)) / 2
            return CapacityValue(med, spread, "op-ratio-median")
        if estimator != "bump":
            raise ValueError(f"unknown estimator {estimator!r}")
        logs = [mpmath.log(r) for r in ratios]
        est = bump_average(logs, kmax // 2, kmax - 1)
        alts = [bump_average(logs, kmax // 4, kmax - 1),
                bump_average(logs, kmax // 2 - kmax // 8, kmax - 1 - kmax // 8)]
        value = mpmath.exp(est)
        spread = max(abs(est - x) for x in alts)
        return CapacityValue(value, 2 * value * spread, "op-ratio-bump")


# -- level sets --------------------------------------------------------------


def _bisect_decreasing(f, lo: mpf, hi: mpf, tol: mpf, max_iter: int = 400) -> mpf:
    """Root of a decreasing function with ``f(lo) > 0 >= f(hi)``."""
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = (lo + hi) / 2
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def level_b(a, level=1, tol=mpf(10) ** -12, b_cap=64, prec: int | None = None) -> mpf:
    """``B`` with ``gamma_{a,B} = level``; ``gamma`` decreases strictly in ``B``."""
    with working(prec):
        a = _check_base(a)
        level, tol, b_cap = mpf(level), mpf(tol), mpf(b_cap)

        def f(bv):
            return capacity_two_disks(a, bv).value - level

        lo = golden()
        while f(lo) <= 0:
            lo = 1 + (lo - 1) / 2
            if lo - 1 < mpf(10) ** -12:
                raise NoBracket("capacity stays below the level for every B > 1")
        if f(b_cap) > 0:
            raise NoBracket(f"capacity exceeds {mpmath.nstr(level, 6)} for all B up to {b_cap}")
        return _bisect_decreasing(f, lo, b_cap, tol)


def critical_b(a, tol=mpf(10) ** -12, b_cap=64, prec: int | None = None) -> mpf:
    """Point ``B`` of the critical curve ``gamma_{a,B} = 1``.

    Requires ``a > phi``; the bracket is ``[phi, b_cap]``, where ``gamma >= 1``
    holds at the lower end because the second disk alone has radius 1.
    """
    with working(prec):
        a = _check_base(a)
        if not a > golden():
            raise NoBracket("no critical point exists for a <= phi")
        return level_b(a, 1, tol, b_cap)


def diagonal_level(level, tol=mpf(10) ** -12, prec: int | None = None) -> mpf:
    """``A`` with ``gamma_{A,A} = level`` (decreasing in ``A``)."""
    with working(prec):
        level, tol = mpf(level), mpf(tol)

        def f(x):
            return capacity_two_disks(x, x).value - level

        lo, hi = mpf("1.5"), mpf(2)
        while f(lo) <= 0:
            lo = 1 + (lo - 1) / 2
        while f(hi) > 0:
            hi *= 2
        return _bisect_decreasing(f, lo, hi, tol)


@dataclass(frozen=True)
class CurvePoint:
    a: mpf
    b: mpf | None
    residual: mpf | None
    status: str


def critical_curve(a_min, a_max, steps: int, tol=mpf(10) ** -12,
                   prec: int | None = None) -> list[CurvePoint]:
    """Grid of critical-curve points; rows without a bracket keep ``b=None``."""
    with working(prec):
        a_min, a_max = parse_real(a_min), parse_real(a_max)
        if not (golden() < a_min < a_max):
            raise ValueError("need phi < a_min < a_max")
        if steps < 2:
            raise ValueError("need at least two grid points")
        rows = []
        for i in range(steps):
            a = a_min + (a_max - a_min) * i / (steps - 1)
            try:
                b = critical_b(a, tol)
                res = capacity_two_disks(a, b).value - 1
                rows.append(CurvePoint(a, b, res, "ok"))
            except NoBracket:
                rows.append(CurvePoint(a, None, None, "no_bracket"))
        return rows


def log_mean_modulus(a, tol=mpf(10) ** -30, max_level: int = 14,
                     prec: int | None = None) -> mpf:
    """``(1/2 pi) int_0^{2 pi} log|e^{i theta} + a| d theta`` by the trapezoid rule.

    The integrand is periodic and analytic for ``a != 1``, so node doubling
    converges geometrically; the exact value is ``log max(a, 1)``.
    """
    with working(prec):
        a = parse_real(a)
        if a < 0 or a == 1:
            raise ValueError("need a >= 0 and a != 1")
        prev = None
        n = 16
        for _ in range(max_level):
            step = 2 * mpmath.pi / n
            val = mpmath.fsum(mpmath.log(abs(mpmath.expj(j * step) + a)) for j in range(n)) / n
            if prev is not None and abs(val - prev) <= tol:
                return val
            prev = val
            n *= 2
        raise ArithmeticError("trapezoid rule did not settle")
