"""Integer-valued polynomials in the binomial basis and their growth functionals.

A polynomial ``P(x) = sum_k c_k * binom(x, k)`` is integer valued exactly when
every ``c_k`` is an integer, so :class:`IvpCoeffs` stores a tuple of Python ints.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
from mpmath import mp, mpf

from ._precision import CertifiedReal, parse_real, resolve_prec, ulp_bound, working
from .errors import InvalidSpec, NotIntegerValued


def binomial(n: int, k: int) -> int:
    """Exact binomial coefficient with an arbitrary integer upper argument.

    Uses the falling-factorial definition, so ``binomial(-n, k) ==
    (-1)**k * binomial(n + k - 1, k)``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if n >= 0:
        return math.comb(n, k)
    m = -n
    return (-1) ** k * math.comb(m + k - 1, k)


@dataclass(frozen=True)
class IvpCoeffs:
    """Coefficient vector of ``P_c`` in the binomial basis, in canonical form."""

    coeffs: tuple[int, ...]

    def __init__(self, coeffs: Iterable[int]):
        cs = [int(c) for c in coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [0]
        object.__setattr__(self, "coeffs", tuple(cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.coeffs == (0,)

    def __call__(self, n: int) -> int:
        return eval_ivp(self, n)

    def l1(self) -> int:
        return sum(abs(c) for c in self.coeffs)

    def padded(self, d: int) -> tuple[int, ...]:
        return self.coeffs + (0,) * (d + 1 - len(self.coeffs))

    def to_json(self) -> dict:
        return {"degree": self.degree, "coeffs": [str(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj: dict) -> "IvpCoeffs":
        coeffs = [int(c) for c in obj["coeffs"]]
        if len(coeffs) != int(obj["degree"]) + 1:
            raise ValueError("degree does not match the coefficient count")
        return cls(coeffs)


def eval_ivp(p: IvpCoeffs, n: int) -> int:
    """Exact value ``P_c(n)`` for any integer ``n``."""
    n = int(n)
    total = 0
    if n >= 0:
        # binom(n, k) via the multiplicative recurrence, stops at k > n
        b = 1
        for k, c in enumerate(p.coeffs):
            if k > n:
                break
            if k:
                b = b * (n - k + 1) // k
            total += c * b
        return total
    b = 1
    for k, c in enumerate(p.coeffs):
        if k:
            b = b * (n - k + 1) // k
        total += c * b
    return total


def to_monomial(p: IvpCoeffs) -> list[Fraction]:
    """Monomial coefficients ``q_0..q_d`` with ``sum q_j x^j == P_c(x)``."""
    d = p.degree
    out = [Fraction(0)] * (d + 1)
    falling = [Fraction(1)]  # x(x-1)...(x-k+1), lowest degree first
    fact = 1
    for k, c in enumerate(p.coeffs):
        if k:
            nxt = [Fraction(0)] * (len(falling) + 1)
            for j, a in enumerate(falling):
                nxt[j + 1] += a
                nxt[j] -= (k - 1) * a
            falling = nxt
            fact *= k
        if c:
            for j, a in enumerate(falling):
                out[j] += c * a / fact
    return out


def from_monomial(q: Sequence) -> IvpCoeffs:
    """Inverse of :func:`to_monomial`; raises NotIntegerValued off the lattice."""
    q = [Fraction(x) for x in q] or [Fraction(0)]
    d = len(q) - 1
    vals = []
    for n in range(d + 1):
        v = Fraction(0)
        for a in reversed(q):
            v = v * n + a
        vals.append(v)
    coeffs = []
    for k in range(d + 1):
        ck = sum((-1) ** (k - i) * math.comb(k, i) * vals[i] for i in range(k + 1))
        if ck.denominator != 1:
            raise NotIntegerValued(f"binomial coefficient c_{k} = {ck} is not an integer")
        coeffs.append(int(ck))
    return IvpCoeffs(coeffs)


class Norm(str, enum.Enum):
    LINF = "linf"
    L2 = "l2"
    L2_WEIGHTED = "l2w"


class Side(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class GrowthSpec:
    """Growth constraint: bases ``a`` (and ``b`` when two-sided), norm, threshold.

    For ``LINF`` the constraint is ``|P(n)| <= t a^n``; for the two ``L2``
    modes it is ``sum ... <= t**2``.
    """

    a: mpf
    mode: Norm = Norm.L2
    t: mpf = mpf(1)
    b: mpf | None = None

    def __post_init__(self):
        object.__setattr__(self, "a", parse_real(self.a))
        object.__setattr__(self, "t", parse_real(self.t))
        object.__setattr__(self, "mode", Norm(self.mode))
        if self.b is not None:
            object.__setattr__(self, "b", parse_real(self.b))
        if not self.a > 1:
            raise InvalidSpec(f"base A must exceed 1, got {self.a}")
        if self.b is not None and not self.b > 1:
            raise InvalidSpec(f"base B must exceed 1, got {self.b}")
        if not self.t > 0:
            raise InvalidSpec("threshold t must be positive")

    @property
    def two_sided(self) -> bool:
        return self.b is not None

    @property
    def t2(self) -> mpf:
        return self.t * self.t

    def base(self, side: Side) -> mpf:
        if Side(side) is Side.POSITIVE:
            return self.a
        if self.b is None:
            raise InvalidSpec("negative side requested but base B is absent")
        return self.b

    def replace(self, **kw) -> "GrowthSpec":
        fields = {"a": self.a, "mode": self.mode, "t": self.t, "b": self.b}
        fields.update(kw)
        return GrowthSpec(**fields)

    def to_json(self) -> dict:
        from ._precision import to_str

        return {
            "a": to_str(self.a),
            "b": None if self.b is None else to_str(self.b),
            "mode": self.mode.value,
            "t": to_str(self.t),
        }


# -- check range -------------------------------------------------------------


def c_a(a) -> mpf:
    """Smallest ``C`` satisfying the three growth conditions used to cap the
    ℓ∞ check range at ``C*d``, clamped below at ``e``.

    (i) ``exp(2/C) <= a``, (ii) ``6 a C <= a**(C/2)`` for every larger ``C``,
    (iii) ``1/(a-1) <= a**(C/2)``.
    """
    return _c_a(parse_real(a), mp.prec)


@functools.lru_cache(maxsize=256)
def _c_a(a: mpf, prec: int) -> mpf:
    a = parse_real(a)
    if not a > 1:
        raise InvalidSpec("c_a needs a > 1")
    la = mpmath.log(a)
    need = [mpmath.e, 2 / la]
    if a < 2:
        need.append(-2 * mpmath.log(a - 1) / la)

    def f(c):
        return c / 2 * la - mpmath.log(6 * a * c)

    # f is convex with minimum at 2/log a; we need the right-hand root
    x0 = 2 / la
    if f(x0) < 0:
        lo, hi = x0, 2 * x0
        while f(hi) < 0:
            lo, hi = hi, 2 * hi
        for _ in range(200):
            mid = (lo + hi) / 2
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
            if hi - lo < mpf(10) ** -12 * hi:
                break
        need.append(hi)
    return max(need)


def c_ab(a, b) -> mpf:
    return max(c_a(a), c_a(b))


def check_range(base, d: int) -> int:
    """``ceil(c_a(base) * d)``, never below ``d + 1``."""
    return max(int(mpmath.ceil(c_a(base) * d)), d + 1)


# -- growth functionals ------------------------------------------------------


def _abs_bound_pos(p: IvpCoeffs, n: int) -> int:
    return sum(abs(c) * math.comb(n, k) for k, c in enumerate(p.coeffs))


def _abs_bound_neg(p: IvpCoeffs, n: int) -> int:
    # |binom(-n, k)| = binom(n + k - 1, k)
    return sum(abs(c) * math.comb(n + k - 1, k) for k, c in enumerate(p.coeffs))


def _linf_tail_bound(p: IvpCoeffs, base: mpf, side: Side, n_last: int) -> mpf | None:
    """Bound on ``sup_{n > n_last} |P(±n)| base^{-n}``, or None if not yet monotone."""
    d = p.degree
    nxt = n_last + 1
    if side is Side.POSITIVE:
        # binom(n,k) base^{-n} decreases once n + 1 >= k base / (base - 1)
        if nxt + 1 < d * base / (base - 1):
            return None
        return _abs_bound_pos(p, nxt) * base ** (-nxt)
    if nxt < d / (base - 1):
        return None
    return _abs_bound_neg(p, nxt) * base ** (-nxt)


def linf_sup(p: IvpCoeffs, base, side: Side = Side.POSITIVE, n_start: int | None = None):
    """Certified ``sup |P(±n)| base^{-n}``; returns ``(value, argmax, range_used)``.

    Starts from the c_A d range and doubles it until an explicit tail bound
    on the remaining indices is dominated by the running maximum.
    """
    side = Side(side)
    base = mpf(base)
    d = p.degree
    first = 0 if side is Side.POSITIVE else 1
    if n_start is None:
        n_start = check_range(base, d) + (0 if side is Side.POSITIVE else 1)
    n_last = max(n_start, first)
    best, arg = mpf(0), first
    done = first - 1
    while True:
        for n in range(done + 1, n_last + 1):
            v = abs(eval_ivp(p, n if side is Side.POSITIVE else -n)) * base ** (-n)
            if v > best:
                best, arg = v, n
        done = n_last
        tail = _linf_tail_bound(p, base, side, n_last)
        if tail is not None and tail <= best:
            return best, arg, n_last
        if p.is_zero():
            return best, arg, n_last
        n_last *= 2


def _l2_series(p: IvpCoeffs, base: mpf, side: Side, weighted: bool, tol: mpf):
    d = p.degree
    first = 0 if side is Side.POSITIVE else 1
    sign = 1 if side is Side.POSITIVE else -1
    inv2 = base ** -2
    total = mpf(0)
    n = first
    w = inv2 ** first
    n_last = max(2 * d + 2, 8)
    while True:
        while n <= n_last:
            v = eval_ivp(p, sign * n)
            if v:
                term = v * v * w
                total += term / (n + 1) if weighted else term
            w *= inv2
            n += 1
        nxt = n_last + 1
        if side is Side.POSITIVE:
            ratio = (mpf(nxt + 1) / (nxt + 1 - d)) ** 2 * inv2
            s = _abs_bound_pos(p, nxt)
        else:
            ratio = (mpf(nxt + d) / nxt) ** 2 * inv2
            s = _abs_bound_neg(p, nxt)
        if ratio < 1:
            head = s * s * inv2 ** nxt
            if weighted:
                head /= nxt + 1
            tail = head / (1 - ratio)
            if tail <= tol:
                return total, tail, n_last
        n_last *= 2


def growth_functional(
    p: IvpCoeffs,
    spec: GrowthSpec,
    side: Side = Side.POSITIVE,
    *,
    tol=None,
    prec: int | None = None,
) -> CertifiedReal:
    """Growth functional of ``P`` on one side.

    ``LINF``: ``sup_n |P(±n)| base^{-n}``.  ``L2``: ``sum |P(±n)|^2 base^{-2n}``.
    ``L2_WEIGHTED``: the same series with weights ``1/(n+1)``.  The positive
    side runs over ``n >= 0``, the negative side over ``n >= 1``.
    """
    side = Side(side)
    with working(prec):
        base = spec.base(side)
        if p.is_zero():
            return CertifiedReal(mpf(0), mpf(0))
        if spec.mode is Norm.LINF:
            best, _, n_last = linf_sup(p, base, side)
            return CertifiedReal(best, ulp_bound(best, 4 * n_last.bit_length() + 8))
        tol = mpf(2) ** (-mp.prec) if tol is None else mpf(tol)
        total, tail, n_last = _l2_series(p, base, side, spec.mode is Norm.L2_WEIGHTED, tol)
        err = tail + ulp_bound(total, 3 * n_last + 4)
        return CertifiedReal(total + tail / 2, err)


def satisfies(p: IvpCoeffs, spec: GrowthSpec, prec: int | None = None) -> bool | None:
    """True/False when certified inside/outside the body, None when ambiguous."""
    sides = [Side.POSITIVE] + ([Side.NEGATIVE] if spec.two_sided else [])
    verdict = True
    with working(prec):
        bound = spec.t if spec.mode is Norm.LINF else spec.t2
        for side in sides:
            g = growth_functional(p, spec, side, prec=resolve_prec(prec))
            if g.lo > bound:
                return False
            if g.hi > bound:
                verdict = None
    return verdict
