"""Moment and Gram matrices, their Cholesky factors, determinants and OP norms.

Entries are high-precision reals.  Every matrix carries a uniform bound on the
absolute error of its entries (series truncation plus rounding), and the
factorization refuses to return a factor when a pivot is not clearly above
that bound.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import mpmath
from mpmath import mp, mpf

from ._precision import CertifiedReal, parse_real, resolve_prec, to_str, working
from .errors import DisksOverlap, InvalidSpec, NotPositiveDefinite
from .genfunc import CircleSpec, Orientation, image_circle
from .ivp import GrowthSpec, Norm, c_a


class GramMode(str, enum.Enum):
    L2_CIRCLE = "L2Circle"
    L2_TWO_CIRCLES = "L2TwoCircles"
    BERGMAN_DISK = "BergmanDisk"
    BERGMAN_TWO_DISKS = "BergmanTwoDisks"
    WEIGHTED_L2 = "WeightedL2"
    SIGMA_INFINITY = "SigmaInfinity"


# prefactor conventions, stated once per mode
PREFACTORS = {
    GramMode.L2_CIRCLE: "sum_n binom(n,j) binom(n,k) A^-2n; equals A/(2 pi) times the arc moments on the image circle",
    GramMode.L2_TWO_CIRCLES: "positive side as L2Circle plus sum_{n>=1} binom(-n,j) binom(-n,k) B^-2n",
    GramMode.WEIGHTED_L2: "as L2Circle/L2TwoCircles with weights 1/(n+1)",
    GramMode.SIGMA_INFINITY: "L2 (one or two sided) divided by 4 t^2, i.e. Sigma rows binom(n,k) A^-n / (2t)",
    GramMode.BERGMAN_DISK: "raw area moments int w^j conj(w)^k dA over one disk",
    GramMode.BERGMAN_TWO_DISKS: "raw area moments summed over two disjoint disks",
}


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric matrix with a uniform per-entry absolute error bound."""

    entries: tuple[tuple[mpf, ...], ...]
    entry_tail_bound: mpf
    mode: GramMode
    params: GrowthSpec | None = None
    truncation: int | None = None
    prec: int = field(default_factory=lambda: resolve_prec(None))
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.entries)

    @property
    def d(self) -> int:
        return self.dim - 1

    def __getitem__(self, jk):
        j, k = jk
        return self.entries[j][k]

    def leading(self, size: int) -> "GramMatrix":
        """Leading principal ``size`` x ``size`` block."""
        rows = tuple(tuple(r[:size]) for r in self.entries[:size])
        return GramMatrix(rows, self.entry_tail_bound, self.mode, self.params,
                          self.truncation, self.prec, dict(self.meta))

    def scaled(self, factor) -> "GramMatrix":
        factor = mpf(factor)
        rows = tuple(tuple(x * factor for x in r) for r in self.entries)
        return GramMatrix(rows, self.entry_tail_bound * abs(factor), self.mode, self.params,
                          self.truncation, self.prec, dict(self.meta))

    def to_json(self) -> dict:
        with working(self.prec):
            return {
                "mode": self.mode.value,
                "dim": self.dim,
                "prefactor": PREFACTORS[self.mode],
                "params": None if self.params is None else self.params.to_json(),
                "truncation": self.truncation,
                "precision_bits": self.prec,
                "entry_tail_bound": to_str(self.entry_tail_bound, 6),
                "entries": [[to_str(x) for x in row] for row in self.entries],
            }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def from_rows(rows, tail=0, mode=GramMode.L2_CIRCLE, params=None, prec=None) -> GramMatrix:
    """Wrap an explicit symmetric matrix (used for tests and for ellipsoids)."""
    with working(prec):
        entries = tuple(tuple(mpf(x) for x in r) for r in rows)
    n = len(entries)
    if any(len(r) != n for r in entries):
        raise InvalidSpec("matrix must be square")
    for j in range(n):
        for k in range(j):
            if entries[j][k] != entries[k][j]:
                raise InvalidSpec("matrix must be symmetric")
    return GramMatrix(entries, mpf(tail), GramMode(mode), params, None, resolve_prec(prec))


# -- truncation --------------------------------------------------------------


def geometric_truncation_l(base, n: int, eps, negative: bool = False) -> mpf:
    """Smallest ``L`` for which the geometric tail bound on the entries beyond
    index ``L*n`` is below ``eps``.

    Positive side: ``(A/(A-1)) exp((2 - L log A) n)``.  Negative side:
    ``exp(2n) B^(-L n) / (B - 1)``.  Both are solved for ``L`` in closed form.
    """
    base, eps = mpf(base), mpf(eps)
    lb = mpmath.log(base)
    if negative:
        return (2 * n + mpmath.log(1 / ((base - 1) * eps))) / (n * lb)
    return (2 + mpmath.log(base / (base - 1) / eps) / n) / lb


def _ratio_tail(base: mpf, d: int, m: int, negative: bool, weighted: bool) -> mpf | None:
    """Rigorous bound on ``sum_{n>m}`` of the largest entry's terms, or None.

    Term ratios are bounded by ``((n+1)/(n+1-d))^2 A^-2`` (positive side) or
    ``((n+d)/n)^2 B^-2`` (negative side), both decreasing in ``n``; the
    ``(d, d)`` entry dominates every other entry term by term once ``n >= 2d``.
    """
    nxt = m + 1
    inv2 = base ** -2
    if negative:
        if nxt < 1:
            return None
        ratio = (mpf(nxt + d) / nxt) ** 2 * inv2
        head = mpf(math.comb(nxt + d - 1, d)) ** 2 * inv2 ** nxt
    else:
        if nxt < 2 * d or nxt + 1 - d <= 0:
            return None
        ratio = (mpf(nxt + 1) / (nxt + 1 - d)) ** 2 * inv2
        head = mpf(math.comb(nxt, d)) ** 2 * inv2 ** nxt
    if ratio >= 1:
        return None
    if weighted:
        head /= nxt + 1
    return head / (1 - ratio)


def truncation_index(spec: GrowthSpec, d: int, eps, *, side_negative: bool = False) -> int:
    """Truncation ``M`` for the entry series of degree ``d``.

    Starts from ``ceil(L (d+1))`` with ``L`` from :func:`geometric_truncation_l`,
    never below ``ceil(c_A d)`` or ``ceil(e d)``, and then grows ``M`` until the
    rigorous ratio tail bound is also below ``eps``.
    """
    eps = mpf(eps)
    if not eps > 0:
        raise InvalidSpec("eps must be positive")
    n = d + 1
    base = spec.b if side_negative else spec.a
    lval = geometric_truncation_l(base, n, eps, side_negative)
    m = max(int(mpmath.ceil(lval * n)), int(mpmath.ceil(c_a(base) * d)),
            int(mpmath.ceil(mpmath.e * d)), 1)
    weighted = spec.mode is Norm.L2_WEIGHTED
    while True:
        tail = _ratio_tail(base, d, m, side_negative, weighted)
        if tail is not None and tail <= eps:
            return m
        m += max(1, m // 8)


# -- series and closed-form constructions -------------------------------------


def _series_side(base: mpf, d: int, m: int, negative: bool, weighted: bool):
    """Accumulate ``sum_n w_n b_n b_n^T`` for ``n`` in the side's range up to ``m``."""
    size = d + 1
    acc = [[mpf(0)] * size for _ in range(size)]
    inv2 = base ** -2
    w = inv2 if negative else mpf(1)
    start = 1 if negative else 0
    for n in range(start, m + 1):
        if negative:
            b = [(-1) ** k * math.comb(n + k - 1, k) for k in range(size)]
        else:
            b = [math.comb(n, k) for k in range(size)]
        wn = w / (n + 1) if weighted else w
        wb = [wn * x for x in b]
        for j in range(size):
            if not b[j]:
                continue
            row = acc[j]
            wbj = wb[j]
            for k in range(j + 1):
                if b[k]:
                    row[k] += wbj * b[k]
        w *= inv2
    for j in range(size):
        for k in range(j):
            acc[k][j] = acc[j][k]
    terms = m + 1
    return acc, terms


def _rounding_bound(acc, n_ops: int) -> mpf:
    big = max((abs(x) for r in acc for x in r), default=mpf(0))
    return big * (n_ops + 2) * mpf(2) ** (1 - mp.prec)


def circle_moments(circle: CircleSpec, d: int, weight=1):
    """``weight * (1/2 pi) int w^j conj(w)^k |dw|`` over a circle with real center."""
    a = mpmath.re(circle.center)
    if mpmath.im(circle.center) != 0:
        raise InvalidSpec("closed-form moments need a real center")
    rho = circle.radius
    return _binomial_moments(a, d, [mpf(weight) * rho * rho ** (2 * m) for m in range(d + 1)])


def disk_area_moments(circle: CircleSpec, d: int):
    """``int w^j conj(w)^k dA`` over a disk with real center."""
    a = mpmath.re(circle.center)
    if mpmath.im(circle.center) != 0:
        raise InvalidSpec("closed-form moments need a real center")
    rho = circle.radius
    return _binomial_moments(a, d, [mpmath.pi * rho ** (2 * m + 2) / (m + 1) for m in range(d + 1)])


def _binomial_moments(a: mpf, d: int, radial):
    """``sum_m C(j,m) C(k,m) a^(j+k-2m) radial[m]``, the moments of a rotation-
    invariant measure translated to center ``a``."""
    size = d + 1
    apow = [a ** i for i in range(2 * size)]
    out = [[mpf(0)] * size for _ in range(size)]
    for j in range(size):
        for k in range(j + 1):
            s = mpf(0)
            for m in range(k + 1):
                s += math.comb(j, m) * math.comb(k, m) * apow[j + k - 2 * m] * radial[m]
            out[j][k] = out[k][j] = s
    return out


def _add(x, y):
    return [[p + q for p, q in zip(r, s)] for r, s in zip(x, y)]


def _freeze(acc):
    return tuple(tuple(r) for r in acc)


def gram_matrix(
    spec: GrowthSpec,
    d: int,
    eps=None,
    *,
    mode: GramMode | None = None,
    method: str = "series",
    truncation: int | None = None,
    prec: int | None = None,
) -> GramMatrix:
    """Gram matrix of the quadratic growth functional of ``spec`` at degree ``d``.

    ``mode`` defaults to ``L2Circle`` / ``L2TwoCircles`` (from ``spec.b``) or
    ``WeightedL2`` for weighted specs.  ``SigmaInfinity`` divides the ℓ² matrix by
    ``4 t^2``.  ``method="closed_form"`` evaluates the ℓ² modes from the exact
    arc moments of the image circles instead of the series (tail bound 0).
    ``truncation`` overrides the automatic series cutoff.
    """
    if d < 0:
        raise InvalidSpec("degree must be nonnegative")
    with working(prec):
        eps = mpf(10) ** -40 if eps is None else mpf(eps)
        if mode is None:
            if spec.mode is Norm.L2_WEIGHTED:
                mode = GramMode.WEIGHTED_L2
            else:
                mode = GramMode.L2_TWO_CIRCLES if spec.two_sided else GramMode.L2_CIRCLE
        mode = GramMode(mode)
        if mode in (GramMode.BERGMAN_DISK, GramMode.BERGMAN_TWO_DISKS):
            raise InvalidSpec("use bergman_gram_two_disks for area moments")
        if mode is GramMode.L2_TWO_CIRCLES and not spec.two_sided:
            raise InvalidSpec("two-circle mode needs base B")
        two = spec.two_sided and mode is not GramMode.L2_CIRCLE
        weighted = mode is GramMode.WEIGHTED_L2
        meta = {}

        if method == "closed_form":
            if weighted:
                raise InvalidSpec("weighted entries have no closed form here; use the series")
            acc = circle_moments(image_circle(spec.a, Orientation.POSITIVE_SIDE), d, spec.a)
            if two:
                neg = circle_moments(image_circle(spec.b, Orientation.NEGATIVE_SIDE), d, 1 / spec.b)
                big = max(abs(x) for r in acc + neg for x in r)
                acc = _add(acc, neg)
            else:
                big = max(abs(x) for r in acc for x in r)
            tail = big * (4 * d + 8) * mpf(2) ** (1 - mp.prec)
            m_used = None
        elif method == "series":
            if truncation is None:
                m_pos = truncation_index(spec, d, eps)
                m_neg = truncation_index(spec, d, eps, side_negative=True) if two else 0
            else:
                m_pos = m_neg = int(truncation)
            acc, _ = _series_side(spec.a, d, m_pos, False, weighted)
            tail = _ratio_tail(spec.a, d, m_pos, False, weighted)
            if tail is None:
                tail = mpf("inf")
            if two:
                neg, _ = _series_side(spec.b, d, m_neg, True, weighted)
                nt = _ratio_tail(spec.b, d, m_neg, True, weighted)
                tail = tail + (mpf("inf") if nt is None else nt)
                acc = _add(acc, neg)
            tail += _rounding_bound(acc, 3 * max(m_pos, m_neg) + 4)
            m_used = max(m_pos, m_neg)
            meta = {"truncation_positive": m_pos, "truncation_negative": m_neg if two else None}
        else:
            raise InvalidSpec(f"unknown method {method!r}")

        if mode is GramMode.SIGMA_INFINITY:
            scale = 1 / (4 * spec.t2)
            acc = [[x * scale for x in r] for r in acc]
            tail *= scale
        return GramMatrix(_freeze(acc), tail, mode, spec, m_used, mp.prec, meta)


def single_circle_gram(r, d: int, prec: int | None = None) -> GramMatrix:
    """Closed-form moment matrix of the image of ``|z| = r`` (``r < 1``), normalized
    so its ``(0,0)`` entry is ``sum r^{2n}``; identical to the one-sided series
    matrix at base ``1/r``."""
    with working(prec):
        r = parse_real(r)
        if not 0 < r < 1:
            raise InvalidSpec("need 0 < r < 1")
        spec = GrowthSpec(a=1 / r)
        return gram_matrix(spec, d, method="closed_form", mode=GramMode.L2_CIRCLE)


def single_circle_log_det(r, d: int) -> mpf:
    """``log det = -(d+1) log r + (d+1)^2 log(r/(1-r^2))``."""
    r = mpf(r)
    return -(d + 1) * mpmath.log(r) + (d + 1) ** 2 * mpmath.log(r / (1 - r * r))


def circle_gram(circles, weights, d: int, prec: int | None = None) -> GramMatrix:
    """Arc-moment Gram matrix of a union of circles with real centers."""
    with working(prec):
        acc = None
        big = mpf(0)
        for c, w in zip(circles, weights):
            part = circle_moments(c, d, w)
            big = max(big, max(abs(x) for r in part for x in r))
            acc = part if acc is None else _add(acc, part)
        tail = big * (4 * d + 8) * mpf(2) ** (1 - mp.prec)
        mode = GramMode.L2_CIRCLE if len(circles) == 1 else GramMode.L2_TWO_CIRCLES
        return GramMatrix(_freeze(acc), tail, mode, None, None, mp.prec)


def bergman_gram_two_disks(d1: CircleSpec, d2: CircleSpec | None, d: int,
                           prec: int | None = None) -> GramMatrix:
    """Area-moment matrix ``int_G z^j conj(z)^k dA`` for one or two disjoint disks."""
    with working(prec):
        disks = [d1] if d2 is None else [d1, d2]
        if d2 is not None:
            gap = abs(d1.center - d2.center) - d1.radius - d2.radius
            if not gap > 0:
                raise DisksOverlap("disks must be disjoint")
        acc = None
        big = mpf(0)
        for disk in disks:
            part = disk_area_moments(disk, d)
            big = max(big, max(abs(x) for r in part for x in r))
            acc = part if acc is None else _add(acc, part)
        tail = big * (4 * d + 8) * mpf(2) ** (1 - mp.prec)
        mode = GramMode.BERGMAN_DISK if d2 is None else GramMode.BERGMAN_TWO_DISKS
        return GramMatrix(_freeze(acc), tail, mode, None, None, mp.prec)


# -- factorization -----------------------------------------------------------


@dataclass(frozen=True)
class Cholesky:
    """Lower factor ``L`` with ``L L^T = G`` and the guard that was applied."""

    lower: tuple[tuple[mpf, ...], ...]
    guard: mpf

    @property
    def pivots(self) -> list[mpf]:
        return [self.lower[i][i] for i in range(len(self.lower))]


def _cholesky_raw(rows, guard_abs: mpf, shift=mpf(0)):
    """Plain Cholesky; returns the factor or raises with the failing index."""
    n = len(rows)
    low = [[mpf(0)] * n for _ in range(n)]
    for i in range(n):
        ri = low[i]
        for j in range(i + 1):
            rj = low[j]
            s = rows[i][j] - mpmath.fsum(ri[k] * rj[k] for k in range(j))
            if i == j:
                s -= shift
                if not s > guard_abs:
                    raise NotPositiveDefinite(
                        f"pivot {i} is {mpmath.nstr(s, 5)}, guard {mpmath.nstr(guard_abs, 5)}; "
                        "raise the precision or shrink the truncation tolerance")
                ri[i] = mpmath.sqrt(s)
            else:
                ri[j] = s / rj[j]
    return low


def _guard(g: GramMatrix) -> mpf:
    big = max(abs(x) for r in g.entries for x in r)
    rounding = 8 * g.dim * mpf(2) ** (-mp.prec) * big
    return 8 * g.entry_tail_bound + rounding


def cholesky(g: GramMatrix, prec: int | None = None) -> Cholesky:
    """High-precision Cholesky factor.

    Raises NotPositiveDefinite when a squared pivot is not above eight times the
    entry error bound (plus a rounding allowance).
    """
    with working(prec or g.prec):
        guard = _guard(g)
        low = _cholesky_raw(g.entries, guard)
        return Cholesky(_freeze(low), guard)


class OpKind(str, enum.Enum):
    SZEGO = "Szego"
    BERGMAN = "Bergman"


@dataclass(frozen=True)
class OpNorms:
    """Norms of the monic orthogonal polynomials: the Cholesky pivots."""

    kind: OpKind
    norms: tuple[mpf, ...]

    def ratios(self) -> list[mpf]:
        return [self.norms[k + 1] / self.norms[k] for k in range(len(self.norms) - 1)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "norm", "log_norm", "ratio"])
        for k, v in enumerate(self.norms):
            ratio = "" if k == 0 else to_str(v / self.norms[k - 1], 20)
            w.writerow([k, to_str(v, 20), to_str(mpmath.log(v), 20), ratio])
        return buf.getvalue()


def op_norms(g: GramMatrix, prec: int | None = None) -> OpNorms:
    kind = OpKind.BERGMAN if g.mode in (GramMode.BERGMAN_DISK, GramMode.BERGMAN_TWO_DISKS) \
        else OpKind.SZEGO
    with working(prec or g.prec):
        return OpNorms(kind, tuple(cholesky(g).pivots))


def _inverse_lower(low) -> list[list[mpf]]:
    n = len(low)
    inv = [[mpf(0)] * n for _ in range(n)]
    for i in range(n):
        inv[i][i] = 1 / low[i][i]
        for j in range(i):
            s = mpmath.fsum(low[i][k] * inv[k][j] for k in range(j, i))
            inv[i][j] = -s / low[i][i]
    return inv


def log_det(g: GramMatrix, prec: int | None = None) -> CertifiedReal:
    """``log det g = 2 sum log pivots`` with a perturbation bound.

    With ``E`` the entry errors (each at most ``delta``), ``|log det(G+E) -
    log det G| <= n kappa/(1-kappa)`` where ``kappa = ||L^-1||_F^2 n delta``.
    """
    with working(prec or g.prec):
        ch = cholesky(g)
        value = 2 * mpmath.fsum(mpmath.log(p) for p in ch.pivots)
        n = g.dim
        delta = g.entry_tail_bound + _rounding_bound(g.entries, 4 * n)
        inv = _inverse_lower(ch.lower)
        frob2 = mpmath.fsum(x * x for r in inv for x in r)
        kappa = frob2 * n * delta
        if kappa >= 1:
            raise NotPositiveDefinite("entry error too large relative to the smallest eigenvalue")
        err = n * kappa / (1 - kappa) + abs(value) * n * mpf(2) ** (1 - mp.prec)
        return CertifiedReal(value, err)


def _chol_ok(rows, shift) -> bool:
    try:
        _cholesky_raw(rows, mpf(0), shift)
        return True
    except NotPositiveDefinite:
        return False


def min_eigenvalue(g: GramMatrix, rtol=mpf(10) ** -12, prec: int | None = None) -> CertifiedReal:
    """Smallest eigenvalue by bisection on the success of shifted Cholesky.

    The bracket is first located geometrically (halving below the smallest
    diagonal entry), then bisected in log scale to relative width ``rtol``.
    The error adds the Weyl perturbation ``n * entry_tail_bound``.
    """
    with working(prec or g.prec):
        rows = g.entries
        if not _chol_ok(rows, mpf(0)):
            raise NotPositiveDefinite("matrix is not positive definite at working precision")
        hi = min(rows[i][i] for i in range(g.dim))
        if _chol_ok(rows, hi):
            # only possible for exact ties; the diagonal bounds lambda_min above
            lo = hi
        else:
            lo = hi / 2
            while not _chol_ok(rows, lo):
                hi = lo
                lo /= 2
                if lo < mpf(2) ** (-mp.prec):
                    lo = mpf(0)
                    break
        while hi - lo > mpf(rtol) * hi:
            mid = mpmath.sqrt(lo * hi) if lo > 0 else hi / 2
            if _chol_ok(rows, mid):
                lo = mid
            else:
                hi = mid
        value = (lo + hi) / 2
        err = (hi - lo) / 2 + g.dim * g.entry_tail_bound + _rounding_bound(rows, 4 * g.dim)
        return CertifiedReal(value, err)
