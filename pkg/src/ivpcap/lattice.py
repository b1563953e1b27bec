"""Lattice points in the coefficient bodies of growth-constrained IVPs.

Ellipsoids ``{c : c^T Q c <= t^2}`` are enumerated by Fincke-Pohst in double
precision from a high-precision Cholesky factor.  The float search radius is
padded by a worst-case rounding margin; points inside the padded shell are
then classified exactly at working precision and flagged when they lie within
the accumulated error of the boundary.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from dataclasses import dataclass, field

import mpmath
import numpy as np
from mpmath import mp, mpf

from . import _kernels
from ._precision import CertifiedReal, parse_real, resolve_prec, to_str, working
from .errors import DimensionCap, EnclosureTooLoose, InvalidSpec
from .gram import (GramMatrix, GramMode, cholesky, from_rows, gram_matrix, log_det)
from .ivp import (GrowthSpec, IvpCoeffs, Norm, Side, _linf_tail_bound, c_a, c_ab, check_range,
                  satisfies)

__all__ = [
    "DIM_CAP", "Ellipsoid", "EnumerationResult", "PolytopeLInf", "SearchReport",
    "ball_volume", "brute_force", "build_ellipsoid", "c_a", "c_ab",
    "count_vs_volume_check", "ellipsoid_volume", "enumerate_ellipsoid",
    "search_ivps", "shortest_nonzero", "vaaler_ball_bounds",
]

DIM_CAP = 12
WITNESS_CAP = 1000
RECORD_LIMIT = 20_000_000
_EPS = float(np.finfo(float).eps)


# -- bodies ------------------------------------------------------------------


@dataclass(frozen=True)
class Ellipsoid:
    """The body ``{c : c^T Q c <= t^2}``; ``exact`` is False for enclosures."""

    q: GramMatrix
    t: mpf
    exact: bool = True

    @property
    def dim(self) -> int:
        return self.q.dim

    @property
    def t2(self) -> mpf:
        return self.t * self.t


def ellipsoid_from_matrix(rows, t, tail=0, prec: int | None = None) -> Ellipsoid:
    with working(prec):
        return Ellipsoid(from_rows(rows, tail, prec=prec), parse_real(t))


def build_ellipsoid(spec: GrowthSpec, d: int, eps=None, prec: int | None = None) -> Ellipsoid:
    """Ellipsoid of an ℓ² or weighted-ℓ² spec.

    One-sided: ``Q`` is the Gram matrix and the body is exact.  Two-sided: the
    body is the intersection of the two side ellipsoids; the returned form is
    their sum at threshold ``sqrt(2) t``, an enclosure (``exact=False``).
    """
    if spec.mode is Norm.LINF:
        raise InvalidSpec("ℓ∞ bodies are polytopes; use PolytopeLInf")
    with working(prec):
        g = gram_matrix(spec, d, eps)
        if spec.two_sided:
            return Ellipsoid(g, spec.t * mpmath.sqrt(2), exact=False)
        return Ellipsoid(g, spec.t, exact=True)


@dataclass(frozen=True)
class PolytopeLInf:
    """``{c : |P_c(n)| base^-n <= t}`` over the finite check range of each side."""

    spec: GrowthSpec
    d: int
    rows_positive: int
    rows_negative: int

    @classmethod
    def build(cls, spec: GrowthSpec, d: int) -> "PolytopeLInf":
        n_pos = check_range(spec.a, d)
        n_neg = check_range(spec.b, d) + 1 if spec.two_sided else 0
        return cls(spec, d, n_pos, n_neg)

    @property
    def check_range(self) -> int:
        return max(self.rows_positive, self.rows_negative)

    def matrix(self) -> np.ndarray:
        """Float rows ``binom(±n, k) base^-n / t`` (rows with ``|.| <= 1``)."""
        d = self.d
        rows = []
        a, t = float(self.spec.a), float(self.spec.t)
        for n in range(self.rows_positive + 1):
            rows.append([math.comb(n, k) * a ** -n / t for k in range(d + 1)])
        if self.spec.two_sided:
            b = float(self.spec.b)
            for n in range(1, self.rows_negative + 1):
                rows.append([(-1) ** k * math.comb(n + k - 1, k) * b ** -n / t
                             for k in range(d + 1)])
        return np.array(rows)


# -- enumeration -------------------------------------------------------------


@dataclass
class EnumerationResult:
    """Lattice points of a closed ellipsoid in lexicographic order.

    ``points`` holds every point whose status is inside or ambiguous when the
    enumeration recorded points; ``count_exclusive`` counts certified points
    and ``count_inclusive`` adds the ambiguous ones.
    """

    points: np.ndarray
    ambiguous: np.ndarray
    count_exclusive: int
    count_inclusive: int
    candidates: int = 0

    @property
    def count_ambiguous(self) -> int:
        return self.count_inclusive - self.count_exclusive

    def as_set(self) -> set[tuple[int, ...]]:
        return {tuple(int(v) for v in p) for p in self.points}


@dataclass(frozen=True)
class _FloatForm:
    qdiag: np.ndarray
    mu: np.ndarray
    half_widths: np.ndarray
    margin: float


def _float_form(e: Ellipsoid) -> _FloatForm:
    """Float Fincke-Pohst data plus a radius margin covering rounding and the
    entry error of ``Q`` for every point in the bounding box."""
    with working(e.q.prec):
        ch = cholesky(e.q)
        low = ch.lower
        n = e.dim
        qd = np.array([float(low[i][i] ** 2) for i in range(n)])
        mu = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                mu[i, j] = float(low[j][i] / low[i][i])
        inv = mpmath.inverse(mpmath.matrix([list(r) for r in e.q.entries]))
        t2 = e.t2
        half = np.array([float(mpmath.sqrt(t2 * inv[i, i])) for i in range(n)])
        box = np.floor(half * (1 + 1e-9)) + 1
        tf = float(e.t)
        margin = 4 * _EPS * tf * tf
        for i in range(n):
            spread = box[i] + float(np.dot(np.abs(mu[i, i + 1:]), box[i + 1:]))
            err = (n + 4) * _EPS * spread
            margin += 4 * (2 * tf * math.sqrt(qd[i]) * err + qd[i] * err * err)
        margin += 2 * float(e.q.entry_tail_bound) * float(box.sum()) ** 2
        return _FloatForm(qd, mu, half, margin)


def _exact(x) -> Fraction:
    man, exp = mpf(x).man_exp
    return Fraction(int(man)) * Fraction(2) ** int(exp) if man else Fraction(0)


def classify(e: Ellipsoid, points: np.ndarray):
    """Exact status of each point: ``inside`` and ``ambiguous`` masks.

    When the form carries no entry error its stored binary entries are taken
    as exact and the comparison is done in rationals, so nothing is ambiguous.
    Otherwise the value is bracketed by the entry error and rounding.
    """
    n = e.dim
    inside = np.zeros(len(points), dtype=bool)
    amb = np.zeros(len(points), dtype=bool)
    if len(points) == 0:
        return inside, amb
    with working(e.q.prec):
        tail = e.q.entry_tail_bound
        if tail == 0:
            q = [[_exact(x) for x in r] for r in e.q.entries]
            t2 = _exact(e.t) ** 2
            for idx, p in enumerate(points):
                c = [int(v) for v in p]
                val = sum(q[j][k] * c[j] * c[k] for j in range(n) if c[j]
                          for k in range(n) if c[k])
                inside[idx] = val <= t2
            return inside, amb
        q = e.q.entries
        t2 = e.t2
        unit = mpf(2) ** (1 - mp.prec)
        for idx, p in enumerate(points):
            c = [int(v) for v in p]
            val = mpf(0)
            mag = mpf(0)
            for j in range(n):
                if not c[j]:
                    continue
                row = q[j]
                for k in range(n):
                    if c[k]:
                        term = row[k] * (c[j] * c[k])
                        val += term
                        mag += abs(term)
            l1 = sum(abs(v) for v in c)
            err = tail * l1 * l1 + (mag + t2) * (n * n + 2) * unit
            if val + err <= t2:
                inside[idx] = True
            elif val - err <= t2:
                amb[idx] = True
        return inside, amb


def _lex_order(points: np.ndarray) -> np.ndarray:
    if len(points) == 0:
        return np.arange(0)
    return np.lexsort(points.T[::-1])


def enumerate_ellipsoid(e: Ellipsoid, *, dim_cap: int = DIM_CAP, count_only: bool = False,
                        limit: int = RECORD_LIMIT, box_lo=None, box_hi=None,
                        kernel=None) -> EnumerationResult:
    """All integer points of the closed ellipsoid, boundary cases flagged.

    With ``count_only`` points certainly inside are only counted; the thin
    shell around the boundary is still recorded and classified exactly.
    Optional integer ``box_lo``/``box_hi`` intersect the search with a box.
    """
    if e.dim > dim_cap:
        raise DimensionCap(f"dimension {e.dim} exceeds the cap {dim_cap}")
    ff = _float_form(e)
    n = e.dim
    t2f = float(e.t2)
    r_out = t2f + ff.margin
    r_in = t2f - ff.margin
    lo = np.array(box_lo if box_lo is not None else -np.floor(ff.half_widths * (1 + 1e-9)) - 1,
                  dtype=np.int64)
    hi = np.array(box_hi if box_hi is not None else np.floor(ff.half_widths * (1 + 1e-9)) + 1,
                  dtype=np.int64)
    fn = kernel or _kernels.fp_enumerate
    n_inner, pts, vals, overflow = fn(
        np.ascontiguousarray(ff.qdiag), np.ascontiguousarray(ff.mu), r_out, r_in,
        np.ascontiguousarray(lo), np.ascontiguousarray(hi), not count_only, int(limit))
    if overflow:
        raise EnclosureTooLoose(f"more than {limit} points recorded")
    shell = vals > r_in
    inside_shell, amb_shell = classify(e, pts[shell])
    n_in_shell = int(inside_shell.sum())
    n_amb = int(amb_shell.sum())
    if count_only:
        keep_pts = pts[shell][inside_shell | amb_shell]
        keep_amb = amb_shell[inside_shell | amb_shell]
    else:
        keep_mask = ~shell
        keep_mask[shell] = inside_shell | amb_shell
        keep_pts = pts[keep_mask]
        amb_full = np.zeros(len(pts), dtype=bool)
        amb_full[np.flatnonzero(shell)[amb_shell]] = True
        keep_amb = amb_full[keep_mask]
    order = _lex_order(keep_pts)
    exclusive = n_inner + n_in_shell
    return EnumerationResult(keep_pts[order].reshape(-1, n), keep_amb[order], exclusive,
                             exclusive + n_amb, int(n_inner + len(pts) - (0 if count_only else n_inner)))


def brute_force(e: Ellipsoid, *, max_box: int = 200_000_000, chunk: int = 2_000_000,
                dim_cap: int = DIM_CAP) -> EnumerationResult:
    """Independent oracle: scan the bounding box with vectorized float values,
    then classify the boundary shell with the same exact rule."""
    if e.dim > dim_cap:
        raise DimensionCap(f"dimension {e.dim} exceeds the cap {dim_cap}")
    n = e.dim
    with working(e.q.prec):
        inv = mpmath.inverse(mpmath.matrix([list(r) for r in e.q.entries]))
        half = [int(mpmath.floor(mpmath.sqrt(e.t2 * inv[i, i]) * (1 + mpf(10) ** -9))) + 1
                for i in range(n)]
        qf = np.array([[float(x) for x in r] for r in e.q.entries])
    widths = [2 * h + 1 for h in half]
    total = math.prod(widths)
    if total > max_box:
        raise EnclosureTooLoose(f"bounding box has {total} points")
    t2f = float(e.t2)
    absq = np.abs(qf)
    hvec = np.array(half, dtype=float)
    margin = 4 * (n * n + 2) * _EPS * float(hvec @ absq @ hvec) + 4 * _EPS * t2f
    margin += 2 * float(e.q.entry_tail_bound) * float(hvec.sum()) ** 2
    inner_pts, shell_pts = [], []
    # every box point is evaluated; the last coordinate is broadcast per prefix
    last = np.arange(-half[-1], half[-1] + 1, dtype=np.int64)
    lastf = last.astype(float)
    n_pre = total // widths[-1]
    step = max(1, chunk // widths[-1])
    q11, q1n, qnn = qf[:-1, :-1], qf[:-1, -1], qf[-1, -1]
    for start in range(0, n_pre, step):
        idx = np.arange(start, min(n_pre, start + step), dtype=np.int64)
        pre = np.empty((len(idx), n - 1), dtype=np.int64)
        rest = idx
        for j in range(n - 2, -1, -1):
            pre[:, j] = rest % widths[j] - half[j]
            rest = rest // widths[j]
        pf = pre.astype(float)
        head = np.einsum("ij,ij->i", pf @ q11, pf)
        cross = 2 * (pf @ q1n)
        vals = head[:, None] + cross[:, None] * lastf[None, :] + qnn * (lastf * lastf)[None, :]
        for mask, out in ((vals <= t2f - margin, inner_pts),
                          ((vals > t2f - margin) & (vals <= t2f + margin), shell_pts)):
            rows, cols = np.nonzero(mask)
            if len(rows):
                out.append(np.column_stack([pre[rows], last[cols]]))
    inner = np.concatenate(inner_pts) if inner_pts else np.empty((0, n), dtype=np.int64)
    shell = np.concatenate(shell_pts) if shell_pts else np.empty((0, n), dtype=np.int64)
    ins, amb = classify(e, shell)
    shell_keep = shell[ins | amb]
    pts = np.concatenate([inner, shell_keep])
    flags = np.concatenate([np.zeros(len(inner), dtype=bool), amb[ins | amb]])
    order = _lex_order(pts)
    exclusive = len(inner) + int(ins.sum())
    return EnumerationResult(pts[order].reshape(-1, n), flags[order], exclusive,
                             exclusive + int(amb.sum()), total)


def shortest_nonzero(e_or_q, prec: int | None = None) -> CertifiedReal:
    """Minimum of ``c^T Q c`` over nonzero integer ``c``.

    Searches the ellipsoid whose radius is the smallest diagonal entry (a unit
    vector attains it), then evaluates the survivors exactly.
    """
    q = e_or_q.q if isinstance(e_or_q, Ellipsoid) else e_or_q
    with working(prec or q.prec):
        diag_min = min(q.entries[i][i] for i in range(q.dim))
        # inflate so the rounded radius cannot cut off the attaining unit vector
        e = Ellipsoid(q, mpmath.sqrt(diag_min) * (1 + mpf(2) ** (16 - mp.prec)))
        res = enumerate_ellipsoid(e)
        best = None
        for p in res.points:
            c = [int(v) for v in p]
            if not any(c):
                continue
            val = mpmath.fsum(q.entries[j][k] * c[j] * c[k]
                              for j in range(q.dim) for k in range(q.dim) if c[j] and c[k])
            if best is None or val < best[0]:
                best = (val, c)
        l1 = sum(abs(v) for v in best[1])
        err = q.entry_tail_bound * l1 * l1 + abs(best[0]) * (q.dim ** 2 + 2) * mpf(2) ** (1 - mp.prec)
        return CertifiedReal(best[0], err)


# -- volumes and geometry-of-numbers bounds ----------------------------------


def ball_volume(dim: int) -> mpf:
    """Volume of the Euclidean unit ball, ``pi^(n/2) / Gamma(n/2 + 1)``."""
    return mpmath.pi ** (mpf(dim) / 2) / mpmath.gamma(mpf(dim) / 2 + 1)


def log_ellipsoid_volume(e: Ellipsoid) -> CertifiedReal:
    with working(e.q.prec):
        ld = log_det(e.q)
        n = e.dim
        val = mpmath.log(ball_volume(n)) + n * mpmath.log(e.t) - ld.value / 2
        return CertifiedReal(val, ld.error / 2)


def ellipsoid_volume(e: Ellipsoid) -> CertifiedReal:
    """``vol = vol(B^n) t^n / sqrt(det Q)``."""
    with working(e.q.prec):
        lv = log_ellipsoid_volume(e)
        v = mpmath.exp(lv.value)
        return CertifiedReal(v, v * (mpmath.exp(lv.error) - 1))


@dataclass(frozen=True)
class VaalerBall:
    vaaler_lower: int
    vaaler_logvol: mpf
    ball_logvol: mpf
    log_det: CertifiedReal
    rows: int


def vaaler_ball_bounds(g: GramMatrix, d: int, t=None, *, rows: int | None = None,
                       g_rows: GramMatrix | None = None) -> VaalerBall:
    """Counting and volume bounds from ``det(Sigma^T Sigma)``.

    ``g`` is in the Sigma normalization (rows scaled so the body is
    ``|Sigma c| <= 1/2``).  The half body has volume at least ``det^-1/2``
    (Vaaler's cube-slicing bound) and at most
    ``sqrt(2)^(N-k) / sqrt(det Sigma_N^T Sigma_N)`` (Ball's bound), where
    ``g_rows`` is the ``N``-row truncation.  ``R = floor(det^-1/2)`` uses the
    upper end of the certified determinant, and ``2R`` nonzero lattice points
    are guaranteed in the doubled body ``|Sigma c| <= 1``.
    """
    if g.mode is not GramMode.SIGMA_INFINITY:
        raise InvalidSpec("vaaler_ball_bounds needs a SigmaInfinity matrix")
    with working(g.prec):
        ld = log_det(g)
        k = d + 1
        r = mpmath.floor(mpmath.exp(-ld.hi / 2))
        vaaler_lower = 2 * int(r) if r >= 1 else 0
        vaaler_logvol = -ld.value / 2
        if g_rows is None:
            ball = None
            n_rows = rows
        else:
            ldn = log_det(g_rows)
            n_rows = rows if rows is not None else (g_rows.truncation or 0) + 1
            ball = (n_rows - k) * mpmath.log(2) / 2 - ldn.lo / 2
        return VaalerBall(vaaler_lower, vaaler_logvol, ball, ld, n_rows)


# -- searches ----------------------------------------------------------------


@dataclass
class SearchReport:
    params: GrowthSpec
    d: int
    count: int
    count_ambiguous: int
    witnesses: list[IvpCoeffs]
    vaaler_lower: int | None = None
    vaaler_logvol: mpf | None = None
    ball_upper_logvol: mpf | None = None
    logvol: mpf | None = None
    candidates: int = 0
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def s(x):
            return None if x is None else to_str(x, 20)

        return {
            "params": self.params.to_json(),
            "d": self.d,
            "count": self.count,
            "count_ambiguous": self.count_ambiguous,
            "vaaler_lower": self.vaaler_lower,
            "vaaler_logvol": s(self.vaaler_logvol),
            "ball_upper_logvol": s(self.ball_upper_logvol),
            "logvol": s(self.logvol),
            "candidates": self.candidates,
            "details": {k: (to_str(v, 20) if isinstance(v, mpf) else v)
                        for k, v in self.details.items()},
            "witnesses": [w.to_json() for w in self.witnesses],
        }


def _verify_witnesses(cands: list[IvpCoeffs], spec: GrowthSpec, cap: int, prec: int):
    out = []
    for c in cands[:cap]:
        if satisfies(c, spec, prec=2 * prec) is not True:
            raise ArithmeticError(f"witness {c.coeffs} failed re-verification")
        out.append(c)
    return out


def _search_quadratic(spec: GrowthSpec, d: int, eps, dim_cap: int, witness_cap: int,
                      prec: int) -> SearchReport:
    with working(prec):
        e = build_ellipsoid(spec, d, eps)
        res = enumerate_ellipsoid(e, dim_cap=dim_cap)
        pts, amb = res.points, res.ambiguous
        if spec.two_sided:
            # exact filter: each side separately against t^2
            sides = []
            for side_mode in ("positive", "negative"):
                g = _side_gram(spec, d, eps, side_mode)
                ins, am = classify(Ellipsoid(g, spec.t), pts)
                sides.append((ins, am))
            ok_in = sides[0][0] & sides[1][0]
            ok_amb = (sides[0][0] | sides[0][1]) & (sides[1][0] | sides[1][1]) & ~ok_in
            keep = ok_in | ok_amb
            pts, amb = pts[keep], ok_amb[keep] | amb[keep]
        nonzero = np.any(pts != 0, axis=1)
        certain = pts[nonzero & ~amb]
        witnesses = [IvpCoeffs(p) for p in certain]
        verified = _verify_witnesses(witnesses, spec, witness_cap, prec)
        lv = log_ellipsoid_volume(e)
        rep = SearchReport(spec, d, len(certain), int((nonzero & amb).sum()), verified,
                           logvol=lv.value, candidates=res.candidates)
        rep.details["body"] = "ellipsoid" if e.exact else "sum-ellipsoid enclosure, sides filtered"
        rep.details["entry_tail_bound"] = e.q.entry_tail_bound
        if spec.two_sided:
            rep.details["logvol_upper"] = lv.value
            rep.details["logvol_lower"] = lv.value - (d + 1) * mpmath.log(2) / 2
            rep.logvol = lv.value - (d + 1) * mpmath.log(2) / 4
        return rep


def _side_gram(spec: GrowthSpec, d: int, eps, side: str) -> GramMatrix:
    if side == "positive":
        return gram_matrix(spec.replace(b=None), d, eps)
    from .gram import _ratio_tail, _rounding_bound, _series_side, truncation_index
    weighted = spec.mode is Norm.L2_WEIGHTED
    m = truncation_index(spec, d, mpf(10) ** -40 if eps is None else eps, side_negative=True)
    acc, _ = _series_side(spec.b, d, m, True, weighted)
    tail = _ratio_tail(spec.b, d, m, True, weighted) + _rounding_bound(acc, 3 * m + 4)
    return GramMatrix(tuple(tuple(r) for r in acc), tail, GramMode.L2_CIRCLE, spec, m, mp.prec)


def value_transform(d: int, shift: int) -> np.ndarray:
    """Integer matrix ``M`` with ``c = M v`` where ``v_i = P(i - shift)``.

    ``e = Delta v`` are the binomial coefficients of ``P(. - shift)``, and
    ``c_j = sum_k e_k binom(shift, k - j)`` by Vandermonde's identity.
    """
    size = d + 1
    diff = np.zeros((size, size), dtype=object)
    for k in range(size):
        for i in range(k + 1):
            diff[k, i] = (-1) ** (k - i) * math.comb(k, i)
    from .ivp import binomial
    trans = np.zeros((size, size), dtype=object)
    for j in range(size):
        for k in range(j, size):
            trans[j, k] = binomial(shift, k - j)
    return trans.dot(diff)


def _enclosure_logvol(spec: GrowthSpec, d: int, lam: mpf) -> mpf:
    """Log-volume (up to a constant) of the ℓ² enclosure at bases ``lam*A``, ``lam*B``."""
    a2 = spec.a * lam
    ra = (spec.a / a2) ** 2
    budget = 1 / (1 - ra)
    sp = GrowthSpec(a=a2, b=None if spec.b is None else spec.b * lam)
    if spec.two_sided:
        rb = (1 / lam) ** 2
        budget += rb / (1 - rb)
    g = gram_matrix(sp, d, method="closed_form")
    return (d + 1) * mpmath.log(budget) / 2 - log_det(g).value / 2


def choose_enclosure(spec: GrowthSpec, d: int) -> tuple[mpf, mpf]:
    """Scale ``lam > 1`` for the enclosure bases minimizing its volume; returns
    ``(lam, budget factor)``."""
    best = None
    for step in range(1, 60):
        lam = 1 + mpf(step) / 40
        lv = _enclosure_logvol(spec, d, lam)
        if best is None or lv < best[1]:
            best = (lam, lv)
    lam = best[0]
    ra = (1 / lam) ** 2
    factor = 1 / (1 - ra) + (ra / (1 - ra) if spec.two_sided else 0)
    return lam, factor


def finite_sigma_gram(spec: GrowthSpec, d: int, n_pos: int, n_neg: int) -> GramMatrix:
    """``Sigma_N^T Sigma_N`` for the rows ``n = 0..n_pos`` (and ``-1..-n_neg``),
    exact finite sums up to rounding."""
    from .gram import _rounding_bound, _series_side
    acc, _ = _series_side(spec.a, d, n_pos, False, False)
    if n_neg:
        neg, _ = _series_side(spec.b, d, n_neg, True, False)
        acc = [[x + y for x, y in zip(r, q)] for r, q in zip(acc, neg)]
    scale = 1 / (4 * spec.t2)
    acc = [[x * scale for x in r] for r in acc]
    tail = _rounding_bound(acc, 3 * max(n_pos, n_neg) + 8)
    return GramMatrix(tuple(tuple(r) for r in acc), tail, GramMode.SIGMA_INFINITY, spec,
                      max(n_pos, n_neg), mp.prec, {"rows": n_pos + 1 + n_neg})


def _search_linf(spec: GrowthSpec, d: int, dim_cap: int, witness_cap: int, prec: int,
                 budget: int) -> SearchReport:
    if d + 1 > dim_cap:
        raise DimensionCap(f"dimension {d + 1} exceeds the cap {dim_cap}")
    with working(prec):
        t = spec.t
        poly = PolytopeLInf.build(spec, d)
        lam, factor = choose_enclosure(spec, d)
        enc_spec = GrowthSpec(a=spec.a * lam, b=None if spec.b is None else spec.b * lam)
        gc = gram_matrix(enc_spec, d, method="closed_form")
        shift = (d + 1) // 2 if spec.two_sided else 0
        mv = value_transform(d, shift)
        size = d + 1
        # Q_v = M^T Q_c M
        qc = gc.entries
        qv = [[mpmath.fsum(mv[j, a] * qc[j][k] * mv[k, b]
                           for j in range(size) for k in range(size)
                           if mv[j, a] and mv[k, b])
               for b in range(size)] for a in range(size)]
        l1 = max(sum(abs(int(x)) for x in mv[:, a]) for a in range(size))
        gq = GramMatrix(tuple(tuple(r) for r in qv), gc.entry_tail_bound * l1 * l1,
                        GramMode.L2_CIRCLE, enc_spec, None, mp.prec)
        t_enc = t * mpmath.sqrt(factor)
        e = Ellipsoid(gq, t_enc, exact=False)
        lvol = log_ellipsoid_volume(e).value
        if lvol > math.log(budget):
            raise EnclosureTooLoose(
                f"enclosure volume e^{float(lvol):.1f} exceeds the candidate budget {budget}")
        lo, hi = [], []
        for i in range(size):
            n = i - shift
            base = spec.a if n >= 0 else spec.b
            bound = t * base ** abs(n)
            lim = int(mpmath.floor(bound * (1 + mpf(10) ** -12)))
            lo.append(-lim)
            hi.append(lim)
        res = enumerate_ellipsoid(e, dim_cap=dim_cap, box_lo=lo, box_hi=hi,
                                  limit=budget)
        vpts = res.points
        cands = _candidates_from_values(vpts, mv)
        keep, amb = _linf_filter(cands, spec, poly)
        nz = np.any(cands != 0, axis=1)
        good = cands[keep & nz]
        order = _lex_order(good)
        good = good[order]
        witnesses = [IvpCoeffs(p) for p in good[:witness_cap]]
        verified = _verify_witnesses(witnesses, spec, witness_cap, prec)
        rep = SearchReport(spec, d, int(len(good)), int((amb & nz).sum()), verified,
                           candidates=int(len(cands)))
        # Sigma rows binom(n,k) base^-n / (2 t') with t' = t/2 make the doubled
        # body |Sigma c| <= 1 coincide with the search body
        half = spec.replace(t=t / 2)
        gs = gram_matrix(half, d, mode=GramMode.SIGMA_INFINITY)
        n_rows = poly.check_range
        g_rows = finite_sigma_gram(half, d, poly.rows_positive, poly.rows_negative)
        rows = poly.rows_positive + 1 + poly.rows_negative
        vb = vaaler_ball_bounds(gs, d, t / 2, rows=rows, g_rows=g_rows)
        rep.vaaler_lower = vb.vaaler_lower
        rep.vaaler_logvol = vb.vaaler_logvol
        rep.ball_upper_logvol = vb.ball_logvol
        rep.logvol = linf_logvol(poly)
        rep.details.update({
            "enclosure_scale": lam,
            "enclosure_budget_factor": factor,
            "check_range": n_rows,
            "value_shift": shift,
            "doubled_body_vaaler_logvol": vb.vaaler_logvol + (d + 1) * mpmath.log(2),
        })
        return rep


def _candidates_from_values(vpts: np.ndarray, mv) -> np.ndarray:
    if len(vpts) == 0:
        return np.empty((0, mv.shape[0]), dtype=np.int64)
    m = np.array(mv.tolist(), dtype=np.int64)
    return vpts @ m.T


def _value_rows(poly: PolytopeLInf):
    """Integer evaluation rows and their scale ``1/(t base^n)``."""
    d = poly.d
    rows, scale = [], []
    a, t = float(poly.spec.a), float(poly.spec.t)
    for n in range(poly.rows_positive + 1):
        rows.append([math.comb(n, k) for k in range(d + 1)])
        scale.append(a ** -n / t)
    if poly.spec.two_sided:
        b = float(poly.spec.b)
        for n in range(1, poly.rows_negative + 1):
            rows.append([(-1) ** k * math.comb(n + k - 1, k) for k in range(d + 1)])
            scale.append(b ** -n / t)
    return np.array(rows, dtype=np.int64), np.array(scale)


def _linf_filter(cands: np.ndarray, spec: GrowthSpec, poly: PolytopeLInf):
    """Exact ℓ∞ membership of candidate coefficient vectors.

    Values ``P(±n)`` over the check range are exact integers; only the scaled
    comparison is in floating point, so points within ``1e-9`` of the threshold
    are rechecked exactly.  Survivors are then certified beyond the check range
    by the monotone tail bound, falling back to the exact supremum.
    """
    n_c = len(cands)
    keep = np.zeros(n_c, dtype=bool)
    amb = np.zeros(n_c, dtype=bool)
    if n_c == 0:
        return keep, amb
    rows, scale = _value_rows(poly)
    vals = (np.abs(cands @ rows.T) * scale).max(axis=1)
    near = (vals > 1 - 1e-9) & (vals <= 1 + 1e-9)
    keep[vals <= 1 - 1e-9] = True
    t = spec.t
    sides = [(Side.POSITIVE, spec.a, poly.rows_positive)]
    if spec.two_sided:
        sides.append((Side.NEGATIVE, spec.b, poly.rows_negative))
    for idx in np.flatnonzero(keep | near):
        p = IvpCoeffs(cands[idx])
        if p.is_zero():
            continue
        exact = bool(near[idx])
        if not exact:
            for side, base, n_last in sides:
                tail = _linf_tail_bound(p, base, side, n_last)
                if tail is None or tail > t:
                    exact = True
        if exact:
            verdict = satisfies(p, spec)
            keep[idx] = verdict is True
            amb[idx] = verdict is None
    return keep, amb


def linf_logvol(poly: PolytopeLInf) -> mpf | None:
    """Log-volume of the truncated ℓ∞ polytope: exact for ``d = 0``, convex hull
    of the halfspace intersection for ``d <= 5`` (quickhull grows too fast beyond
    that), otherwise None; the Vaaler/Ball bracket is always reported."""
    d = poly.d
    spec = poly.spec
    if d == 0:
        return mpmath.log(2 * spec.t)
    if d > 5:
        return None
    from scipy.spatial import ConvexHull, HalfspaceIntersection

    rows = poly.matrix()
    hs = np.vstack([np.hstack([rows, -np.ones((len(rows), 1))]),
                    np.hstack([-rows, -np.ones((len(rows), 1))])])
    inter = HalfspaceIntersection(hs, np.zeros(d + 1))
    return mpf(math.log(ConvexHull(inter.intersections).volume))


def search_ivps(spec: GrowthSpec, d: int, *, eps=None, dim_cap: int = DIM_CAP,
                witness_cap: int = WITNESS_CAP, budget: int = RECORD_LIMIT,
                prec: int | None = None) -> SearchReport:
    """Every nonzero IVP of degree at most ``d`` satisfying ``spec``.

    ℓ²/weighted: direct ellipsoid enumeration (two-sided: enclosure plus exact
    per-side filter).  ℓ∞: enumeration of an ℓ² enclosure at bases ``lam*A``,
    ``lam*B`` in value coordinates ``P(n)`` with the box ``|P(n)| <= t base^|n|``,
    then an exact check over the finite range and a certified tail bound.
    Witnesses are re-verified at doubled precision.
    """
    prec = resolve_prec(prec)
    if d + 1 > dim_cap:
        raise DimensionCap(f"dimension {d + 1} exceeds the cap {dim_cap}")
    if spec.mode is Norm.LINF:
        return _search_linf(spec, d, dim_cap, witness_cap, prec, budget)
    return _search_quadratic(spec, d, eps, dim_cap, witness_cap, prec)


# -- lattice points in unipotent images --------------------------------------


@dataclass(frozen=True)
class CountVsVolume:
    count: int
    log_ratio: mpf
    lower: mpf
    c2_empirical: mpf | None
    logvol: mpf


def gamma_power_ellipsoid(gamma, t, d: int, prec: int | None = None) -> Ellipsoid:
    """``{y : sum_k gamma^(2k) y_k^2 <= t^2}``, semi-axes ``t gamma^-k``."""
    with working(prec):
        gamma = parse_real(gamma)
        rows = [[gamma ** (2 * k) if j == k else mpf(0) for k in range(d + 1)]
                for j in range(d + 1)]
        return ellipsoid_from_matrix(rows, t)


def pulled_back(e: Ellipsoid, psi) -> Ellipsoid:
    """Ellipsoid ``Psi(E)`` as a form on ``x``: ``Q' = Psi^-T Q Psi^-1``."""
    with working(e.q.prec):
        p = mpmath.matrix([[mpf(v) for v in row] for row in psi])
        n = e.dim
        for i in range(n):
            if p[i, i] != 1 or any(p[i, j] != 0 for j in range(i + 1, n)):
                raise InvalidSpec("psi must be lower unipotent")
        pinv = mpmath.inverse(p)
        q = mpmath.matrix([list(r) for r in e.q.entries])
        qp = pinv.T * q * pinv
        rows = [[(qp[i, j] + qp[j, i]) / 2 for j in range(n)] for i in range(n)]
        big = max(abs(x) for r in rows for x in r)
        tail = e.q.entry_tail_bound * n * n + big * (4 * n * n + 8) * mpf(2) ** (1 - mp.prec)
        return Ellipsoid(from_rows(rows, tail, prec=e.q.prec), e.t)


def count_vs_volume_check(e: Ellipsoid, psi, gamma=None, dim_cap: int = DIM_CAP) -> CountVsVolume:
    """Count of ``Psi(E) ∩ Z^n`` against ``vol E``.

    Reports ``log(count / vol)``, the lower bracket ``-(d+1) log 2`` and the
    empirical constant ``log_ratio / ((d+1) log min(d+1, 1/(1-gamma)))`` when that
    denominator is positive.
    """
    with working(e.q.prec):
        pb = pulled_back(e, psi)
        res = enumerate_ellipsoid(pb, dim_cap=dim_cap, count_only=True)
        count = res.count_inclusive
        lv = log_ellipsoid_volume(e).value
        n = e.dim
        log_ratio = mpmath.log(count) - lv if count else mpf("-inf")
        c2 = None
        if gamma is not None:
            gamma = mpf(gamma)
            m = mpf(n) if gamma >= 1 else min(mpf(n), 1 / (1 - gamma))
            if m > 1:
                c2 = log_ratio / (n * mpmath.log(m))
        return CountVsVolume(count, log_ratio, -n * mpmath.log(2), c2, lv)


def iter_box(half_widths):
    """All integer points of a centered box, lexicographic."""
    return itertools.product(*[range(-h, h + 1) for h in half_widths])
