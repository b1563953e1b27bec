"""Acceptance checks shared by ``ivpcap verify`` and the test-suite.

Each check runs at its stated tolerance and returns a :class:`CheckResult`;
nothing here is relaxed to make a check pass.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import mpmath
import numpy as np
from mpmath import mpf

from ._precision import golden, resolve_prec, working
from .capacity import capacity_two_disks, capacity_via_op_norms, diagonal_level
from .errors import NotPositiveDefinite
from .genfunc import CircleSpec, Measure, quadrature_identity_check
from .gram import (GramMode, bergman_gram_two_disks, gram_matrix, log_det, op_norms)
from .ivp import GrowthSpec, IvpCoeffs, Norm, Side, growth_functional, satisfies
from .lattice import (ball_volume, brute_force, build_ellipsoid, count_vs_volume_check,
                      ellipsoid_from_matrix, enumerate_ellipsoid, gamma_power_ellipsoid,
                      pulled_back, search_ivps, shortest_nonzero, _float_form)


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    seconds: float = 0.0
    lines: list[str] = field(default_factory=list)

    def summary(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d} {self.title} ({self.seconds:.1f} s)"


class _Run:
    def __init__(self, number: int, title: str, limit: float | None = None):
        self.res = CheckResult(number, title, True)
        self.limit = limit
        self.t0 = time.perf_counter()

    def check(self, ok: bool, line: str):
        self.res.lines.append(("ok   " if ok else "FAIL ") + line)
        if not ok:
            self.res.passed = False

    def done(self) -> CheckResult:
        self.res.seconds = time.perf_counter() - self.t0
        if self.limit is not None:
            self.check(self.res.seconds <= self.limit,
                       f"runtime {self.res.seconds:.1f} s <= {self.limit:.0f} s")
        return self.res


def _e(x) -> str:
    return mpmath.nstr(x, 5)


# 1 -----------------------------------------------------------------------------


def single_circle_determinant(degrees=range(1, 21), prec: int | None = None) -> CheckResult:
    """Series Gram log-determinant against ``r^-(d+1) (r/(1-r^2))^((d+1)^2)``."""
    run = _Run(1, "single-circle determinant closed form", limit=30)
    with working(prec):
        phi = golden()
        for r in (mpf("0.3"), 1 / phi, mpf("0.7")):
            worst = mpf(0)
            for d in degrees:
                g = gram_matrix(GrowthSpec(a=1 / r), d)
                closed = -(d + 1) * mpmath.log(r) + (d + 1) ** 2 * mpmath.log(r / (1 - r * r))
                rel = abs(mpmath.expm1(log_det(g).value - closed))
                worst = max(worst, rel)
            run.check(worst <= mpf(10) ** -20, f"r={_e(r)}: max relative error {_e(worst)}")
    return run.done()


# 2 -----------------------------------------------------------------------------


def golden_determinant(max_degree: int = 15, prec: int | None = None) -> CheckResult:
    """``det(Sigma^T Sigma)`` at ``A = phi`` against ``(phi/(2 t^2))^(d+1)``."""
    run = _Run(2, "golden-ratio determinant")
    with working(prec):
        phi = golden()
        for t in (mpf(1), mpmath.sqrt(phi / 2), mpf(2)):
            worst, ratio = mpf(0), None
            for d in range(max_degree + 1):
                g = gram_matrix(GrowthSpec(a=phi, t=t), d, mode=GramMode.SIGMA_INFINITY)
                det = mpmath.exp(log_det(g).value)
                target = (phi / (2 * t * t)) ** (d + 1)
                rel = abs(det / target - 1)
                if rel > worst:
                    worst, ratio = rel, (d, det / target)
            line = f"t={_e(t)}: max relative error {_e(worst)}"
            if ratio is not None and worst > mpf(10) ** -15:
                line += f" (d={ratio[0]}: computed/target = {_e(ratio[1])})"
            run.check(worst <= mpf(10) ** -15, line)
    return run.done()


# 3 -----------------------------------------------------------------------------


def explicit_constants(prec: int | None = None) -> CheckResult:
    run = _Run(3, "explicit l2 constants")
    with working(prec):
        phi = golden()
        tol = mpf(10) ** -20
        one = growth_functional(IvpCoeffs([1]), GrowthSpec(a=phi), Side.POSITIVE)
        run.check(abs(one.value - phi) <= tol and one.error <= tol,
                  f"sum phi^-2n - phi = {_e(one.value - phi)} (error bar {_e(one.error)})")
        target = 4 * phi ** 2 * mpmath.log(phi) - 15 / (2 * phi)
        spec_w = GrowthSpec(a=phi, mode=Norm.L2_WEIGHTED)
        val = growth_functional(IvpCoeffs([0, 2, 1]), spec_w, Side.POSITIVE)
        run.check(abs(val.value - target) <= tol,
                  f"c=(0,2,1): weighted sum {_e(val.value)} vs {_e(target)}, "
                  f"difference {_e(val.value - target)}")
    return run.done()


# 4 -----------------------------------------------------------------------------


def nonexistence_below_phi(degrees=range(0, 6), prec: int | None = None) -> CheckResult:
    run = _Run(4, "no nontrivial IVPs below the golden threshold", limit=300)
    with working(prec):
        phi = golden()
        spec = GrowthSpec(a=phi, t=mpmath.sqrt(phi * (1 - mpf(10) ** -6)))
        for d in degrees:
            rep = search_ivps(spec, d)
            m = shortest_nonzero(build_ellipsoid(spec, d))
            run.check(rep.count == 0 and rep.count_ambiguous == 0,
                      f"d={d}: {rep.count} nonzero points ({rep.count_ambiguous} ambiguous)")
            gap = abs(m.value - phi)
            run.check(gap + m.error <= mpf(10) ** -15,
                      f"d={d}: min of the form - phi = {_e(m.value - phi)} +- {_e(m.error)}")
    return run.done()


# 5 -----------------------------------------------------------------------------


def existence_at_two_over_pi(prec: int | None = None) -> CheckResult:
    run = _Run(5, "weighted existence above 2/pi")
    with working(prec):
        phi = golden()
        spec = GrowthSpec(a=phi, mode=Norm.L2_WEIGHTED,
                          t=mpmath.sqrt(2 / mpmath.pi + mpf(10) ** -3))
        rep = search_ivps(spec, 2)
        found = [w.coeffs for w in rep.witnesses]
        run.check(rep.count >= 1, f"d=2: {rep.count} witnesses {found}")
        target = IvpCoeffs([0, 2, 1])
        verdict = satisfies(target, spec, prec=512)
        val = growth_functional(target, spec, Side.POSITIVE)
        run.check(verdict is True,
                  f"c=(0,2,1) re-verification: {verdict} (weighted sum {_e(val.value)} "
                  f"vs t^2 = {_e(spec.t2)})")
    return run.done()


# 6 -----------------------------------------------------------------------------


def linf_vaaler_counts(degrees=range(2, 7), prec: int | None = None) -> CheckResult:
    run = _Run(6, "l-infinity counts against the Vaaler bound", limit=600)
    with working(prec):
        phi = golden()
        spec = GrowthSpec(a=phi, mode=Norm.LINF, t=mpmath.sqrt(2 * phi) + mpf("0.05"))
        prev = None
        for d in degrees:
            rep = search_ivps(spec, d)
            run.check(rep.count >= rep.vaaler_lower,
                      f"d={d}: count {rep.count} >= 2R = {rep.vaaler_lower}")
            if prev is not None:
                run.check(rep.count > prev, f"d={d}: count increases ({prev} -> {rep.count})")
            prev = rep.count
    return run.done()


# 7 -----------------------------------------------------------------------------


def capacity_cross_validation(kmax: int = 80, prec: int | None = None) -> CheckResult:
    run = _Run(7, "capacity: theta formula vs orthogonal-polynomial ratios", limit=300)
    with working(prec):
        for a, b in ((2, 2), (2, 3), (3, 3)):
            th = capacity_two_disks(a, b)
            op = capacity_via_op_norms(a, b, kmax)
            diff = abs(th.value - op.value)
            run.check(diff <= mpf(10) ** -4,
                      f"(A,B)=({a},{b}): theta {_e(th.value)}, ratio estimate {_e(op.value)} "
                      f"+- {_e(op.error)}, difference {_e(diff)}")
        worst = mpf(0)
        for a, b in ((2, 3), (mpf("1.7"), mpf("4.5")), (golden(), mpf(10))):
            worst = max(worst, abs(capacity_two_disks(a, b).value - capacity_two_disks(b, a).value))
        run.check(worst <= mpf(10) ** -25, f"symmetry defect {_e(worst)}")
        g = capacity_two_disks(golden(), golden())
        run.check(g.value - g.error >= 1, f"gamma(phi,phi) = {_e(g.value)}")
    return run.done()


# 8 -----------------------------------------------------------------------------


def bergman_band(kmin: int = 10, kmax: int = 60, prec: int | None = None) -> CheckResult:
    """Monic Bergman norms of two disjoint disks, scaled by ``sqrt(k+1)/cap^k``."""
    run = _Run(8, "Bergman norm asymptotics on two disks")
    a = b = 2
    prec = max(resolve_prec(prec), 256 + 8 * kmax)
    while True:
        try:
            with working(prec):
                d1 = CircleSpec(mpf(1) / 3, mpf(2) / 3)
                d2 = CircleSpec(mpf(-4) / 3, mpf(2) / 3)
                norms = op_norms(bergman_gram_two_disks(d1, d2, kmax)).norms
                cap = capacity_two_disks(a, b).value
                scaled = [norms[k] * mpmath.sqrt(k + 1) / cap ** k for k in range(kmin, kmax + 1)]
                band = max(scaled) / min(scaled)
            break
        except NotPositiveDefinite:
            prec *= 2
    run.check(band <= 4, f"k={kmin}..{kmax}: max/min of scaled norms = {_e(band)}")
    return run.done()


# 9 -----------------------------------------------------------------------------


def volume_trend(degrees=(10, 20, 30), t=2, prec: int | None = None) -> CheckResult:
    """Two-sided l2 body volume, bracketed by the sum-ellipsoid sandwich."""
    run = _Run(9, "two-sided l2 volume trend")
    with working(prec):
        a = diagonal_level(mpf("0.9"))
        gamma = capacity_two_disks(a, a).value
    prev = None
    for d in degrees:
        with working(max(resolve_prec(prec), 40 * d)):
            diag, half_width = volume_diagnostic(a, a, d, t, gamma)
        line = f"d={d}: |logvol/d^2 + log(gamma)/2| = {_e(diag)} (sandwich half-width {_e(half_width)})"
        ok = prev is None or diag < prev
        run.check(ok, line + ("" if prev is None else f", decreasing from {_e(prev)}"))
        prev = diag
    run.check(prev <= mpf("0.15"), f"d={degrees[-1]}: diagnostic {_e(prev)} <= 0.15")
    run.res.lines.insert(0, f"     A = B = {_e(a)}, gamma = {_e(gamma)}, t = {t}")
    return run.done()


def volume_diagnostic(a, b, d: int, t, gamma):
    """Midpoint of the log-volume bracket of the two-sided body, normalized."""
    g = gram_matrix(GrowthSpec(a=a, b=b), d, method="closed_form")
    k = d + 1
    inner = mpmath.log(ball_volume(k)) + k * mpmath.log(t) - log_det(g).value / 2
    mid = inner + k * mpmath.log(2) / 4
    return abs(mid / d ** 2 + mpmath.log(gamma) / 2), k * mpmath.log(2) / (4 * d ** 2)


# 10 ----------------------------------------------------------------------------


def quadrature_identities(n_poly: int = 20, seed: int = 10, prec: int | None = None) -> CheckResult:
    run = _Run(10, "generating-function quadrature identities")
    rng = np.random.default_rng(seed)
    phi = golden()
    polys = []
    for _ in range(n_poly):
        d = int(rng.integers(0, 6))
        c = rng.integers(-3, 4, d + 1)
        c[-1] = c[-1] or 1
        polys.append(IvpCoeffs(c.tolist()))
    cases = [(Measure.ARC, (mpf("0.4"), 1 / phi)), (Measure.AREA, (mpf("0.4"), 1 / phi)),
             (Measure.ARC, (mpf("1.5"), mpf(2))), (Measure.EXTERIOR_AREA, (mpf("1.5"), mpf(2)))]
    names = ["arc, inner circle", "area, inner disk", "arc, outer circle", "area, exterior"]
    for name, (measure, radii) in zip(names, cases):
        worst = 0.0
        for p in polys:
            for r in radii:
                lhs, rhs = quadrature_identity_check(p, r, measure)
                worst = max(worst, float(abs(lhs.value - rhs.value) / max(1, abs(rhs.value))))
        run.check(worst <= 1e-10, f"{name}: max deviation {worst:.2e} over {n_poly} polynomials")
    return run.done()


# 11 ----------------------------------------------------------------------------


def random_unipotent(rng, d: int, scale: float = 1.0) -> list[list[float]]:
    psi = np.eye(d + 1)
    for i in range(d + 1):
        for j in range(i):
            psi[i, j] = rng.uniform(-scale, scale)
    return psi.tolist()


def unipotent_bracket(n_cases: int = 20, seed: int = 11, max_box: int = 300_000_000, prec: int | None = None) -> CheckResult:
    """Lattice counts of ``Psi(E)`` against ``vol E`` and a box-scan oracle.

    Cases cycle through ``gamma`` and ``t``; the degree and ``Psi`` are drawn at
    random and redrawn while the oracle's bounding box exceeds ``max_box``.
    """
    run = _Run(11, "unipotent-image lattice counts")
    rng = np.random.default_rng(seed)
    combos = [(g, t) for g in ("0.7", "0.9", "1.0") for t in (2, 4)]
    redraws = 0
    for i in range(n_cases):
        gamma, t = combos[i % len(combos)]
        while True:
            d = int(rng.integers(0, 7))
            psi = random_unipotent(rng, d)
            e = gamma_power_ellipsoid(gamma, t, d)
            pb = pulled_back(e, psi)
            box = float(np.prod(2 * np.floor(_float_form(pb).half_widths * (1 + 1e-9)) + 3))
            if box <= max_box:
                break
            redraws += 1
        cv = count_vs_volume_check(e, psi, gamma)
        oracle = brute_force(pb, max_box=max_box)
        fp = enumerate_ellipsoid(pb, count_only=True)
        ok = (cv.log_ratio >= cv.lower and fp.count_inclusive == oracle.count_inclusive
              and fp.count_exclusive == oracle.count_exclusive)
        run.check(ok, f"gamma={gamma} t={t} d={d}: count {cv.count} (oracle "
                      f"{oracle.count_inclusive}), log(count/vol) {_e(cv.log_ratio)} >= {_e(cv.lower)}")
    run.res.lines.append(f"     redrawn for box size: {redraws}")
    return run.done()


# 12 ----------------------------------------------------------------------------


def random_spd(rng, kind: str):
    n = int(rng.integers(1, 5))
    if kind == "integer":
        a = rng.integers(-3, 4, (n, n))
        q = (a @ a.T + np.eye(n, dtype=np.int64)).tolist()
        t = math.sqrt(int(rng.integers(1, 4 * n + 8)))
        return q, t, 0
    a = rng.normal(size=(n, n))
    q = a @ a.T + 0.2 * np.eye(n)
    q = ((q + q.T) / 2).tolist()
    t = float(rng.uniform(1, 4))
    tail = 0 if kind == "real" else 1e-3
    return q, t, tail


def enumeration_oracle(n_forms: int = 50, seed: int = 12, prec: int | None = None) -> CheckResult:
    """Fincke-Pohst against the box scan: identical points and boundary flags.

    Forms alternate between integer matrices with integer ``t^2`` (lattice
    points on the boundary), generic real matrices, and real matrices with an
    artificial entry error (so that boundary flags actually occur).
    """
    run = _Run(12, "enumeration equals the brute-force oracle")
    rng = np.random.default_rng(seed)
    kinds = ("integer", "real", "noisy")
    flagged = 0
    for i in range(n_forms):
        q, t, tail = random_spd(rng, kinds[i % 3])
        with working(prec):
            e = ellipsoid_from_matrix(q, t, tail)
        fp = enumerate_ellipsoid(e)
        bf = brute_force(e)
        same = (fp.points.shape == bf.points.shape and np.array_equal(fp.points, bf.points)
                and np.array_equal(fp.ambiguous, bf.ambiguous))
        flagged += int(fp.ambiguous.sum())
        if not same:
            run.check(False, f"form {i} (dim {len(q)}): {fp.count_inclusive} vs {bf.count_inclusive}")
    run.check(run.res.passed, f"{n_forms} forms agree; {flagged} boundary-flagged points in total")
    return run.done()


CHECKS = {
    1: single_circle_determinant,
    2: golden_determinant,
    3: explicit_constants,
    4: nonexistence_below_phi,
    5: existence_at_two_over_pi,
    6: linf_vaaler_counts,
    7: capacity_cross_validation,
    8: bergman_band,
    9: volume_trend,
    10: quadrature_identities,
    11: unipotent_bracket,
    12: enumeration_oracle,
}

QUICK = (1, 2, 3, 4, 5, 10, 12)


def run_check(number: int, prec: int | None = None) -> CheckResult:
    """One check; numerical breakdown (e.g. at too low a precision) counts as failure."""
    t0 = time.perf_counter()
    try:
        return CHECKS[number](prec=prec)
    except ArithmeticError as exc:
        title = CHECKS[number].__name__.replace("_", " ")
        return CheckResult(number, title, False, time.perf_counter() - t0,
                           [f"FAIL numerical failure: {exc}"])


def run_checks(numbers=None, echo=None, prec: int | None = None) -> list[CheckResult]:
    out = []
    for n in numbers or sorted(CHECKS):
        res = run_check(n, prec)
        out.append(res)
        if echo is not None:
            echo(res)
    return out
