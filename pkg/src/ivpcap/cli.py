"""Command-line interface.

Exit codes: 0 success, 1 failed verification, 2 invalid arguments,
3 numerical failure (no bracket, no convergence, loss of definiteness),
4 resource cap (dimension or candidate budget).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

import mpmath
from mpmath import mp, mpf

from . import _precision
from ._precision import golden, parse_real, to_str
from .errors import DimensionCap, EnclosureTooLoose, InvalidSpec, NotPositiveDefinite

EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC, EXIT_CAP = 1, 2, 3, 4


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _fail(code: int, msg: str) -> int:
    sys.stderr.write(f"ivpcap: {msg}\n")
    return code


# -- spec flags --------------------------------------------------------------


def _add_spec_flags(p: argparse.ArgumentParser, degree: bool = True) -> None:
    p.add_argument("--mode", choices=("linf", "l2", "l2w"), default="l2")
    p.add_argument("--a", required=True, help="base A (decimal or 'golden')")
    p.add_argument("--b", help="base B; makes the constraint two-sided")
    thr = p.add_mutually_exclusive_group()
    thr.add_argument("--t", help="threshold t")
    thr.add_argument("--t-squared", help="threshold t^2")
    thr.add_argument("--t-squared-below-phi", action="store_true",
                     help="t^2 = phi (1 - 1e-6)")
    if degree:
        p.add_argument("--degree", "-d", type=int, required=True)


def _spec_from(args):
    from .ivp import GrowthSpec

    if args.t_squared_below_phi:
        t = mpmath.sqrt(golden() * (1 - mpf(10) ** -6))
    elif args.t_squared is not None:
        t2 = parse_real(args.t_squared)
        if not t2 > 0:
            raise InvalidSpec("t^2 must be positive")
        t = mpmath.sqrt(t2)
    elif args.t is not None:
        t = parse_real(args.t)
    else:
        t = mpf(1)
    b = None if args.b is None else parse_real(args.b)
    return GrowthSpec(a=parse_real(args.a), mode=args.mode, t=t, b=b)


def _degree(args) -> int:
    if args.degree < 0:
        raise InvalidSpec("degree must be nonnegative")
    return args.degree


# -- commands ----------------------------------------------------------------


def cmd_capacity(args) -> int:
    from .capacity import capacity_two_disks, capacity_via_op_norms

    a, b = parse_real(args.a), parse_real(args.b)
    val = capacity_two_disks(a, b)
    out = val.to_json(a, b)
    if args.cross_check:
        op = capacity_via_op_norms(a, b, args.kmax)
        out["cross_check"] = {"gamma": to_str(op.value, 20), "error": to_str(op.error, 6),
                              "method": op.method, "kmax": args.kmax}
    _emit(out)
    return 0


def cmd_critical_curve(args) -> int:
    from .capacity import critical_curve

    rows = critical_curve(args.a_min, args.a_max, args.steps, tol=parse_real(args.tol))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["A", "B_critical", "gamma_residual", "status"])
    for r in rows:
        w.writerow([to_str(r.a, 20), "" if r.b is None else to_str(r.b, 20),
                    "" if r.residual is None else to_str(r.residual, 6), r.status])
    return 0


def cmd_search(args) -> int:
    from .lattice import search_ivps

    spec = _spec_from(args)
    rep = search_ivps(spec, _degree(args), eps=parse_real(args.eps), dim_cap=args.dim_cap,
                      witness_cap=args.witness_cap, budget=args.budget)
    _emit(rep.to_json())
    if args.witnesses_out:
        with open(args.witnesses_out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            d = rep.d
            w.writerow([f"c{k}" for k in range(d + 1)])
            for p in rep.witnesses:
                w.writerow(p.padded(d))
    return 0


def _gram_for(args):
    from .gram import GramMode, gram_matrix

    spec = _spec_from(args)
    d = _degree(args)
    mode = GramMode.SIGMA_INFINITY if spec.mode.value == "linf" else None
    return spec, d, gram_matrix(spec, d, parse_real(args.eps), mode=mode)


def cmd_gram(args) -> int:
    from .gram import log_det, op_norms

    spec, d, g = _gram_for(args)
    if args.output == "csv":
        sys.stdout.write(op_norms(g).to_csv())
        return 0
    ld = log_det(g)
    out = g.to_json()
    out["log_det"] = ld.to_json()
    out["op_norms"] = [to_str(x, 20) for x in op_norms(g).norms]
    _emit(out)
    return 0


def cmd_volume(args) -> int:
    from .capacity import capacity_two_disks
    from .gram import log_det
    from .lattice import (PolytopeLInf, build_ellipsoid, log_ellipsoid_volume, linf_logvol,
                          vaaler_ball_bounds, finite_sigma_gram)

    spec = _spec_from(args)
    d = _degree(args)
    k = d + 1
    out = {"params": spec.to_json(), "d": d}
    if spec.mode.value == "linf":
        from .gram import GramMode, gram_matrix

        poly = PolytopeLInf.build(spec, d)
        half = spec.replace(t=spec.t / 2)
        gs = gram_matrix(half, d, parse_real(args.eps), mode=GramMode.SIGMA_INFINITY)
        rows = finite_sigma_gram(half, d, poly.rows_positive, poly.rows_negative)
        vb = vaaler_ball_bounds(gs, d, spec.t / 2, g_rows=rows,
                                rows=poly.rows_positive + 1 + poly.rows_negative)
        lv = linf_logvol(poly)
        out.update({
            "body": "linf polytope over the check range",
            "check_range": poly.check_range,
            "logvol": None if lv is None else to_str(lv, 20),
            "logvol_lower": to_str(vb.vaaler_logvol + k * mpmath.log(2), 20),
            "logvol_upper": to_str(vb.ball_logvol + k * mpmath.log(2), 20),
            "log_det_sigma": vb.log_det.to_json(),
            "vaaler_lower": vb.vaaler_lower,
        })
        mid = lv
    else:
        e = build_ellipsoid(spec, d, parse_real(args.eps))
        lv = log_ellipsoid_volume(e)
        out["log_det"] = log_det(e.q).to_json()
        if spec.two_sided:
            hi = lv.value
            lo = hi - k * mpmath.log(2) / 2
            mid = (hi + lo) / 2
            out.update({"body": "intersection of the two side ellipsoids",
                        "logvol": to_str(mid, 20), "logvol_lower": to_str(lo, 20),
                        "logvol_upper": to_str(hi, 20)})
        else:
            mid = lv.value
            out.update({"body": "ellipsoid", "logvol": to_str(mid, 20),
                        "logvol_error": to_str(lv.error, 6)})
    if spec.two_sided and d > 0 and mid is not None:
        gamma = capacity_two_disks(spec.a, spec.b).value
        out["gamma"] = to_str(gamma, 20)
        out["diagnostic"] = to_str(mid / d ** 2 + mpmath.log(gamma) / 2, 20)
    _emit(out)
    return 0


def cmd_verify(args) -> int:
    from .acceptance import CHECKS, QUICK, run_checks

    numbers = args.only or (QUICK if args.quick else sorted(CHECKS))
    for n in numbers:
        if n not in CHECKS:
            raise InvalidSpec(f"no check numbered {n}")

    def echo(res):
        print(res.summary(), flush=True)
        if args.verbose or not res.passed:
            for line in res.lines:
                print("      " + line, flush=True)

    results = run_checks(numbers, echo=echo)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed"
          + (f"; failed: {', '.join(map(str, failed))}" if failed else ""))
    return EXIT_VERIFY if failed else 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ivpcap",
        description="Integer-valued polynomials under growth constraints: capacities, "
                    "Gram matrices and lattice-point searches.")
    parser.add_argument("--precision", type=int, default=None,
                        help="working precision in bits (default 256 or $IVPCAP_PRECISION)")
    parser.add_argument("--eps", default="1e-40", help="truncation tolerance for series entries")
    parser.add_argument("--dim-cap", type=int, default=12)
    parser.add_argument("--output", choices=("json", "csv"), default="json")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="logarithmic capacity of the two image disks")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--cross-check", action="store_true",
                   help="add the orthogonal-polynomial ratio estimate")
    p.add_argument("--kmax", type=int, default=80)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("critical-curve", help="CSV of the level set gamma = 1")
    p.add_argument("--a-min", required=True)
    p.add_argument("--a-max", required=True)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--tol", default="1e-12")
    p.set_defaults(func=cmd_critical_curve)

    p = sub.add_parser("search", help="enumerate admissible IVPs of bounded degree")
    _add_spec_flags(p)
    p.add_argument("--witnesses-out", help="write witnesses as CSV")
    p.add_argument("--witness-cap", type=int, default=1000)
    p.add_argument("--budget", type=int, default=20_000_000,
                   help="maximum number of recorded enumeration candidates")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("gram", help="Gram matrix, log-determinant and Szegő norms")
    _add_spec_flags(p)
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("volume", help="log-volume of the constraint body")
    _add_spec_flags(p)
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--quick", action="store_true", help="fast subset")
    p.add_argument("--only", type=int, nargs="+", help="check numbers to run")
    p.add_argument("--verbose", "-v", action="store_true")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.precision is not None:
            _precision.set_default_precision(args.precision)
        if getattr(args, "dim_cap", 12) < 1:
            raise InvalidSpec("dim cap must be positive")
        with mp.workprec(_precision.DEFAULT_PREC):
            return args.func(args)
    except (DimensionCap, EnclosureTooLoose) as exc:
        return _fail(EXIT_CAP, str(exc))
    except NotPositiveDefinite as exc:
        return _fail(EXIT_NUMERIC, f"{exc} (try a higher --precision)")
    except ArithmeticError as exc:
        return _fail(EXIT_NUMERIC, str(exc))
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))


if __name__ == "__main__":
    sys.exit(main())
