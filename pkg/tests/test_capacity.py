import random

import mpmath
import pytest
from mpmath import mpc, mpf

from ivpcap import golden
from ivpcap.capacity import (ThetaParams, bump_average, capacity_two_disks,
                             capacity_via_op_norms, critical_b, critical_curve, diagonal_level,
                             level_b, log_mean_modulus, single_disk_capacity, theta1,
                             theta1_prime0)
from ivpcap.errors import InvalidBase, NoBracket, NomeOutOfRange


def product_theta1(z, q):
    # Jacobi triple product, nome convention q^((n+1/2)^2)
    q2 = q * q
    acc = 2 * q ** mpf("0.25") * mpmath.sin(z)
    for n in range(1, 400):
        qn = q2 ** n
        acc *= (1 - qn) * (1 - 2 * qn * mpmath.cos(2 * z) + qn * qn)
    return acc


class TestTheta:
    def test_parity_and_zero(self):
        q = mpf("0.3")
        z = mpc("0.4", "0.7")
        assert abs(theta1(0, q)[0]) == 0
        assert abs(theta1(-z, q)[0] + theta1(z, q)[0]) < mpf(10) ** -70

    @pytest.mark.parametrize("z", [mpc("0.5", 0), mpc(0, "0.9"), mpc("0.2", "-1.3")])
    def test_series_matches_product(self, z):
        q = mpf("0.3")
        val, err = theta1(z, q)
        assert abs(val - product_theta1(z, q)) < mpf(10) ** -30 + err

    def test_derivative_at_zero(self):
        q = mpf("0.2")
        h = mpf(10) ** -25
        fd = (theta1(h, q)[0] - theta1(-h, q)[0]) / (2 * h)
        assert abs(theta1_prime0(q).value - fd) < mpf(10) ** -40

    def test_nome_range(self):
        for q in (0, 1, "-0.1"):
            with pytest.raises(NomeOutOfRange):
                ThetaParams(q)


class TestCapacity:
    def test_symmetric(self):
        rng = random.Random(8)
        for _ in range(10):
            a, b = mpf(rng.uniform(1.1, 6)), mpf(rng.uniform(1.1, 6))
            x, y = capacity_two_disks(a, b), capacity_two_disks(b, a)
            assert abs(x.value - y.value) <= x.error + y.error

    def test_decreasing_in_each_base(self):
        grid = [mpf("1.2") + mpf(k) / 3 for k in range(10)]
        for b in (mpf("1.5"), mpf(3)):
            vals = [capacity_two_disks(a, b).value for a in grid]
            assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_above_single_disk(self):
        for a, b in (("1.3", "4"), ("2", "3"), ("golden", "golden"), ("6", "1.1")):
            a = golden() if a == "golden" else mpf(a)
            b = golden() if b == "golden" else mpf(b)
            g = capacity_two_disks(a, b).value
            assert g >= max(single_disk_capacity(a), single_disk_capacity(b))

    def test_golden_pair_at_least_one(self):
        assert capacity_two_disks(golden(), golden()).value >= 1

    def test_invalid_base(self):
        with pytest.raises(InvalidBase):
            capacity_two_disks(1, 2)

    def test_error_is_tiny(self):
        assert capacity_two_disks(2, 3).error < mpf(10) ** -60


class TestOrthogonalPolynomialEstimate:
    def test_single_circle_ratios(self):
        est = capacity_via_op_norms(golden(), None, 40)
        assert abs(est.value - 1) < mpf(10) ** -40
        r = 1 / mpf(3)
        est = capacity_via_op_norms(3, None, 40)
        assert abs(est.value - r / (1 - r * r)) < mpf(10) ** -40

    @pytest.mark.parametrize("a,b", [("2", "3"), ("1.5", "5")])
    def test_bump_estimate_agrees(self, a, b):
        est = capacity_via_op_norms(a, b, 80)
        ref = capacity_two_disks(a, b).value
        assert abs(est.value - ref) < 1e-3

    def test_bump_average_of_constant(self):
        assert abs(bump_average([mpf(5)] * 30, 5, 25) - 5) < mpf(10) ** -70

    def test_bump_average_damps_oscillation(self):
        vals = [1 + mpf(-1) ** k / 10 for k in range(200)]
        assert abs(bump_average(vals, 50, 199) - 1) < mpf(10) ** -6

    def test_kmax_floor(self):
        with pytest.raises(ValueError):
            capacity_via_op_norms(2, 3, 10)


class TestLevelSets:
    @pytest.mark.parametrize("a", ["1.8", "2.5", "6"])
    def test_critical_residual(self, a):
        b = critical_b(a)
        assert abs(capacity_two_disks(a, b).value - 1) < mpf(10) ** -10

    def test_critical_curve_decreasing(self):
        bs = [critical_b(a) for a in ("1.7", "2", "3", "5", "10")]
        assert all(x > y for x, y in zip(bs, bs[1:]))
        assert all(b > golden() for b in bs)

    def test_reflection(self):
        # the curve is symmetric: critical_b(critical_b(a)) = a
        a = mpf("2.2")
        b = critical_b(a, tol=mpf(10) ** -30)
        assert abs(critical_b(b, tol=mpf(10) ** -30) - a) < mpf(10) ** -20

    def test_no_bracket_below_golden(self):
        with pytest.raises(NoBracket):
            critical_b("1.6")

    def test_logarithmic_approach_to_golden(self):
        # (B - phi) log A settles near a constant as A grows
        prods = []
        for e in (6, 12, 24, 48):
            a = mpf(10) ** e
            prods.append((critical_b(a) - golden()) * mpmath.log(a))
        assert all(abs(x - prods[-1]) < 0.02 for x in prods)
        gap = critical_b(mpf(10) ** 100) - golden()
        assert 0 < gap < mpf(10) ** -3

    def test_level_and_diagonal(self):
        a = diagonal_level("0.9")
        assert abs(capacity_two_disks(a, a).value - mpf("0.9")) < mpf(10) ** -10
        b = level_b(2, "0.9")
        assert abs(capacity_two_disks(2, b).value - mpf("0.9")) < mpf(10) ** -10

    def test_curve_rows(self):
        rows = critical_curve("1.7", "3", 4)
        assert [r.status for r in rows] == ["ok"] * 4
        assert all(abs(r.residual) < mpf(10) ** -10 for r in rows)
        with pytest.raises(ValueError):
            critical_curve("3", "2", 4)


class TestLogMeanModulus:
    @pytest.mark.parametrize("a,expected", [("golden", None), ("0", 0), ("0.5", 0)])
    def test_values(self, a, expected):
        if a == "golden":
            a, expected = golden(), mpmath.log(golden())
        assert abs(log_mean_modulus(a) - expected) < mpf(10) ** -25

    def test_rejects_unit_circle(self):
        with pytest.raises(ValueError):
            log_mean_modulus(1)
