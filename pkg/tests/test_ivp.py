import json
import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mpf

from ivpcap import golden
from ivpcap.errors import InvalidSpec, NotIntegerValued
from ivpcap.ivp import (GrowthSpec, IvpCoeffs, Norm, Side, binomial, c_a, c_ab,
                        check_range, eval_ivp, from_monomial, growth_functional, linf_sup,
                        satisfies, to_monomial)

coeff_lists = st.lists(st.integers(-50, 50), min_size=1, max_size=11)


def horner(q, n):
    acc = Fraction(0)
    for c in reversed(q):
        acc = acc * n + c
    return acc


class TestBinomial:
    def test_small(self):
        assert binomial(4, 2) == 6
        assert binomial(3, 5) == 0

    def test_minus_one(self):
        assert [binomial(-1, k) for k in range(6)] == [1, -1, 1, -1, 1, -1]

    def test_negative_upper(self):
        assert binomial(-3, 2) == 6
        assert abs(binomial(-3, 2)) <= math.comb(6, 2)

    @given(st.integers(1, 60), st.integers(0, 12))
    def test_reflection(self, n, k):
        assert binomial(-n, k) == (-1) ** k * math.comb(n + k - 1, k)


class TestIvpCoeffs:
    def test_canonical_form(self):
        assert IvpCoeffs([1, 2, 0, 0]).coeffs == (1, 2)
        z = IvpCoeffs([0, 0])
        assert z.coeffs == (0,) and z.degree == 0 and z.is_zero()

    def test_eval_examples(self):
        assert IvpCoeffs([1])(100) == 1
        p = IvpCoeffs([0, 2, 1])
        assert [p(n) for n in range(11)] == [n * (n + 3) // 2 for n in range(11)]
        assert eval_ivp(IvpCoeffs([0, 0, 1]), -2) == 3

    def test_json_roundtrip(self):
        p = IvpCoeffs([3, -(10 ** 30), 7])
        obj = json.loads(json.dumps(p.to_json()))
        assert obj == {"degree": 2, "coeffs": ["3", str(-(10 ** 30)), "7"]}
        assert IvpCoeffs.from_json(obj) == p


class TestMonomial:
    def test_examples(self):
        assert to_monomial(IvpCoeffs([0, 0, 1])) == [0, Fraction(-1, 2), Fraction(1, 2)]
        assert to_monomial(IvpCoeffs([1])) == [1]

    @given(coeff_lists)
    def test_roundtrip(self, cs):
        p = IvpCoeffs(cs)
        assert from_monomial(to_monomial(p)) == p

    @given(coeff_lists, st.integers(-50, 50))
    def test_eval_agrees_with_monomial_form(self, cs, n):
        p = IvpCoeffs(cs)
        assert horner(to_monomial(p), n) == p(n)

    def test_not_integer_valued(self):
        with pytest.raises(NotIntegerValued):
            from_monomial([0, Fraction(1, 3)])


class TestGrowthSpec:
    def test_validation(self):
        with pytest.raises(InvalidSpec):
            GrowthSpec(a=1)
        with pytest.raises(InvalidSpec):
            GrowthSpec(a=2, b="0.5")
        with pytest.raises(InvalidSpec):
            GrowthSpec(a=2, t=0)

    def test_golden_keyword_full_precision(self):
        s = GrowthSpec(a="golden")
        assert abs(s.a - (1 + mpmath.sqrt(5)) / 2) < mpf(10) ** -70

    def test_negative_side_needs_b(self):
        with pytest.raises(InvalidSpec):
            growth_functional(IvpCoeffs([1]), GrowthSpec(a=2), Side.NEGATIVE)


class TestConstants:
    def test_c_a_two(self):
        c = c_a(2)
        assert c >= 2 / mpmath.log(2)
        assert 14 < c < 16
        a = mpf(2)
        assert mpmath.exp(2 / c) <= a
        assert 6 * a * c <= a ** (c / 2) * (1 + mpf(10) ** -10)

    def test_c_a_large_base_clamped(self):
        assert c_a(10 ** 6) == mpmath.e

    def test_c_a_decreasing(self):
        grid = [mpf("1.1") + mpf(k) / 4 for k in range(30)]
        vals = [c_a(a) for a in grid]
        assert all(x >= y for x, y in zip(vals, vals[1:]))

    def test_c_ab(self):
        assert c_ab(2, 3) == max(c_a(2), c_a(3))

    def test_check_range_floor(self):
        assert check_range(100, 1) >= 2


class TestGrowthFunctional:
    def test_golden_constant(self):
        g = growth_functional(IvpCoeffs([1]), GrowthSpec(a=golden()), Side.POSITIVE)
        assert abs(g.value - golden()) <= mpf(10) ** -30
        assert g.contains(golden())

    def test_zero(self):
        for mode in Norm:
            g = growth_functional(IvpCoeffs([0]), GrowthSpec(a=2, mode=mode, b=3))
            assert g.value == 0 and g.error == 0

    def test_weighted_geometric(self):
        # sum 4^-n/(n+1) = 4 log(4/3)
        g = growth_functional(IvpCoeffs([1]), GrowthSpec(a=2, mode=Norm.L2_WEIGHTED))
        assert g.contains(4 * mpmath.log(mpf(4) / 3))

    def test_negative_side_series(self):
        # P = 1 on the negative side: sum_{n>=1} 9^-n = 1/8
        g = growth_functional(IvpCoeffs([1]), GrowthSpec(a=2, b=3), Side.NEGATIVE)
        assert g.contains(mpf(1) / 8)

    def test_weighted_value_of_small_quadratic(self):
        # P(n) = n(n-1)/2 - n = binom(n,2) - binom(n,1), weighted at A = phi
        phi = golden()
        g = growth_functional(IvpCoeffs([0, -1, 1]), GrowthSpec(a=phi, mode=Norm.L2_WEIGHTED))
        target = 4 * phi ** 2 * mpmath.log(phi) - 15 / (2 * phi)
        assert g.contains(target, slack=mpf(10) ** -60)

    def test_l2_error_dominates_remainder(self):
        p = IvpCoeffs([3, -2, 5, 1])
        spec = GrowthSpec(a="1.3")
        g = growth_functional(p, spec, tol=mpf(10) ** -8)
        fine = growth_functional(p, spec)
        assert abs(g.value - fine.value) <= g.error + fine.error

    def test_linf_simple(self):
        # P(n) = n at A = 2: max n 2^-n = 1/2 at n = 1, 2
        g = growth_functional(IvpCoeffs([0, 1]), GrowthSpec(a=2, mode=Norm.LINF))
        assert g.contains(mpf(1) / 2)

    def test_linf_small_base_degree_one(self):
        # P(n) = n at A = 1.05 peaks near n = 20, beyond the c_A d range at d = 1
        a = mpf("1.05")
        best, arg, _ = linf_sup(IvpCoeffs([0, 1]), a)
        exact = max(n * a ** -n for n in range(200))
        assert abs(best - exact) < mpf(10) ** -60 and arg in (20, 21)

    @settings(max_examples=30, deadline=None)
    @given(coeff_lists, st.sampled_from(["1.2", "1.618", "2", "3.5"]))
    def test_linf_extended_range_same_maximizer(self, cs, a):
        p = IvpCoeffs(cs)
        a = mpf(a)
        best, arg, used = linf_sup(p, a)
        wide = 4 * max(used, check_range(a, p.degree))
        vals = [abs(p(n)) * a ** -n for n in range(wide + 1)]
        assert max(vals) == best

    def test_satisfies(self):
        phi = golden()
        one = IvpCoeffs([1])
        assert satisfies(one, GrowthSpec(a=phi, t=mpmath.sqrt(phi) * (1 + mpf(10) ** -9))) is True
        assert satisfies(one, GrowthSpec(a=phi, t=mpmath.sqrt(phi) * (1 - mpf(10) ** -9))) is False
        assert satisfies(IvpCoeffs([0, 1]), GrowthSpec(a=2, t=mpf(1) / 2, mode=Norm.LINF)) is None

    def test_two_sided_checks_both_sides(self):
        p = IvpCoeffs([0, 1])  # P(n) = n
        spec = GrowthSpec(a=10, b="1.1", t=1, mode=Norm.LINF)
        assert growth_functional(p, spec, Side.POSITIVE).value < 1
        assert satisfies(p, spec) is False
