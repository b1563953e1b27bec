import itertools

import mpmath
import numpy as np
import pytest
from mpmath import mpf

from ivpcap import golden
from ivpcap.acceptance import random_spd, random_unipotent
from ivpcap.errors import DimensionCap, InvalidSpec
from ivpcap.gram import GramMode, gram_matrix
from ivpcap.ivp import GrowthSpec, IvpCoeffs, satisfies
from ivpcap.lattice import (PolytopeLInf, brute_force, build_ellipsoid, count_vs_volume_check,
                            ellipsoid_from_matrix, ellipsoid_volume, enumerate_ellipsoid,
                            gamma_power_ellipsoid, log_ellipsoid_volume, pulled_back,
                            search_ivps, shortest_nonzero, vaaler_ball_bounds)


def count(e):
    return enumerate_ellipsoid(e).count_inclusive


class TestEnumeration:
    def test_examples(self):
        assert count(ellipsoid_from_matrix([[1]], "2.5")) == 5
        res = enumerate_ellipsoid(ellipsoid_from_matrix([[1, 0], [0, 1]], 1))
        assert res.count_inclusive == res.count_exclusive == 5
        assert res.as_set() == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}

    def test_lexicographic_order(self):
        res = enumerate_ellipsoid(ellipsoid_from_matrix([[2, 1], [1, 3]], 3))
        pts = [tuple(p) for p in res.points]
        assert pts == sorted(pts)

    def test_monotone_in_t(self):
        q = [[3, 1, 0], [1, 2, "0.5"], [0, "0.5", 1]]
        counts = [count(ellipsoid_from_matrix(q, t)) for t in ("1", "1.5", "2.2", "3")]
        assert all(x <= y for x, y in zip(counts, counts[1:]))

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        q, t, tail = random_spd(rng, ("integer", "real", "noisy")[seed % 3])
        e = ellipsoid_from_matrix(q, t, tail)
        a, b = enumerate_ellipsoid(e), brute_force(e)
        assert a.as_set() == b.as_set()
        assert a.count_exclusive == b.count_exclusive

    def test_count_only_agrees(self):
        e = ellipsoid_from_matrix([[2, 1], [1, 3]], 5)
        full, fast = enumerate_ellipsoid(e), enumerate_ellipsoid(e, count_only=True)
        assert full.count_inclusive == fast.count_inclusive

    def test_unimodular_invariance(self):
        u = mpmath.matrix([[1, 2, 0], [0, 1, -1], [0, 0, 1]])
        q = mpmath.matrix([[2, 0, 0], [0, 3, 1], [0, 1, 2]])
        qu = u.T * q * u
        rows = [[qu[i, j] for j in range(3)] for i in range(3)]
        e1 = ellipsoid_from_matrix([[q[i, j] for j in range(3)] for i in range(3)], "2.5")
        assert count(e1) == count(ellipsoid_from_matrix(rows, "2.5"))

    def test_boundary_points_exact(self):
        # c^T c = 4 lands exactly on the boundary at t = 2
        res = enumerate_ellipsoid(ellipsoid_from_matrix([[1, 0], [0, 1]], 2))
        assert res.count_ambiguous == 0 and res.count_inclusive == 13

    def test_dimension_cap(self):
        e = ellipsoid_from_matrix(np.eye(4).tolist(), 1)
        with pytest.raises(DimensionCap):
            enumerate_ellipsoid(e, dim_cap=3)

    def test_shortest_nonzero(self):
        assert shortest_nonzero(ellipsoid_from_matrix([[2, 1], [1, 2]], 1).q).contains(2)


class TestVolumes:
    def test_examples(self):
        assert abs(ellipsoid_volume(ellipsoid_from_matrix([[1, 0], [0, 1]], 1)).value
                   - mpmath.pi) < mpf(10) ** -60
        assert abs(ellipsoid_volume(ellipsoid_from_matrix([[1]], 1)).value - 2) < mpf(10) ** -60

    def test_gamma_power_volume(self):
        gamma, t, d = mpf("0.8"), mpf(3), 4
        e = gamma_power_ellipsoid(gamma, t, d)
        n = d + 1
        expected = (n * mpmath.log(t) + n * mpmath.log(mpmath.pi) / 2
                    - mpmath.loggamma(mpf(n) / 2 + 1) - mpmath.log(gamma) * d * n / 2)
        assert log_ellipsoid_volume(e).contains(expected, slack=mpf(10) ** -50)

    def test_vaaler_degree_zero(self):
        g = gram_matrix(GrowthSpec(a=2, t=1), 0, mode=GramMode.SIGMA_INFINITY)
        vb = vaaler_ball_bounds(g, 0, 1)
        assert vb.log_det.contains(-mpmath.log(3), slack=mpf(10) ** -40)
        assert vb.vaaler_lower == 2


class TestQuadraticSearch:
    def test_golden_ellipsoid_degree_zero(self):
        e = build_ellipsoid(GrowthSpec(a=golden()), 0)
        assert abs(e.q[0, 0] - golden()) < mpf(10) ** -60

    @pytest.mark.parametrize("d", range(7))
    def test_golden_floor(self, d):
        # no nonzero IVP has l2 mass below phi at base phi
        g = gram_matrix(GrowthSpec(a=golden()), d)
        assert shortest_nonzero(g).contains(golden(), slack=mpf(10) ** -30)

    def test_below_and_above_floor(self):
        below = GrowthSpec(a=golden(), t=mpmath.sqrt(golden() * (1 - mpf(10) ** -6)))
        above = GrowthSpec(a=golden(), t=mpmath.sqrt(golden() * (1 + mpf(10) ** -6)))
        assert search_ivps(below, 3).count == 0
        rep = search_ivps(above, 3)
        assert rep.count >= 2
        assert all(satisfies(w, above) for w in rep.witnesses)

    def test_count_monotone_in_degree(self):
        spec = GrowthSpec(a=2, t=3)
        counts = [search_ivps(spec, d).count for d in range(4)]
        assert all(x <= y for x, y in zip(counts, counts[1:]))

    def test_two_sided_against_box(self):
        spec = GrowthSpec(a=2, b="2.5", t=2)
        d = 2
        rep = search_ivps(spec, d)
        box = brute_force(build_ellipsoid(spec, d))
        direct = {tuple(int(v) for v in p) for p in box.points
                  if any(p) and satisfies(IvpCoeffs(list(p)), spec)}
        found = {tuple(w.padded(d)) for w in rep.witnesses}
        assert found == direct and rep.count == len(direct)


class TestLinfSearch:
    def test_against_box(self):
        spec = GrowthSpec(a=2, t=2, mode="linf")
        d = 2
        rep = search_ivps(spec, d)
        direct = set()
        for c in itertools.product(range(-8, 9), repeat=d + 1):
            if any(c) and satisfies(IvpCoeffs(list(c)), spec):
                direct.add(c)
        assert {tuple(w.padded(d)) for w in rep.witnesses} == direct

    def test_polytope_dimension(self):
        poly = PolytopeLInf.build(GrowthSpec(a=2, t=1, mode="linf"), 3)
        assert poly.matrix().shape[1] == 4

    def test_dimension_cap(self):
        with pytest.raises(DimensionCap):
            search_ivps(GrowthSpec(a=2, t=1, mode="linf"), 5, dim_cap=4)


class TestUnipotentImages:
    def test_count_matches_brute_force(self):
        rng = np.random.default_rng(3)
        e = gamma_power_ellipsoid("0.9", 2, 3)
        psi = random_unipotent(rng, 3)
        pb = pulled_back(e, psi)
        fast = enumerate_ellipsoid(pb, count_only=True).count_inclusive
        assert fast == brute_force(pb).count_inclusive
        cv = count_vs_volume_check(e, psi, gamma="0.9")
        assert cv.count == fast and cv.log_ratio >= cv.lower

    def test_rejects_non_unipotent(self):
        e = gamma_power_ellipsoid("0.9", 2, 1)
        with pytest.raises(InvalidSpec):
            pulled_back(e, [[2, 0], [0, 1]])
