import json
import random

import mpmath
import pytest
from mpmath import mpf

from ivpcap import golden
from ivpcap.errors import DisksOverlap, InvalidSpec, NotPositiveDefinite
from ivpcap.genfunc import CircleSpec
from ivpcap.gram import (GramMode, bergman_gram_two_disks, cholesky, from_rows, gram_matrix,
                         log_det, min_eigenvalue, op_norms, single_circle_gram,
                         single_circle_log_det, truncation_index)
from ivpcap.ivp import GrowthSpec, IvpCoeffs, Norm, Side, growth_functional

TINY = mpf(10) ** -60


def close(x, y, tol=TINY):
    return abs(mpf(x) - mpf(y)) <= tol * max(1, abs(mpf(y)))


def quad(g, c):
    n = len(c)
    return mpmath.fsum(c[j] * g[j, k] * c[k] for j in range(n) for k in range(n))


class TestEntries:
    def test_degree_zero(self):
        assert close(gram_matrix(GrowthSpec(a=golden()), 0)[0, 0], golden())
        assert close(gram_matrix(GrowthSpec(a=2), 0)[0, 0], mpf(4) / 3)

    def test_series_matches_closed_form(self):
        spec = GrowthSpec(a="1.7")
        s = gram_matrix(spec, 6)
        c = gram_matrix(spec, 6, method="closed_form")
        assert c.entry_tail_bound <= mpf(10) ** -70
        for j in range(7):
            for k in range(7):
                assert abs(s[j, k] - c[j, k]) <= s.entry_tail_bound + mpf(10) ** -60

    def test_quadratic_form_is_growth_functional(self):
        rng = random.Random(1)
        for mode, b in ((Norm.L2, None), (Norm.L2, "2.5"), (Norm.L2_WEIGHTED, None)):
            spec = GrowthSpec(a="1.9", b=b, mode=mode)
            g = gram_matrix(spec, 4)
            for _ in range(5):
                cs = [rng.randint(-4, 4) for _ in range(5)]
                val = growth_functional(IvpCoeffs(cs), spec).value
                if b is not None:
                    val += growth_functional(IvpCoeffs(cs), spec, Side.NEGATIVE).value
                assert close(quad(g, [mpf(x) for x in cs]), val, mpf(10) ** -30)

    def test_sigma_scaling(self):
        spec = GrowthSpec(a=2, t=3)
        base = gram_matrix(spec, 3)
        sig = gram_matrix(spec, 3, mode=GramMode.SIGMA_INFINITY)
        assert close(sig[2, 1] * 36, base[2, 1])

    def test_truncation_index(self):
        m = truncation_index(GrowthSpec(a=2), 5, mpf(10) ** -40)
        assert m >= 6 * mpmath.log(mpf(10) ** 40) / mpmath.log(4) / 6
        with pytest.raises(InvalidSpec):
            truncation_index(GrowthSpec(a=2), 5, 0)

    def test_json_roundtrip(self):
        g = gram_matrix(GrowthSpec(a=2), 2)
        obj = json.loads(g.dumps())
        assert obj["mode"] == "L2Circle" and obj["dim"] == 3
        assert mpf(obj["entries"][1][1]) == g[1, 1]

    def test_from_rows_checks(self):
        with pytest.raises(InvalidSpec):
            from_rows([[1, 2], [3, 4]])
        with pytest.raises(InvalidSpec):
            from_rows([[1, 2]])


class TestFactorization:
    def test_identity_and_scalar(self):
        ch = cholesky(from_rows([[1, 0], [0, 1]]))
        assert ch.pivots == [1, 1]
        assert close(cholesky(from_rows([[golden()]])).pivots[0] ** 2, golden())

    def test_random_spd_reconstruction(self):
        rng = random.Random(2)
        n = 6
        a = [[mpf(rng.uniform(-1, 1)) for _ in range(n)] for _ in range(n)]
        rows = [[mpmath.fsum(a[i][k] * a[j][k] for k in range(n)) + (i == j) for j in range(n)]
                for i in range(n)]
        low = cholesky(from_rows(rows)).lower
        for i in range(n):
            for j in range(n):
                assert close(mpmath.fsum(low[i][k] * low[j][k] for k in range(n)), rows[i][j])

    def test_indefinite_raises(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky(from_rows([[1, 2], [2, 1]]))

    def test_guard_respects_tail(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky(from_rows([[1, 0], [0, mpf(10) ** -8]], tail=mpf(10) ** -8))

    def test_min_eigenvalue(self):
        assert min_eigenvalue(from_rows([[1, 0], [0, 1]])).contains(1, slack=mpf(10) ** -11)
        lam = min_eigenvalue(from_rows([[1, 0], [0, mpf(10) ** -8]]))
        assert lam.contains(mpf(10) ** -8, slack=mpf(10) ** -19)


class TestNormsAndDeterminants:
    def test_golden_circle_norms_constant(self):
        norms = op_norms(single_circle_gram(1 / golden(), 12)).norms
        for v in norms:
            assert close(v, mpmath.sqrt(golden()), mpf(10) ** -50)

    @pytest.mark.parametrize("r", ["0.3", "0.7"])
    def test_single_circle_ratios(self, r):
        r = mpf(r)
        ratios = op_norms(single_circle_gram(r, 10)).ratios()
        for x in ratios:
            assert close(x, r / (1 - r * r), mpf(10) ** -50)

    @pytest.mark.parametrize("r,d", [("0.3", 4), ("0.618", 9), ("0.7", 15)])
    def test_single_circle_log_det(self, r, d):
        ld = log_det(single_circle_gram(r, d))
        assert ld.contains(single_circle_log_det(r, d), slack=mpf(10) ** -50)

    def test_norms_squared_give_determinant(self):
        g = gram_matrix(GrowthSpec(a="1.4", b=3), 6)
        prod = mpmath.fsum(2 * mpmath.log(v) for v in op_norms(g).norms)
        assert close(prod, log_det(g).value, mpf(10) ** -50)

    def test_two_sided_determinant_symmetric(self):
        x = log_det(gram_matrix(GrowthSpec(a=2, b=3), 5)).value
        y = log_det(gram_matrix(GrowthSpec(a=3, b=2), 5)).value
        assert close(x, y, mpf(10) ** -30)

    def test_determinant_grows_with_truncation(self):
        spec = GrowthSpec(a=2)
        vals = [log_det(gram_matrix(spec, 4, truncation=m)).value for m in (30, 40, 60, 90)]
        assert all(x < y for x, y in zip(vals, vals[1:]))

    def test_sigma_golden_determinant_factor(self):
        # det Sigma = det(l2) / (4 t^2)^(d+1); at A = phi the l2 determinant is phi^(d+1)
        for d in (0, 3, 8):
            g = gram_matrix(GrowthSpec(a=golden(), t=1), d, mode=GramMode.SIGMA_INFINITY)
            target = (d + 1) * mpmath.log(golden() / 4)
            assert log_det(g).contains(target, slack=mpf(10) ** -40)


class TestBergman:
    def test_single_disk_moments(self):
        r = mpf("0.6")
        g = bergman_gram_two_disks(CircleSpec(0, r), None, 4)
        assert g.mode is GramMode.BERGMAN_DISK
        for j in range(5):
            assert close(g[j, j], mpmath.pi * r ** (2 * j + 2) / (j + 1))
            for k in range(j):
                assert abs(g[j, k]) <= mpf(10) ** -60

    def test_translation(self):
        c, r = mpf("0.3"), mpf("0.5")
        g = bergman_gram_two_disks(CircleSpec(c, r), None, 3)
        assert close(g[0, 0], mpmath.pi * r * r)
        assert close(g[1, 0], c * mpmath.pi * r * r)
        assert close(g[1, 1], mpmath.pi * r * r * (c * c + r * r / 2))

    def test_overlap_rejected(self):
        with pytest.raises(DisksOverlap):
            bergman_gram_two_disks(CircleSpec(0, 1), CircleSpec("1.5", 1), 2)

    def test_two_disks_norm_kind(self):
        g = bergman_gram_two_disks(CircleSpec(mpf(1) / 3, mpf(2) / 3),
                                   CircleSpec(mpf(-4) / 3, mpf(2) / 3), 8)
        assert g.mode is GramMode.BERGMAN_TWO_DISKS
        assert op_norms(g).kind.value == "Bergman"
        assert "k,norm,log_norm,ratio" in op_norms(g).to_csv()
