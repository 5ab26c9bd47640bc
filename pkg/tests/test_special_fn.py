import cmath
import math

import numpy as np
import pytest

from oracles import thq_jacobi
from qstokes.errors import DivergentProduct, QModulusTooSmall
from qstokes.special_fn import (ThetaKind, eval_theta, growth_majorant, pochhammer, stieltjes_wiegert,
                                theta, thq, tshakaloff)

Q = 2.0


def random_points(rng, n, lo=-3.0, hi=3.0):
    return [cmath.exp(complex(rng.uniform(lo, hi), rng.uniform(0, 2 * math.pi))) for _ in range(n)]


class TestTheta:
    def test_functional_equation_point(self):
        z = 1.3 + 0.2j
        assert abs(thq(Q * z, Q) - z * thq(z, Q)) / abs(z * thq(z, Q)) < 1e-12

    def test_zero_at_minus_one(self):
        assert abs(thq(-1.0, Q)) <= 1e-10 * growth_majorant(1.0, Q)

    def test_series_vs_product(self):
        assert abs(thq(0.7, Q) - thq(0.7, Q, mode="product")) / abs(thq(0.7, Q)) < 1e-12

    def test_against_jacobi_theta(self, rng):
        """Independent path through mpmath's jtheta."""
        for z in random_points(rng, 20, -2, 2):
            assert abs(thq(z, Q) - thq_jacobi(z, Q)) / abs(thq_jacobi(z, Q)) < 1e-10

    def test_functional_equations_sample(self, rng):
        for z in random_points(rng, 100):
            t = thq(z, Q)
            assert abs(thq(Q * z, Q) - z * t) / abs(z * t) < 1e-12
            assert abs(thq(1 / z, Q) - z * t) / abs(z * t) < 1e-12
            th = theta(z, Q)
            assert abs(theta(Q * z, Q) - Q * z * th) / abs(Q * z * th) < 1e-12

    def test_variants_agree(self):
        z, lam = 0.4 - 0.9j, 1.2 + 0.5j
        assert eval_theta(ThetaKind("theta"), z, Q) == thq(Q * z, Q)
        assert eval_theta(ThetaKind("theta_q_lambda", lam), z, Q) == thq(z / lam, Q)

    def test_zeros_only_on_spiral(self):
        """Off the spiral -q^Z the modulus stays away from zero on a grid of the annulus."""
        worst = math.inf
        for r in np.linspace(1.0, 1.99, 25):
            for t in np.linspace(0, 2 * math.pi, 73)[:-1]:
                z = r * cmath.exp(1j * t)
                if abs(z + 1) < 0.1 or abs(z + Q) < 0.1:
                    continue
                worst = min(worst, abs(thq(z, Q)) / growth_majorant(z, Q))
        # zeros sit below 1e-9 of the majorant; the grid minimum is far above that
        assert worst > 1e-6

    def test_small_q_rejected(self):
        with pytest.raises(QModulusTooSmall):
            thq(0.5, 1.01)


class TestPochhammer:
    def test_empty(self):
        assert pochhammer(0.3, 0.5, 0) == 1

    def test_euler_constant(self):
        assert abs(pochhammer(0.5, 0.5) - 0.2887880951) < 1e-9

    def test_split(self, rng):
        """(a;p)_n (a p**n; p)_inf = (a;p)_inf."""
        a = complex(*rng.normal(size=2))
        p = 0.4
        lhs = pochhammer(a, p, 7) * pochhammer(a * p ** 7, p)
        assert abs(lhs - pochhammer(a, p)) / abs(pochhammer(a, p)) < 1e-12

    def test_divergent(self):
        with pytest.raises(DivergentProduct):
            pochhammer(0.5, 1.5)


class TestMajorant:
    def test_inversion_symmetry(self, rng):
        for z in random_points(rng, 20):
            assert abs(growth_majorant(z, Q) - growth_majorant(1 / (Q * z), Q)) / growth_majorant(z, Q) < 1e-12

    def test_bounds_theta(self, rng):
        for z in random_points(rng, 100, 0.0, math.log(Q)):
            assert abs(theta(z, Q)) <= growth_majorant(z, Q) * (1 + 1e-12)

    def test_lower_bound(self):
        """|theta(z)| >= C eps e(z) away from the zeros of theta, i.e. from -q^Z / q."""
        ratios = []
        for r in np.linspace(1.0, 1.99, 20):
            for t in np.linspace(0, 2 * math.pi, 60, endpoint=False):
                z = r * cmath.exp(1j * t)
                eps = min(abs(1 + z * Q ** k) for k in range(-3, 4))
                if eps > 0.05:
                    ratios.append(abs(theta(z, Q)) / (eps * growth_majorant(z, Q)))
        assert min(ratios) > 0


class TestTshakaloff:
    def test_coefficients(self):
        f = tshakaloff(5, Q)
        assert f[0] == 1 and f[3] == 8

    def test_equation(self):
        """z sigma_q f - f = -1 up to order - 1."""
        f = tshakaloff(20, Q)
        lhs = f.rescale(Q).shift(1) - f
        for n in range(20):
            assert lhs[n] == (-1 if n == 0 else 0)

    def test_stieltjes_wiegert_degree_one(self):
        q = 3.0
        x = 0.7
        direct = 1 / (1 - q) - q * x / (1 - q)
        assert abs(stieltjes_wiegert(1, x, q) - direct) < 1e-12
