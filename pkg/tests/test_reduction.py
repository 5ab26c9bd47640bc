import numpy as np
import pytest

from conftest import random_block, random_poly
from oracles import red_dense
from qstokes.errors import OrderTooSmall, TailNotNegligible
from qstokes.reduction import borel_weight, q_borel, red, red_residual, two_slope_invariant
from qstokes.series_core import LaurentSeries
from qstokes.special_fn import tshakaloff

Q = 2.0


class TestBorel:
    def test_tshakaloff_to_geometric(self):
        """The level-one transform of the Tshakaloff series has all coefficients one."""
        b = q_borel(tshakaloff(30, Q), 1, Q)
        assert max(abs(b[n] - 1) for n in range(31)) < 1e-12

    def test_intertwines_z_sigma(self, rng):
        """B(z sigma f - f) = (z - 1) B f."""
        f = random_poly(rng, 0, 12, (), 12)
        g = f.rescale(Q).shift(1) - f
        lhs = q_borel(g, 1, Q)
        Bf = q_borel(f, 1, Q)
        rhs = Bf.shift(1) - Bf
        assert lhs.max_diff(rhs, hi=12) < 1e-12 * rhs.max_abs()

    def test_weights_recursion(self):
        """t_n = q**(n-d) t_{n-d}."""
        for d in (1, 2, 3):
            for n in range(-6, 12):
                assert abs(borel_weight(n, d, Q) - Q ** (n - d) * borel_weight(n - d, d, Q)) \
                    < 1e-12 * abs(borel_weight(n, d, Q))

    def test_level_zero_rejected(self):
        with pytest.raises(ValueError):
            q_borel(LaurentSeries(0, [1.0]), 0, Q)


class TestInvariant:
    def test_geometric_value(self):
        """B Y(1/a) for the Tshakaloff series is 1 / (1 - 1/a)."""
        a = 3.0 + 1.0j
        res = two_slope_invariant(tshakaloff(40, Q), a, Q)
        assert abs(res.value - 1 / (1 - 1 / a)) < 1e-10

    def test_polynomial(self):
        """For a polynomial the sum is finite: 1 + 2/a + 3 q**-1/a**2."""
        a = 1.5
        # zeros at the top of the window mark the series as exact
        Y = LaurentSeries(0, [1.0, 2.0, 3.0, 0.0], 3)
        assert abs(two_slope_invariant(Y, a, Q).value - (1 + 2 / a + 3 / (Q * a * a))) < 1e-14

    def test_tail_check(self):
        with pytest.raises(TailNotNegligible):
            two_slope_invariant(tshakaloff(10, Q), 1.2, Q)

    def test_matrix_argument(self, rng):
        A = np.diag([2.0, 3.0])
        Y = random_poly(rng, 0, 3, (2, 1), 3).with_hi(5)
        out = two_slope_invariant(Y, A, Q).value
        for i, a in enumerate((2.0, 3.0)):
            direct = sum(Y[n][i, 0] * a ** -n / Q ** (n * (n - 1) // 2) for n in range(4))
            assert abs(out[i, 0] - direct) < 1e-13


def red_case(rng, mu1, mu2, r1, r2, degree=3):
    A1 = random_block(rng, mu1, r1).A
    A2 = random_block(rng, mu2, r2).A
    U = random_poly(rng, 0, degree, (r1, r2), degree)
    return A1, A2, U


class TestRed:
    @pytest.mark.parametrize("mu1,mu2,r1,r2", [(0, 1, 1, 1), (0, 2, 2, 1), (-1, 2, 1, 2), (1, 4, 2, 2)])
    def test_against_dense_oracle(self, rng, mu1, mu2, r1, r2):
        A1, A2, U = red_case(rng, mu1, mu2, r1, r2)
        res = red(mu1, A1, mu2, A2, U, Q)
        X, V, lsq = red_dense(mu1, A1, mu2, A2, U, Q, res.F12.lo, res.F12.hi)
        assert lsq < 1e-10
        scale = max(U.max_abs(), 1.0)
        for m in range(mu1, mu2):
            assert abs(res.V[m] - V[m]).max() / scale < 1e-9
        for n in range(res.F12.lo, res.F12.hi + 1):
            assert abs(res.F12[n] - X[n]).max() / scale < 1e-9

    def test_residual_and_support(self, rng):
        A1, A2, U = red_case(rng, 0, 3, 2, 2)
        res = red(0, A1, 3, A2, U, Q)
        assert red_residual(0, A1, 3, A2, U, res, Q) < 1e-12
        assert res.V.window == (0, 2)
        assert res.closure < 1e-12

    def test_linearity(self, rng):
        A1, A2, U1 = red_case(rng, 0, 2, 1, 2)
        U2 = random_poly(rng, 0, 3, (1, 2), 3)
        a, b = red(0, A1, 2, A2, U1, Q), red(0, A1, 2, A2, U2, Q)
        s = red(0, A1, 2, A2, U1 + 2.5 * U2, Q)
        assert s.V.max_diff(a.V + 2.5 * b.V) < 1e-12 * max(s.V.max_abs(), 1)
        assert s.F12.max_diff(a.F12 + 2.5 * b.F12) < 1e-12 * max(s.F12.max_abs(), 1)

    def test_zero_input(self, rng):
        A1, A2, _ = red_case(rng, 0, 2, 2, 1)
        res = red(0, A1, 2, A2, LaurentSeries.zeros(0, 3, (2, 1)), Q)
        assert res.V.max_abs() == 0 and res.F12.max_abs() == 0

    def test_coboundary_gives_zero_v(self, rng):
        """U = (sigma X) z**mu2 A2 - z**mu1 A1 X is reduced to V = 0 with gauge X."""
        A1, A2, _ = red_case(rng, 0, 2, 1, 1)
        X = random_poly(rng, 0, 3, (1, 1), 10)
        U = X.rescale(Q).shift(2).rmatmul_const(A2) - X.lmatmul_const(A1)
        res = red(0, A1, 2, A2, U, Q)
        assert res.V.max_abs() < 1e-12 * U.max_abs()
        assert res.F12.max_diff(X, hi=3) < 1e-10

    def test_order_too_small(self, rng):
        A1, A2, U = red_case(rng, 0, 1, 1, 1)
        with pytest.raises(OrderTooSmall):
            red(0, A1, 1, A2, U, Q, order=10)
