import math

import mpmath
import numpy as np
import pytest

from qstokes import stokes_lab as sl
from qstokes.errors import DirectionsEqual, PoleHit, WrongShape
from qstokes.module_rep import BlockModule, GaugeTransform, PureBlock, moduli_dimension
from qstokes.newton import newton_polygon
from qstokes.normal_form import is_bg_form
from qstokes.series_core import LaurentSeries
from qstokes.special_fn import pochhammer, thq

Q = 2.0
C_DIR, D_DIR = 1.3 + 0.4j, -1.7 + 0.5j


def shifted_tshakaloff(q=Q):
    """diag(1, q z) with u = -1: the gauge entry solves q z sigma f - f = -1."""
    return BlockModule(q, [PureBlock(0, [[1.0]]), PureBlock(1, [[q]])],
                       {(0, 1): LaurentSeries(0, [-1.0], 20)})


@pytest.fixture(scope="module")
def cocycle():
    return sl.stokes_cocycle(shifted_tshakaloff(), C_DIR, D_DIR)


@pytest.fixture(scope="module")
def points():
    return sl.sample_points(Q, [-C_DIR, -D_DIR], 20)


class TestCocycle:
    def test_rank2_formula(self, cocycle, points):
        """The (1,2) entry is S_d f - S_c f, the negative of the closed form for S_c - S_d."""
        for z in points:
            pred = sl.rank2_elliptic_formula(C_DIR, D_DIR, z, Q)
            assert abs(-cocycle(z)[0, 1] - pred) < 1e-8 * abs(pred)

    def test_unipotent(self, cocycle, points):
        for z in points[:5]:
            F = cocycle(z)
            assert abs(np.diag(F) - 1).max() < 1e-12 and abs(F[1, 0]) < 1e-12

    def test_automorphism_of_graded(self, cocycle, points):
        assert cocycle.automorphism_residual(points) < 1e-10

    def test_cocycle_relation(self, points):
        """F_{c,d} F_{d,e} = F_{c,e}."""
        M = shifted_tshakaloff()
        e = 0.4 - 1.5j
        cd = sl.stokes_cocycle(M, C_DIR, D_DIR)
        de = sl.stokes_cocycle(M, D_DIR, e)
        ce = sl.stokes_cocycle(M, C_DIR, e)
        for z in sl.sample_points(Q, [-C_DIR, -D_DIR, -e], 10):
            assert abs(cd(z) @ de(z) - ce(z)).max() < 1e-8 * abs(ce(z)).max()

    def test_equal_directions(self):
        with pytest.raises(DirectionsEqual):
            sl.stokes_cocycle(shifted_tshakaloff(), C_DIR, C_DIR * Q ** 2)

    def test_trivial_when_u_is_coboundary(self):
        """u = q z sigma(g) - g with g polynomial makes every cocycle trivial."""
        g = LaurentSeries(0, [1.0, 0.5], 1)
        u = g.with_hi(3).rescale(Q).shift(1).scale(Q) - g.with_hi(3)
        M = shifted_tshakaloff().with_U({(0, 1): u})
        C = sl.stokes_cocycle(M, C_DIR, D_DIR)
        pts = sl.sample_points(Q, [-C_DIR, -D_DIR], 10)
        assert sl.is_trivial(C, pts)
        assert not sl.is_trivial(sl.stokes_cocycle(shifted_tshakaloff(), C_DIR, D_DIR), pts)

    def test_formula_poles(self):
        with pytest.raises(PoleHit):
            sl.rank2_elliptic_formula(1.0, D_DIR, 0.3, Q)


class TestConstants:
    def test_theta_derivative(self):
        """-thq'(-1) = (1/q; 1/q)_inf**3."""
        fd, closed = sl.theta_derivative_constant(Q)
        assert abs(fd - closed) < 1e-8 * abs(closed)

    def test_residue(self):
        for lam in (1.3 + 0.4j, -1.2 + 0.9j):
            contour, closed = sl.euler_residue(lam, Q)
            assert abs(contour - closed) < 1e-8 * abs(closed)


class TestPrivileged:
    @pytest.mark.parametrize("ri,rj,delta", [(1, 1, 1), (1, 2, 1), (2, 2, 2), (2, 1, 3)])
    def test_dimension(self, ri, rj, delta):
        bi = PureBlock(0, np.eye(ri) * 1.2)
        bj = PureBlock(delta, np.diag([1.5, 1.7][:rj]))
        assert sl.privileged_space_dimension(bi, bj, C_DIR, D_DIR, Q) == ri * rj * delta

    def test_reversed_slopes(self):
        assert sl.privileged_space_dimension(PureBlock(2, [[1.0]]), PureBlock(0, [[1.0]]),
                                             C_DIR, D_DIR, Q) == 0

    def test_same_direction(self):
        with pytest.raises(DirectionsEqual):
            sl.privileged_space_dimension(PureBlock(0, [[1.0]]), PureBlock(1, [[1.0]]), 1.3, 1.3, Q)


class TestDevissage:
    def test_levels(self):
        blocks = [PureBlock(0, [[1.0]]), PureBlock(1, [[1.5]]), PureBlock(3, [[1.2]])]
        U = {(0, 1): LaurentSeries(0, [2.0], 3), (1, 2): LaurentSeries(1, [1.0, 3.0], 3),
             (0, 2): LaurentSeries(0, [1.0, 0.0, 4.0], 3)}
        M = BlockModule(Q, blocks, U)
        assert is_bg_form(M)
        coords = sl.devissage_coordinates(M)
        assert sorted(coords) == [1, 2, 3]
        assert [complex(np.ravel(x)[0]) for x in coords[2]] == [1.0, 3.0]
        assert sum(len(v) for v in coords.values()) == moduli_dimension(blocks)


class TestSymmetricSquare:
    def test_matrix(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        S = sl.symmetric_square_matrix(m)
        # S^2 of a product is the product of S^2
        n = np.array([[0.5, -1.0], [2.0, 1.5]])
        assert abs(sl.symmetric_square_matrix(m @ n) - S @ sl.symmetric_square_matrix(n)).max() < 1e-12

    def test_gauge_shape(self):
        f = LaurentSeries(0, [0.3, -0.7], 4)
        G = sl.symmetric_square(GaugeTransform((1, 1), {(0, 1): f}))
        assert G.F[(0, 1)].max_diff(2 * f) == 0
        assert G.F[(0, 2)].max_diff(f * f) == 0

    def test_module_shape(self):
        S = sl.symmetric_square(shifted_tshakaloff())
        assert S.slopes == [0, 1, 2]
        assert [complex(b.A[0, 0]) for b in S.blocks] == [1, Q, Q * Q]

    def test_slopes(self):
        assert sl.symmetric_square_slopes([(0, 1), (1, 1)]) == [(0, 1), (1, 1), (2, 1)]
        assert sl.symmetric_square_slopes([(0, 2), (1, 1)]) == [(0, 3), (1, 2), (2, 1)]

    def test_functoriality(self, cocycle, points):
        C2 = sl.stokes_cocycle(sl.symmetric_square(shifted_tshakaloff()), C_DIR, D_DIR)
        for z in points[:10]:
            big = C2(z)
            assert abs(big - sl.symmetric_square_matrix(cocycle(z))).max() < 1e-9 * abs(big).max()

    def test_wrong_shape(self):
        with pytest.raises(WrongShape):
            sl.symmetric_square_matrix(np.eye(3))


class TestBorelSquare:
    def test_series_against_product_form(self):
        """The Taylor product used for P matches the convergent form inside the unit disc."""
        q = mpmath.mpf(Q)
        xi = mpmath.mpf("0.5")
        with mpmath.workdps(40):
            series = mpmath.nsum(lambda n: xi ** n / (1 - q ** -n * xi), [0, mpmath.inf])
            direct = series * mpmath.qp(xi, 1 / q)
        order = 60
        P = _taylor_P(Q, order)
        assert abs(sum(P[N] * 0.5 ** N for N in range(order + 1)) - complex(direct)) < 1e-12

    def test_value_at_one(self):
        """Both the n = 0 term and the geometric tail of the Borel series have a pole at 1,
        so P(1) = 2 (1/q; 1/q)_inf."""
        P0 = sl.borel_square_obstructions(Q, 0)[0]
        assert abs(P0 - 2 * pochhammer(1 / Q, 1 / Q)) < 1e-12

    def test_ratio_to_stated_closed_form(self):
        """Against (-1)**m q**(m(3m+1)/2) (1/q;1/q)_m (1/q;1/q)_inf the ratio is 2 for every m."""
        P = sl.borel_square_obstructions(Q, 6)
        for m in range(7):
            assert abs(P[m] / sl.borel_square_closed_form(Q, m) - 2) < 1e-6

    def test_tshakaloff_square_equation(self):
        assert sl.tshakaloff_square_residual(Q) < 1e-10


def _taylor_P(q, order):
    """Taylor coefficients of (xi; 1/q)_inf sum_n xi**n / (1 - q**-n xi), by series multiplication."""
    p = 1 / q
    borel = [sum(p ** (n * (N - n)) for n in range(N + 1)) for N in range(order + 1)]
    euler, poch = [], 1.0
    for k in range(order + 1):
        if k:
            poch *= 1 - p ** k
        euler.append((-1) ** k * p ** (k * (k - 1) // 2) / poch)
    return [sum(borel[N - k] * euler[k] for k in range(N + 1)) for N in range(order + 1)]


class TestFlatness:
    def test_cocycle_entry(self, cocycle):
        fit = sl.flatness_fit(lambda z: cocycle(z)[0, 1], 0.9 + 0.3j, Q, 1)
        assert fit.relative_error < 1e-2
        assert len(fit.ms) >= 4


class TestConfluent:
    def test_g0_closed_form(self):
        g = sl.confluent_g0(0, 0, Q, 30)
        closed = sl.confluent_g0_closed_form(Q, 30)
        assert np.max(np.abs(g - closed) / np.abs(closed)) < 1e-12

    def test_factorization(self):
        pts = [0.2 + 0.1j, -0.4j, 0.7, -0.3 + 0.2j]
        assert sl.confluent_factorization_residual(0.3, -0.5, Q, pts) < 1e-10

    def test_operator_polygon(self):
        poly = newton_polygon(sl.confluent_operator(0.3, -0.5, Q))
        assert [(int(m), r) for m, r in poly.slopes] == [(0, 1), (1, 1)]

    def test_sum_equation(self):
        """q**2 z f(q**2 z) - f(qz) + f(z) = 0 for a = b = 0."""
        lam = C_DIR
        f = sl.confluent_sum(lam, Q)
        for z in sl.sample_points(Q, [-lam], 5, log_radius=(-1.0, 0.5)):
            terms = [Q * Q * z * f(Q * Q * z), f(Q * z), f(z)]
            assert abs(terms[0] - terms[1] + terms[2]) < 1e-9 * max(abs(t) for t in terms)

    def test_conjecture_is_reported(self):
        lhs, rhs = sl.confluent_stokes_conjecture(C_DIR, D_DIR, 0.5 + 0.3j, Q)
        assert math.isfinite(abs(lhs)) and math.isfinite(abs(rhs))


class TestMockTheta:
    def test_bg_form(self):
        M = sl.mock_theta_module(Q)
        assert is_bg_form(M) and M.slopes == [0, 2]

    def test_functional_equation(self):
        sq = math.sqrt(Q)
        for c in (1.3 + 0.2j, -1.1 + 0.6j):
            f = sl.mock_theta_privileged_sum(c, Q)
            for z in sl.sample_points(Q, [-c], 6, log_radius=(-1.0, 0.5)):
                lhs = sq * z * z * f(Q * z) - f(z)
                assert abs(lhs - (z - 1)) < 1e-9 * max(abs(f(z)), abs(sq * z * z * f(Q * z)), 1)

    def test_split(self):
        assert sl.mock_theta_split_residual(Q) < 1e-12


class TestMordell:
    def test_functional(self):
        pts = sl.sample_points(Q, [math.sqrt(Q)], 6, log_radius=(-1.0, 0.7))
        res = sl.mordell_functional_residual(Q, pts)
        assert res["functional"] < 1e-10
        assert res["near_pole_max"] < 1e3

    def test_equation(self):
        sq = math.sqrt(Q)
        G = sl.mordell_sum(Q)
        for z in sl.sample_points(Q, [sq], 6, log_radius=(-1.0, 0.7)):
            assert abs(sq * z * G(Q * z) - G(z) - sq * z) < 1e-10 * max(abs(G(z)), 1)

    def test_theta01_zero(self):
        """thq(-sqrt(q) z) vanishes at z = 1 / sqrt(q)."""
        assert abs(thq(-1.0, Q)) < 1e-12
