from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qstokes.errors import IdentityViolated, NonIntegralSlopes, UndefinedValuation
from qstokes.newton import (NewtonPolygon, QDiffOperator, companion, homotopy_check, index, irregularity,
                            newton_polygon)
from qstokes.series_core import LaurentSeries

Q = 2.0


def tshakaloff_operator(q=Q):
    """q z sigma**2 - (1 + z) sigma + 1."""
    return QDiffOperator.from_terms(q, {2: {1: q}, 1: {0: -1.0, 1: -1.0}, 0: {0: 1.0}})


def dual_operator(q=Q):
    """sigma**2 - q (1 + z) sigma + q**2 z."""
    return QDiffOperator.from_terms(q, {2: {0: 1.0}, 1: {0: -q, 1: -q}, 0: {1: q * q}})


def polygon(d):
    return NewtonPolygon.from_dict(d)


class TestPolygon:
    def test_tshakaloff(self):
        assert newton_polygon(tshakaloff_operator()) == polygon({0: 1, 1: 1})

    def test_dual(self):
        assert newton_polygon(dual_operator()) == polygon({-1: 1, 0: 1})

    def test_fuchsian(self):
        """sigma - 1 is a single slope 0."""
        P = QDiffOperator.from_terms(Q, {1: {0: 1.0}, 0: {0: -1.0}})
        assert newton_polygon(P) == polygon({0: 1})

    def test_fractional_slope(self):
        P = QDiffOperator.from_terms(Q, {2: {1: 1.0}, 0: {0: 1.0}})
        poly = newton_polygon(P)
        assert poly.slopes == ((Fraction(1, 2), 2),)
        assert not poly.is_integral
        with pytest.raises(NonIntegralSlopes):
            index(P, "convergent")

    def test_zero_coefficient_rejected(self):
        with pytest.raises(UndefinedValuation):
            QDiffOperator({0: LaurentSeries.zeros(0, 4), 1: LaurentSeries(0, [1.0])}, Q)

    def test_rank(self):
        assert newton_polygon(tshakaloff_operator()).rank == 2


class TestIndex:
    def test_irregularity(self):
        assert irregularity(polygon({0: 1, 1: 1})) == 1
        assert irregularity(polygon({-1: 1, 0: 1})) == 0
        assert irregularity(polygon({Fraction(1, 2): 2, 3: 1})) == 4

    def test_table(self):
        """Formal index zero; convergent index minus the irregularity."""
        cases = [(tshakaloff_operator(), -1), (dual_operator(), 0)]
        for P, conv in cases:
            assert index(P, "formal") == 0
            assert index(P, "convergent") == conv

    def test_unknown_setting(self):
        with pytest.raises(ValueError):
            index(tshakaloff_operator(), "analytic")


class TestCompanion:
    def test_tshakaloff_matrix(self):
        """Companion of q z sigma**2 - (1+z) sigma + 1 is [[0, 1], [-1/qz, (1+z)/qz]]."""
        A = companion(tshakaloff_operator())
        assert A.lo == -1
        assert abs(A[-1] - np.array([[0, 0], [-1 / Q, 1 / Q]])).max() < 1e-15
        assert abs(A[0] - np.array([[0, 1], [0, 1 / Q]])).max() < 1e-15
        assert abs(A[1]).max() < 1e-15

    def test_solution_vector(self):
        """With a monic leading term, sigma**2 f minus the last companion row applied to (f, sigma f) is P f."""
        P = dual_operator()
        f = LaurentSeries(0, np.arange(1.0, 9.0), 7)
        A = companion(P)
        sf = f.rescale(Q)
        ssf = sf.rescale(Q)
        last = A.entry(1, 0) * f + A.entry(1, 1) * sf
        Pf = P.apply(f)
        top = min(last.hi, Pf.hi, ssf.hi)
        assert (ssf - last).max_diff(Pf, hi=top) < 1e-12 * Pf.max_abs()


class TestHomotopy:
    def test_tshakaloff(self):
        rep = homotopy_check(tshakaloff_operator(), samples=3)
        assert rep.passed

    def test_random_order_three(self, rng):
        terms = {i: {k: complex(*rng.normal(size=2)) for k in range(3)} for i in range(4)}
        rep = homotopy_check(QDiffOperator.from_terms(Q, terms), samples=3, rng=rng)
        assert rep.worst()[1] < 1e-10

    def test_violation_raises(self):
        """A negative tolerance turns every identity into a violation."""
        P = tshakaloff_operator()
        f = LaurentSeries(0, [1.0, 2.0, 3.0], 10)
        X = [f, f]
        G = [f, f]
        rep = homotopy_check(P, [(f, X, G)], raise_on_failure=False)
        assert rep.passed
        rep.tolerance = -1.0
        assert not rep.passed
        with pytest.raises(IdentityViolated):
            homotopy_check(P, [(f, X, G)], tolerance=-1.0)


first_order = st.tuples(st.integers(-2, 2), st.integers(-2, 2),
                        st.floats(0.5, 2.0), st.floats(0.5, 2.0))


class TestAdditivity:
    @settings(max_examples=50, deadline=None)
    @given(first_order, first_order)
    def test_product_of_first_order(self, f1, f2):
        """The polygon of a product is the union of the polygons of its factors."""
        ops = [QDiffOperator.from_terms(Q, {1: {m: a}, 0: {n: b}}) for m, n, a, b in (f1, f2)]
        P = ops[0] * ops[1]
        expected = newton_polygon(ops[0]).union(newton_polygon(ops[1]))
        assert newton_polygon(P) == expected
