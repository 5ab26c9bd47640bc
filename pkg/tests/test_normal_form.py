import math

import numpy as np
import pytest

from conftest import random_module, random_poly
from oracles import tshakaloff_coefficients
from qstokes.errors import OrderTooSmall
from qstokes.module_rep import BlockModule, PureBlock, moduli_dimension
from qstokes.normal_form import (bg_coordinates, bg_normal_form, formal_residual, formal_solution,
                                 gevrey_cutoff_form, is_bg_form)
from qstokes.reduction import two_slope_invariant
from qstokes.series_core import LaurentSeries

Q = 2.0


def two_slope(a, b, u, q=Q):
    return BlockModule(q, [PureBlock(0, [[a]]), PureBlock(1, [[b]])], {(0, 1): u})


class TestTwoSlopes:
    def test_invariant_value(self, rng):
        """For diag(a, z b) the normal form constant is B_q u evaluated at a / b."""
        a, b = 1.3 + 0.2j, 1.1 - 0.4j
        u = random_poly(rng, 0, 5, (), 5)
        V = bg_normal_form(two_slope(a, b, u)).V
        expected = two_slope_invariant(u.with_hi(7), b / a, Q).value
        assert abs(V.u(0, 1)[0] - expected) < 1e-10 * max(abs(expected), 1)

    def test_tshakaloff_fixture(self):
        """diag(1, z) with u = -1 is already in normal form."""
        M = two_slope(1.0, 1.0, LaurentSeries(0, [-1.0], 20))
        F, V = bg_normal_form(M)
        assert V.equals(M.with_U({(0, 1): LaurentSeries(0, [-1.0], 20)}), tol=1e-14)
        assert F.max_offdiagonal() < 1e-14


class TestBG:
    def test_random_three_slopes(self, rng):
        M = random_module(rng, [0, 1, 3], [1, 2, 1])
        res = bg_normal_form(M)
        assert res.residual < 1e-8
        assert is_bg_form(res.V, tol=1e-12)

    def test_idempotent(self, rng):
        """The normal form of a normal form is itself, reached with a trivial gauge."""
        M = random_module(rng, [-1, 0, 2], [1, 1, 2])
        V = bg_normal_form(M).V
        again = bg_normal_form(V)
        scale = max(s.max_abs() for s in V.U.values())
        for key in V.U:
            assert again.V.u(*key).max_diff(V.u(*key).with_hi(again.V.u(*key).hi)) < 1e-11 * scale
        assert again.F.max_offdiagonal() < 1e-11 * scale

    def test_coordinate_count(self, rng):
        for slopes, ranks in [([0, 1], [1, 1]), ([0, 2], [2, 2]), ([0, 1, 3], [1, 2, 1])]:
            M = random_module(rng, slopes, ranks)
            V = bg_normal_form(M).V
            assert bg_coordinates(V).size == moduli_dimension(M.blocks)

    def test_gauge_preserves_diagonal(self, rng):
        M = random_module(rng, [0, 2], [1, 1])
        assert bg_normal_form(M).V.blocks == M.blocks

    def test_order_checked(self, rng):
        M = random_module(rng, [0, 1], [1, 1], top=10)
        with pytest.raises(OrderTooSmall):
            bg_normal_form(M, order=20)


class TestFormal:
    def test_tshakaloff_exact(self):
        """The formal gauge for diag(1, z), u = -1 is the Tshakaloff series."""
        M = two_slope(1.0, 1.0, LaurentSeries(0, [-1.0], 20))
        F = formal_solution(M, order=20)
        f = F.F[(0, 1)]
        exact = tshakaloff_coefficients(20, 2)
        for n in range(21):
            assert complex(f[n][0, 0]) == exact[n]

    def test_residual_random(self, rng):
        M = random_module(rng, [0, 1, 2], [1, 1, 2])
        F = formal_solution(M, order=24)
        assert formal_residual(F, M, 24) < 1e-10

    def test_residual_on_normal_form(self, rng):
        """The formal gauge of a BG form also solves its equation."""
        M = random_module(rng, [0, 1], [1, 1])
        V = bg_normal_form(M).V
        F = formal_solution(V, order=20)
        assert formal_residual(F, V, 20) < 1e-10


class TestCutoff:
    def test_extremes(self, rng):
        M = random_module(rng, [0, 1, 3], [1, 1, 1])
        full = bg_normal_form(M).V
        kept = gevrey_cutoff_form(M, 0)
        assert all(kept.u(*k).max_diff(full.u(*k)) == 0 for k in full.U)
        assert gevrey_cutoff_form(M, math.inf).is_pure_diagonal()

    def test_levels(self, rng):
        """s = 1/2 keeps the blocks of level 1 and drops levels 2 and 3."""
        M = random_module(rng, [0, 1, 3], [1, 1, 1])
        cut = gevrey_cutoff_form(M, 0.5)
        assert set(cut.U) == {(0, 1)}

    def test_negative_index(self, rng):
        with pytest.raises(ValueError):
            gevrey_cutoff_form(random_module(rng, [0, 1], [1, 1]), -1)


def test_is_bg_form_detects_support():
    M = two_slope(1.0, 1.0, LaurentSeries(0, [0.0, 1.0], 3))
    assert not is_bg_form(M)
    assert is_bg_form(M.with_U({(0, 1): LaurentSeries(0, [1.0], 3)}))
    assert np.allclose(bg_coordinates(M.with_U({(0, 1): LaurentSeries(0, [2.0], 3)})), [2.0])
