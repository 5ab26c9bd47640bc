"""Birkhoff-Guenther normal form, formal gauge solutions and Gevrey cutoffs.

All off-diagonal data are handled as Laurent polynomials: a block ``U_ij``
is truncated at the requested order and then read as zero above it.  The
gauge returned by :func:`bg_normal_form` conjugates the truncated module
exactly (up to rounding), so its residual measures arithmetic error only.

The gauge convention is ``F[A_V] = (sigma_q F) A_V F**-1 = A_U``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import DEFAULT_ORDER
from .errors import OrderTooSmall
from .module_rep import BlockModule, GaugeTransform, gauge_residual, moduli_dimension
from .reduction import red
from .series_core import LaurentSeries, poly_mul
from .special_fn import qpow

__all__ = [
    "NormalFormResult",
    "bg_normal_form",
    "formal_solution",
    "gevrey_cutoff_form",
    "bg_coordinates",
    "is_bg_form",
    "formal_residual",
]


def _poly_add(f: LaurentSeries, g: LaurentSeries) -> LaurentSeries:
    top = max(f.hi, g.hi)
    return f.with_hi(top) + g.with_hi(top)


def _resolve_order(M: BlockModule, order: int | None) -> int:
    known = [s.hi for s in M.U.values()]
    if order is None:
        return min(known) if known else DEFAULT_ORDER
    if known and min(known) < order:
        raise OrderTooSmall(f"U is only known up to z^{min(known)}, order {order} requested")
    return int(order)


@dataclass(frozen=True)
class NormalFormResult:
    """Gauge ``F`` with ``F[A_V] = A_U``, the normal form ``V`` and the residual."""

    F: GaugeTransform
    V: BlockModule
    residual: float

    def __iter__(self):
        # allows ``F, V = bg_normal_form(M)``
        return iter((self.F, self.V))


def bg_normal_form(M: BlockModule, order: int | None = None) -> NormalFormResult:
    """Reduce ``M`` to Birkhoff-Guenther form by induction on ``j - i``.

    Each cell solves the two-slope problem for
    ``U_ij + sum_l U_il F_lj - sum_l (sigma_q F_il) V_lj``; the resulting
    ``V_ij`` is supported on ``mu_i .. mu_j - 1``.

    Parameters
    ----------
    M : BlockModule
    order : int, optional
        Truncation order of the input blocks. Defaults to the smallest
        window top among them.
    """
    order = _resolve_order(M, order)
    q = M.q
    blocks = M.blocks
    U = {key: s.restrict(hi=order) for key, s in M.U.items()}
    F: dict[tuple[int, int], LaurentSeries] = {}
    V: dict[tuple[int, int], LaurentSeries] = {}
    for i, j in M.pairs():
        shape = (blocks[i].rank, blocks[j].rank)
        rhs = U.get((i, j), LaurentSeries.zeros(0, order, shape))
        for l in range(i + 1, j):
            if (i, l) in U:
                rhs = _poly_add(rhs, poly_mul(U[(i, l)], F[(l, j)]))
            rhs = _poly_add(rhs, -poly_mul(F[(i, l)].rescale(q), V[(l, j)]))
        rhs = rhs.restrict(hi=order)
        res = red(blocks[i].mu, blocks[i].A, blocks[j].mu, blocks[j].A, rhs, q)
        F[(i, j)] = res.F12.with_hi(order)
        V[(i, j)] = res.V.with_hi(order)
    gauge = GaugeTransform(tuple(M.ranks), F)
    normal = M.with_U(V)
    residual = _gauge_check(gauge, normal, M.with_U(U), order)
    return NormalFormResult(gauge, normal, residual)


def _gauge_check(F: GaugeTransform, source: BlockModule, target: BlockModule,
                 order: int) -> float:
    """Residual of ``F[A_source] = A_target`` on exponents up to ``order``."""
    lo = min([0] + [s.lo for s in F.F.values()])
    top = order - 2 * lo + abs(source.slopes[0]) + abs(source.slopes[-1])
    poly = GaugeTransform(F.ranks, {k: s.with_hi(top) for k, s in F.F.items()})
    A = source.with_U({k: s.with_hi(top) for k, s in source.U.items()}).matrix(hi=top)
    B = target.with_U({k: s.with_hi(top) for k, s in target.U.items()}).matrix(hi=top)
    return gauge_residual(poly, A, B, source.q, hi=order)


def formal_solution(M: BlockModule, order: int = DEFAULT_ORDER) -> GaugeTransform:
    """Formal unipotent gauge ``F`` with ``F[A_0] = A_U`` modulo ``z**(order+1)``.

    Blockwise ``F_ij = z**delta A_i^-1 (sigma_q F_ij) A_j - z**-mu_i A_i^-1 W_ij``
    with ``W_ij = U_ij + sum_{i<l<j} U_il F_lj``.  The fixpoint map is
    contracting in the z-adic topology; it is run coefficientwise, which
    reaches stationarity at the truncation order after ``ceil(order/delta)``
    sweeps.  The ``U_ij`` are read as Laurent polynomials.

    Coefficients grow like ``|q|**(n**2 / (2 delta))``; in double precision
    with ``q = 2`` and ``delta = 1`` orders beyond about 45 overflow.
    """
    q = M.q
    blocks = M.blocks
    F: dict[tuple[int, int], LaurentSeries] = {}
    for i, j in M.pairs():
        bi, bj = blocks[i], blocks[j]
        delta = bj.mu - bi.mu
        shape = (bi.rank, bj.rank)
        W = M.U.get((i, j), LaurentSeries.zeros(0, 0, shape))
        for l in range(i + 1, j):
            if (i, l) in M.U:
                W = _poly_add(W, poly_mul(M.U[(i, l)], F[(l, j)]))
        lo = min(W.lo - bi.mu, 0)
        Ainv = np.linalg.inv(bi.A)
        coeffs = np.zeros((order - lo + 1,) + shape, dtype=complex)
        for n in range(lo, order + 1):
            m = n + bi.mu
            val = -Ainv @ W[m] if m <= W.hi else np.zeros(shape, dtype=complex)
            if n - delta >= lo:
                val = val + qpow(q, n - delta) * (Ainv @ coeffs[n - delta - lo] @ bj.A)
            coeffs[n - lo] = val
        F[(i, j)] = LaurentSeries(lo, coeffs, order)
    return GaugeTransform(tuple(M.ranks), F)


def formal_residual(F: GaugeTransform, M: BlockModule, order: int) -> float:
    """Backward error of ``(sigma_q F) A_0 = A_U F`` up to ``z**(order - mu_k)``.

    Formal coefficients grow super-exponentially and blocks of different
    levels cancel, so each coefficient of the difference is measured against
    the same coefficient of ``|sigma_q F| |A_0| + |A_U| |F|``.
    """
    top = order
    A0 = M.graded().matrix(hi=top)
    AU = M.with_U({k: s.with_hi(max(s.hi, top)) for k, s in M.U.items()}).matrix(hi=top)
    Fm = F.matrix(hi=top)
    lhs = Fm.rescale(M.q) * A0
    rhs = AU * Fm
    mag = _abs(Fm.rescale(M.q)) * _abs(A0) + _abs(AU) * _abs(Fm)
    hi = min(order - max(M.slopes[-1], 0), lhs.hi, rhs.hi)
    worst = 0.0
    for n in range(min(lhs.lo, rhs.lo), hi + 1):
        scale = max(float(np.max(np.abs(mag[n]))), 1.0)
        worst = max(worst, float(np.max(np.abs(lhs[n] - rhs[n]))) / scale)
    return worst


def _abs(s: LaurentSeries) -> LaurentSeries:
    return LaurentSeries(s.lo, np.abs(s.coeffs), s.hi)


def _level_cut(s) -> float:
    """``1/s`` with the sentinels ``s = 0 -> inf`` and ``s = inf -> 0``."""
    if s == 0:
        return math.inf
    if s == math.inf:
        return 0.0
    s = Fraction(s) if not isinstance(s, float) else Fraction(s).limit_denominator()
    if s < 0:
        raise ValueError("the Gevrey index s must be nonnegative")
    return float(1 / s)


def gevrey_cutoff_form(M: BlockModule, s, order: int | None = None) -> BlockModule:
    """BG normal form with every block of level ``mu_j - mu_i >= 1/s`` set to zero.

    ``s = 0`` keeps the full BG form; ``s = math.inf`` drops every block.
    """
    cut = _level_cut(s)
    V = bg_normal_form(M, order).V
    mus = M.slopes
    kept = {(i, j): blk for (i, j), blk in V.U.items() if mus[j] - mus[i] < cut}
    return M.with_U(kept)


def is_bg_form(M: BlockModule, tol: float = 0.0) -> bool:
    """Whether each ``U_ij`` vanishes outside ``mu_i .. mu_j - 1``."""
    mus = M.slopes
    for (i, j), s in M.U.items():
        for n in s.exponents():
            if not mus[i] <= n < mus[j] and np.max(np.abs(s[n])) > tol:
                return False
    return True


def bg_coordinates(V: BlockModule) -> np.ndarray:
    """Flat vector of the free scalars of a BG form, ``moduli_dimension`` long."""
    mus = V.slopes
    out = []
    for i, j in V.pairs():
        s = V.u(i, j)
        s = s.with_hi(max(s.hi, mus[j]))
        for n in range(mus[i], mus[j]):
            out.append(np.ravel(s[n]))
    vec = np.concatenate(out) if out else np.zeros(0, dtype=complex)
    assert vec.size == moduli_dimension(V.blocks)
    return vec
