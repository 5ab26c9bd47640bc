"""q-Borel transforms and the two-slope reduction.

For slopes ``mu1 < mu2`` with ``d = mu2 - mu1`` the cohomological equation

    (sigma_q X) z**mu2 A2 - z**mu1 A1 X = U - V                     (*)

has, for every Laurent polynomial ``U``, a unique solution ``(X, V)`` with
``V`` supported on the exponents ``mu1 .. mu2 - 1``.  Writing
``Z_n = A1^-1 (U - V)_{n + mu1}``, (*) reads coefficientwise

    q**(n-d) A1^-1 X_{n-d} A2 - X_n = Z_n.

With the level-``d`` weights ``t_n`` (``t_n = q**(n-d) t_{n-d}``) and
``n = i + k d`` the rescaled unknowns ``A1**k X_n A2**-k / t_n`` telescope,
so ``X`` is a Laurent polynomial iff for each residue ``i`` modulo ``d``

    O_i = sum_k A1**k Z_{i+kd} A2**-k / t_{i+kd} = 0.

These ``d`` obstructions are linear in ``V`` and fix it uniquely.  ``X`` is
then produced by the backward recursion
``X_{n-d} = q**(d-n) A1 (X_n + Z_n) A2^-1`` started above the top exponent,
which contracts instead of amplifying rounding errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LinearSolveSingular, NonIntegralSlopes, OrderTooSmall, TailNotNegligible
from .series_core import LaurentSeries
from .special_fn import qpow

__all__ = [
    "borel_weight",
    "q_borel",
    "two_slope_invariant",
    "two_slope_obstructions",
    "red",
    "RedResult",
    "InvariantResult",
]

INVARIANT_TAIL_EPSILON = 1e-14


def borel_weight(n: int, d: int, q: complex) -> complex:
    """``t_n`` with ``t_{r+kd} = q**(d k(k-1)/2 + r k)`` for ``0 <= r < d``."""
    k, r = divmod(int(n), int(d))
    return qpow(q, d * k * (k - 1) // 2 + r * k)


def q_borel(f: LaurentSeries, d: int, q: complex) -> LaurentSeries:
    """Level-``d`` q-Borel transform: ``f_n -> f_n / t_n``."""
    if d < 1:
        raise ValueError("the level must be a positive integer")
    w = np.array([borel_weight(n, d, q) for n in f.exponents()])
    c = f.coeffs / w.reshape((-1,) + (1,) * (f.coeffs.ndim - 1))
    return LaurentSeries(f.lo, c, f.hi)


@dataclass(frozen=True)
class InvariantResult:
    value: np.ndarray | complex
    tail: float


def two_slope_invariant(Y: LaurentSeries, A, q: complex,
                        tail_epsilon: float = INVARIANT_TAIL_EPSILON) -> InvariantResult:
    """``sum_n q**(-n(n-1)/2) A**-n Y_n``, the value ``B_q Y (A^-1)``.

    ``A`` may be a scalar or a square matrix acting on the left of ``Y``.
    The tail is the size of the last tracked term relative to the sum.
    """
    scalar = np.ndim(A) == 0 and not Y.is_matrix
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    Ainv = np.linalg.inv(A)
    Ym = Y.as_matrix()
    total = np.zeros(Ym.shape, dtype=complex)
    last = 0.0
    for n in Y.exponents():
        term = np.linalg.matrix_power(Ainv, n) @ Ym[n] / qpow(q, n * (n - 1) // 2)
        total += term
        last = float(np.max(np.abs(term)))
    scale = max(float(np.max(np.abs(total))), 1e-300)
    tail = last / scale if np.any(Ym[Y.hi] != 0) else 0.0
    if tail > tail_epsilon:
        raise TailNotNegligible(f"last term is {tail:.2e} of the sum; widen the window")
    return InvariantResult(total[0, 0] if scalar else total, tail)


def _power_cache(A: np.ndarray, lo: int, hi: int) -> dict[int, np.ndarray]:
    Ainv = np.linalg.inv(A)
    out = {0: np.eye(A.shape[0], dtype=complex)}
    for k in range(1, hi + 1):
        out[k] = out[k - 1] @ A
    for k in range(1, -lo + 1):
        out[-k] = out[-k + 1] @ Ainv
    return out


def two_slope_obstructions(mu1: int, A1, mu2: int, A2, U: LaurentSeries,
                           q: complex) -> list[np.ndarray]:
    """The ``d`` class invariants ``O_i`` of ``U`` (taken with ``V = 0``)."""
    A1 = np.atleast_2d(np.asarray(A1, dtype=complex))
    A2 = np.atleast_2d(np.asarray(A2, dtype=complex))
    d = mu2 - mu1
    U = U.as_matrix()
    A1inv = np.linalg.inv(A1)
    nlo, ntop = U.lo - mu1, U.hi - mu1
    P1 = _power_cache(A1, nlo // d - 1, ntop // d + 1)
    P2 = _power_cache(np.linalg.inv(A2), nlo // d - 1, ntop // d + 1)
    out = [np.zeros(U.shape, dtype=complex) for _ in range(d)]
    for n in range(nlo, ntop + 1):
        k, i = divmod(n, d)
        Zn = A1inv @ U[n + mu1]
        out[i] += P1[k] @ Zn @ P2[k] / borel_weight(n, d, q)
    return out


@dataclass(frozen=True)
class RedResult:
    """Output of :func:`red`.

    ``F12`` is the Laurent-polynomial gauge entry, ``V`` the normal-form entry
    supported on ``mu1 .. mu2 - 1``.  ``condition`` is the condition number of
    the linear map from ``V`` to the obstructions and ``closure`` the size of
    the coefficients the recursion would push below the lowest exponent
    (zero in exact arithmetic).
    """

    F12: LaurentSeries
    V: LaurentSeries
    condition: float
    closure: float


def red(mu1: int, A1, mu2: int, A2, U: LaurentSeries, q: complex,
        order: int | None = None) -> RedResult:
    """Solve (*) for ``(F12, V)`` with ``V`` supported on ``mu1 .. mu2 - 1``.

    ``U`` is read as the Laurent polynomial given by its window (truncated at
    ``order`` when given); the returned ``F12`` solves (*) exactly for that
    polynomial, up to rounding.
    """
    if int(mu1) != mu1 or int(mu2) != mu2:
        raise NonIntegralSlopes("slopes must be integers")
    mu1, mu2 = int(mu1), int(mu2)
    d = mu2 - mu1
    if d < 1:
        raise ValueError("red needs mu1 < mu2")
    A1 = np.atleast_2d(np.asarray(A1, dtype=complex))
    A2 = np.atleast_2d(np.asarray(A2, dtype=complex))
    U = U.as_matrix()
    r1, r2 = U.shape
    if A1.shape != (r1, r1) or A2.shape != (r2, r2):
        raise ValueError(f"block shapes {A1.shape}, {A2.shape} do not match U {U.shape}")
    if order is not None:
        if U.hi < order:
            raise OrderTooSmall(f"U is only known up to z^{U.hi}, order {order} requested")
        U = U.restrict(hi=order)
    A1inv = np.linalg.inv(A1)
    A2inv = np.linalg.inv(A2)

    # (a) obstructions of U alone
    OU = two_slope_obstructions(mu1, A1, mu2, A2, U, q)

    # (b) V enters only through O_i -= A1^-1 V_{mu1+i}; solve the stacked system
    blk = -np.kron(np.eye(r2), A1inv)  # vec(A1^-1 V) = (I kron A1^-1) vec(V)
    M = np.kron(np.eye(d), blk)
    rhs = -np.concatenate([o.flatten(order="F") for o in OU])
    try:
        x = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        raise LinearSolveSingular("obstruction system is singular") from None
    condition = float(np.linalg.cond(M))
    Vc = np.stack([x[i * r1 * r2:(i + 1) * r1 * r2].reshape((r1, r2), order="F")
                   for i in range(d)])
    V = LaurentSeries(mu1, Vc, mu2 - 1)

    # (c) backward recursion from the top exponent
    nlo = min(U.lo - mu1, 0)
    ntop = max(U.hi - mu1, d - 1)
    Z = {}
    for n in range(nlo, ntop + 1):
        m = n + mu1
        val = U[m] if U.lo <= m <= U.hi else 0
        if 0 <= n < d:
            val = val - Vc[n]
        Z[n] = A1inv @ val if np.ndim(val) else np.zeros((r1, r2), dtype=complex)
    X: dict[int, np.ndarray] = {}
    zero = np.zeros((r1, r2), dtype=complex)
    closure = 0.0
    for n in range(ntop, nlo - 1, -1):
        Xn_plus_Zn = X.get(n, zero) + Z[n]
        new = qpow(q, d - n) * (A1 @ Xn_plus_Zn @ A2inv)
        if n - d >= nlo:
            X[n - d] = new
        else:
            closure = max(closure, float(np.max(np.abs(new))))
    lo_x, hi_x = nlo, U.hi - mu2
    if hi_x < lo_x:
        F12 = LaurentSeries.zeros(min(lo_x, 0), max(hi_x, 0, lo_x), (r1, r2))
    else:
        F12 = LaurentSeries(lo_x, np.stack([X.get(n, zero) for n in range(lo_x, hi_x + 1)]), hi_x)
    scale = max(U.max_abs(), 1.0)
    return RedResult(F12, V, condition, closure / scale)


def red_residual(mu1: int, A1, mu2: int, A2, U: LaurentSeries, res: RedResult,
                 q: complex) -> float:
    """Relative size of ``(sigma X) z^mu2 A2 - z^mu1 A1 X - (U - V)``."""
    A1 = np.atleast_2d(np.asarray(A1, dtype=complex))
    A2 = np.atleast_2d(np.asarray(A2, dtype=complex))
    X = res.F12
    hi = U.hi
    X = X.with_hi(max(X.hi, hi + abs(mu1) + abs(mu2)))
    lhs = X.rescale(q).shift(mu2).rmatmul_const(A2) - X.shift(mu1).lmatmul_const(A1)
    lo = min(lhs.lo, U.lo, res.V.lo)
    rhs = U.as_matrix().restrict(lo, hi) - res.V.with_hi(hi).restrict(lo, hi)
    scale = max(U.max_abs(), 1.0)
    return lhs.restrict(lo, hi).max_diff(rhs) / scale
