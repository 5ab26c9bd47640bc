"""Stokes cocycles and the worked examples built on q-Euler equations.

A cocycle ``F_{c,d} = F_c**-1 F_d`` compares the algebraic sums of one
module in two directions.  It is an automorphism of the graded module
``A_0`` and its level-``delta`` blocks are flat like ``|q|**(-delta m**2/2)``
along ``z_0 q**-m``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np

from .errors import DirectionsEqual, PoleHit, TruncationInsufficient, WrongShape
from .module_rep import (BlockModule, Direction, GaugeTransform, PureBlock, elliptic_distance)
from .newton import QDiffOperator
from .summation import Divisor, MeromorphicSum, algebraic_sum, q_euler_sum
from .series_core import LaurentSeries
from .special_fn import ThetaKind, pochhammer, qpow, theta_coefficients, thq

__all__ = [
    "Cocycle",
    "stokes_cocycle",
    "sample_points",
    "rank2_elliptic_formula",
    "theta_derivative_constant",
    "euler_residue",
    "privileged_space_dimension",
    "devissage_coordinates",
    "symmetric_square",
    "symmetric_square_matrix",
    "symmetric_square_slopes",
    "borel_square_obstructions",
    "borel_square_closed_form",
    "tshakaloff_square_residual",
    "FlatnessFit",
    "flatness_fit",
    "is_trivial",
    "confluent_operator",
    "confluent_g0",
    "confluent_g0_closed_form",
    "confluent_factorization_residual",
    "confluent_sum",
    "confluent_stokes_conjecture",
    "mock_theta_module",
    "mock_theta_privileged_sum",
    "mock_theta_split_residual",
    "mordell_module",
    "mordell_sum",
    "mordell_functional_residual",
]


# -- cocycles ---------------------------------------------------------------

def _unipotent_inv(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    N = m - np.eye(n)
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for _ in range(n - 1):
        term = -term @ N
        out = out + term
    return out


@dataclass(frozen=True)
class Cocycle:
    """``F_{c,d} = F_c**-1 F_d`` with both sums kept for evaluation."""

    c: Direction
    d: Direction
    F_c: MeromorphicSum
    F_d: MeromorphicSum
    module: BlockModule

    def evaluate(self, z) -> np.ndarray:
        return _unipotent_inv(np.atleast_2d(self.F_c(z))) @ np.atleast_2d(self.F_d(z))

    __call__ = evaluate

    def graded(self, z) -> np.ndarray:
        """``A_0(z)`` as a dense matrix."""
        M = self.module
        out = np.zeros((M.size, M.size), dtype=complex)
        off = M.offsets
        for i, b in enumerate(M.blocks):
            out[off[i]:off[i + 1], off[i]:off[i + 1]] = complex(z) ** b.mu * b.A
        return out

    def automorphism_residual(self, samples: Sequence[complex]) -> float:
        """Worst ``|F(qz) A_0(z) - A_0(z) F(z)|`` relative to ``|F(qz) A_0(z)|``."""
        q = self.module.q
        worst = 0.0
        for z in samples:
            lhs = self.evaluate(q * z) @ self.graded(z)
            rhs = self.graded(z) @ self.evaluate(z)
            worst = max(worst, float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(lhs)), 1.0)))
        return worst

    def max_offdiagonal(self, samples: Sequence[complex]) -> float:
        worst = 0.0
        for z in samples:
            m = self.evaluate(z) - np.eye(self.module.size)
            worst = max(worst, float(np.max(np.abs(m))))
        return worst

    def pole_spirals(self) -> list[complex]:
        return [-self.c.c, -self.d.c]


def stokes_cocycle(M: BlockModule, c, d, window: int | None = None) -> Cocycle:
    """Cocycle of ``M`` between two generic directions ``c`` and ``d``."""
    c = c if isinstance(c, Direction) else Direction(c, M.q)
    d = d if isinstance(d, Direction) else Direction(d, M.q)
    if c.same_point(d):
        raise DirectionsEqual(f"directions {c.c} and {d.c} are the same point of E_q")
    return Cocycle(c, d, algebraic_sum(M, c.c, window), algebraic_sum(M, d.c, window), M)


def sample_points(q: complex, avoid: Sequence[complex], n: int, rng=None,
                  log_radius: tuple[float, float] = (-1.5, 1.5),
                  min_distance: float = 0.05) -> list[complex]:
    """``n`` random points at least ``min_distance`` away from each spiral in ``avoid``."""
    rng = np.random.default_rng(0) if rng is None else rng
    out: list[complex] = []
    while len(out) < n:
        z = complex(math.exp(rng.uniform(*log_radius)) * cmath.exp(1j * rng.uniform(0, 2 * math.pi)))
        if all(elliptic_distance(z, s, q) >= min_distance for s in avoid):
            out.append(z)
    return out


def is_trivial(cocycle: Cocycle, samples: Sequence[complex], tolerance: float = 1e-10) -> bool:
    """True when every off-diagonal value stays below ``10 * tolerance``."""
    return cocycle.max_offdiagonal(samples) <= 10 * tolerance


# -- rank two closed forms --------------------------------------------------

def rank2_elliptic_formula(lam: complex, mu: complex, z: complex, q: complex) -> complex:
    """Predicted ``S_lambda f - S_mu f`` for ``f = sum q**(n(n+1)/2) z**n``.

    ``C thq(-lambda/mu) thq(z/(lambda mu)) /
    (thq(-1/lambda) thq(-1/mu) thq(lambda/z) thq(z/mu))`` with
    ``C = (1/q; 1/q)_inf**3``.
    """
    lam, mu, z, q = complex(lam), complex(mu), complex(z), complex(q)
    for point, spiral in ((lam, 1.0), (mu, 1.0), (z, -lam), (z, -mu)):
        if elliptic_distance(point, spiral, q) < 1e-12:
            raise PoleHit(f"{point} lies on the spiral [{spiral}]")
    C = pochhammer(1 / q, 1 / q) ** 3
    num = thq(-lam / mu, q) * thq(z / (lam * mu), q)
    den = thq(-1 / lam, q) * thq(-1 / mu, q) * thq(lam / z, q) * thq(z / mu, q)
    return C * num / den


def theta_derivative_constant(q: complex, h: float = 1e-5) -> tuple[complex, complex]:
    """``-thq'(-1)`` by a central difference, and ``(1/q; 1/q)_inf**3``."""
    fd = -(thq(-1 + h, q) - thq(-1 - h, q)) / (2 * h)
    return fd, pochhammer(1 / complex(q), 1 / complex(q)) ** 3


def euler_residue(lam: complex, q: complex, radius: float = 1e-3,
                  points: int = 256) -> tuple[complex, complex]:
    """Residue of the sum of ``(q z sigma_q - 1) f = -1`` at ``z = -lambda``.

    Returns the contour average over a small circle and ``lambda / thq(-1/lambda)``.
    """
    S = q_euler_sum(q, -1.0, lam, q)
    t = np.linspace(0, 2 * math.pi, points, endpoint=False)
    w = radius * np.exp(1j * t)
    contour = complex(np.mean([S(-lam + x) * x for x in w]))
    return contour, complex(lam) / thq(-1 / complex(lam), q)


# -- privileged cocycles ----------------------------------------------------

def privileged_space_dimension(bi: PureBlock, bj: PureBlock, c, d, q: complex,
                               probe_order: int = 24, rank_tolerance: float = 1e-10) -> int:
    """Dimension of ``X = (theta_{q,c} theta_{q,d})**-delta Y`` solving
    ``(sigma_q X) z**mu_j A_j = z**mu_i A_i X`` with ``Y`` holomorphic on ``C*``.

    The coefficients satisfy ``q**n Y_n = (cd)**-delta A_i Y_{n-delta} A_j**-1``.
    The dimension is the numerical nullity of that system on ``[-N, N]``.
    """
    c = c.c if isinstance(c, Direction) else complex(c)
    d = d.c if isinstance(d, Direction) else complex(d)
    q = complex(q)
    if elliptic_distance(c, d, q) < 1e-9:
        raise DirectionsEqual("the two directions coincide in E_q")
    delta = bj.mu - bi.mu
    if delta <= 0:
        return 0
    ri, rj = bi.rank, bj.rank
    N = probe_order
    size = ri * rj
    n_unknown = (2 * N + 1) * size
    Ajinv = np.linalg.inv(bj.A)
    # vec(A Y B) = (B^T kron A) vec(Y)
    K = (c * d) ** (-delta) * np.kron(Ajinv.T, bi.A)
    rows = []
    for n in range(-N + delta, N + 1):
        blk = np.zeros((size, n_unknown), dtype=complex)
        col = (n + N) * size
        blk[:, col:col + size] = qpow(q, n) * np.eye(size)
        col2 = (n - delta + N) * size
        blk[:, col2:col2 + size] = -K
        blk /= max(np.max(np.abs(blk)), 1e-300)
        rows.append(blk)
    S = np.linalg.svd(np.vstack(rows), compute_uv=False)
    rank = int(np.sum(S > rank_tolerance * S[0]))
    return n_unknown - rank


def devissage_coordinates(M: BlockModule) -> dict[int, list[np.ndarray]]:
    """BG coefficients grouped by level ``delta = mu_j - mu_i``.

    Each level lists the coefficients ``U_ij[n]`` for ``mu_i <= n < mu_j``
    over the pairs at that level, ``i`` increasing.  Levels without data
    are omitted.
    """
    mus = M.slopes
    out: dict[int, list[np.ndarray]] = {}
    for i, j in M.pairs():
        if (i, j) not in M.U:
            continue
        s = M.U[(i, j)]
        s = s.with_hi(max(s.hi, mus[j]))
        delta = mus[j] - mus[i]
        for n in range(mus[i], mus[j]):
            out.setdefault(delta, []).append(np.asarray(s[n]))
    return out


# -- symmetric square -------------------------------------------------------

def symmetric_square_matrix(m) -> np.ndarray:
    """``S^2`` of a 2x2 matrix in the basis ``(e1**2, 2 e1 e2, e2**2)``."""
    m = np.asarray(m)
    if m.shape != (2, 2):
        raise WrongShape(f"expected a 2x2 matrix, got {m.shape}")
    (a, b), (c, d) = m
    return np.array([[a * a, 2 * a * b, b * b],
                     [a * c, a * d + b * c, b * d],
                     [c * c, 2 * c * d, d * d]])


def symmetric_square(obj):
    """Symmetric square of a two-block rank-(1,1) module, gauge or 2x2 matrix.

    For ``A = [[a, u], [0, b z**delta]]`` the result has diagonal
    ``(a**2, a b z**delta, b**2 z**(2 delta))`` and entries ``2 a u``, ``u**2``
    and ``u b z**delta``; a gauge ``[[1, f], [0, 1]]`` becomes
    ``[[1, 2f, f**2], [0, 1, f], [0, 0, 1]]``.
    """
    if isinstance(obj, BlockModule):
        if obj.k != 2 or obj.ranks != [1, 1]:
            raise WrongShape("symmetric_square needs two rank-one blocks")
        (m1, a), (m2, b) = [(blk.mu, complex(blk.A[0, 0])) for blk in obj.blocks]
        u = obj.u(0, 1).as_matrix()
        us = LaurentSeries(u.lo, u.coeffs[:, 0, 0], u.hi)
        top = us.hi
        nz = np.flatnonzero(us.coeffs)
        deg = us.lo + int(nz[-1]) if nz.size else us.lo
        blocks = [PureBlock(2 * m1, [[a * a]]), PureBlock(m1 + m2, [[a * b]]),
                  PureBlock(2 * m2, [[b * b]])]
        u2 = _poly_square(us.restrict(hi=deg)).with_hi(max(top, 2 * deg))
        U = {(0, 1): us.scale(2 * a).shift(m1),
             (1, 2): us.scale(b).shift(m2),
             (0, 2): u2}
        return BlockModule(obj.q, blocks, U)
    if isinstance(obj, GaugeTransform):
        if tuple(obj.ranks) != (1, 1):
            raise WrongShape("symmetric_square needs a rank-(1,1) gauge")
        f = obj.F.get((0, 1))
        if f is None:
            return GaugeTransform((1, 1, 1), {})
        f = f.as_matrix()
        fs = LaurentSeries(f.lo, f.coeffs[:, 0, 0], f.hi)
        return GaugeTransform((1, 1, 1), {(0, 1): fs.scale(2), (1, 2): fs, (0, 2): fs * fs})
    return symmetric_square_matrix(obj)


def _poly_square(u: LaurentSeries) -> LaurentSeries:
    from .series_core import poly_mul
    return poly_mul(u, u)


def symmetric_square_slopes(slopes: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Slopes of ``S^2 M`` from ``(slope, rank)`` pairs, equal slopes merged."""
    acc: dict[int, int] = {}
    items = list(slopes)
    for n, (mu, r) in enumerate(items):
        acc[2 * mu] = acc.get(2 * mu, 0) + (r * r + r) // 2
        for nu, s in items[n + 1:]:
            acc[mu + nu] = acc.get(mu + nu, 0) + r * s
    return sorted(acc.items())


def borel_square_closed_form(q: complex, m: int) -> complex:
    """``(-1)**m q**(m(3m+1)/2) (1/q; 1/q)_m (1/q; 1/q)_inf``.

    :func:`borel_square_obstructions` returns exactly twice this value:
    near ``xi = 1`` both the ``n = 0`` term ``1/(1 - xi)`` and the tail
    ``sum_n xi**n`` of ``B_q(tsh**2) = sum_n xi**n / (1 - q**-n xi)``
    contribute a simple pole, so ``P(1) = 2 (1/q; 1/q)_inf``.
    """
    p = 1 / complex(q)
    return (-1) ** m * qpow(q, m * (3 * m + 1) // 2) * pochhammer(p, p, m) * pochhammer(p, p)


def borel_square_obstructions(q: complex, m_max: int, order: int | None = None,
                              dps: int = 60) -> list[complex]:
    """``P(q**m)`` for ``m = 0..m_max`` with ``P = B_q(tsh**2) prod_{n>=0} (1 - q**-n xi)``.

    ``B_q(tsh**2)`` comes from the product rule, whose Taylor coefficients
    are ``sum_{n+j=N} q**(-n j)``; the infinite product is expanded by
    Euler's identity.  ``P`` is entire, so its Taylor series is summed at
    ``xi = q**m`` in mpmath.  ``TruncationInsufficient`` is raised when the
    last retained term is not negligible.

    The coefficients of ``P`` decay like ``|q|**(-N**2/4)`` but are
    computed with absolute error ``10**-dps``, which ``xi**N`` amplifies;
    the working precision is therefore raised to cover ``|q|**(m_max order)``.
    """
    if order is None:
        order = 6 * m_max + 30
    digits = dps + int(math.ceil(order * m_max * math.log10(abs(q))))
    out = []
    with mpmath.workdps(digits):
        qm = mpmath.mpc(q)
        p = 1 / qm
        borel = [mpmath.fsum(p ** (n * (N - n)) for n in range(N + 1)) for N in range(order + 1)]
        euler = []
        poch = mpmath.mpc(1)
        for k in range(order + 1):
            if k:
                poch *= 1 - p ** k
            euler.append((-1) ** k * p ** (k * (k - 1) // 2) / poch)
        P = [mpmath.fsum(borel[N - k] * euler[k] for k in range(N + 1)) for N in range(order + 1)]
        for m in range(m_max + 1):
            xi = qm ** m
            terms = [P[N] * xi ** N for N in range(order + 1)]
            total = mpmath.fsum(terms)
            if abs(terms[-1]) > mpmath.mpf(10) ** (-dps // 2) * max(abs(total), 1):
                raise TruncationInsufficient(f"order {order} too small for m = {m}")
            out.append(complex(total))
    return out


def tshakaloff_square_residual(q: complex, order: int = 40) -> float:
    """Largest coefficient of ``L Y - (1 + z)`` for ``Y`` the truncated square of tsh.

    ``L = q**2 z**3 sigma_q**2 - z(1+z) sigma_q + 1``; each coefficient is
    compared with the largest of the four terms producing it.
    """
    tsh = [qpow(q, n * (n - 1) // 2) for n in range(order + 1)]
    Y = np.convolve(tsh, tsh)[:order + 1]
    worst = 0.0
    for n in range(order + 1):
        parts = [Y[n]]
        if n >= 1:
            parts.append(-qpow(q, n - 1) * Y[n - 1])
        if n >= 2:
            parts.append(-qpow(q, n - 2) * Y[n - 2])
        if n >= 3:
            parts.append(qpow(q, 2) * qpow(q, 2 * (n - 3)) * Y[n - 3])
        target = 1.0 if n in (0, 1) else 0.0
        scale = max(abs(x) for x in parts)
        worst = max(worst, abs(sum(parts) - target) / scale)
    return worst


# -- flatness ---------------------------------------------------------------

@dataclass(frozen=True)
class FlatnessFit:
    """Quadratic fit of ``log|F(z_0 q**-m)|`` in ``m``."""

    curvature: float
    expected: float
    ms: tuple[int, ...]
    values: tuple[float, ...]

    @property
    def relative_error(self) -> float:
        return abs(self.curvature - self.expected) / abs(self.expected)


def flatness_fit(evaluate: Callable[[complex], complex], z0: complex, q: complex, delta: int,
                 m_max: int = 12, floor: float = 1e-11) -> FlatnessFit:
    """Fit ``log|f(z0 q**-m)| ~ a m**2 + b m + c`` and compare ``a`` with ``-delta log|q| / 2``.

    Points whose value falls below ``floor`` (the double precision noise of
    the cancellation ``F_d - F_c``) are dropped; at least four must remain.
    """
    ms, vals = [], []
    for m in range(m_max + 1):
        v = abs(evaluate(complex(z0) * qpow(q, -m)))
        if v < floor:
            break
        ms.append(m)
        vals.append(math.log(v))
    if len(ms) < 4:
        raise TruncationInsufficient("too few resolvable points for a flatness fit")
    a = float(np.polyfit(ms, vals, 2)[0])
    return FlatnessFit(a, -delta * math.log(abs(q)) / 2, tuple(ms), tuple(vals))


# -- confluent basic hypergeometric example ---------------------------------

def confluent_operator(a: complex, b: complex, q: complex) -> QDiffOperator:
    """``L = q**2 z (sigma - a)(sigma - b) - (sigma - 1)``."""
    q = complex(q)
    return QDiffOperator.from_terms(q, {
        2: {1: q * q},
        1: {0: -1.0, 1: -(a + b) * q * q},
        0: {0: 1.0, 1: a * b * q * q},
    })


def confluent_g0(a: complex, b: complex, q: complex, order: int = 40) -> np.ndarray:
    """Coefficients of the solution in ``1 + z C{z}`` of
    ``sigma**2 g - (1 + (a+b) q**2 z) sigma g + q z (1 + a b q**2 z) g = 0``.
    """
    q = complex(q)
    g = np.zeros(order + 1, dtype=complex)
    g[0] = 1.0
    for n in range(1, order + 1):
        rhs = ((a + b) * qpow(q, n + 1) - q) * g[n - 1]
        if n >= 2:
            rhs -= a * b * q ** 3 * g[n - 2]
        g[n] = rhs / (qpow(q, 2 * n) - qpow(q, n))
    return g


def confluent_g0_closed_form(q: complex, order: int = 40) -> np.ndarray:
    """``(-1)**n q**(-n**2) / (1/q; 1/q)_n`` for ``a = b = 0``."""
    p = 1 / complex(q)
    return np.array([(-1) ** n * qpow(q, -n * n) / pochhammer(p, p, n) for n in range(order + 1)])


def _eval_poly(c: np.ndarray, z: complex) -> complex:
    return complex(np.polyval(c[::-1], z))


def confluent_factorization_residual(a: complex, b: complex, q: complex,
                                     samples: Sequence[complex], order: int = 60) -> float:
    """Worst relative gap between ``L h`` and
    ``(sigma - (1 + a b q**2 z) g0 / sigma g0)(q z sigma - sigma g0 / g0) h``
    on the samples, for the test function ``h(z) = exp(z)``.
    """
    q = complex(q)
    g = confluent_g0(a, b, q, order)
    g0 = lambda z: _eval_poly(g, z)
    h = cmath.exp
    worst = 0.0
    for z in samples:
        Lh = q * q * z * (h(q * q * z) - (a + b) * h(q * z) + a * b * h(z)) - (h(q * z) - h(z))

        def inner(w):
            return q * w * h(q * w) - g0(q * w) / g0(w) * h(w)

        A = (1 + a * b * q * q * z) * g0(z) / g0(q * z)
        fact = inner(q * z) - A * inner(z)
        worst = max(worst, abs(Lh - fact) / max(abs(Lh), 1.0))
    return worst


def confluent_sum(lam: complex, q: complex, order: int = 40, window: int = 64,
                  match_at: complex | None = None) -> MeromorphicSum:
    """Sum of ``f = sum q**(n(n+1)/2) / (1/q;1/q)_n z**n`` (``a = b = 0``) with poles on ``[-lambda]``.

    ``f = kappa g / theta_{q,lambda}`` where ``g`` is the two-sided solution
    of ``(q lambda**2 q**(2n) - lambda q**n) g_n + g_{n-1} = 0``; ``kappa``
    matches the truncated series at the small point ``match_at``.
    """
    q, lam = complex(q), complex(lam)
    if elliptic_distance(lam, 1.0, q) < 1e-9:
        raise PoleHit(f"direction {lam} is forbidden")
    g = np.zeros(2 * window + 1, dtype=complex)
    g[window] = 1.0
    for n in range(1, window + 1):
        g[window + n] = -g[window + n - 1] / (q * lam * lam * qpow(q, 2 * n) - lam * qpow(q, n))
    for n in range(0, -window, -1):
        g[window + n - 1] = -(q * lam * lam * qpow(q, 2 * n) - lam * qpow(q, n)) * g[window + n]
    kind = ThetaKind("theta_q_lambda", lam)
    raw = MeromorphicSum(LaurentSeries(-window, g, window), (kind,), np.array([1]), q,
                         Divisor.single(-lam, q))
    z = match_at if match_at is not None else 1e-3 * cmath.exp(0.7j)
    p = 1 / q
    fhat, prev = 0j, math.inf
    for n in range(order):
        # least-term truncation of the divergent series
        term = qpow(q, n * (n + 1) // 2) / pochhammer(p, p, n) * z ** n
        if abs(term) > prev:
            break
        fhat, prev = fhat + term, abs(term)
    kappa = fhat / raw(z)
    return MeromorphicSum(LaurentSeries(-window, kappa * g, window), (kind,), np.array([1]), q,
                          Divisor.single(-lam, q))


def confluent_stokes_conjecture(lam: complex, mu: complex, z: complex, q: complex) -> tuple[complex, complex]:
    """``S_lambda f - S_mu f`` and the conjectured closed form with ``g_0``.

    Report only: the closed form is stated without proof.
    """
    q = complex(q)
    lhs = confluent_sum(lam, q)(z) - confluent_sum(mu, q)(z)
    p = 1 / q
    g0 = _eval_poly(confluent_g0_closed_form(q, 40), z)
    rhs = pochhammer(p, p) ** 2 * thq(-lam / mu, q) * thq(z / (lam * mu), q) / (
        thq(-1 / lam, q) * thq(-1 / mu, q) * thq(lam / z, q) * thq(z / mu, q)) * g0
    return lhs, rhs


# -- mock theta and Mordell -------------------------------------------------

def mock_theta_module(q: complex, hi: int = 64) -> BlockModule:
    """``[[1, z - 1], [0, sqrt(q) z**2]]`` (principal square root)."""
    sq = cmath.sqrt(complex(q))
    return BlockModule(q, [PureBlock(0, [[1.0]]), PureBlock(2, [[sq]])],
                       {(0, 1): LaurentSeries(0, [-1.0, 1.0], hi)})


def mock_theta_privileged_sum(c: complex, q: complex, window: int = 64) -> MeromorphicSum:
    """``f_c = theta_{q,c}**-2 sum (tau_{n-1} c - tau_n) c**-n / (sqrt(q) c**2 q**n - 1) z**n``.

    ``thq**2 = sum tau_n z**n``; the sum has at most double poles on ``[-c; q]``.
    """
    q, c = complex(q), complex(c)
    sq = cmath.sqrt(q)
    for k in range(-2, 3):
        if abs(sq * c * c / qpow(q, k) - 1) < 1e-9 or abs(sq * c * c * qpow(q, k) - 1) < 1e-9:
            raise PoleHit(f"direction {c} is forbidden")
    W = 2 * window + 8
    th = theta_coefficients(ThetaKind("thq"), q, -W, W)
    tau = np.convolve(th, th)  # exponents -2W .. 2W
    tau_at = lambda n: tau[n + 2 * W]
    coeffs = []
    for n in range(-window, window + 1):
        num = (tau_at(n - 1) * c - tau_at(n)) * c ** (-n)
        coeffs.append(num / (sq * c * c * qpow(q, n) - 1))
    kind = ThetaKind("theta_q_lambda", c)
    return MeromorphicSum(LaurentSeries(-window, coeffs, window), (kind,), np.array([2]), q,
                          Divisor.single(-c, q, 2))


def mock_theta_split_residual(q: complex, order: int = 30) -> float:
    """Compare the formal solution of ``sqrt(q) z**2 sigma f - f = z - 1`` with
    ``g(z**2) + z h(z**2)`` built from the split equations in ``Q = q**2``.
    """
    q = complex(q)
    sq = cmath.sqrt(q)
    Q = q * q
    f = np.zeros(order + 1, dtype=complex)
    u = {0: -1.0, 1: 1.0}
    for n in range(order + 1):
        # sqrt(q) q**(n-2) f_{n-2} - f_n = u_n
        prev = sq * qpow(q, n - 2) * f[n - 2] if n >= 2 else 0.0
        f[n] = prev - u.get(n, 0.0)
    half = order // 2 + 1
    g = np.zeros(half, dtype=complex)
    h = np.zeros(half, dtype=complex)
    for n in range(half):
        # sqrt(q) Q**(n-1) g_{n-1} - g_n = -[n == 0]
        g[n] = (sq * qpow(Q, n - 1) * g[n - 1] if n else 0.0) + (1.0 if n == 0 else 0.0)
        h[n] = (q * sq * qpow(Q, n - 1) * h[n - 1] if n else 0.0) - (1.0 if n == 0 else 0.0)
    split = np.zeros(order + 1, dtype=complex)
    for n in range(half):
        if 2 * n <= order:
            split[2 * n] = g[n]
        if 2 * n + 1 <= order:
            split[2 * n + 1] = h[n]
    scale = np.maximum(np.abs(f), 1e-300)
    return float(np.max(np.abs(f - split) / scale))


def mordell_module(q: complex, hi: int = 64) -> BlockModule:
    """``[[1, sqrt(q) z], [0, sqrt(q) z]]`` for ``(sqrt(q) z sigma - 1) G = sqrt(q) z``."""
    sq = cmath.sqrt(complex(q))
    return BlockModule(q, [PureBlock(0, [[1.0]]), PureBlock(1, [[sq]])],
                       {(0, 1): LaurentSeries(1, [sq], hi)})


def mordell_sum(q: complex, window: int | None = None) -> MeromorphicSum:
    """Sum with poles on the zeros of ``theta_01(z) = thq(-sqrt(q) z)``, i.e. direction ``-sqrt(q)``."""
    sq = cmath.sqrt(complex(q))
    return q_euler_sum(sq, LaurentSeries(1, [sq], 1), -sq, q, window=window)


def mordell_functional_residual(q: complex, samples: Sequence[complex]) -> dict[str, float]:
    """Checks on ``f_01 = G theta_01``: ``f_01(z) + f_01(z/q) = theta_01(z)`` and
    boundedness next to the zeros of ``theta_01``.
    """
    q = complex(q)
    sq = cmath.sqrt(q)
    G = mordell_sum(q)
    th01 = lambda z: thq(-sq * z, q)
    f01 = lambda z: G(z) * th01(z)
    worst = 0.0
    for z in samples:
        lhs = f01(z) + f01(z / q)
        worst = max(worst, abs(lhs - th01(z)) / max(abs(th01(z)), abs(f01(z)), 1.0))
    # near the pole z = 1/sqrt(q) of G, f_01 must stay bounded
    near = [abs(f01(1 / sq + 1e-6 * cmath.exp(1j * t))) for t in np.linspace(0, 6.28, 16)]
    return {"functional": worst, "near_pole_max": float(max(near))}
