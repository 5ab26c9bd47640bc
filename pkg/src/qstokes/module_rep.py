"""Block upper-triangular q-difference modules with pure integral-slope diagonal.

A :class:`BlockModule` stores the matrix

    A_U = [[z**mu_1 A_1, U_12, ..., U_1k],
           [0,           z**mu_2 A_2, ...],
           ...
           [0, ...,                 z**mu_k A_k]]

with strictly increasing integer slopes ``mu_i`` and constant invertible
``A_i``.  Block indices are 0-based in code.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .config import EIG_TOLERANCE, RESONANCE_MARGIN
from .errors import (AllBelowThreshold, EigDecompositionFailed, EmptyWindow,
                     ForbiddenDirection, NonIntegralSlopes, NonInvertibleGauge,
                     NonInvertible, WrongShape)
from .series_core import LaurentSeries, sigma_q

__all__ = [
    "PureBlock",
    "BlockModule",
    "GaugeTransform",
    "Direction",
    "gauge_apply",
    "gauge_residual",
    "moduli_dimension",
    "resonance_set",
    "is_generic",
    "require_generic",
    "unipotent_inverse",
]


@dataclass(frozen=True)
class PureBlock:
    """Diagonal block ``z**mu A`` with ``A`` constant and invertible."""

    mu: int
    A: np.ndarray

    def __post_init__(self):
        if int(self.mu) != self.mu:
            raise NonIntegralSlopes(f"slope {self.mu} is not an integer")
        object.__setattr__(self, "mu", int(self.mu))
        A = np.atleast_2d(np.array(self.A, dtype=complex))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise WrongShape(f"block matrix must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)) or np.linalg.cond(A) > 1e12:
            raise NonInvertible("block matrix is singular or ill-conditioned")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def rank(self) -> int:
        return self.A.shape[0]

    def eigenvalues(self) -> np.ndarray:
        try:
            ev = np.linalg.eigvals(self.A)
        except np.linalg.LinAlgError as exc:
            raise EigDecompositionFailed(str(exc)) from None
        if not np.all(np.isfinite(ev)):
            raise EigDecompositionFailed("non-finite eigenvalue")
        return ev

    def in_fundamental_annulus(self, q: complex) -> bool:
        m = np.abs(self.eigenvalues())
        return bool(np.all((m >= 1 - EIG_TOLERANCE) & (m < abs(q) * (1 - EIG_TOLERANCE))))

    def __eq__(self, other) -> bool:
        return isinstance(other, PureBlock) and self.mu == other.mu and \
            self.A.shape == other.A.shape and np.array_equal(self.A, other.A)

    def __hash__(self) -> int:
        return hash((self.mu, self.A.tobytes()))


def _offsets(blocks: Sequence[PureBlock]) -> list[int]:
    out = [0]
    for b in blocks:
        out.append(out[-1] + b.rank)
    return out


@dataclass(frozen=True)
class BlockModule:
    """The matrix ``A_U`` of a module with integral slopes (see module docstring)."""

    q: complex
    blocks: tuple[PureBlock, ...]
    U: Mapping[tuple[int, int], LaurentSeries] = field(default_factory=dict)

    def __post_init__(self):
        blocks = tuple(self.blocks)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "q", complex(self.q))
        if not blocks:
            raise WrongShape("a module needs at least one block")
        mus = [b.mu for b in blocks]
        if any(b <= a for a, b in zip(mus, mus[1:])):
            raise ValueError(f"slopes must be strictly increasing, got {mus}")
        U = {}
        for (i, j), s in dict(self.U).items():
            if not 0 <= i < j < len(blocks):
                raise WrongShape(f"off-diagonal index ({i}, {j}) is not above the diagonal")
            s = s.as_matrix()
            if s.shape != (blocks[i].rank, blocks[j].rank):
                raise WrongShape(f"U[{i},{j}] has shape {s.shape}, expected "
                                 f"{(blocks[i].rank, blocks[j].rank)}")
            U[(i, j)] = s
        object.__setattr__(self, "U", U)

    # -- shape ----------------------------------------------------------
    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def slopes(self) -> list[int]:
        return [b.mu for b in self.blocks]

    @property
    def ranks(self) -> list[int]:
        return [b.rank for b in self.blocks]

    @property
    def offsets(self) -> list[int]:
        return _offsets(self.blocks)

    @property
    def size(self) -> int:
        return self.offsets[-1]

    def pairs(self) -> list[tuple[int, int]]:
        """All ``(i, j)`` with ``i < j``, ordered by ``j - i`` then ``i``."""
        return [(i, i + d) for d in range(1, self.k) for i in range(self.k - d)]

    def u(self, i: int, j: int, hi: int | None = None) -> LaurentSeries:
        s = self.U.get((i, j))
        if s is None:
            top = 0 if hi is None else hi
            return LaurentSeries.zeros(0, max(top, 0), (self.blocks[i].rank, self.blocks[j].rank))
        return s

    def is_pure_diagonal(self, tol: float = 0.0) -> bool:
        return all(s.max_abs() <= tol for s in self.U.values())

    def graded(self) -> "BlockModule":
        """The diagonal part ``A_0`` (all off-diagonal blocks dropped)."""
        return BlockModule(self.q, self.blocks, {})

    def with_U(self, U: Mapping[tuple[int, int], LaurentSeries]) -> "BlockModule":
        return BlockModule(self.q, self.blocks, dict(U))

    def diagonal_series(self, i: int, hi: int) -> LaurentSeries:
        b = self.blocks[i]
        return LaurentSeries.monomial(b.mu, b.A, hi=max(hi, b.mu))

    def matrix(self, hi: int | None = None) -> LaurentSeries:
        """Full matrix series ``A_U`` on a common window."""
        if hi is None:
            hi = min([s.hi for s in self.U.values()] + [max(self.slopes[-1], 0) + 16])
        lo = min([0] + self.slopes + [s.lo for s in self.U.values()])
        n = self.size
        off = self.offsets
        arr = np.zeros((hi - lo + 1, n, n), dtype=complex)
        for i, b in enumerate(self.blocks):
            if lo <= b.mu <= hi:
                arr[b.mu - lo, off[i]:off[i + 1], off[i]:off[i + 1]] = b.A
        for (i, j), s in self.U.items():
            arr[:, off[i]:off[i + 1], off[j]:off[j + 1]] = s.restrict(lo, hi).coeffs
        return LaurentSeries(lo, arr, hi)

    def equals(self, other: "BlockModule", tol: float = 0.0) -> bool:
        if self.q != other.q or self.blocks != other.blocks:
            return False
        keys = set(self.U) | set(other.U)
        for key in keys:
            a, b = self.U.get(key), other.U.get(key)
            if a is None or b is None:
                if (a or b).max_abs() > tol:
                    return False
                continue
            if a.window != b.window or np.max(np.abs(a.coeffs - b.coeffs)) > tol:
                return False
        return True


@dataclass(frozen=True)
class GaugeTransform:
    """Block-unipotent gauge: identity diagonal, ``F[(i, j)]`` above it."""

    ranks: tuple[int, ...]
    F: Mapping[tuple[int, int], LaurentSeries] = field(default_factory=dict)

    def matrix(self, lo: int | None = None, hi: int | None = None) -> LaurentSeries:
        ranks = list(self.ranks)
        off = [0]
        for r in ranks:
            off.append(off[-1] + r)
        if hi is None:
            hi = min([s.hi for s in self.F.values()] + [64])
        if lo is None:
            lo = min([0] + [s.lo for s in self.F.values()])
        arr = np.zeros((hi - lo + 1, off[-1], off[-1]), dtype=complex)
        arr[-lo] = np.eye(off[-1]) if lo <= 0 <= hi else 0
        for (i, j), s in self.F.items():
            arr[:, off[i]:off[i + 1], off[j]:off[j + 1]] = s.as_matrix().restrict(lo, hi).coeffs
        return LaurentSeries(lo, arr, hi)

    def max_offdiagonal(self) -> float:
        return max([s.max_abs() for s in self.F.values()] + [0.0])


def unipotent_inverse(F: LaurentSeries) -> LaurentSeries:
    """Inverse of ``I + N`` with ``N`` nilpotent, by the finite Neumann sum."""
    n = F.shape[0]
    eye = LaurentSeries.constant(np.eye(n), F.hi)
    N = F - eye
    out = eye
    term = eye
    for _ in range(n - 1):
        term = -(term * N)
        out = out + term
    return out


def gauge_apply(F, A: LaurentSeries, q: complex) -> LaurentSeries:
    """``F[A] = (sigma_q F) A F**-1`` for a gauge transform or invertible series."""
    if isinstance(F, GaugeTransform):
        Fm = F.matrix(hi=A.hi)
        Finv = unipotent_inverse(Fm)
    else:
        Fm = F.as_matrix()
        try:
            Finv = Fm.invert()
        except (NonInvertible, AllBelowThreshold, EmptyWindow) as exc:
            raise NonInvertibleGauge(str(exc)) from None
    return sigma_q(Fm, 1, q) * A * Finv


def gauge_residual(F, A: LaurentSeries, B: LaurentSeries, q: complex,
                   hi: int | None = None) -> float:
    """Relative size of ``(sigma_q F) A - B F``; zero iff ``F[A] = B``."""
    Fm = F.matrix(hi=max(A.hi, B.hi)) if isinstance(F, GaugeTransform) else F
    lhs = sigma_q(Fm, 1, q) * A
    rhs = B * Fm
    top = min(lhs.hi, rhs.hi) if hi is None else hi
    scale = max(A.max_abs(), B.max_abs(), 1.0)
    return lhs.max_diff(rhs, hi=top) / scale


def moduli_dimension(blocks: Sequence[PureBlock]) -> int:
    """``sum_{i<j} r_i r_j (mu_j - mu_i)``."""
    return sum(bi.rank * bj.rank * (bj.mu - bi.mu)
               for n, bi in enumerate(blocks) for bj in blocks[n + 1:])


@dataclass(frozen=True)
class Direction:
    """A point of ``C*/q^Z`` kept as its representative with ``1 <= |c| < |q|``."""

    c: complex
    q: complex

    def __post_init__(self):
        c, q = complex(self.c), complex(self.q)
        if c == 0:
            raise ValueError("a direction must be nonzero")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "c", reduce_to_annulus(c, q))

    def same_point(self, other, tol: float = RESONANCE_MARGIN) -> bool:
        other_c = other.c if isinstance(other, Direction) else complex(other)
        return elliptic_distance(self.c, other_c, self.q) < tol


def reduce_to_annulus(c: complex, q: complex) -> complex:
    """Multiply ``c`` by a power of ``q`` to land in ``1 <= |c| < |q|``."""
    k = math.floor(math.log(abs(c)) / math.log(abs(q)) + 1e-12)
    out = c / complex(q) ** k
    if abs(out) >= abs(q):
        out /= q
    return out


def elliptic_distance(a: complex, b: complex, q: complex) -> float:
    """``min_k |1 - a / (b q**k)|``: zero iff ``a`` and ``b`` share a spiral."""
    k0 = math.log(abs(a) / abs(b)) / math.log(abs(q))
    best = math.inf
    for k in range(math.floor(k0) - 1, math.ceil(k0) + 2):
        best = min(best, abs(1 - a / (b * complex(q) ** k)))
    return best


def _pair_resonances(alpha: complex, beta: complex, delta: int, q: complex) -> list[complex]:
    # a**delta in q^Z alpha / beta
    base = (alpha / beta) ** (1.0 / delta)
    qroot = complex(q) ** (1.0 / delta)
    out = []
    for k in range(delta):
        for m in range(delta):
            out.append(base * qroot ** k * cmath.exp(2j * math.pi * m / delta))
    return out


def resonance_set(blocks: Sequence[PureBlock], q: complex,
                  tolerance: float = EIG_TOLERANCE) -> list[Direction]:
    """Forbidden points ``p(-a)`` of ``E_q``, one per resonant class ``a``.

    ``a`` is resonant when ``q^Z a**mu_i Sp(A_i)`` meets ``q^Z a**mu_j Sp(A_j)``
    for some ``i < j``.  The sum in direction ``c`` has its poles on
    ``[-c; q]``; it is defined iff ``c`` itself is not resonant.
    """
    q = complex(q)
    found: list[Direction] = []
    for n, bi in enumerate(blocks):
        for bj in blocks[n + 1:]:
            delta = bj.mu - bi.mu
            for alpha in bi.eigenvalues():
                for beta in bj.eigenvalues():
                    for a in _pair_resonances(alpha, beta, delta, q):
                        d = Direction(-a, q)
                        if not any(d.same_point(e, tolerance * 10) for e in found):
                            found.append(d)
    return sorted(found, key=lambda d: (round(abs(d.c), 9), round(cmath.phase(d.c), 9)))


def is_generic(c: complex | Direction, blocks: Sequence[PureBlock], q: complex,
               margin: float = RESONANCE_MARGIN) -> bool:
    """True when ``c`` stays at least ``margin`` away from every resonant class."""
    c = c.c if isinstance(c, Direction) else complex(c)
    return all(elliptic_distance(-c, s.c, q) >= margin for s in resonance_set(blocks, q))


def require_generic(c: complex | Direction, blocks: Sequence[PureBlock], q: complex,
                    margin: float = RESONANCE_MARGIN) -> None:
    if not is_generic(c, blocks, q, margin):
        sigma = ", ".join(f"{s.c.real:+.6g}{s.c.imag:+.6g}i" for s in resonance_set(blocks, q))
        cval = c.c if isinstance(c, Direction) else complex(c)
        raise ForbiddenDirection(
            f"direction {cval} is resonant; forbidden pole classes p(-a): [{sigma}]")
