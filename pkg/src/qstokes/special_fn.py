"""Jacobi theta functions, q-Pochhammer symbols and related special values.

Three theta variants are used throughout (``|q| > 1``)::

    theta(z; q)     = sum_n q**(-n(n-1)/2) z**n      theta(qz) = qz theta(z)
    thq(z)          = sum_n q**(-n(n+1)/2) z**n      thq(qz)   = z thq(z) = thq(1/z)
    theta_{q,a}(z)  = thq(z / a)

so that ``theta(z; q) = thq(q z)``.  Every theta can be evaluated either from
its Laurent series or from the triple product

    thq(z) = prod_{n>=0} (1 - q**(-n-1)) (1 + q**(-n-1) z) (1 + q**(-n) / z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import mpmath
import numpy as np

from .config import Q_MARGIN, TAIL_EPSILON
from .errors import DivergentProduct, NonConvergent, QModulusTooSmall
from .series_core import LaurentSeries

__all__ = [
    "ThetaKind",
    "eval_theta",
    "theta",
    "thq",
    "theta_q_lambda",
    "theta_coefficients",
    "theta_series",
    "pochhammer",
    "growth_majorant",
    "tshakaloff",
    "qpow",
    "int_powers",
    "thq_mp",
    "theta_mp",
]

_MAX_TERMS = 100_000


def qpow(q: complex, k: int) -> complex:
    """``q**k`` for integer ``k`` by binary powering (exact for q = 2)."""
    q = complex(q)
    if q.imag == 0 and q.real > 0:
        return complex(float(q.real) ** int(k))
    base = q if k >= 0 else 1.0 / q
    k = abs(int(k))
    out = 1.0 + 0j
    while k:
        if k & 1:
            out *= base
        base *= base
        k >>= 1
    return out


def int_powers(c: complex, lo: int, hi: int) -> np.ndarray:
    """Array of ``c**n`` for ``n = lo..hi`` built by repeated multiplication."""
    out = np.empty(hi - lo + 1, dtype=complex)
    c = complex(c)
    if lo <= 0 <= hi:
        out[-lo] = 1.0
        for n in range(1, hi + 1):
            out[n - lo] = out[n - 1 - lo] * c
        inv = 1.0 / c
        for n in range(-1, lo - 1, -1):
            out[n - lo] = out[n + 1 - lo] * inv
    else:
        start = lo if lo > 0 else hi
        out[start - lo] = qpow(c, start)
        if lo > 0:
            for n in range(lo + 1, hi + 1):
                out[n - lo] = out[n - 1 - lo] * c
        else:
            inv = 1.0 / c
            for n in range(hi - 1, lo - 1, -1):
                out[n - lo] = out[n + 1 - lo] * inv
    return out


@dataclass(frozen=True)
class ThetaKind:
    """Which theta function to evaluate.

    ``variant`` is ``"theta"``, ``"thq"`` or ``"theta_q_lambda"``; the last
    one needs the nonzero parameter ``lam``.
    """

    variant: Literal["theta", "thq", "theta_q_lambda"] = "thq"
    lam: complex | None = None

    def __post_init__(self):
        if self.variant not in ("theta", "thq", "theta_q_lambda"):
            raise ValueError(f"unknown theta variant {self.variant!r}")
        if self.variant == "theta_q_lambda":
            if self.lam is None or complex(self.lam) == 0:
                raise ValueError("theta_q_lambda needs a nonzero lam")

    @classmethod
    def parse(cls, tag: str, lam: complex | None = None) -> "ThetaKind":
        return cls(tag, lam)

    def to_thq_argument(self, z: complex, q: complex) -> complex:
        """Point ``w`` such that this theta at ``z`` equals ``thq(w)``."""
        if self.variant == "theta":
            return complex(q) * z
        if self.variant == "thq":
            return complex(z)
        return complex(z) / complex(self.lam)


def _check_q(q: complex) -> float:
    aq = abs(complex(q))
    if aq <= 1.0 + Q_MARGIN:
        raise QModulusTooSmall(f"|q| = {aq} must exceed {1.0 + Q_MARGIN}")
    return aq


def _term_range(logz: float, logq: float, eps: float) -> tuple[int, int]:
    """Index range where |q|**(-n(n+1)/2) |z|**n is above eps times its max."""
    centre = logz / logq - 0.5
    half = math.sqrt(2.0 * (-math.log(eps) + 5.0) / logq) + 2.0
    lo = math.floor(centre - half)
    hi = math.ceil(centre + half)
    if hi - lo > _MAX_TERMS:
        raise NonConvergent("theta series needs too many terms")
    return lo, hi


def _thq_series(w: complex, q: complex, eps: float) -> complex:
    logq = math.log(abs(q))
    lo, hi = _term_range(math.log(abs(w)), logq, eps)
    n = np.arange(lo, hi + 1)
    if complex(q).imag == 0 and complex(q).real > 0:
        # real magnitude in log form avoids overflow of separate factors
        logmag = -0.5 * n * (n + 1) * logq + n * math.log(abs(w))
        phase = np.exp(1j * n * np.angle(w))
        terms = np.exp(logmag) * phase
    else:
        terms = np.array([qpow(q, -(k * (k + 1)) // 2) for k in n]) * int_powers(w, lo, hi)
    return complex(np.sum(terms))


def _thq_product(w: complex, q: complex, eps: float) -> complex:
    p = 1.0 / complex(q)
    out = 1.0 + 0j
    pk = 1.0 + 0j  # q**(-n)
    for n in range(_MAX_TERMS):
        f = (1.0 - pk * p) * (1.0 + pk * p * w) * (1.0 + pk / w)
        out *= f
        pk *= p
        if abs(pk) * max(abs(w), 1.0 / abs(w), 1.0) < eps and n > 2:
            return out
    raise NonConvergent("triple product did not converge")


def eval_theta(kind: ThetaKind, z: complex, q: complex,
               mode: Literal["series", "product"] = "series",
               tail_epsilon: float = TAIL_EPSILON) -> complex:
    """Evaluate a theta function at ``z`` from its series or its triple product."""
    _check_q(q)
    z = complex(z)
    if z == 0:
        raise ValueError("theta functions are not defined at z = 0")
    w = kind.to_thq_argument(z, q)
    if mode == "series":
        return _thq_series(w, q, tail_epsilon)
    if mode == "product":
        return _thq_product(w, q, tail_epsilon)
    raise ValueError(f"unknown mode {mode!r}")


def thq(z: complex, q: complex, mode: str = "series") -> complex:
    return eval_theta(ThetaKind("thq"), z, q, mode)


def theta(z: complex, q: complex, mode: str = "series") -> complex:
    return eval_theta(ThetaKind("theta"), z, q, mode)


def theta_q_lambda(z: complex, lam: complex, q: complex, mode: str = "series") -> complex:
    return eval_theta(ThetaKind("theta_q_lambda", complex(lam)), z, q, mode)


def thq_mp(w, q, dps: int):
    """``thq(w)`` summed in mpmath at ``dps`` decimal digits."""
    with mpmath.workdps(dps + 10):
        w = mpmath.mpc(w)
        q = mpmath.mpc(q)
        _check_q(complex(q))
        lo, hi = _term_range(float(mpmath.log(abs(w))), float(mpmath.log(abs(q))),
                             10.0 ** (-dps - 5))
        total = mpmath.mpc(0)
        for n in range(lo, hi + 1):
            total += q ** (-(n * (n + 1)) // 2) * w ** n
        return +total


def theta_mp(kind: ThetaKind, z, q, dps: int):
    """Any theta variant evaluated in mpmath."""
    with mpmath.workdps(dps + 10):
        z = mpmath.mpc(z)
        if kind.variant == "theta":
            w = mpmath.mpc(q) * z
        elif kind.variant == "thq":
            w = z
        else:
            w = z / mpmath.mpc(kind.lam)
        return thq_mp(w, q, dps)


def theta_coefficients(kind: ThetaKind, q: complex, lo: int, hi: int) -> np.ndarray:
    """Laurent coefficients of the chosen theta for exponents ``lo..hi``."""
    n = np.arange(lo, hi + 1)
    if kind.variant == "theta":
        expo = -(n * (n - 1)) // 2
    else:
        expo = -(n * (n + 1)) // 2
    c = np.array([qpow(q, int(e)) for e in expo])
    if kind.variant == "theta_q_lambda":
        c = c * int_powers(1.0 / complex(kind.lam), lo, hi)
    return c


def theta_series(kind: ThetaKind, q: complex, N: int) -> LaurentSeries:
    """Symmetric truncation ``[-N, N]`` of the theta Laurent series.

    The window is declared up to ``N``; both tails are treated as
    negligible, which holds on annuli where ``|q|**(-N**2/2) |z|**N`` is tiny.
    """
    return LaurentSeries(-N, theta_coefficients(kind, q, -N, N), N)


def pochhammer(a: complex, p: complex, n: int | float = math.inf,
               with_bound: bool = False):
    """``(a; p)_n``.

    Finite ``n >= 0`` gives ``prod_{i<n} (1 - a p**i)``; negative ``n`` uses
    ``(a; p)_n = 1 / prod_{i=1}^{-n} (1 - a p**(-i))``.  For ``n = inf`` the
    product stops once the tail bound ``2 |a| |p|**N / (1 - |p|)`` drops below
    the tail epsilon; ``with_bound=True`` also returns that bound.
    """
    a = complex(a)
    p = complex(p)
    if n == math.inf:
        if abs(p) >= 1.0:
            raise DivergentProduct(f"|p| = {abs(p)} must be < 1 for an infinite product")
        out = 1.0 + 0j
        term = a
        for i in range(_MAX_TERMS):
            out *= 1.0 - term
            term *= p
            bound = 2.0 * abs(term) / (1.0 - abs(p))
            if bound < TAIL_EPSILON:
                return (out, bound * abs(out)) if with_bound else out
        raise DivergentProduct("infinite product did not reach its tail bound")
    n = int(n)
    out = 1.0 + 0j
    if n >= 0:
        term = a
        for _ in range(n):
            out *= 1.0 - term
            term *= p
    else:
        inv = 1.0 / p
        term = a * inv
        for _ in range(-n):
            out *= 1.0 - term
            term *= inv
        out = 1.0 / out if out != 0 else complex(math.inf)
    return (out, 0.0) if with_bound else out


def growth_majorant(z: complex, q: complex) -> float:
    """The majorant ``e(z; q) = theta(|z|; |q|)``; bounds ``|theta(z; q)|``."""
    return float(theta(abs(complex(z)), abs(complex(q))).real)


def tshakaloff(order: int, q: complex) -> LaurentSeries:
    """Truncation to ``order`` of ``sum_n q**(n(n-1)/2) z**n``."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    return LaurentSeries(0, [qpow(q, n * (n - 1) // 2) for n in range(order + 1)], order)


def stieltjes_wiegert(n: int, x: complex, q: complex) -> complex:
    """Finite sum ``sum_k q**(k*k) (-x)**k / ((q;q)_k (q;q)_{n-k})``."""
    total = 0j
    for k in range(n + 1):
        total += qpow(q, k * k) * (-complex(x)) ** k / (
            pochhammer(q, q, k) * pochhammer(q, q, n - k))
    return total
