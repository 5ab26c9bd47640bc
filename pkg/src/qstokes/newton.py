"""Linear q-difference operators: Newton polygon, index, companion form, homotopy.

An operator ``P = sum_i a_i sigma_q**i`` has coefficients ``a_i`` given as
Laurent series.  Its Newton polygon is the lower convex hull of the integer
points ``(i, v0(a_i))``; slopes are read left to right with the horizontal
length as multiplicity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np

from .config import VALUATION_EPSILON
from .errors import (AllBelowThreshold, IdentityViolated, NonIntegralSlopes,
                     NonInvertibleLeading, NonInvertible, UndefinedValuation)
from .series_core import LaurentSeries, sigma_q, valuation

__all__ = [
    "QDiffOperator",
    "NewtonPolygon",
    "newton_polygon",
    "irregularity",
    "index",
    "companion",
    "homotopy_check",
    "HomotopyReport",
]


@dataclass(frozen=True)
class QDiffOperator:
    """``P = sum_i coeffs[i] * sigma_q**i`` with ``i`` in ``0..degree``."""

    coeffs: Mapping[int, LaurentSeries]
    q: complex

    def __post_init__(self):
        if not self.coeffs:
            raise UndefinedValuation("operator without coefficients")
        if min(self.coeffs) < 0:
            raise ValueError("operator degrees must be nonnegative")
        for i in (0, self.degree):
            if i not in self.coeffs:
                raise UndefinedValuation(f"coefficient a_{i} is missing")
            try:
                valuation(self.coeffs[i])
            except AllBelowThreshold:
                raise UndefinedValuation(f"coefficient a_{i} vanishes") from None

    @classmethod
    def from_terms(cls, q: complex, terms: Mapping[int, Mapping[int, complex]],
                   hi: int = 64) -> "QDiffOperator":
        """Operator with Laurent-polynomial coefficients ``{i: {exp: c}}``."""
        return cls({i: LaurentSeries.from_dict(t, hi=hi) for i, t in terms.items()}, q)

    @property
    def degree(self) -> int:
        return max(self.coeffs)

    def coefficient(self, i: int) -> LaurentSeries | None:
        return self.coeffs.get(i)

    def apply(self, f: LaurentSeries) -> LaurentSeries:
        out = None
        for i, a in sorted(self.coeffs.items()):
            term = a * sigma_q(f, i, self.q)
            out = term if out is None else out + term
        return out

    __call__ = apply

    def compose(self, other: "QDiffOperator") -> "QDiffOperator":
        """The product ``self . other`` in the skew ring (``sigma a = (sigma a) sigma``)."""
        out: dict[int, LaurentSeries] = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                term = a * sigma_q(b, i, self.q)
                out[i + j] = term if i + j not in out else out[i + j] + term
        return QDiffOperator(out, self.q)

    __mul__ = compose


@dataclass(frozen=True)
class NewtonPolygon:
    """Slopes in increasing order with positive integer multiplicities."""

    slopes: tuple[tuple[Fraction, int], ...]

    def as_dict(self) -> dict[Fraction, int]:
        return dict(self.slopes)

    @property
    def rank(self) -> int:
        return sum(r for _, r in self.slopes)

    @property
    def is_integral(self) -> bool:
        return all(mu.denominator == 1 for mu, _ in self.slopes)

    @classmethod
    def from_dict(cls, d: Mapping) -> "NewtonPolygon":
        return cls(tuple(sorted((Fraction(k), int(v)) for k, v in d.items() if v)))

    def union(self, other: "NewtonPolygon") -> "NewtonPolygon":
        merged: dict[Fraction, int] = dict(self.slopes)
        for mu, r in other.slopes:
            merged[mu] = merged.get(mu, 0) + r
        return NewtonPolygon.from_dict(merged)


def _lower_hull(points: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    hull: list[tuple[int, int]] = []
    for p in sorted(points):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] unless it lies strictly below the chord
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def _points(P: QDiffOperator, eps: float) -> list[tuple[int, int]]:
    pts = []
    for i, a in P.coeffs.items():
        try:
            pts.append((i, valuation(a, eps)))
        except AllBelowThreshold:
            if i in (0, P.degree):
                raise UndefinedValuation(f"coefficient a_{i} vanishes") from None
    return pts


def newton_polygon(P: QDiffOperator, eps: float = VALUATION_EPSILON) -> NewtonPolygon:
    """Slopes of the lower convex hull of ``(i, v0(a_i))``, computed exactly."""
    hull = _lower_hull(_points(P, eps))
    slopes: dict[Fraction, int] = {}
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        mu = Fraction(y2 - y1, x2 - x1)
        slopes[mu] = slopes.get(mu, 0) + (x2 - x1)
    return NewtonPolygon.from_dict(slopes)


def irregularity(np_: NewtonPolygon) -> Fraction:
    """Sum of ``multiplicity * slope`` over positive slopes."""
    return sum((r * mu for mu, r in np_.slopes if mu > 0), Fraction(0))


def index(P: QDiffOperator, setting: Literal["formal", "convergent"]) -> int:
    """Index ``dim ker - dim coker`` on formal or convergent Laurent series."""
    poly = newton_polygon(P)
    if not poly.is_integral:
        raise NonIntegralSlopes(f"slopes {[str(m) for m, _ in poly.slopes]} are not integral")
    if setting == "formal":
        return 0
    if setting == "convergent":
        return -int(irregularity(poly))
    raise ValueError(f"unknown setting {setting!r}")


def _monic_coeffs(P: QDiffOperator) -> list[LaurentSeries]:
    """``b_1..b_n`` with ``P / a_n = sigma**n + b_1 sigma**(n-1) + ... + b_n``."""
    n = P.degree
    try:
        inv = P.coeffs[n].invert()
    except (NonInvertible, AllBelowThreshold):
        raise NonInvertibleLeading("leading coefficient is not invertible") from None
    out = []
    for k in range(1, n + 1):
        a = P.coeffs.get(n - k)
        out.append(a * inv if a is not None else inv.scale(0.0))
    return out


def companion(P: QDiffOperator) -> LaurentSeries:
    """Companion matrix: ones above the diagonal, last row ``-a_j / a_n``."""
    n = P.degree
    b = _monic_coeffs(P)
    lo = min(0, *(s.lo for s in b))
    hi = min(s.hi for s in b)
    arr = np.zeros((hi - lo + 1, n, n), dtype=complex)
    for i in range(n - 1):
        arr[-lo, i, i + 1] = 1.0
    for j in range(n):
        # entry (n-1, j) is -b_{n-j}
        arr[:, n - 1, j] = -b[n - j - 1].restrict(lo, hi).coeffs
    return LaurentSeries(lo, arr, hi)


# --- the homotopy between the scalar and the companion complexes -----------

Vec = list  # list of LaurentSeries


@dataclass
class HomotopyReport:
    residuals: dict[str, float] = field(default_factory=dict)
    tolerance: float = 1e-10

    @property
    def passed(self) -> bool:
        return all(r <= self.tolerance for r in self.residuals.values())

    def worst(self) -> tuple[str, float]:
        return max(self.residuals.items(), key=lambda kv: kv[1])


class _Homotopy:
    def __init__(self, P: QDiffOperator):
        self.q = P.q
        self.n = P.degree
        self.b = _monic_coeffs(P)

    def sigma(self, f: LaurentSeries, k: int = 1) -> LaurentSeries:
        return sigma_q(f, k, self.q)

    def P(self, f: LaurentSeries) -> LaurentSeries:
        out = self.sigma(f, self.n)
        for k, bk in enumerate(self.b, start=1):
            out = out + bk * self.sigma(f, self.n - k)
        return out

    def P_i(self, i: int, g: LaurentSeries) -> LaurentSeries:
        # Horner operator sigma**(n-i) + b_1 sigma**(n-i-1) + ... + b_{n-i}
        out = self.sigma(g, self.n - i)
        for k in range(1, self.n - i + 1):
            out = out + self.b[k - 1] * self.sigma(g, self.n - i - k)
        return out

    def V(self, f: LaurentSeries) -> Vec:
        return [self.sigma(f, k) for k in range(self.n)]

    def I(self, g: LaurentSeries) -> Vec:
        return [g.scale(0.0)] * (self.n - 1) + [g]

    def pi1(self, X: Vec) -> LaurentSeries:
        return X[0]

    def Pi(self, G: Vec) -> LaurentSeries:
        out = None
        for i, g in enumerate(G, start=1):
            t = self.P_i(i, g)
            out = t if out is None else out + t
        return out

    def Delta(self, X: Vec) -> Vec:
        out = [self.sigma(X[i]) - X[i + 1] for i in range(self.n - 1)]
        last = self.sigma(X[-1])
        for j in range(self.n):
            last = last + self.b[self.n - j - 1] * X[j]
        return out + [last]

    def Delta_prime(self, G: Vec) -> Vec:
        # component i (1-based) is sum over j + k = i - 1, k >= 1 of sigma**j g_k
        out = []
        for i in range(1, self.n + 1):
            acc = G[0].scale(0.0)
            for k in range(1, i):
                acc = acc + self.sigma(G[k - 1], i - 1 - k)
            out.append(acc)
        return out


def _gap(x, y, scale: float) -> float:
    if isinstance(x, list):
        return max(_gap(a, b, scale) for a, b in zip(x, y))
    return x.max_diff(y) / scale


def _sub(X: Vec, Y: Vec) -> Vec:
    return [a - b for a, b in zip(X, Y)]


def homotopy_check(P: QDiffOperator, samples: Iterable[tuple[LaurentSeries, Vec, Vec]] | int = 3,
                   tolerance: float = 1e-10, rng: np.random.Generator | None = None,
                   raise_on_failure: bool = True) -> HomotopyReport:
    """Check the chain maps and the homotopy identities on sample inputs.

    Each sample is ``(f, X, G)``: a scalar series, and two vectors of ``n``
    series for the degree-0 and degree-1 terms of the companion complex.
    An integer draws that many random power-series samples.
    """
    h = _Homotopy(P)
    if isinstance(samples, int):
        rng = rng if rng is not None else np.random.default_rng(0)
        samples = [_random_sample(h.n, rng) for _ in range(samples)]
    rep = HomotopyReport(tolerance=tolerance)

    def record(name: str, value: float) -> None:
        rep.residuals[name] = max(rep.residuals.get(name, 0.0), value)

    for f, X, G in samples:
        # cancellations happen at the size of the most dilated input terms
        scale = max(max(h.sigma(s, h.n).max_abs(), s.max_abs()) for s in [f, *X, *G])
        record("pi1.V = id", _gap(h.pi1(h.V(f)), f, scale))
        record("Pi.I = id", _gap(h.Pi(h.I(f)), f, scale))
        record("Delta.V = I.P", _gap(h.Delta(h.V(f)), h.I(h.P(f)), scale))
        record("Pi.Delta = P.pi1", _gap(h.Pi(h.Delta(X)), h.P(h.pi1(X)), scale))
        record("V.pi1 - id = Delta'.Delta", _gap(_sub(h.V(h.pi1(X)), X), h.Delta_prime(h.Delta(X)), scale))
        record("I.Pi - id = Delta.Delta'", _gap(_sub(h.I(h.Pi(G)), G), h.Delta(h.Delta_prime(G)), scale))
    if raise_on_failure and not rep.passed:
        raise IdentityViolated(*rep.worst())
    return rep


def _random_series(rng: np.random.Generator, hi: int = 24) -> LaurentSeries:
    c = rng.normal(size=hi + 1) + 1j * rng.normal(size=hi + 1)
    return LaurentSeries(0, c, hi)


def _random_sample(n: int, rng: np.random.Generator):
    return (_random_series(rng), [_random_series(rng) for _ in range(n)],
            [_random_series(rng) for _ in range(n)])
