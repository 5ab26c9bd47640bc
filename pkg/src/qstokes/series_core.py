"""Two-sided truncated Laurent series with scalar or matrix coefficients.

A :class:`LaurentSeries` stores the coefficients of ``z**lo .. z**hi``.
Coefficients below ``lo`` are zero (the series is bounded below), while
coefficients above ``hi`` are unknown.  Binary operations therefore produce
the window on which every coefficient is still determined:

* sum: ``[min(lo1, lo2), min(hi1, hi2)]``
* product: ``[lo1 + lo2, min(lo1 + hi2, lo2 + hi1)]``

Coefficients are either complex scalars (``shape == ()``) or complex
``r x c`` matrices (``shape == (r, c)``).  Products of two matrix series use
the matrix product of coefficients.

>>> z = LaurentSeries.monomial(1, hi=5)
>>> f = (1 - z).invert()
>>> [complex(f[n]) for n in range(4)]
[(1+0j), (1+0j), (1+0j), (1+0j)]
"""

from __future__ import annotations

from numbers import Number
from typing import Iterable, Mapping

import numpy as np

from .config import DEFAULT_WINDOW, VALUATION_EPSILON
from .errors import AllBelowThreshold, EmptyWindow, NonFinite, NonInvertible

ComplexScalar = complex

__all__ = [
    "ComplexScalar",
    "LaurentSeries",
    "sigma_q",
    "series_arith",
    "valuation",
    "as_series",
    "poly_mul",
    "polynomial",
]


def _check_finite(arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFinite("non-finite coefficient produced (overflow or NaN)")


class LaurentSeries:
    """Immutable truncated Laurent series.

    Parameters
    ----------
    lo : int
        Exponent of ``coeffs[0]``; every coefficient below it is zero.
    coeffs : array_like
        Coefficients for exponents ``lo, lo+1, ...``; shape ``(N,)`` for a
        scalar series or ``(N, r, c)`` for a matrix series.
    hi : int, optional
        Last exponent on which coefficients are meaningful.  Defaults to
        ``lo + N - 1``; missing coefficients up to ``hi`` are zero-padded and
        extra coefficients beyond ``hi`` are dropped.
    """

    __slots__ = ("lo", "hi", "_c")

    def __init__(self, lo: int, coeffs, hi: int | None = None):
        arr = np.array(coeffs, dtype=complex)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.ndim not in (1, 3):
            raise ValueError("coefficients must be a 1-d array or a stack of matrices")
        lo = int(lo)
        if hi is None:
            hi = lo + arr.shape[0] - 1
        hi = int(hi)
        if hi < lo:
            raise EmptyWindow(f"empty window [{lo}, {hi}]")
        n = hi - lo + 1
        if arr.shape[0] < n:
            pad = np.zeros((n - arr.shape[0],) + arr.shape[1:], dtype=complex)
            arr = np.concatenate([arr, pad])
        elif arr.shape[0] > n:
            arr = arr[:n]
        _check_finite(arr)
        arr.setflags(write=False)
        self.lo = lo
        self.hi = hi
        self._c = arr

    # -- constructors -------------------------------------------------
    @classmethod
    def zeros(cls, lo: int, hi: int, shape: tuple = ()) -> "LaurentSeries":
        return cls(lo, np.zeros((hi - lo + 1,) + tuple(shape), dtype=complex), hi)

    @classmethod
    def constant(cls, value, hi: int = DEFAULT_WINDOW[1]) -> "LaurentSeries":
        value = np.asarray(value, dtype=complex)
        return cls(0, value[None, ...], hi)

    @classmethod
    def monomial(cls, n: int, coeff=1.0, hi: int | None = None) -> "LaurentSeries":
        if hi is None:
            hi = max(n, DEFAULT_WINDOW[1])
        coeff = np.asarray(coeff, dtype=complex)
        return cls(n, coeff[None, ...], hi)

    @classmethod
    def from_dict(cls, terms: Mapping[int, object], hi: int | None = None,
                  lo: int | None = None, shape: tuple | None = None) -> "LaurentSeries":
        """Build a Laurent polynomial from ``{exponent: coefficient}``."""
        if not terms and (lo is None or hi is None):
            raise EmptyWindow("cannot infer a window from an empty mapping")
        exps = [int(k) for k in terms]
        lo = min(exps) if lo is None else lo
        top = max(exps) if exps else lo
        hi = top if hi is None else hi
        if shape is None:
            shape = np.asarray(next(iter(terms.values()))).shape if terms else ()
        out = np.zeros((hi - lo + 1,) + tuple(shape), dtype=complex)
        for k, v in terms.items():
            if lo <= k <= hi:
                out[k - lo] = v
        return cls(lo, out, hi)

    @classmethod
    def from_blocks(cls, blocks: list[list["LaurentSeries"]]) -> "LaurentSeries":
        """Assemble a matrix series from a grid of matrix/scalar series."""
        lo = min(b.lo for row in blocks for b in row)
        hi = min(b.hi for row in blocks for b in row)
        if hi < lo:
            raise EmptyWindow("blocks have disjoint windows")
        rows = []
        for row in blocks:
            rows.append([b.restrict(lo, hi).as_matrix()._c for b in row])
        arr = np.concatenate([np.concatenate(r, axis=2) for r in rows], axis=1)
        return cls(lo, arr, hi)

    # -- basic access -------------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def window(self) -> tuple[int, int]:
        return (self.lo, self.hi)

    @property
    def shape(self) -> tuple:
        return self._c.shape[1:]

    @property
    def is_matrix(self) -> bool:
        return self._c.ndim == 3

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __getitem__(self, n: int):
        if not self.lo <= n <= self.hi:
            if n < self.lo:
                return np.zeros(self.shape, dtype=complex)[()]
            raise IndexError(f"exponent {n} outside window [{self.lo}, {self.hi}]")
        return self._c[n - self.lo][()]

    def exponents(self) -> range:
        return range(self.lo, self.hi + 1)

    def as_matrix(self) -> "LaurentSeries":
        if self.is_matrix:
            return self
        return LaurentSeries(self.lo, self._c[:, None, None], self.hi)

    def entry(self, i: int, j: int) -> "LaurentSeries":
        return LaurentSeries(self.lo, self._c[:, i, j], self.hi)

    def block(self, rows: slice, cols: slice) -> "LaurentSeries":
        return LaurentSeries(self.lo, self._c[:, rows, cols], self.hi)

    def transpose(self) -> "LaurentSeries":
        if not self.is_matrix:
            return self
        return LaurentSeries(self.lo, np.swapaxes(self._c, 1, 2), self.hi)

    def restrict(self, lo: int | None = None, hi: int | None = None) -> "LaurentSeries":
        """Re-window: raising ``lo`` drops terms, lowering it pads zeros."""
        lo = self.lo if lo is None else lo
        hi = self.hi if hi is None else hi
        if hi > self.hi:
            raise EmptyWindow(f"cannot extend the validity window beyond {self.hi}")
        if hi < lo:
            raise EmptyWindow(f"empty window [{lo}, {hi}]")
        out = np.zeros((hi - lo + 1,) + self.shape, dtype=complex)
        a, b = max(lo, self.lo), hi
        if a <= b:
            out[a - lo:b - lo + 1] = self._c[a - self.lo:b - self.lo + 1]
        return LaurentSeries(lo, out, hi)

    def with_hi(self, hi: int) -> "LaurentSeries":
        """Declare a different validity bound, zero-padding if it grows.

        Only legitimate when the series is known to be a polynomial whose
        missing coefficients vanish.
        """
        if hi < self.lo:
            raise EmptyWindow(f"empty window [{self.lo}, {hi}]")
        return LaurentSeries(self.lo, self._c, hi)

    def trim(self) -> "LaurentSeries":
        """Raise ``lo`` past exactly-zero leading coefficients."""
        nz = np.flatnonzero(np.any(self._c.reshape(len(self), -1) != 0, axis=1))
        if nz.size == 0 or nz[0] == 0:
            return self
        return LaurentSeries(self.lo + int(nz[0]), self._c[nz[0]:], self.hi)

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other) -> "LaurentSeries":
        if isinstance(other, LaurentSeries):
            return other
        if isinstance(other, (Number, np.number)):
            if self.hi < 0:
                raise EmptyWindow("a constant lies beyond the validity window")
            value = complex(other) * (np.eye(*self.shape) if self.is_matrix else 1.0)
            return LaurentSeries(0, np.asarray(value)[None, ...], self.hi)
        raise TypeError(f"cannot combine LaurentSeries with {type(other).__name__}")

    def __add__(self, other) -> "LaurentSeries":
        if isinstance(other, (Number, np.number)):
            if not self.lo <= 0 <= self.hi:
                other = self._coerce(other)
            else:
                arr = self._c.copy()
                if self.is_matrix:
                    arr[-self.lo] += complex(other) * np.eye(*self.shape)
                else:
                    arr[-self.lo] += complex(other)
                return LaurentSeries(self.lo, arr, self.hi)
        other = self._coerce(other)
        lo = min(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if hi < lo:
            raise EmptyWindow("sum of series with incompatible windows")
        shape = np.broadcast_shapes(self.shape, other.shape)
        out = np.zeros((hi - lo + 1,) + shape, dtype=complex)
        for s in (self, other):
            top = min(s.hi, hi)
            if top >= s.lo:
                out[s.lo - lo:top - lo + 1] += s._c[: top - s.lo + 1]
        return LaurentSeries(lo, out, hi)

    __radd__ = __add__

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries(self.lo, -self._c, self.hi)

    def __sub__(self, other) -> "LaurentSeries":
        return self + (-other)

    def __rsub__(self, other) -> "LaurentSeries":
        return (-self) + other

    def scale(self, c) -> "LaurentSeries":
        return LaurentSeries(self.lo, self._c * complex(c), self.hi)

    def __mul__(self, other) -> "LaurentSeries":
        if isinstance(other, (Number, np.number)):
            return self.scale(other)
        if isinstance(other, np.ndarray):
            return self.rmatmul_const(other)
        return _convolve(self, other)

    def __rmul__(self, other) -> "LaurentSeries":
        if isinstance(other, (Number, np.number)):
            return self.scale(other)
        if isinstance(other, np.ndarray):
            return self.lmatmul_const(other)
        return _convolve(other, self)

    __matmul__ = __mul__

    def __rmatmul__(self, other) -> "LaurentSeries":
        return self.__rmul__(other)

    def lmatmul_const(self, m) -> "LaurentSeries":
        """Constant matrix on the left: ``M @ f``."""
        m = np.asarray(m, dtype=complex)
        return LaurentSeries(self.lo, np.matmul(m, self.as_matrix()._c), self.hi)

    def rmatmul_const(self, m) -> "LaurentSeries":
        """Constant matrix on the right: ``f @ M``."""
        m = np.asarray(m, dtype=complex)
        return LaurentSeries(self.lo, np.matmul(self.as_matrix()._c, m), self.hi)

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by ``z**k``."""
        return LaurentSeries(self.lo + k, self._c, self.hi + k)

    def rescale(self, c) -> "LaurentSeries":
        """Return ``f(c z)``."""
        pw = _powers(complex(c), self.lo, self.hi)
        return LaurentSeries(self.lo, _bcast(pw, self._c) * self._c, self.hi)

    def invert(self, eps: float = VALUATION_EPSILON) -> "LaurentSeries":
        """Multiplicative inverse on the window ``[-v, hi - 2v]``."""
        v = valuation(self, eps)
        top = self.hi - 2 * v
        if top < -v:
            raise EmptyWindow("window too short to invert")
        h = self._c[v - self.lo:]
        n = top + v + 1
        h = h[:n]
        if self.is_matrix:
            try:
                h0inv = np.linalg.inv(h[0])
            except np.linalg.LinAlgError:
                raise NonInvertible("leading matrix coefficient is singular") from None
            if np.linalg.cond(h[0]) > 1.0 / eps:
                raise NonInvertible("leading matrix coefficient is ill-conditioned")
            g = np.zeros((n,) + self.shape, dtype=complex)
            g[0] = h0inv
            for k in range(1, n):
                acc = np.einsum("jab,jbc->ac", h[1:k + 1], g[k - 1::-1][:k])
                g[k] = -h0inv @ acc
        else:
            g = np.zeros(n, dtype=complex)
            g[0] = 1.0 / h[0]
            for k in range(1, n):
                g[k] = -g[0] * np.dot(h[1:k + 1], g[k - 1::-1][:k])
        return LaurentSeries(-v, g, top)

    def __truediv__(self, other) -> "LaurentSeries":
        if isinstance(other, (Number, np.number)):
            return self.scale(1.0 / complex(other))
        return self * other.invert()

    def __rtruediv__(self, other) -> "LaurentSeries":
        return other * self.invert()

    def __pow__(self, k: int) -> "LaurentSeries":
        if k < 0:
            return self.invert() ** (-k)
        out = None
        for _ in range(k):
            out = self if out is None else out * self
        if out is None:
            eye = np.eye(*self.shape) if self.is_matrix else 1.0
            return LaurentSeries.constant(eye, self.hi - self.lo)
        return out

    # -- evaluation ---------------------------------------------------
    def __call__(self, z):
        return self.evaluate(z)

    def evaluate(self, z):
        """Evaluate the truncated sum at a point."""
        z = complex(z)
        if z == 0:
            if self.lo < 0 and np.any(self._c[: -self.lo] != 0):
                raise ZeroDivisionError("negative powers at z = 0")
            return self[0] if self.lo <= 0 else np.zeros(self.shape, dtype=complex)[()]
        pw = _powers(z, self.lo, self.hi)
        return np.tensordot(pw, self._c, axes=(0, 0))[()]

    # -- comparison ---------------------------------------------------
    def max_abs(self) -> float:
        return float(np.max(np.abs(self._c))) if self._c.size else 0.0

    def max_diff(self, other: "LaurentSeries", lo: int | None = None,
                 hi: int | None = None) -> float:
        """Largest coefficient gap on the common window (optionally clipped)."""
        a = min(self.lo, other.lo) if lo is None else lo
        b = min(self.hi, other.hi) if hi is None else hi
        d = self.restrict(a, b) - other.restrict(a, b)
        return d.max_abs()

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (self.lo, self.hi) == (other.lo, other.hi) and np.array_equal(self._c, other._c)

    def __hash__(self) -> int:
        return hash((self.lo, self.hi, self._c.tobytes()))

    def __repr__(self) -> str:
        shown = ", ".join(f"{n}: {self[n]!r}" for n in list(self.exponents())[:6]
                          if not self.is_matrix)
        kind = f"matrix{self.shape}" if self.is_matrix else "scalar"
        return f"LaurentSeries({kind}, window=[{self.lo}, {self.hi}]{', ' if shown else ''}{shown})"


def _powers(z: complex, lo: int, hi: int) -> np.ndarray:
    """``z**n`` for ``n = lo..hi`` by repeated multiplication from ``z**0``."""
    z = complex(z)
    top, bottom = max(hi, 0), min(lo, 0)
    pw = np.ones(top - bottom + 1, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        if top > 0:
            pw[-bottom + 1:] = np.cumprod(np.full(top, z))
        if bottom < 0:
            pw[:-bottom] = np.cumprod(np.full(-bottom, 1.0 / z))[::-1]
    return pw[lo - bottom:hi - bottom + 1]


def _bcast(pw: np.ndarray, c: np.ndarray) -> np.ndarray:
    return pw.reshape((-1,) + (1,) * (c.ndim - 1))


def _convolve(f: LaurentSeries, g: LaurentSeries) -> LaurentSeries:
    lo = f.lo + g.lo
    hi = min(f.lo + g.hi, g.lo + f.hi)
    if hi < lo:
        raise EmptyWindow("product window is empty")
    n = hi - lo + 1
    a = f._c[:n]
    b = g._c[:n]
    if not f.is_matrix and not g.is_matrix:
        out = np.convolve(a, b)[:n]
    else:
        if f.is_matrix and g.is_matrix:
            if a.shape[2] != b.shape[1]:
                raise ValueError(f"shape mismatch {a.shape[1:]} x {b.shape[1:]}")
            prod = np.matmul
            shape = (a.shape[1], b.shape[2])
        else:
            shape = f.shape if f.is_matrix else g.shape
            a = a if f.is_matrix else a[:, None, None]
            b = b if g.is_matrix else b[:, None, None]
            prod = np.multiply
        out = np.zeros((n,) + shape, dtype=complex)
        for i in range(min(n, a.shape[0])):
            m = min(n - i, b.shape[0])
            out[i:i + m] += prod(a[i], b[:m])
    with np.errstate(all="ignore"):
        return LaurentSeries(lo, out, hi)


def as_series(x, hi: int = DEFAULT_WINDOW[1]) -> LaurentSeries:
    """Promote a scalar, a constant matrix or a series to a series."""
    if isinstance(x, LaurentSeries):
        return x
    return LaurentSeries.constant(x, hi)


def sigma_q(f: LaurentSeries, k: int, q: complex) -> LaurentSeries:
    """The dilatation ``f(z) -> f(q**k z)``; the window is unchanged."""
    if q == 0:
        raise ValueError("q must be nonzero")
    if len(f) == 0:
        raise EmptyWindow("empty series")
    return f.rescale(complex(q) ** k)


def valuation(f: LaurentSeries, eps: float = VALUATION_EPSILON) -> int:
    """Least exponent whose coefficient exceeds ``eps`` times the largest one."""
    mags = np.abs(f.coeffs).reshape(len(f), -1).max(axis=1)
    top = mags.max() if mags.size else 0.0
    if top == 0.0:
        raise AllBelowThreshold("every coefficient vanishes")
    idx = np.flatnonzero(mags > eps * top)
    return f.lo + int(idx[0])


def series_arith(op: str, *args, **kwargs) -> LaurentSeries:
    """Dispatch ``add``, ``sub``, ``mul``, ``neg``, ``invert`` or ``rescale``."""
    if op == "add":
        f, g = args
        return f + g
    if op == "sub":
        f, g = args
        return f - g
    if op == "mul":
        f, g = args
        return f * g
    if op == "neg":
        (f,) = args
        return -f
    if op == "invert":
        (f,) = args
        return f.invert(**kwargs)
    if op in ("rescale", "compose_with_scalar_rescale"):
        f, c = args
        return f.rescale(c)
    raise ValueError(f"unknown operation {op!r}")


def poly_mul(f: LaurentSeries, g: LaurentSeries) -> LaurentSeries:
    """Full product ``lo1+lo2 .. hi1+hi2``, reading both factors as zero off their windows."""
    top = f.hi + g.hi
    return (f.with_hi(top - g.lo) * g.with_hi(top - f.lo)).restrict(hi=top)


def polynomial(coeffs: Iterable, lo: int = 0, hi: int | None = None) -> LaurentSeries:
    """Laurent polynomial from a dense coefficient list, zero-padded to ``hi``."""
    c = list(coeffs)
    return LaurentSeries(lo, c, hi if hi is not None else lo + len(c) - 1)
