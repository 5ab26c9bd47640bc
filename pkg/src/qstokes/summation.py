"""Divisors on ``C*/q^Z``, q-Euler sums, algebraic summation and Borel-Ritt sums.

Sums are returned as :class:`MeromorphicSum`: a two-sided numerator series
divided by a product of theta powers.  Numerators are either double
precision :class:`~qstokes.series_core.LaurentSeries` or :class:`MpSeries`
(mpmath coefficients), the latter for checks that must resolve quantities
far below the double precision floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy.linalg import solve_sylvester

from .config import DEFAULT_WINDOW, RESONANCE_MARGIN, precision_digits
from .errors import (ForbiddenDirection, N0TooLarge, NotQGevrey, PoleHit, PointTooFar,
                     WindowTooNarrow)
from .module_rep import BlockModule, elliptic_distance, reduce_to_annulus, require_generic
from .series_core import LaurentSeries, poly_mul
from .special_fn import ThetaKind, eval_theta, qpow, theta_coefficients, theta_mp

__all__ = [
    "Divisor",
    "MpSeries",
    "MeromorphicSum",
    "AsymptoticReport",
    "dq_distance",
    "norm_q1",
    "m_q",
    "borel_value",
    "q_euler_sum",
    "q_euler_spiral",
    "algebraic_sum",
    "divisor_theta_coefficients",
    "borel_ritt_sum",
    "asymptotic_check",
]

EDGE_TOLERANCE = 1e-13


# -- divisors ---------------------------------------------------------------

def norm_q1(q: complex, terms: int = 200) -> float:
    """``inf_{n != 0} |1 - q**n|`` (the infimum is reached at small ``|n|``)."""
    return min(abs(1 - qpow(q, n)) for n in range(-terms, terms + 1) if n != 0)


def m_q(q: complex) -> float:
    """Radius ``||q||_1 / (2 + ||q||_1)`` below which ``d_q(a, [1]) = |1 - a|``."""
    n1 = norm_q1(q)
    return n1 / (2.0 + n1)


def _spiral_distance(z: complex, lam: complex, q: complex) -> float:
    return elliptic_distance(complex(z), complex(lam), q)


@dataclass(frozen=True)
class Divisor:
    """Finite sum ``sum nu_j [lambda_j]`` of q-spirals.

    Each ``lambda_j`` is stored in the annulus ``1 <= |lambda| < |q|`` and the
    terms are sorted by modulus.
    """

    q: complex
    terms: tuple[tuple[complex, int], ...]

    def __post_init__(self):
        q = complex(self.q)
        object.__setattr__(self, "q", q)
        terms = []
        for lam, nu in self.terms:
            if int(nu) != nu or nu < 1:
                raise ValueError(f"multiplicity must be a positive integer, got {nu}")
            terms.append((reduce_to_annulus(complex(lam), q), int(nu)))
        for n, (a, _) in enumerate(terms):
            for b, _ in terms[n + 1:]:
                if _spiral_distance(a, b, q) < RESONANCE_MARGIN:
                    raise ValueError(f"spirals [{a}] and [{b}] coincide")
        terms.sort(key=lambda t: (abs(t[0]), math.atan2(t[0].imag, t[0].real)))
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def single(cls, lam: complex, q: complex, nu: int = 1) -> "Divisor":
        return cls(q, ((lam, nu),))

    @property
    def degree(self) -> int:
        """``|Lambda| = sum nu_j``."""
        return sum(nu for _, nu in self.terms)

    @property
    def weight(self) -> complex:
        """Representative of ``sum nu_j p(-lambda_j)``, i.e. ``prod (-lambda_j)**nu_j``."""
        out = 1.0 + 0j
        for lam, nu in self.terms:
            out *= (-lam) ** nu
        return reduce_to_annulus(out, self.q)

    @property
    def L(self) -> complex:
        """Constant with ``theta_Lambda(qz) = L z**nu theta_Lambda(z)``."""
        out = 1.0 + 0j
        for lam, nu in self.terms:
            out *= (-self.q / lam) ** nu
        return out

    def theta(self, z: complex) -> complex:
        """``theta_Lambda(z) = prod theta(-z / lambda_j)**nu_j``; zero on the spirals."""
        out = 1.0 + 0j
        for lam, nu in self.terms:
            out *= eval_theta(ThetaKind("theta"), -complex(z) / lam, self.q) ** nu
        return out

    def theta_mp(self, z, dps: int):
        with mpmath.workdps(dps + 10):
            out = mpmath.mpc(1)
            for lam, nu in self.terms:
                out *= theta_mp(ThetaKind("theta"), -mpmath.mpc(z) / mpmath.mpc(lam),
                                self.q, dps) ** nu
            return out

    def distance(self, z: complex) -> float:
        return dq_distance(z, self, self.q)


def dq_distance(z: complex, divisor, q: complex) -> float:
    """``prod_j d_q(z, [lambda_j])**nu_j``; a bare ``lambda`` means ``[lambda]``."""
    if not isinstance(divisor, Divisor):
        return _spiral_distance(z, divisor, q)
    out = 1.0
    for lam, nu in divisor.terms:
        out *= _spiral_distance(z, lam, q) ** nu
    return out


# -- meromorphic sums -------------------------------------------------------

@dataclass(frozen=True)
class MpSeries:
    """Scalar Laurent series with mpmath coefficients for exponents ``lo..``."""

    lo: int
    coeffs: tuple
    dps: int

    @property
    def hi(self) -> int:
        return self.lo + len(self.coeffs) - 1

    def __getitem__(self, n: int):
        if not self.lo <= n <= self.hi:
            return mpmath.mpc(0)
        return self.coeffs[n - self.lo]

    def terms(self, z) -> list:
        with mpmath.workdps(self.dps + 10):
            z = mpmath.mpc(z)
            zn = z ** self.lo
            out = []
            for c in self.coeffs:
                out.append(c * zn)
                zn *= z
            return out

    def to_laurent(self) -> LaurentSeries:
        return LaurentSeries(self.lo, [complex(c) for c in self.coeffs])


@dataclass(frozen=True)
class MeromorphicSum:
    """``numerator / prod_t theta_t**powers[t]``, entrywise for matrices.

    ``closed_below`` / ``closed_above`` record whether the numerator truly
    stops at its window ends; an open end is a truncation whose first
    neglected term must stay below ``EDGE_TOLERANCE`` (``PointTooFar``
    otherwise).  ``poles`` is the declared pole divisor.
    """

    numerator: LaurentSeries | MpSeries
    thetas: tuple[ThetaKind, ...]
    powers: np.ndarray
    q: complex
    poles: Divisor | None = None
    closed_below: bool = False
    closed_above: bool = False
    dps: int = field(default=15)

    @property
    def is_mp(self) -> bool:
        return isinstance(self.numerator, MpSeries)

    def _edge_check(self, mags, tol, z) -> None:
        top = max(mags) if len(mags) else 0.0
        if top == 0:
            return
        if not self.closed_below and mags[0] > tol * top:
            raise PointTooFar(f"|z| = {abs(complex(z)):.3g} is too small for the numerator window")
        if not self.closed_above and mags[-1] > tol * top:
            raise PointTooFar(f"|z| = {abs(complex(z)):.3g} is too large for the numerator window")

    def _check_pole(self, z) -> None:
        if self.poles is not None and dq_distance(complex(z), self.poles, self.q) < 1e-14:
            raise PoleHit(f"z = {complex(z)} lies on a pole spiral")

    def numerator_value(self, z):
        if self.is_mp:
            terms = self.numerator.terms(z)
            with mpmath.workdps(self.dps + 10):
                mags = [abs(t) for t in terms]
                self._edge_check(mags, mpmath.mpf(10) ** (-self.dps), z)
                return mpmath.fsum(terms)
        num = self.numerator
        z = complex(z)
        n = np.arange(num.lo, num.hi + 1)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            logmag = n * math.log(abs(z))
        pw = np.exp(logmag) * np.exp(1j * n * np.angle(z))
        c = num.coeffs
        terms = c * pw.reshape((-1,) + (1,) * (c.ndim - 1))
        mags = np.abs(terms).reshape(len(n), -1).max(axis=1)
        self._edge_check(mags, EDGE_TOLERANCE, z)
        return terms.sum(axis=0)

    def evaluate(self, z):
        """Value at ``z``; an mpmath number for mp numerators."""
        self._check_pole(z)
        num = self.numerator_value(z)
        if self.is_mp:
            with mpmath.workdps(self.dps + 10):
                den = mpmath.mpc(1)
                for t, kind in enumerate(self.thetas):
                    den *= theta_mp(kind, z, self.q, self.dps) ** int(self.powers[t])
                return num / den
        den = np.ones(np.shape(num), dtype=complex)
        for t, kind in enumerate(self.thetas):
            den = den * eval_theta(kind, z, self.q) ** self.powers[t].astype(float)
        out = num / den
        return complex(out) if np.ndim(out) == 0 else out

    __call__ = evaluate


def borel_value(u: LaurentSeries, xi, q: complex):
    """``B_q u(xi) = sum_k u_k q**(-k(k-1)/2) xi**k`` for a Laurent polynomial ``u``."""
    total = 0j
    for k in u.exponents():
        total += u[k] * qpow(q, -(k * (k - 1)) // 2) * complex(xi) ** k
    return total


def _as_poly(u) -> LaurentSeries:
    if isinstance(u, LaurentSeries):
        if u.is_matrix:
            raise ValueError("q-Euler sums take a scalar inhomogeneity")
        return u
    return LaurentSeries(0, [complex(u)], 0)


def _check_euler_direction(a: complex, lam: complex, q: complex) -> None:
    if elliptic_distance(complex(lam), 1.0 / complex(a), q) < RESONANCE_MARGIN:
        raise ForbiddenDirection(f"direction {lam} lies on the spiral [1/a] = [{1 / complex(a)}]")


def q_euler_sum(a: complex, u, lam: complex, q: complex, z=None,
                form: str = "series", window: int | None = None,
                precision: int | str | None = None):
    """Sum of ``a z sigma_q f - f = u`` with simple poles on ``[-lambda; q]``.

    ``form="series"`` uses ``g / theta_{q,lambda}`` with
    ``g_n = [u theta_{q,lambda}]_n / (a lambda q**n - 1)``; without ``z`` the
    :class:`MeromorphicSum` itself is returned.  ``form="spiral"`` sums
    ``B_q u(mu) / ((a mu - 1) theta_{q,mu}(z))`` over ``mu`` in ``[lambda; q]``
    and needs ``z``.  ``u`` is read as a Laurent polynomial.
    """
    a, lam, q = complex(a), complex(lam), complex(q)
    _check_euler_direction(a, lam, q)
    u = _as_poly(u)
    if form == "spiral":
        if z is None:
            raise ValueError("the spiral form is evaluated pointwise; pass z")
        return q_euler_spiral(a, u, lam, z, q)[0]
    if form != "series":
        raise ValueError(f"unknown form {form!r}")
    N = DEFAULT_WINDOW[1] if window is None else int(window)
    dps = precision_digits(precision)
    kind = ThetaKind("theta_q_lambda", lam)
    poles = Divisor.single(-lam, q)
    if dps > 15:
        num = _euler_numerator_mp(a, u, lam, q, N, dps)
        out = MeromorphicSum(num, (kind,), np.array([1]), q, poles, dps=dps)
    else:
        th = LaurentSeries(-N - u.hi, theta_coefficients(kind, q, -N - u.hi, N - u.lo))
        prod = poly_mul(u, th).restrict(-N, N)
        n = np.arange(-N, N + 1)
        den = a * lam * np.array([qpow(q, int(k)) for k in n]) - 1.0
        num = LaurentSeries(-N, prod.coeffs / den, N)
        out = MeromorphicSum(num, (kind,), np.array([1]), q, poles)
    return out if z is None else out.evaluate(z)


def _euler_numerator_mp(a, u, lam, q, N, dps) -> MpSeries:
    with mpmath.workdps(dps + 10):
        qm, lm, am = mpmath.mpc(q), mpmath.mpc(lam), mpmath.mpc(a)
        uk = {k: mpmath.mpc(u[k]) for k in u.exponents() if u[k] != 0}
        coeffs = []
        for n in range(-N, N + 1):
            s = mpmath.mpc(0)
            for k, c in uk.items():
                m = n - k
                s += c * qm ** (-(m * (m + 1)) // 2) * lm ** (-m)
            coeffs.append(s / (am * lm * qm ** n - 1))
        return MpSeries(-N, tuple(coeffs), dps)


def q_euler_spiral(a: complex, u: LaurentSeries, lam: complex, z: complex, q: complex,
                   tol: float = 1e-17, max_terms: int = 400) -> tuple[complex, float]:
    """Spiral form of the q-Euler sum at ``z`` and a bound on the omitted tail.

    Terms ``mu = lambda q**k`` are added outward from ``k = 0`` until three
    consecutive terms on each side fall below ``tol`` times the running
    maximum; the tail bound is the last such term times a geometric factor.
    """
    a, lam, q, z = complex(a), complex(lam), complex(q), complex(z)
    _check_euler_direction(a, lam, q)
    u = _as_poly(u)

    def term(k: int) -> complex:
        mu = lam * qpow(q, k)
        return borel_value(u, mu, q) / ((a * mu - 1.0) * eval_theta(ThetaKind("thq"), z / mu, q))

    total = term(0)
    biggest = abs(total)
    tail = 0.0
    for step in (1, -1):
        quiet = 0
        k = 0
        while quiet < 3:
            k += step
            if abs(k) > max_terms:
                raise WindowTooNarrow("spiral sum did not settle")
            t = term(k)
            total += t
            biggest = max(biggest, abs(t))
            quiet = quiet + 1 if abs(t) < tol * biggest else 0
        tail += 2.0 * abs(t)
    return total, tail


# -- algebraic summation ----------------------------------------------------

def _theta_power_series(c: complex, q: complex, power: int, N: int) -> LaurentSeries:
    kind = ThetaKind("theta_q_lambda", c)
    M = N * max(power, 1) + 8
    base = LaurentSeries(-M, theta_coefficients(kind, q, -M, M), M)
    out = LaurentSeries(0, [1.0 + 0j], 0)
    for _ in range(power):
        out = poly_mul(out, base)
    lo, hi = max(out.lo, -N), min(out.hi, N)
    return out.restrict(lo, hi)


def _polynomial_part(s: LaurentSeries) -> LaurentSeries:
    """``s`` cut to its nonzero coefficients (zero padding carries no data here)."""
    nz = np.flatnonzero(np.any(s.coeffs.reshape(len(s), -1) != 0, axis=1))
    if nz.size == 0:
        return LaurentSeries.zeros(0, 0, s.shape)
    return s.restrict(s.lo + int(nz[0]), s.lo + int(nz[-1]))


def algebraic_sum(M: BlockModule, c: complex, window: int | None = None) -> MeromorphicSum:
    """The unique meromorphic ``F_c`` with ``F_c[A_0] = A_U`` and poles on ``[-c; q]``.

    The theta twist ``T = blockdiag(theta_{q,c}**-mu_i)`` makes the diagonal
    constant; the twisted gauge is then found coefficient by coefficient from
    the Sylvester equations ``q**p X_p c**mu_j A_j - c**mu_i A_i X_p = Y_p``
    and untwisted as ``F_ij = G_ij / theta_{q,c}**(mu_j - mu_i)``.  ``U`` is
    read as a Laurent polynomial; it need not be in normal form.
    """
    q = M.q
    c = complex(c)
    require_generic(c, M.blocks, q)
    M = M.with_U({k: _polynomial_part(s) for k, s in M.U.items()})
    N = DEFAULT_WINDOW[1] if window is None else int(window)
    mus, blocks = M.slopes, M.blocks
    span = max(abs(s.lo) for s in M.U.values()) if M.U else 0
    span = max([span] + [abs(s.hi) for s in M.U.values()] + [abs(m) for m in mus])
    if N < 2 * span + 8:
        raise WindowTooNarrow(f"window {N} too narrow for data spanning degree {span}")
    Cdiag = [c ** b.mu * b.A for b in blocks]
    # twisted blocks B_ij = c**mu_i z**-mu_i theta**(mu_j - mu_i) U_ij
    B = {}
    for (i, j), s in M.U.items():
        th = _theta_power_series(c, q, mus[j] - mus[i], N + span)
        B[(i, j)] = poly_mul(s.shift(-mus[i]), th).scale(c ** mus[i]).restrict(-N, N)
    G: dict[tuple[int, int], LaurentSeries] = {}
    for i, j in M.pairs():
        shape = (blocks[i].rank, blocks[j].rank)
        Y = LaurentSeries.zeros(-N, N, shape)
        for l in range(i + 1, j + 1):
            if (i, l) not in B:
                continue
            right = G[(l, j)] if l < j else None
            Y = Y + (B[(i, l)] if right is None else
                     poly_mul(B[(i, l)], right).restrict(-N, N))
        X = np.zeros((2 * N + 1,) + shape, dtype=complex)
        for p in range(-N, N + 1):
            Yp = Y[p]
            if not np.any(Yp):
                continue
            X[p + N] = solve_sylvester(-Cdiag[i], qpow(q, p) * Cdiag[j], Yp)
        G[(i, j)] = LaurentSeries(-N, X, N)
    return _assemble(M, G, c, N)


def _assemble(M: BlockModule, G, c: complex, N: int) -> MeromorphicSum:
    off, mus = M.offsets, M.slopes
    n = M.size
    arr = np.zeros((2 * N + 1, n, n), dtype=complex)
    powers = np.zeros((n, n), dtype=int)
    arr[N] = np.eye(n)
    for (i, j), g in G.items():
        arr[:, off[i]:off[i + 1], off[j]:off[j + 1]] = g.coeffs
        powers[off[i]:off[i + 1], off[j]:off[j + 1]] = mus[j] - mus[i]
    kind = ThetaKind("theta_q_lambda", c)
    return MeromorphicSum(LaurentSeries(-N, arr, N), (kind,), powers[None], M.q,
                          Divisor.single(-c, M.q))


# -- Borel-Ritt -------------------------------------------------------------

def divisor_theta_coefficients(div: Divisor, lo: int, hi: int, method: str = "recursion",
                               dps: int | None = None) -> list:
    """Laurent coefficients ``beta_n`` of ``theta_Lambda`` for ``n = lo..hi``.

    ``method="direct"`` multiplies out the theta factors; ``"recursion"``
    takes ``beta_0 .. beta_{nu-1}`` from the direct product and propagates
    ``beta_{k nu + r} = (L / q**r)**k q**(-k(k+1) nu / 2) beta_r``.
    With ``dps`` the coefficients are mpmath numbers.
    """
    nu = div.degree
    digits = precision_digits(dps)
    ctx = mpmath.workdps(digits + 10)
    with ctx:
        q = mpmath.mpc(div.q) if digits > 15 else complex(div.q)
        one = mpmath.mpc(1) if digits > 15 else 1.0 + 0j

        def direct(a: int, b: int) -> dict[int, object]:
            # product of theta(-z/lambda)**nu over exponents a..b
            K = max(abs(a), abs(b)) + 40
            prod = {0: one}
            for lam, m in div.terms:
                lam_ = mpmath.mpc(lam) if digits > 15 else complex(lam)
                fac = {k: q ** (-(k * (k - 1)) // 2) * (-one / lam_) ** k
                       for k in range(-K, K + 1)}
                for _ in range(m):
                    new: dict[int, object] = {}
                    for e1, c1 in prod.items():
                        for e2, c2 in fac.items():
                            e = e1 + e2
                            if -K <= e <= K:
                                new[e] = new.get(e, 0) + c1 * c2
                    prod = new
            return {n: prod.get(n, 0 * one) for n in range(a, b + 1)}

        if method == "direct":
            d = direct(lo, hi)
            return [d[n] for n in range(lo, hi + 1)]
        if method != "recursion":
            raise ValueError(f"unknown method {method!r}")
        base = direct(0, nu - 1)
        L = one
        for lam, m in div.terms:
            lam_ = mpmath.mpc(lam) if digits > 15 else complex(lam)
            L *= (-q / lam_) ** m
        out = []
        for n in range(lo, hi + 1):
            k, r = divmod(n, nu)
            out.append((L / q ** r) ** k * q ** (-(k * (k + 1) * nu) // 2) * base[r])
        return out


def _gevrey_constant(a: Sequence, q: complex, nu: int) -> float:
    """Fitted ``A`` in ``|a_n| <= C A**n |q|**(n(n-1)/(2 nu))``; NotQGevrey if none fits."""
    lq = math.log(abs(q))
    r = []
    for n, c in enumerate(a):
        if c != 0:
            r.append((n, float(mpmath.log(abs(mpmath.mpc(c)))) - n * (n - 1) / (2 * nu) * lq))
    if len(r) < 2:
        return 1.0
    n = np.array([t[0] for t in r], dtype=float)
    v = np.array([t[1] for t in r])
    if len(r) >= 4:
        curv = np.polyfit(n, v, 2)[0]
        if curv > 0.05 * lq / nu:
            raise NotQGevrey(f"coefficients grow faster than level {nu} (curvature {curv:.3g})")
    slopes = (v[1:] - v[0]) / (n[1:] - n[0])
    return float(math.exp(max(0.0, float(np.max(slopes)))))


def _divisor_sum(num, div: Divisor, dps: int, closed_above: bool) -> MeromorphicSum:
    # theta(-z/lambda) = thq(z / (-lambda/q))
    kinds = tuple(ThetaKind("theta_q_lambda", -lam / div.q) for lam, _ in div.terms)
    powers = np.array([nu for _, nu in div.terms])
    return MeromorphicSum(num, kinds, powers, div.q, div, closed_above=closed_above, dps=dps)


def borel_ritt_sum(ghat: Sequence, div: Divisor, N0: int | None = None,
                   depth: int = 160, precision: int | str | None = None,
                   cauchy_tolerance: float = 1e-12, scan: int = 64) -> MeromorphicSum:
    """``f = F / theta_Lambda`` with ``F = sum_{l <= N0} c_l z**l``, ``c_l = sum_n a_n beta_{l-n}``.

    ``ghat`` holds ``a_0 .. a_M``.  ``F`` is kept for ``N0 - depth <= l <= N0``.
    Without ``N0`` the scan starts at the convergence bound and steps down
    until the last term of the ``c_l`` sum is below ``cauchy_tolerance``
    relative to the sum.  An explicit ``N0`` above the bound raises
    ``N0TooLarge``.
    """
    nu = div.degree
    a = list(ghat)
    if not a:
        raise ValueError("ghat needs at least one coefficient")
    digits = precision_digits(precision)
    A1 = _gevrey_constant(a, div.q, nu)
    lq = math.log(abs(div.q))
    bound = math.floor((math.log(abs(div.L)) - nu * math.log(A1)) / lq - (nu - 1) / 2) - 1
    if N0 is not None and N0 > bound:
        raise N0TooLarge(f"N0 = {N0} exceeds the convergence bound {bound}")
    start = bound if N0 is None else N0
    floor_ = start - (0 if N0 is not None else scan) - depth
    M = len(a) - 1
    base = floor_ - M
    with mpmath.workdps(digits + 10):
        beta = divisor_theta_coefficients(div, base, start, dps=digits)
        conv = mpmath.mpc if digits > 15 else complex
        am = [conv(x) for x in a]

        def c_and_tail(ell: int):
            total = 0 * am[0]
            last = 0 * am[0]
            for n, an in enumerate(am):
                t = an * beta[ell - n - base]
                total += t
                if an != 0:
                    last = t
            rel = float(abs(last)) / max(float(abs(total)), 1e-300) if total != 0 else 0.0
            return total, rel

        top = start
        if N0 is None:
            while c_and_tail(top)[1] >= cauchy_tolerance:
                top -= 1
                if top < start - scan:
                    raise N0TooLarge("the c_l sums do not settle; supply more coefficients")
        coeffs = [c_and_tail(ell)[0] for ell in range(top - depth, top + 1)]
    if all(c == 0 for c in am):
        coeffs = [0 * am[0] for _ in coeffs]
    if digits > 15:
        num = MpSeries(top - depth, tuple(coeffs), digits)
    else:
        num = LaurentSeries(top - depth, np.array(coeffs, dtype=complex))
    return _divisor_sum(num, div, digits, closed_above=True)


@dataclass(frozen=True)
class AsymptoticReport:
    """Envelope fit ``|f - S_{N-1}| <= (C / eps) A**N |q|**(N**2/(2 nu)) |z|**N``.

    ``ratios[N]`` is the largest normalized remainder over the samples; ``C``
    is ``ratios[0]`` and ``A`` the smallest constant making the bound hold
    for every ``N`` tested.
    """

    ratios: tuple[float, ...]
    C: float
    A: float
    A_cap: float
    passed: bool

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}: C = {self.C:.3g}, A = {self.A:.3g} (cap {self.A_cap:g})"


def asymptotic_check(f: MeromorphicSum | Callable, fhat: Sequence, div: Divisor, nu: int,
                     samples: Sequence[complex], N_max: int = 8, A_cap: float = 10.0,
                     precision: int | str | None = None) -> AsymptoticReport:
    """Test a level-``nu`` q-Gevrey expansion of ``f`` along ``div`` on sample points.

    Remainders are computed in mpmath (``precision`` digits, at least 60) since
    they fall far below double precision as ``z -> 0``.  Samples on the
    divisor are skipped.
    """
    digits = max(precision_digits(precision), 60)
    q = div.q
    lq = math.log(abs(q))
    evaluate = f.evaluate if isinstance(f, MeromorphicSum) else f
    ratios = [0.0] * (N_max + 1)
    with mpmath.workdps(digits + 10):
        coeffs = [mpmath.mpc(c) for c in fhat]
        for z in samples:
            eps = dq_distance(complex(z), div, q)
            if eps < 1e-12:
                continue
            zm = mpmath.mpc(z)
            value = mpmath.mpc(evaluate(z))
            partial = mpmath.mpc(0)
            for N in range(N_max + 1):
                rem = abs(value - partial)
                scale = mpmath.mpf(eps) ** -1 * mpmath.exp(N * N / (2 * nu) * lq) * abs(zm) ** N
                ratios[N] = max(ratios[N], float(rem / scale))
                if N < len(coeffs):
                    partial += coeffs[N] * zm ** N
    C = max(ratios[0], 1e-300)
    A = 0.0
    for N in range(1, N_max + 1):
        A = max(A, (ratios[N] / C) ** (1.0 / N))
    passed = math.isfinite(A) and A <= A_cap
    return AsymptoticReport(tuple(ratios), C, A, A_cap, passed)
