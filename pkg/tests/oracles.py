"""Independent reference computations used to cross-check the library.

Nothing here calls the code paths it is compared against.
"""

import cmath
import math

import mpmath
import numpy as np


def red_dense(mu1, A1, mu2, A2, U, q, x_lo, x_hi):
    """Solve ``(sigma X) z**mu2 A2 - z**mu1 A1 X = U - V`` as one dense linear system.

    Unknowns are ``X_n`` for ``x_lo <= n <= x_hi`` and ``V_m`` for
    ``mu1 <= m < mu2``; equations are all exponents the left side can reach.
    Returns ``(X, V)`` as dicts of matrices and the least-squares residual.
    """
    A1, A2 = np.atleast_2d(A1), np.atleast_2d(A2)
    r1, r2 = A1.shape[0], A2.shape[0]
    size = r1 * r2
    nx = x_hi - x_lo + 1
    nv = mu2 - mu1
    exps = range(min(x_lo + mu1, U.lo, mu1), max(x_hi + mu2, U.hi) + 1)
    rows, rhs = [], []
    eye = np.eye(size)
    for m in exps:
        row = np.zeros((size, (nx + nv) * size), dtype=complex)
        # coefficient of z**m: q**(m-mu2) X_{m-mu2} A2 - A1 X_{m-mu1} + V_m
        n2, n1 = m - mu2, m - mu1
        if x_lo <= n2 <= x_hi:
            row[:, (n2 - x_lo) * size:(n2 - x_lo + 1) * size] += q ** n2 * np.kron(A2.T, np.eye(r1))
        if x_lo <= n1 <= x_hi:
            row[:, (n1 - x_lo) * size:(n1 - x_lo + 1) * size] -= np.kron(np.eye(r2), A1)
        if mu1 <= m < mu2:
            k = nx + m - mu1
            row[:, k * size:(k + 1) * size] += eye
        rows.append(row)
        u = np.asarray(U[m]) if U.lo <= m <= U.hi else np.zeros((r1, r2))
        rhs.append(np.reshape(u, (r1, r2)).flatten(order="F"))
    M = np.vstack(rows)
    b = np.concatenate(rhs)
    # the q**n factors span many decades; equilibrate columns before solving
    colscale = np.linalg.norm(M, axis=0)
    colscale[colscale == 0] = 1.0
    y, *_ = np.linalg.lstsq(M / colscale, b, rcond=None)
    sol = y / colscale
    res = float(np.max(np.abs(M @ sol - b)))
    X = {n: sol[(n - x_lo) * size:(n - x_lo + 1) * size].reshape((r1, r2), order="F")
         for n in range(x_lo, x_hi + 1)}
    V = {m: sol[(nx + m - mu1) * size:(nx + m - mu1 + 1) * size].reshape((r1, r2), order="F")
         for m in range(mu1, mu2)}
    return X, V, res


def thq_jacobi(z, q):
    """``thq(z)`` through mpmath's Jacobi theta: with ``p = 1/q`` and ``z = -e**(2iv) sqrt(q)``,
    ``thq(z) = sum_n (-1)**n p**(n**2/2) e**(2inv)``, which is ``jtheta(4, v, sqrt(p))``.
    """
    z, q = complex(z), complex(q)
    w = -z / cmath.sqrt(q)
    v = cmath.log(w) / 2j
    return complex(mpmath.jtheta(4, v, 1 / cmath.sqrt(q)))


def contour_residue(f, pole, radius=1e-3, points=400):
    """``(1 / 2 pi i) \\oint f`` over a small circle, by the trapezoid rule."""
    total = 0j
    for k in range(points):
        w = radius * cmath.exp(2j * math.pi * k / points)
        total += f(pole + w) * w
    return total / points


def tshakaloff_coefficients(n, q):
    """Exact ``q**(k(k-1)/2)`` for integer ``q``, as Python ints."""
    return [int(q) ** (k * (k - 1) // 2) for k in range(n + 1)]
