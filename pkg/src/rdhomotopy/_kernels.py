"""Compiled inner loops: power-law shooting, Thomas elimination, minor determinants."""

import numpy as np
from numba import njit


@njit(cache=True)
def shoot_power(u1, n, h, p):
    """Shooting recursion for g1(x) = x**p.

    Returns (U, D, Up, Dp, k_bad) where D[k] = U[k] - U[k-1] (D[0] = 0) and
    Dp the same for the u1-derivatives. k_bad is the 1-based index of the
    first non-finite node, or 0.
    """
    h2 = h * h
    U = np.empty(n)
    D = np.zeros(n)
    Up = np.empty(n)
    Dp = np.zeros(n)
    U[0] = u1
    Up[0] = 1.0
    if n == 1:
        return U, D, Up, Dp, 0
    gk = u1 ** p
    gdk = p * u1 ** (p - 1.0)
    D[1] = 0.5 * h2 * gk
    Dp[1] = 0.5 * h2 * gdk
    U[1] = u1 + D[1]
    Up[1] = 1.0 + Dp[1]
    if not np.isfinite(U[1]):
        return U, D, Up, Dp, 2
    for k in range(1, n - 1):
        x = U[k]
        gk = x ** p
        gdk = p * x ** (p - 1.0)
        D[k + 1] = D[k] + h2 * gk
        Dp[k + 1] = Dp[k] + h2 * gdk * Up[k]
        U[k + 1] = x + D[k + 1]
        Up[k + 1] = Up[k] + Dp[k + 1]
        if not (np.isfinite(U[k + 1]) and np.isfinite(Up[k + 1])):
            return U, D, Up, Dp, k + 2
    return U, D, Up, Dp, 0


@njit(cache=True)
def thomas(diag, lower, upper, rhs, tiny):
    """Solve a tridiagonal system without pivoting.

    lower[i] couples row i+1 to column i, upper[i] row i to column i+1.
    Returns (x, bad_row); bad_row >= 0 marks a pivot with |pivot| <= tiny.
    """
    n = diag.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    x = np.empty(n)
    piv = diag[0]
    if abs(piv) <= tiny or not np.isfinite(piv):
        return x, 0
    cp[0] = upper[0] / piv if n > 1 else 0.0
    dp[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - lower[i - 1] * cp[i - 1]
        if abs(piv) <= tiny or not np.isfinite(piv):
            return x, i
        if i < n - 1:
            cp[i] = upper[i] / piv
        dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / piv
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x, -1


@njit(cache=True)
def leading_minors(diag):
    """det of the k x k leading blocks of tridiag(-1, diag, -1), k = 1..n."""
    n = diag.shape[0]
    out = np.empty(n)
    prev2 = 1.0
    prev = diag[0]
    out[0] = prev
    for k in range(1, n):
        cur = diag[k] * prev - prev2
        out[k] = cur
        prev2 = prev
        prev = cur
    return out
