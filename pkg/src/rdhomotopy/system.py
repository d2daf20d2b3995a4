"""Residual map, tridiagonal Jacobian and the structural identities behind
its inverse."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rdhomotopy import _kernels
from rdhomotopy.errors import SingularPivot
from rdhomotopy.shooting import shoot

PIVOT_TINY = 1e-300
DENSE_CHECK_MAX_N = 512


@dataclass
class Residual:
    values: np.ndarray

    @property
    def inf_norm(self):
        return float(np.max(np.abs(self.values)))


@dataclass
class TridiagonalMatrix:
    """Symmetric tridiagonal matrix with constant off-diagonal (default -1)."""

    diag: np.ndarray
    off: float = -1.0

    @property
    def n(self):
        return self.diag.size

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y

    def to_dense(self):
        m = np.diag(self.diag.astype(float))
        i = np.arange(self.n - 1)
        m[i, i + 1] = self.off
        m[i + 1, i] = self.off
        return m

    def leading_minors(self):
        if self.off == -1.0:
            return _kernels.leading_minors(np.ascontiguousarray(self.diag, dtype=float))
        out = np.empty(self.n)
        prev2, prev = 1.0, self.diag[0]
        out[0] = prev
        for k in range(1, self.n):
            prev2, prev = prev, self.diag[k] * prev - self.off**2 * prev2
            out[k] = prev
        return out


def _check_u(mesh, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n,):
        raise ValueError(f"u must have shape ({mesh.n},), got {u.shape}")
    return u


def residual(spec, mesh, alpha, u):
    """F(alpha, u), scaled by h^2 so that interior rows read
    -(u_{k+1} - 2u_k + u_{k-1}) + h^2 g1(u_k)."""
    u = _check_u(mesh, u)
    h = mesh.h
    h2 = h * h
    g1 = spec.g1(u)
    F = np.empty_like(u)
    F[0] = -(u[1] - u[0]) + 0.5 * h2 * g1[0]
    F[1:-1] = -(u[2:] - 2 * u[1:-1] + u[:-2]) + h2 * g1[1:-1]
    F[-1] = -(u[-2] - u[-1]) + 0.5 * h2 * g1[-1] - h * alpha * float(spec.g2(u[-1:])[0])
    return Residual(F)


def jacobian(spec, mesh, alpha, u):
    u = _check_u(mesh, u)
    h = mesh.h
    h2 = h * h
    gd = spec.g1_d1(u)
    diag = 2.0 + h2 * gd
    diag[0] = 1.0 + 0.5 * h2 * gd[0]
    diag[-1] = 1.0 + 0.5 * h2 * gd[-1] - h * alpha * float(spec.g2_d1(u[-1:])[0])
    return TridiagonalMatrix(diag)


def solve_tridiagonal(m, rhs):
    """Thomas elimination, no pivoting. Raises SingularPivot on a pivot of
    magnitude <= 1e-300 (or non-finite)."""
    rhs = np.ascontiguousarray(rhs, dtype=float)
    if rhs.shape != (m.n,):
        raise ValueError(f"rhs must have shape ({m.n},), got {rhs.shape}")
    diag = np.ascontiguousarray(m.diag, dtype=float)
    off = np.full(max(m.n - 1, 1), float(m.off))
    x, bad = _kernels.thomas(diag, off, off, rhs, PIVOT_TINY)
    if bad >= 0:
        raise SingularPivot(int(bad), float(diag[bad]))
    return x


def positive_definite_check(m):
    """Sylvester criterion on the leading minors."""
    with np.errstate(over="ignore", invalid="ignore"):
        minors = m.leading_minors()
    return bool(np.all(minors > 0))


# --------------------------------------------------------------------------- #
# structural identities at a solution
# --------------------------------------------------------------------------- #

@dataclass
class IdentityCheck:
    name: str
    passed: bool
    error: float
    tol: float
    location: str = ""

    def as_row(self):
        return {"name": self.name, "location": self.location, "margin": self.tol - self.error,
                "pass": self.passed}


@dataclass
class IdentityReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _rel(a, b):
    return np.abs(a - b) / np.maximum(np.abs(b), np.finfo(float).tiny)


def minor_identity_check(spec, mesh, alpha, u1, rtol=1e-9):
    """U_k'(u1) = det(Delta_{k-1}) and h g2(U_n) A'(u1) = det J, plus det J > 0."""
    st = shoot(spec, mesh, u1)
    J = jacobian(spec, mesh, alpha, st.U)
    minors = J.leading_minors()
    checks = []
    err = _rel(st.Uprime[1:], minors[:-1])
    k = int(np.argmax(err)) + 2
    checks.append(IdentityCheck("U'_k = det(Delta_k-1)", bool(np.all(err <= rtol)),
                                float(np.max(err)), rtol, f"k={k}"))
    detJ = minors[-1]
    hg2A = mesh.h * float(spec.g2(st.U[-1:])[0]) * st.Aprime
    e = float(_rel(np.array(hg2A), np.array(detJ)))
    checks.append(IdentityCheck("h g2(U_n) A' = det J", e <= rtol, e, rtol))
    checks.append(IdentityCheck("det J > 0", bool(detJ > 0), float(-detJ), 0.0))
    return IdentityReport(checks)


def inverse_factors(Uprime, detJ):
    """Upper and lower factors whose product is J^{-1} at a solution."""
    up = np.asarray(Uprime, dtype=float)
    n = up.size
    upper = np.triu(up[:, None] / up[None, :])
    lower = np.zeros((n, n))
    lower[:-1] = np.tril(up[None, :] / up[1:, None])
    lower[-1] = up / detJ
    return upper, lower


def inverse_entries(Uprime, detJ):
    """(J^{-1})_{ij} from the closed-form sum over k >= max(i, j)."""
    up = np.asarray(Uprime, dtype=float)
    n = up.size
    s = 1.0 / (up[:-1] * up[1:])
    tail = np.append(np.cumsum(s[::-1])[::-1], 0.0)  # tail[m] = sum_{k>=m} s_k
    idx = np.maximum.outer(np.arange(n), np.arange(n))
    return np.outer(up, up) * (tail[idx] + 1.0 / (up[-1] * detJ))


def apply_inverse(Uprime, detJ, v):
    """J^{-1} v in O(n) through the factorization."""
    up = np.asarray(Uprime, dtype=float)
    c = np.cumsum(up * v)
    w = np.empty_like(up)
    w[:-1] = c[:-1] / up[1:]
    w[-1] = c[-1] / detJ
    return up * np.cumsum((w / up)[::-1])[::-1]


def inverse_factorization_check(spec, mesh, alpha, u1, tol=1e-8, seed=0):
    st = shoot(spec, mesh, u1)
    J = jacobian(spec, mesh, alpha, st.U)
    detJ = J.leading_minors()[-1]
    checks = []
    if mesh.n <= DENSE_CHECK_MAX_N:
        upper, lower = inverse_factors(st.Uprime, detJ)
        Jinv = upper @ lower
        Jd = J.to_dense()
        e = float(np.max(np.sum(np.abs(Jd @ Jinv - np.eye(mesh.n)), axis=1)))
        checks.append(IdentityCheck("||J Jinv - I||_inf", e <= tol, e, tol))
        ent = inverse_entries(st.Uprime, detJ)
        e2 = float(np.max(np.abs(ent - Jinv)) / np.max(np.abs(Jinv)))
        checks.append(IdentityCheck("entrywise formula", e2 <= tol, e2, tol))
        rs = np.sum(Jinv, axis=1)
        checks.append(IdentityCheck("row sums positive", bool(np.all(rs > 0)),
                                    float(-np.min(rs)), 0.0))
    else:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(4):
            v = rng.standard_normal(mesh.n)
            x = apply_inverse(st.Uprime, detJ, v)
            worst = max(worst, float(np.max(np.abs(J.matvec(x) - v)) / np.max(np.abs(v))))
        checks.append(IdentityCheck("J (Jinv v) = v", worst <= tol, worst, tol))
        ones = apply_inverse(st.Uprime, detJ, np.ones(mesh.n))
        checks.append(IdentityCheck("row sums positive", bool(np.all(ones > 0)),
                                    float(-np.min(ones)), 0.0))
    return IdentityReport(checks)
