"""Shooting parametrization of the discrete problem by its left value u1.

Given u1 the first n - 1 equations fix U_2..U_n recursively, and the last one
fixes the flux parameter A(u1). A is increasing on the relevant range, so the
positive solution for a given alpha is the root of A(u1) = alpha, which
`oracle_solve` finds by bisection without any use of the continuation code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from rdhomotopy import _kernels
from rdhomotopy.errors import MeshGateError, OracleError, ShootingOverflow
from rdhomotopy.nonlinearity import derive
from rdhomotopy.solution import Solution

ORACLE_MAXITER = 300
BRACKET_MARGIN = 1e-6


@dataclass(frozen=True)
class Mesh:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"mesh needs n >= 2 nodes, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self):
        return 1.0 / (self.n - 1)

    @property
    def x(self):
        return np.arange(self.n) * self.h


@dataclass
class ShootingState:
    u1: float
    U: np.ndarray
    Uprime: np.ndarray
    A: float
    Aprime: float
    # node increments U_k - U_{k-1} and U'_k - U'_{k-1}; entry 0 unused
    D: np.ndarray = field(repr=False)
    Dprime: np.ndarray = field(repr=False)

    @property
    def kappa(self):
        return float(self.Uprime[-1] / self.Aprime)


def _shoot_generic(spec, u1, n, h):
    h2 = h * h
    U = np.empty(n)
    D = np.zeros(n)
    Up = np.empty(n)
    Dp = np.zeros(n)
    U[0] = u1
    Up[0] = 1.0
    g1, g1d = spec.g1, spec.g1_d1
    x = np.empty(1)
    x[0] = u1
    D[1] = 0.5 * h2 * float(g1(x)[0])
    Dp[1] = 0.5 * h2 * float(g1d(x)[0])
    U[1] = u1 + D[1]
    Up[1] = 1.0 + Dp[1]
    if not math.isfinite(U[1]):
        return U, D, Up, Dp, 2
    for k in range(1, n - 1):
        x[0] = U[k]
        D[k + 1] = D[k] + h2 * float(g1(x)[0])
        Dp[k + 1] = Dp[k] + h2 * float(g1d(x)[0]) * Up[k]
        U[k + 1] = U[k] + D[k + 1]
        Up[k + 1] = Up[k] + Dp[k + 1]
        if not (math.isfinite(U[k + 1]) and math.isfinite(Up[k + 1])):
            return U, D, Up, Dp, k + 2
    return U, D, Up, Dp, 0


def shoot(spec, mesh, u1):
    """Run the recursion from U_1 = u1 and evaluate A(u1), A'(u1).

    The recursion is carried on the increments D_k = U_k - U_{k-1}
    (D_{k+1} = D_k + h^2 g1(U_k)), which is the same three-term recursion
    without the cancellation in U_n - U_{n-1}.
    """
    u1 = float(u1)
    if not u1 > 0 or not math.isfinite(u1):
        raise ValueError(f"u1 must be finite and positive, got {u1!r}")
    n, h = mesh.n, mesh.h
    with np.errstate(over="ignore", invalid="ignore"):
        if spec.is_power_law:
            U, D, Up, Dp, bad = _kernels.shoot_power(u1, n, h, spec.params["p"])
        else:
            U, D, Up, Dp, bad = _shoot_generic(spec, u1, n, h)
        if bad:
            raise ShootingOverflow(bad, u1)
        un = U[-1:]
        g1n = float(spec.g1(un)[0])
        g1dn = float(spec.g1_d1(un)[0])
        g2n = float(spec.g2(un)[0])
        g2dn = float(spec.g2_d1(un)[0])
        num = D[-1] / h + 0.5 * h * g1n
        dnum = Dp[-1] / h + 0.5 * h * g1dn * Up[-1]
        A = num / g2n
        Aprime = (dnum - A * g2dn * Up[-1]) / g2n
    if not (math.isfinite(A) and math.isfinite(Aprime)):
        raise ShootingOverflow(n, u1)
    return ShootingState(u1, U, Up, float(A), float(Aprime), D, Dp)


def flux_of(spec, mesh, u1):
    """A(u1), with +inf when the recursion overflows."""
    try:
        return shoot(spec, mesh, u1).A
    except ShootingOverflow:
        return math.inf


def boundary_residual(spec, mesh, alpha, u1):
    """P(alpha, u1) = g2(U_n) (alpha - A(u1)); zero exactly at solutions."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    st = shoot(spec, mesh, u1)
    g2n = float(spec.g2(st.U[-1:])[0])
    return g2n * (alpha - st.A)


# --------------------------------------------------------------------------- #
# energy / trapezoid diagnostics
# --------------------------------------------------------------------------- #

@dataclass
class EnergyReport:
    T: float
    I: float
    E: float
    T_k: np.ndarray
    I_k: np.ndarray
    E_k: np.ndarray
    identity_residual: float
    flux_energy: float  # A^2 g2(U_n)^2 / 2

    @property
    def identity_scale(self):
        return max(1.0, self.flux_energy)

    def rows(self):
        tol = 1e-12 * self.identity_scale
        rows = [{"name": "energy_identity", "location": "", "margin": tol - self.identity_residual,
                 "pass": bool(np.isfinite(tol) and self.identity_residual <= tol)},
                {"name": "trapezoid_error_nonnegative", "location": "",
                 "margin": self.E + 1e-15 * max(1.0, abs(self.T)),
                 "pass": bool(self.E >= -1e-15 * max(1.0, abs(self.T)))}]
        floor = -1e-15 * np.maximum(1.0, self.T_k)
        with np.errstate(invalid="ignore"):
            slack = np.where(np.isfinite(self.E_k), self.E_k - floor, -np.inf)
        k = int(np.argmin(slack))
        rows.append({"name": "interval_error_nonnegative", "location": f"k={k + 1}",
                     "margin": float(self.E_k[k] - floor[k]), "pass": bool(np.all(self.E_k >= floor))})
        return rows


def energy_report(spec, mesh, state):
    """Trapezoid sum of g1 over the nodes, the exact integral, and the
    discrete energy balance residual."""
    U = state.U
    h = mesh.h
    # terms can leave float64 range near the top of the shooting range; they
    # then come out non-finite and the identity check fails instead of raising
    with np.errstate(over="ignore", invalid="ignore"):
        g1 = spec.g1(U)
        G1 = spec.G1(U)
        T_k = 0.5 * (g1[1:] + g1[:-1]) * state.D[1:]
        I_k = G1[1:] - G1[:-1]
        E_k = T_k - I_k
        T = np.sum(T_k)
        I = G1[-1] - G1[0]
        E = T - I
        g2n = np.float64(spec.g2(U[-1:])[0])
        A = np.float64(state.A)
        flux = 0.5 * A * A * g2n * g2n
        resid = np.abs(flux - I - E - h * h / 8 * (g1[-1] ** 2 - g1[0] ** 2))
        if not np.isfinite(resid):
            resid = np.inf
    return EnergyReport(float(T), float(I), float(E), T_k, I_k, E_k, float(resid), float(flux))


def discrete_derivative_identity(spec, mesh, state):
    """Residuals of ½((u_m - u_{m-1})/h)^2 against its trapezoid expression,
    m = 2..n, each divided by max(1, lhs)."""
    h = mesh.h
    D = state.D
    g1 = spec.g1(state.U)
    lhs = 0.5 * (D[1:] / h) ** 2
    T_k = 0.5 * (g1[1:] + g1[:-1]) * D[1:]
    rhs = np.cumsum(T_k) - 0.25 * g1[0] * D[1] - 0.5 * g1[1:] * D[1:]
    return np.abs(lhs - rhs) / np.maximum(1.0, lhs)


# --------------------------------------------------------------------------- #
# bisection oracle
# --------------------------------------------------------------------------- #

def oracle_solve(spec, mesh, alpha, tol=1e-13, check_gate=True, bounds=None):
    """Solve A(u1) = alpha by bisection inside the a-priori u1 bracket.

    The bracket comes from the lower and upper bounds for u1 widened by a
    relative 1e-6. Bisection stops once |A(u1) - alpha| <= tol * alpha or the
    bracket has shrunk to neighbouring doubles.
    """
    from rdhomotopy.bounds import bounds_at
    from rdhomotopy.system import residual

    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if bounds is None:
        bounds = bounds_at(spec, derive(spec), alpha, strict=False)
    if check_gate and mesh.n < bounds.n_min:
        raise MeshGateError(mesh.n, bounds.n_min, alpha)

    lo = bounds.u1_lower * (1 - BRACKET_MARGIN)
    if not lo > 1e-300:
        # lower bound underflowed; walk down from g_inv(alpha) > u1 instead
        lo = bounds.g_inv_alpha
        for _ in range(2000):
            if flux_of(spec, mesh, lo) < alpha:
                break
            lo *= 0.5
    # u1 < u_n < u_upper as well, and u_upper stays finite when u1_upper does not
    hi = min(bounds.u1_upper, bounds.u_upper) * (1 + BRACKET_MARGIN)
    hi = min(hi, 1e300) if math.isfinite(hi) else 1e300
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise OracleError(f"degenerate u1 bracket [{lo!r}, {hi!r}] at alpha={alpha!r}")
    a_lo = flux_of(spec, mesh, lo)
    a_hi = flux_of(spec, mesh, hi)
    if not (a_lo < alpha < a_hi):
        raise OracleError(
            f"bracket sign failure at alpha={alpha!r}: A({lo!r})={a_lo!r}, A({hi!r})={a_hi!r}; "
            "bounds violated (mesh too coarse or nonlinearity not admissible)")

    best = None
    for it in range(1, ORACLE_MAXITER + 1):
        mid = math.sqrt(lo) * math.sqrt(hi) if hi > 4 * lo else 0.5 * (lo + hi)
        if not lo < mid < hi:
            # bracket exhausted in double precision
            cands = [(abs(flux_of(spec, mesh, x) - alpha), x) for x in (lo, hi)]
            best = min(cands)[1]
            break
        a_mid = flux_of(spec, mesh, mid)
        if abs(a_mid - alpha) <= tol * alpha:
            best = mid
            break
        if a_mid < alpha:
            lo = mid
        else:
            hi = mid
    else:
        raise OracleError(f"bisection did not converge in {ORACLE_MAXITER} steps")

    st = shoot(spec, mesh, best)
    res = residual(spec, mesh, alpha, st.U)
    return Solution(
        u=st.U.copy(),
        alpha=alpha,
        residual_inf=res.inf_norm,
        iterations_phase1=it,
        iterations_phase2=0,
        kappa_estimate=st.kappa,
        plan=None,
        per_step_residuals=[],
        method="oracle",
        u1=best,
        flux_defect=abs(st.A - alpha) / alpha,
    )


# --------------------------------------------------------------------------- #
# monotonicity probe
# --------------------------------------------------------------------------- #

@dataclass
class Violation:
    check: str
    k: int
    u1_a: float
    u1_b: float
    margin: float


@dataclass
class MonotonicityReport:
    """`unresolved` counts strict checks whose change between neighbouring
    grid points was within roundoff, so neither direction could be seen."""

    n_pairs: int
    n_checks: int
    violations: list
    unresolved: int = 0

    @property
    def passed(self):
        return not self.violations

    def rows(self):
        return [{"name": v.check, "location": f"k={v.k};u1=[{v.u1_a!r},{v.u1_b!r}]",
                 "margin": v.margin, "pass": False} for v in self.violations]


_CHECKS = (
    # name, direction (+1 increasing / -1 decreasing), strict
    ("(U_k-U_k-1)/g1(U_k) decreasing", -1, True),
    ("(U_k-U_1)/g1(U_k) decreasing", -1, True),
    ("(U_k-U_k-1)/(U_k-U_1) nondecreasing", +1, False),
    ("g1(U_k)/g1(U_1) increasing", +1, True),
)


def _ratios(spec, st):
    g1 = spec.g1(st.U)
    inc = st.D[1:]
    span = np.cumsum(inc)
    return (inc / g1[1:], span / g1[1:], inc / span, g1[1:] / g1[0])


def monotonicity_probe(spec, mesh, u1_grid, rtol=1e-12):
    """Sampled monotonicity in u1 of the shooting ratios and of A.

    A change in the wrong direction larger than `rtol` relative is a
    violation. For strict checks a change of at most that size (including
    no change) is counted as unresolved instead.
    """
    grid = np.asarray(u1_grid, dtype=float)
    if grid.ndim != 1 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("u1 grid must be positive and strictly increasing")
    violations = []
    if grid.size < 2:
        return MonotonicityReport(0, 0, violations)
    prev = shoot(spec, mesh, grid[0])
    prev_r = _ratios(spec, prev)
    n_checks = 0
    unresolved = 0
    for b in grid[1:]:
        cur = shoot(spec, mesh, b)
        cur_r = _ratios(spec, cur)
        for (name, sign, strict), ra, rb in zip(_CHECKS, prev_r, cur_r):
            delta = sign * (rb - ra)
            margin = delta + rtol * np.abs(ra)
            bad = np.nonzero(~(margin >= 0))[0]
            if strict:
                unresolved += int(np.count_nonzero((margin >= 0) & ~(delta > 0)))
            n_checks += delta.size
            for i in bad:
                violations.append(Violation(name, int(i) + 2, prev.u1, cur.u1, float(margin[i])))
        n_checks += 1
        dA = cur.A - prev.A
        if not dA + rtol * abs(prev.A) >= 0:
            violations.append(Violation("A increasing", 0, prev.u1, cur.u1, dA))
        elif not dA > 0:
            unresolved += 1
        prev, prev_r = cur, cur_r
    return MonotonicityReport(grid.size - 1, n_checks, violations, unresolved)
