"""Two-phase solver: one Newton step per node of an alpha partition from
alpha_* to the target, then Newton polish at the target."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from rdhomotopy.bounds import DEFAULT_MAX_STEPS, bounds_at, make_plan
from rdhomotopy.errors import MeshGateError, RdhError, ShootingOverflow, SolverDivergence
from rdhomotopy.nonlinearity import derive
from rdhomotopy.shooting import oracle_solve, shoot
from rdhomotopy.solution import Solution
from rdhomotopy.system import jacobian, residual, solve_tridiagonal

MAX_EXTRA_STEPS = 20
DIVERGENCE_FACTOR = 10.0
DIVERGENCE_WINDOW = 3


def _newton(spec, mesh, alpha, u):
    F = residual(spec, mesh, alpha, u).values
    dx = solve_tridiagonal(jacobian(spec, mesh, alpha, u), F)
    u_new = u - dx
    if not np.all(np.isfinite(u_new)):
        raise SolverDivergence("Newton update is not finite", alpha=alpha, u=u)
    return u_new, float(np.max(np.abs(dx)))


def newton_step(spec, mesh, alpha, u):
    """u - J(alpha, u)^{-1} F(alpha, u) with one tridiagonal solve."""
    u = np.asarray(u, dtype=float)
    return _newton(spec, mesh, float(alpha), u)[0]


def _kappa_at(spec, mesh, u1):
    try:
        return shoot(spec, mesh, u1).kappa
    except ShootingOverflow:
        return math.nan


def solve(spec, mesh, alpha_target, eps, check_gate=True, plan=None, alpha_star=None,
          max_steps=DEFAULT_MAX_STEPS, track=False):
    """Homotopy-Newton approximation of the positive solution at alpha_target.

    Phase 1 takes one Newton step at each node of the plan's partition.

    Phase 2 runs the planned k0 steps and then at most 20 more, stopping once
    both the residual and the last Newton correction are below
    eps * max(1, ||u||_inf). `converged` on the result is False if that never
    happens. With track=True each phase-1 iterate is compared against an
    oracle solve at its alpha (slow; diagnostics only).
    """
    alpha_target = float(alpha_target)
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    derived = derive(spec)
    if check_gate:
        b = bounds_at(spec, derived, alpha_target, strict=False)
        if b.n_min < 0 or mesh.n < b.n_min:
            raise MeshGateError(mesh.n, b.n_min, alpha_target)
    if plan is None:
        plan = make_plan(spec, derived, alpha_target, eps, alpha_star=alpha_star,
                         max_steps=max_steps)

    u = np.full(mesh.n, plan.start_value)
    residuals = []
    corrections = []
    tracking = []
    a_hi, N = plan.alpha_star_hi, plan.N
    nodes = plan.nodes()

    for k in range(1, N + 1):
        a_k = float(nodes[k - 1])
        try:
            u, dx = _newton(spec, mesh, a_k, u)
        except RdhError as exc:
            raise SolverDivergence(f"phase 1 failed at step {k}: {exc}", step=k,
                                   alpha=a_k, u=u) from exc
        r = residual(spec, mesh, a_k, u).inf_norm
        residuals.append(r)
        corrections.append(dx)
        if track:
            ref = oracle_solve(spec, mesh, a_k, check_gate=False).u
            tracking.append(float(np.max(np.abs(u - ref))))
        if (k > DIVERGENCE_WINDOW
                and r > DIVERGENCE_FACTOR * residuals[-1 - DIVERGENCE_WINDOW]):
            last_alpha = float(nodes[k - 2]) if k > 1 else plan.alpha_star_lo
            raise SolverDivergence(
                f"phase 1 residual grew from {residuals[-1 - DIVERGENCE_WINDOW]:.3e} to "
                f"{r:.3e} over {DIVERGENCE_WINDOW} steps (step {k}); homotopy plan too coarse",
                step=k, alpha=last_alpha, u=u)

    phase2 = 0
    converged = False
    while phase2 < plan.k0 + MAX_EXTRA_STEPS:
        try:
            u, dx = _newton(spec, mesh, a_hi, u)
        except RdhError as exc:
            raise SolverDivergence(f"phase 2 failed at step {phase2 + 1}: {exc}",
                                   step=N + phase2 + 1, alpha=a_hi, u=u) from exc
        phase2 += 1
        r = residual(spec, mesh, a_hi, u).inf_norm
        residuals.append(r)
        corrections.append(dx)
        tol = eps * max(1.0, float(np.max(np.abs(u))))
        if phase2 >= plan.k0 and r <= tol and dx <= tol:
            converged = True
            break

    return Solution(
        u=u,
        alpha=a_hi,
        residual_inf=residuals[-1],
        iterations_phase1=N,
        iterations_phase2=phase2,
        kappa_estimate=_kappa_at(spec, mesh, float(u[0])),
        plan=plan,
        per_step_residuals=residuals,
        method="homotopy",
        u1=float(u[0]),
        corrections=corrections,
        converged=converged,
        tracking_errors=tracking,
    )


@dataclass
class ConditionReport:
    alpha: np.ndarray
    kappa: np.ndarray
    kappa_fd: np.ndarray
    kappa1: float
    n: int
    rel_gap: np.ndarray = field(init=False)

    def __post_init__(self):
        self.rel_gap = np.abs(self.kappa - self.kappa_fd) / self.kappa

    def rows(self):
        return [{"alpha": float(a), "kappa": float(k), "kappa_fd": float(f),
                 "rel_gap": float(g), "kappa1": self.kappa1}
                for a, k, f, g in zip(self.alpha, self.kappa, self.kappa_fd, self.rel_gap)]


def condition_probe(spec, mesh, alpha_grid, rel_step=1e-6, check_gate=True, eps=1e-10):
    """kappa = U_n'/A' at oracle solutions against a central difference of
    the solution path in alpha; kappa1 is the planned bound at max(alpha_grid)."""
    alphas = np.asarray(alpha_grid, dtype=float)
    kap = np.empty(alphas.size)
    kfd = np.empty(alphas.size)
    for i, a in enumerate(alphas):
        sol = oracle_solve(spec, mesh, a, tol=1e-15, check_gate=check_gate)
        kap[i] = sol.kappa_estimate
        da = rel_step * a
        up = oracle_solve(spec, mesh, a + da, tol=1e-15, check_gate=False).u
        dn = oracle_solve(spec, mesh, a - da, tol=1e-15, check_gate=False).u
        kfd[i] = float(np.max(np.abs(up - dn))) / (2 * da)
    plan = make_plan(spec, derive(spec), float(np.max(alphas)), eps)
    return ConditionReport(alphas, kap, kfd, plan.kappa1, mesh.n)
