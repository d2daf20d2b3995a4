"""A-priori bounds on the positive solution, the mesh-size gate and the
homotopy plan (step count, Newton polish count, safety radius)."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from rdhomotopy.errors import BoundsError, InverseError

PLAN_GRID = 1024
DELTA_SAFETY = 0.9
KAPPA_INFLATION = 1.5
ALPHA_STAR_FLOOR = 1e-12
DEFAULT_MAX_STEPS = 256


def _inverse(fn, y):
    """Elementwise inverse that maps targets beyond the working range to +inf
    and non-finite or nonpositive targets to nan instead of raising."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.full_like(y, np.nan)
    out[np.isposinf(y)] = np.inf
    ok = np.isfinite(y) & (y > 0)
    if not np.any(ok):
        return out
    try:
        out[ok] = fn(y[ok])
    except InverseError:
        for i in np.flatnonzero(ok):
            try:
                out[i] = fn(y[i])
            except InverseError:
                out[i] = np.inf
    return out


def _chain(spec, derived, alpha, theta_star):
    """Every bound as an array over alpha. Values that leave float64 range
    come out as inf, 0 or nan; callers decide whether that is fatal."""
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    d = spec.d
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        g_inv_a = _inverse(derived.g_inv, a)
        C1 = _inverse(derived.G_inv, derived.G(_inverse(derived.g_inv, a / math.sqrt(1 - d)))
                      + 0.5 * a * a)
        M = spec.g1_d1(C1)
        x0 = g_inv_a * np.exp(-M)
        C_hat = 1 + spec.g2_d1(C1) * a * a / (2 * spec.g2(x0) * derived.G_d1(x0))
        u1_upper = _inverse(derived.g_inv, a * C_hat)
        C2 = _inverse(derived.G_inv, derived.G(u1_upper) + 0.5 * a * a)
        # C1 and C2 both bound u_n from above; C1 is far tighter for large alpha
        u_upper = np.fmin(C1, C2)
        eta = 2 * np.maximum(spec.g1_d2(2 * u_upper), a * spec.g2_d2(2 * u_upper))
        delta_alpha = np.minimum(
            spec.g2_d1(g_inv_a) * (1 - d) * a / (16 * eta * (theta_star + 1)), u_upper)
        M_gate = spec.g1_d1(u_upper)
        gate = 1 + M_gate / (2 - 2 * d)
    return {
        "alpha": a, "g_inv_alpha": g_inv_a, "M": M, "u1_lower": x0, "C1": C1,
        "C_hat": C_hat, "C2": C2, "u1_upper": u1_upper, "u_upper": u_upper,
        "eta": eta, "delta_alpha": delta_alpha, "M_gate": M_gate, "gate": gate,
    }


_REQUIRED = ("g_inv_alpha", "M", "u1_lower", "C1", "C_hat", "C2", "u1_upper",
             "u_upper", "eta", "delta_alpha", "M_gate")


@dataclass
class BoundsReport:
    """Bounds at one alpha.

    `C2` is the two-step bound from the u1 bracket; `u_upper` = min(C1, C2)
    is the bound actually used for the gate, eta and delta_alpha. Fields
    that fell out of float64 range are listed in `nonfinite`.
    """

    alpha: float
    g_inv_alpha: float
    M: float
    u1_lower: float
    C1: float
    C_hat: float
    C2: float
    u1_upper: float
    u_upper: float
    eta: float
    delta_alpha: float
    theta_star: float
    M_gate: float
    n_min: int
    nonfinite: list = field(default_factory=list)

    @property
    def finite(self):
        return not self.nonfinite

    def to_dict(self):
        return asdict(self)


def theta_star_of(spec, derived, alpha_hi):
    return float(spec.g2_d1(np.array([derived.g_inv(alpha_hi)]))[0]
                 * (1 - spec.d) * alpha_hi / 2)


def _gate_n(gate):
    return int(math.ceil(gate)) + 1 if math.isfinite(gate) else -1


def bounds_at(spec, derived, alpha, theta_star=None, strict=True):
    """All alpha-dependent bounds. `theta_star` defaults to its value with
    alpha as the homotopy endpoint.

    With strict=True a field that is nonpositive or not finite raises
    BoundsError naming it; otherwise such fields are listed in `nonfinite`.
    """
    alpha = float(alpha)
    if not alpha > 0 or not math.isfinite(alpha):
        raise ValueError(f"alpha must be positive and finite, got {alpha!r}")
    if theta_star is None:
        theta_star = theta_star_of(spec, derived, alpha)
    ch = _chain(spec, derived, alpha, theta_star)
    vals = {k: float(v[0]) for k, v in ch.items()}
    bad = [k for k in _REQUIRED if not (math.isfinite(vals[k]) and vals[k] > 0)]
    if strict and bad:
        raise BoundsError(bad[0], vals[bad[0]])
    return BoundsReport(
        alpha=alpha, g_inv_alpha=vals["g_inv_alpha"], M=vals["M"], u1_lower=vals["u1_lower"],
        C1=vals["C1"], C_hat=vals["C_hat"], C2=vals["C2"], u1_upper=vals["u1_upper"],
        u_upper=vals["u_upper"], eta=vals["eta"], delta_alpha=vals["delta_alpha"],
        theta_star=float(theta_star), M_gate=vals["M_gate"], n_min=_gate_n(vals["gate"]),
        nonfinite=bad,
    )


def mesh_gate(spec, derived, alpha):
    """Smallest node count the solver accepts at this alpha."""
    b = bounds_at(spec, derived, alpha, strict=False)
    if b.n_min < 0:
        raise BoundsError("M_gate", b.M_gate)
    return b.n_min


@dataclass
class HomotopyPlan:
    """Continuation schedule from alpha_star_lo to alpha_star_hi.

    `N_theory` is the step count from the worst-case constants; `N` is what
    the solver runs, min(N_theory, max_steps). When N_theory is run the
    partition is uniform in alpha; a capped plan spaces its nodes
    geometrically instead, since a few uniform steps starting at a tiny
    alpha_* would jump past the basin of the positive solution. `start_lo`
    and `start_hi` are the faces of the starting hypercube.
    """

    alpha_star_lo: float
    alpha_star_hi: float
    N: int
    N_theory: int
    capped: bool
    delta: float
    k0: int
    k0_clamped: bool
    c: float
    c_hat: float
    theta_star: float
    kappa1: float
    eta_hi: float
    start_lo: float
    start_hi: float
    eps: float

    @property
    def start_value(self):
        return 0.5 * (self.start_lo + self.start_hi)

    @property
    def partition(self):
        return "geometric" if self.capped else "uniform"

    def nodes(self):
        """alpha_1, ..., alpha_N; the last one is alpha_star_hi exactly."""
        k = np.arange(1, self.N + 1)
        lo, hi = self.alpha_star_lo, self.alpha_star_hi
        if self.capped:
            a = lo * (hi / lo) ** (k / self.N)
        else:
            a = lo + k * (hi - lo) / self.N
        a[-1] = hi
        return a

    def to_dict(self):
        out = asdict(self)
        out["partition"] = self.partition
        return out


def _plan_constants(spec, derived, lo, hi, theta):
    grid = np.geomspace(lo, hi, PLAN_GRID) if lo < hi else np.array([hi])
    ch = _chain(spec, derived, grid, theta)
    da = ch["delta_alpha"]
    if not np.all(np.isfinite(da) & (da > 0)):
        i = int(np.argmin(np.where(np.isfinite(da), da, -np.inf)))
        raise BoundsError("delta_alpha", float(da[i]))
    delta = DELTA_SAFETY * float(np.min(da))
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        k1 = (4 * spec.G1(ch["u_upper"])
              / ((1 - spec.d) * grid * spec.g1(ch["g_inv_alpha"])))
    if not np.all(np.isfinite(k1)):
        raise BoundsError("kappa1", float(np.max(k1)))
    width = float(ch["C2"][0] - ch["u1_lower"][0])
    return delta, KAPPA_INFLATION * float(np.max(k1)), width, ch


def make_plan(spec, derived, alpha_target, eps, alpha_star=None, max_steps=DEFAULT_MAX_STEPS):
    """Choose alpha_*, delta, kappa1, N and k0 for a solve at alpha_target.

    alpha_* is halved from alpha_target/2 until the starting hypercube is
    narrower than delta/2. Passing `alpha_star` skips the search.
    """
    a_hi = float(alpha_target)
    if not a_hi > 0 or not math.isfinite(a_hi):
        raise ValueError(f"alpha must be positive and finite, got {alpha_target!r}")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    theta = theta_star_of(spec, derived, a_hi)

    if alpha_star is not None:
        a_lo = float(alpha_star)
        if not 0 < a_lo <= a_hi:
            raise ValueError(f"alpha_star must lie in (0, alpha], got {alpha_star!r}")
        delta, kappa1, width, ch = _plan_constants(spec, derived, a_lo, a_hi, theta)
    else:
        a_lo = 0.5 * a_hi
        while True:
            delta, kappa1, width, ch = _plan_constants(spec, derived, a_lo, a_hi, theta)
            if width < 0.5 * delta:
                break
            a_lo *= 0.5
            if a_lo < ALPHA_STAR_FLOOR:
                raise BoundsError("alpha_star", a_lo)

    hi_b = _chain(spec, derived, a_hi, theta)
    eta_hi = float(hi_b["eta"][0])
    c = 4 * eta_hi * (theta + 1) / (float(spec.g2_d1(hi_b["g_inv_alpha"])[0])
                                   * (1 - spec.d) * a_hi)
    c_hat = 3 / (4 * c)
    ratio = c_hat / eps
    k0_clamped = False
    if ratio > 3:
        k0 = max(1, math.ceil(math.log2(math.log(ratio, 3))))
    else:
        k0 = 1
        k0_clamped = True
        warnings.warn(f"eps={eps!r} is too large for the polish-count formula; using k0 = 1",
                      RuntimeWarning, stacklevel=2)

    n_theory = math.ceil(3 * a_hi * kappa1 / delta) + 1 if a_hi > a_lo else 1
    n_run = max(1, min(n_theory, int(max_steps)))
    return HomotopyPlan(
        alpha_star_lo=a_lo, alpha_star_hi=a_hi, N=n_run, N_theory=n_theory,
        capped=n_run < n_theory, delta=delta, k0=k0, k0_clamped=k0_clamped, c=c,
        c_hat=c_hat, theta_star=theta, kappa1=kappa1, eta_hi=eta_hi,
        start_lo=float(ch["u1_lower"][0]), start_hi=float(ch["C2"][0]), eps=float(eps),
    )


def containment_rows(spec, derived, alpha, u, bounds=None):
    """Check a solution vector against the a-priori bounds; one row per
    inequality with its margin (positive when it holds)."""
    b = bounds if bounds is not None else bounds_at(spec, derived, alpha, strict=False)
    u1, un = float(u[0]), float(u[-1])
    with np.errstate(over="ignore"):
        eM = math.exp(b.M) if b.M < 709 else math.inf
    G = lambda x: float(derived.G(np.array([x]))[0])
    checks = [
        ("g_inv(alpha) < u_n", un - b.g_inv_alpha),
        ("u_n < C2", b.C2 - un),
        ("u_n < u_upper", b.u_upper - un),
        ("u1_lower < u_1", u1 - b.u1_lower),
        ("u_1 < u1_upper", b.u1_upper - u1),
        ("u_n < e^M u_1", eM * u1 - un),
        ("G(u_n) < G(u_1) + alpha^2/2", G(u1) + 0.5 * alpha * alpha - G(un)),
    ]
    return [{"name": name, "location": f"alpha={alpha!r}", "margin": float(m),
             "pass": bool(m > 0)} for name, m in checks]
