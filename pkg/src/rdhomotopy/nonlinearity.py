"""Admissible nonlinearity pairs (g1, g2) and the derived functions g, G.

Absorption g1 and boundary flux g2 enter the problem only through their values
and derivatives up to third order, the primitive G1 of g1 and the dominance
exponent d. Every callback must accept and return numpy arrays elementwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from rdhomotopy.errors import InverseError

Func = Callable[[np.ndarray], np.ndarray]

INVERSE_RTOL = 1e-14
INVERSE_MAXITER = 200
_BRACKET_LO = 1e-300
_BRACKET_CAP = 1e300


@dataclass(frozen=True)
class NonlinearitySpec:
    g1: Func
    g1_d1: Func
    g1_d2: Func
    g1_d3: Func
    g2: Func
    g2_d1: Func
    g2_d2: Func
    g2_d3: Func
    G1: Func
    d: float
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    @property
    def is_power_law(self):
        return self.kind == "power_law"

    def describe(self):
        if self.is_power_law:
            return {"kind": "power_law", "p": self.params["p"], "q": self.params["q"], "d": self.d}
        return {"kind": self.kind, "name": self.params.get("name", "custom"), "d": self.d}


def _power(c, e):
    # c * x**e, with x**0 == 1 and a zero coefficient giving exact zeros
    if c == 0.0:
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    if e == 0.0:
        return lambda x: np.full_like(np.asarray(x, dtype=float), c)
    return lambda x: c * np.power(np.asarray(x, dtype=float), e)


def make_power_law(p, q):
    """Build the spec for g1(x) = x**p, g2(x) = x**q.

    Requires ``p > 2q - 1`` and ``q >= 1``; the dominance exponent is then
    ``d = 2q / (p + 1) < 1``.
    """
    p = float(p)
    q = float(q)
    if not (math.isfinite(p) and math.isfinite(q)) or p <= 0 or q <= 0:
        raise ValueError(f"power-law exponents must be positive, got p={p}, q={q}")
    if q < 1:
        raise ValueError(f"q must be >= 1, got q={q}")
    if p <= 1:
        raise ValueError(f"p must be > 1, got p={p}")
    if not p > 2 * q - 1:
        raise ValueError(f"absorption too weak: need p > 2q - 1, got p={p}, q={q}")
    return NonlinearitySpec(
        g1=_power(1.0, p),
        g1_d1=_power(p, p - 1),
        g1_d2=_power(p * (p - 1), p - 2),
        g1_d3=_power(p * (p - 1) * (p - 2), p - 3),
        g2=_power(1.0, q),
        g2_d1=_power(q, q - 1),
        g2_d2=_power(q * (q - 1), q - 2),
        g2_d3=_power(q * (q - 1) * (q - 2), q - 3),
        G1=_power(1.0 / (p + 1), p + 1),
        d=2 * q / (p + 1),
        kind="power_law",
        params={"p": p, "q": q},
    )


def make_custom(g1, g1_d1, g1_d2, g1_d3, g2, g2_d1, g2_d2, g2_d3, G1, d, name="custom"):
    """Wrap user-supplied callbacks. Nothing is checked here; use `validate`."""
    return NonlinearitySpec(g1, g1_d1, g1_d2, g1_d3, g2, g2_d1, g2_d2, g2_d3, G1,
                            float(d), kind="custom", params={"name": name})


# --------------------------------------------------------------------------- #
# validation
# --------------------------------------------------------------------------- #

@dataclass
class HypothesisCheck:
    name: str
    passed: bool
    margin: float
    location: Optional[float] = None
    required: bool = True

    def as_row(self):
        return {"name": self.name, "location": self.location, "margin": self.margin,
                "pass": self.passed}


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks if c.required)

    def failures(self):
        return [c for c in self.checks if c.required and not c.passed]

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _worst(name, margins, grid, strict, required=True):
    # strict: every margin > 0; otherwise >= 0. NaN counts as a violation.
    m = np.asarray(margins, dtype=float)
    m = np.where(np.isnan(m), -np.inf, m)
    i = int(np.argmin(m))
    ok = bool(np.all(m > 0)) if strict else bool(np.all(m >= 0))
    return HypothesisCheck(name, ok, float(m[i]), float(grid[i]), required)


def _fd_check(name, parent, deriv, grid, rtol=1e-6, step=1e-7):
    s = step * grid
    fp = parent(grid + s)
    fm = parent(grid - s)
    fd = (fp - fm) / (2 * s)
    exact = deriv(grid)
    noise = 10 * np.finfo(float).eps * (np.abs(fp) + np.abs(fm)) / (2 * s)
    allowed = rtol * np.maximum(np.abs(exact), np.abs(fd)) + noise
    margin = allowed - np.abs(fd - exact)
    return _worst(name, margin, grid, strict=False)


def validate(spec, grid):
    """Check the admissibility hypotheses of `spec` on a positive sorted grid.

    Each entry of the report carries the worst-case margin (negative means
    violated) and where it occurred.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d array")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly positive and increasing")

    zero = np.zeros(1)
    checks = [
        HypothesisCheck("g1(0)=0", abs(float(spec.g1(zero)[0])) <= 1e-14,
                        1e-14 - abs(float(spec.g1(zero)[0])), 0.0),
        HypothesisCheck("g2(0)=0", abs(float(spec.g2(zero)[0])) <= 1e-14,
                        1e-14 - abs(float(spec.g2(zero)[0])), 0.0),
    ]
    for label, fn, strict in [
        ("g1>0", spec.g1, True), ("g2>0", spec.g2, True),
        ("g1'>0", spec.g1_d1, True), ("g2'>0", spec.g2_d1, True),
        ("g1''>0", spec.g1_d2, True), ("g2''>0", spec.g2_d2, True),
        ("g1'''>=0", spec.g1_d3, False), ("g2'''>=0", spec.g2_d3, False),
    ]:
        checks.append(_worst(label, fn(grid), grid, strict))
    if spec.is_power_law:
        # linear flux (q = 1) belongs to the monomial family; convexity of g2 is
        # only used in its non-strict form
        checks[-3].required = False
        checks.append(_worst("g2''>=0", spec.g2_d2(grid), grid, strict=False))

    d = spec.d
    checks.append(HypothesisCheck("0<=d<1", 0.0 <= d < 1.0, min(d, 1.0 - d)))
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = d * spec.g1(grid) / spec.G1(grid)
        t2 = 2 * spec.g2_d1(grid) / spec.g2(grid)
    # both terms grow like 1/x near 0 and cancel exactly for power laws,
    # so the 1e-12 slack is taken relative to their size
    slack = 1e-12 * np.maximum(1.0, np.abs(t2))
    checks.append(_worst("d-condition", t1 - t2 + slack, grid, strict=False))

    if spec.is_power_law:
        p, q = spec.params["p"], spec.params["q"]
        checks.append(HypothesisCheck("p>2q-1>0", p > 2 * q - 1 > 0, min(p - 2 * q + 1, 2 * q - 1)))
        checks.append(HypothesisCheck("d=2q/(p+1)", abs(d - 2 * q / (p + 1)) <= 1e-15,
                                      -abs(d - 2 * q / (p + 1))))

    checks.append(_fd_check("G1'=g1", spec.G1, spec.g1, grid))
    checks.append(_fd_check("g1_d1", spec.g1, spec.g1_d1, grid))
    checks.append(_fd_check("g1_d2", spec.g1_d1, spec.g1_d2, grid))
    checks.append(_fd_check("g1_d3", spec.g1_d2, spec.g1_d3, grid))
    checks.append(_fd_check("g2_d1", spec.g2, spec.g2_d1, grid))
    checks.append(_fd_check("g2_d2", spec.g2_d1, spec.g2_d2, grid))
    checks.append(_fd_check("g2_d3", spec.g2_d2, spec.g2_d3, grid))

    df = DerivedFunctions(spec)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.abs(df.G_d1(grid)) / grid
        checks.append(_worst("G''>=0", df.G_d2(grid) / np.maximum(scale, 1e-300) + 1e-10,
                             grid, strict=False))
        gscale = np.abs(df.g_d1(grid)) / grid
        # g'' >= 0 is only needed for the step-size constants, not for uniqueness
        checks.append(_worst("g''>=0", df.g_d2(grid) / np.maximum(gscale, 1e-300) + 1e-10,
                             grid, strict=False, required=False))
    return ValidationReport(checks)


# --------------------------------------------------------------------------- #
# derived functions
# --------------------------------------------------------------------------- #

def increasing_inverse(f, y, rtol=INVERSE_RTOL, maxiter=INVERSE_MAXITER, name="f"):
    """Solve f(x) = y for x > 0 with f increasing and f(0+) = 0.

    Bracket starts at [1e-300, 1] and the upper end doubles until it passes y.
    Bisection uses geometric midpoints while the bracket spans more than a
    factor 4, arithmetic ones afterwards.
    """
    y_arr = np.asarray(y, dtype=float)
    scalar = y_arr.ndim == 0
    y_arr = np.atleast_1d(y_arr)
    if np.any(~np.isfinite(y_arr)) or np.any(y_arr <= 0):
        raise InverseError(f"{name}^-1 needs finite positive targets, got {y!r}")

    lo = np.full_like(y_arr, _BRACKET_LO)
    hi = np.ones_like(y_arr)
    with np.errstate(over="ignore", invalid="ignore"):
        def _below(x):
            fx = f(x)
            if np.any(np.isnan(fx)):
                raise InverseError(f"{name}^-1: {name} is not finite during bracket expansion")
            return fx < y_arr

        below = _below(hi)
        while np.any(below):
            lo = np.where(below, hi, lo)
            hi = np.where(below, 2.0 * hi, hi)
            if np.any(hi > _BRACKET_CAP):
                raise InverseError(f"{name}^-1: bracket expansion passed 1e300 for target "
                                   f"{float(np.max(y_arr))!r}")
            below = _below(hi)
        if np.any(f(lo) > y_arr):
            raise InverseError(f"{name}^-1: target {float(np.min(y_arr))!r} below f(1e-300)")

        for _ in range(maxiter):
            if np.all(hi - lo <= rtol * hi):
                break
            geo = hi > 4.0 * lo
            mid = np.where(geo, np.sqrt(lo) * np.sqrt(hi), 0.5 * (lo + hi))
            fm = f(mid)
            if np.any(np.isnan(fm)):
                raise InverseError(f"{name}^-1: {name} is not finite inside the bracket")
            up = fm < y_arr
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
    x = 0.5 * (lo + hi)
    return float(x[0]) if scalar else x


class DerivedFunctions:
    """g = g1/g2 and G = G1/g2**2 with derivatives and numerical inverses."""

    def __init__(self, spec, rtol=INVERSE_RTOL):
        self.spec = spec
        self.rtol = rtol

    def g(self, x):
        s = self.spec
        if s.is_power_law:
            # closed form keeps g finite long after g1 and g2 overflow
            return np.power(np.asarray(x, dtype=float), s.params["p"] - s.params["q"])
        return s.g1(x) / s.g2(x)

    def g_d1(self, x):
        s = self.spec
        g2 = s.g2(x)
        return (s.g1_d1(x) * g2 - s.g1(x) * s.g2_d1(x)) / g2**2

    def g_d2(self, x):
        s = self.spec
        g1, a1, a2 = s.g1(x), s.g1_d1(x), s.g1_d2(x)
        g2, b1, b2 = s.g2(x), s.g2_d1(x), s.g2_d2(x)
        return a2 / g2 - 2 * a1 * b1 / g2**2 - g1 * b2 / g2**2 + 2 * g1 * b1**2 / g2**3

    def G(self, x):
        s = self.spec
        if s.is_power_law:
            p, q = s.params["p"], s.params["q"]
            return np.power(np.asarray(x, dtype=float), p + 1 - 2 * q) / (p + 1)
        return s.G1(x) / s.g2(x) ** 2

    def G_d1(self, x):
        s = self.spec
        if s.is_power_law:
            p, q = s.params["p"], s.params["q"]
            e = p + 1 - 2 * q
            return e / (p + 1) * np.power(np.asarray(x, dtype=float), e - 1)
        g2 = s.g2(x)
        return s.g1(x) / g2**2 - 2 * s.G1(x) * s.g2_d1(x) / g2**3

    def G_d2(self, x):
        s = self.spec
        G1, g1, a1 = s.G1(x), s.g1(x), s.g1_d1(x)
        g2, b1, b2 = s.g2(x), s.g2_d1(x), s.g2_d2(x)
        return (a1 / g2**2 - 4 * g1 * b1 / g2**3 - 2 * G1 * b2 / g2**3
                + 6 * G1 * b1**2 / g2**4)

    def g_inv(self, y):
        return increasing_inverse(self.g, y, self.rtol, name="g")

    def G_inv(self, y):
        return increasing_inverse(self.G, y, self.rtol, name="G")


def derive(spec):
    return DerivedFunctions(spec)
