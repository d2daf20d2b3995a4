from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class Solution:
    """A positive solution vector with convergence diagnostics.

    `kappa_estimate` is U_n'/A' from the shooting state at u_1, which equals
    the sup-norm of the path tangent d u / d alpha.
    """

    u: np.ndarray
    alpha: float
    residual_inf: float
    iterations_phase1: int
    iterations_phase2: int
    kappa_estimate: float
    plan: Optional[object] = None
    per_step_residuals: list = field(default_factory=list)
    method: str = "homotopy"
    u1: Optional[float] = None
    flux_defect: Optional[float] = None
    corrections: list = field(default_factory=list)
    converged: bool = True
    tracking_errors: list = field(default_factory=list)

    @property
    def n(self):
        return int(self.u.size)

    def to_dict(self, include_u=True):
        out = {
            "method": self.method,
            "converged": self.converged,
            "n": self.n,
            "alpha": self.alpha,
            "residual_inf": self.residual_inf,
            "iterations_phase1": self.iterations_phase1,
            "iterations_phase2": self.iterations_phase2,
            "kappa_estimate": self.kappa_estimate,
            "u1": float(self.u[0]),
            "un": float(self.u[-1]),
            "per_step_residuals": [float(r) for r in self.per_step_residuals],
        }
        if self.corrections:
            out["corrections"] = [float(c) for c in self.corrections]
        if self.tracking_errors:
            out["tracking_errors"] = [float(e) for e in self.tracking_errors]
        if self.flux_defect is not None:
            out["flux_defect"] = self.flux_defect
        if self.plan is not None:
            out["plan"] = self.plan.to_dict()
        if include_u:
            out["u"] = [float(v) for v in self.u]
        return out

    def to_csv(self):
        """Rows of (node index, x_k, u_k); index is 1-based."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["k", "x", "u"])
        h = 1.0 / (self.n - 1)
        for k, v in enumerate(self.u):
            w.writerow([k + 1, repr(k * h), repr(float(v))])
        return buf.getvalue()
