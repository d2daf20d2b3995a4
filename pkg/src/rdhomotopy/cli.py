"""Command-line front end.

    rdhomotopy --mode solve --p 3 --q 1 --n 100 --alpha 1 --eps 1e-10 --out sol.json

Exit status: 0 success, 1 solver error, 2 config error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from rdhomotopy.bounds import bounds_at, containment_rows, make_plan
from rdhomotopy.errors import MeshGateError, RdhError
from rdhomotopy.homotopy import solve
from rdhomotopy.nonlinearity import derive, make_power_law, validate
from rdhomotopy.shooting import Mesh, energy_report, monotonicity_probe, oracle_solve, shoot
from rdhomotopy.system import (inverse_factorization_check, jacobian, minor_identity_check,
                               positive_definite_check)

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2, 3
MODES = ("solve", "oracle", "verify", "sweep", "plan")
FORMATS = ("json", "csv")
SWEEP_HEADER = ["n", "alpha", "eps", "phase1_steps", "phase2_steps", "residual_inf", "kappa",
                "oracle_gap", "wall_ms"]
ORACLE_TOL = 1e-15


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    p: float = 3.0
    q: float = 1.0
    n: int = 100
    alpha: float = 1.0
    eps: float = 1e-10
    mode: str = "solve"
    out: str = "-"
    format: str = "json"
    jobs: int = 0
    csv_solution: str = ""
    solve_result: str = ""
    n_list: list = field(default_factory=list)
    alpha_list: list = field(default_factory=list)
    eps_list: list = field(default_factory=list)

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode: expected one of {', '.join(MODES)}, got {self.mode!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format: expected json or csv, got {self.format!r}")
        for n in [self.n] + self.n_list:
            if n < 2:
                raise ConfigError(f"n: need n >= 2, got {n}")
        for a in [self.alpha] + self.alpha_list:
            if not (a > 0 and math.isfinite(a)):
                raise ConfigError(f"alpha: need a positive finite value, got {a!r}")
        for e in [self.eps] + self.eps_list:
            if not 0 < e < 1:
                raise ConfigError(f"eps: need 0 < eps < 1, got {e!r}")
        if self.jobs < 0:
            raise ConfigError(f"jobs: need jobs >= 0, got {self.jobs}")
        try:
            make_power_law(self.p, self.q)
        except ValueError as exc:
            raise ConfigError(f"p, q: {exc}") from exc
        return self

    def spec(self):
        return make_power_law(self.p, self.q)

    def sweep_points(self):
        ns = self.n_list or [self.n]
        alphas = self.alpha_list or [self.alpha]
        epss = self.eps_list or [self.eps]
        return list(itertools.product(ns, alphas, epss))


def _to_int(text):
    v = float(text)
    if not v.is_integer():
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _list_of(conv):
    return lambda text: [conv(t) for t in text.replace(",", " ").split()]


_FIELDS = {
    "p": float, "q": float, "n": _to_int, "alpha": float, "eps": float, "mode": str,
    "out": str, "format": str, "jobs": _to_int, "csv_solution": str, "solve_result": str,
    "n_list": _list_of(_to_int), "alpha_list": _list_of(float), "eps_list": _list_of(float),
}


def parse_config_text(text, source="<config>"):
    """Flat `key = value` lines; `#` starts a comment. Keys may use '-' or '_'."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _FIELDS[key](val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def build_parser():
    ap = argparse.ArgumentParser(
        prog="rdhomotopy",
        description="Positive stationary solutions of x^p absorption with x^q boundary flux.")
    ap.add_argument("--config", help="flat key=value file; flags override it")
    ap.add_argument("--mode", choices=MODES)
    ap.add_argument("--p", type=str)
    ap.add_argument("--q", type=str)
    ap.add_argument("--n", type=str)
    ap.add_argument("--alpha", type=str)
    ap.add_argument("--eps", type=str)
    ap.add_argument("--out", help="output path, '-' for stdout")
    ap.add_argument("--format", choices=FORMATS)
    ap.add_argument("--jobs", type=str, help="sweep worker count (0: all cores)")
    ap.add_argument("--csv-solution", dest="csv_solution", help="also write u as CSV here")
    ap.add_argument("--solve-result", dest="solve_result",
                    help="oracle mode: solve JSON to compare against")
    ap.add_argument("--n-list", dest="n_list")
    ap.add_argument("--alpha-list", dest="alpha_list")
    ap.add_argument("--eps-list", dest="eps_list")
    return ap


def load_config(argv):
    args = build_parser().parse_args(argv)
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values.update(parse_config_text(fh.read(), args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from exc
    for key, conv in _FIELDS.items():
        raw = getattr(args, key, None)
        if raw is None:
            continue
        try:
            values[key] = conv(raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"--{key.replace('_', '-')}: {exc}") from exc
    return RunConfig(**values).validate()


# --------------------------------------------------------------------------- #
# output helpers
# --------------------------------------------------------------------------- #

def _clean(obj):
    # JSON has no inf/nan; spell them as strings
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj):
    """Deterministic JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(_clean(obj), sort_keys=True, indent=1) + "\n"


def strip_timing(obj):
    """Copy of a JSON document without wall_ms fields, for determinism checks."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k != "wall_ms"}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get(h, "")) for h in header])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _write(path, text):
    if path in ("", "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _problem(cfg):
    return {"p": cfg.p, "q": cfg.q}


# --------------------------------------------------------------------------- #
# modes
# --------------------------------------------------------------------------- #

def run_solve(cfg):
    spec = cfg.spec()
    t = time.monotonic()
    sol = solve(spec, Mesh(cfg.n), cfg.alpha, cfg.eps)
    wall = (time.monotonic() - t) * 1e3
    if cfg.csv_solution:
        _write(cfg.csv_solution, sol.to_csv())
    if cfg.format == "csv":
        _write(cfg.out, sol.to_csv())
    else:
        doc = {"problem": _problem(cfg), "eps": cfg.eps, "solution": sol.to_dict(),
               "wall_ms": wall}
        _write(cfg.out, dumps(doc))
    return EXIT_OK if sol.converged else EXIT_SOLVER


def run_oracle(cfg):
    spec = cfg.spec()
    mesh = Mesh(cfg.n)
    t = time.monotonic()
    sol = oracle_solve(spec, mesh, cfg.alpha, tol=ORACLE_TOL)
    wall = (time.monotonic() - t) * 1e3
    doc = {"problem": _problem(cfg), "solution": sol.to_dict(), "wall_ms": wall}
    if cfg.solve_result:
        try:
            with open(cfg.solve_result, encoding="utf-8") as fh:
                other = json.load(fh)
            u = np.asarray(other["solution"]["u"], dtype=float)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"solve-result {cfg.solve_result!r}: {exc}") from exc
        if u.shape != sol.u.shape:
            raise ConfigError(f"solve-result has {u.size} nodes, oracle has {sol.n}")
        doc["oracle_gap"] = float(np.max(np.abs(u - sol.u)))
    if cfg.csv_solution:
        _write(cfg.csv_solution, sol.to_csv())
    if cfg.format == "csv":
        _write(cfg.out, sol.to_csv())
    else:
        _write(cfg.out, dumps(doc))
    return EXIT_OK


def verify_rows(spec, n, alpha, eps):
    """The invariant suite at one (spec, n, alpha) as name/location/margin/pass rows."""
    derived = derive(spec)
    mesh = Mesh(n)
    rows = []
    b = bounds_at(spec, derived, alpha, strict=False)
    grid = np.geomspace(b.u1_lower if b.u1_lower > 0 else 1e-3 * b.g_inv_alpha, b.u_upper, 512)
    rows += [c.as_row() for c in validate(spec, grid).checks if c.required]

    orc = oracle_solve(spec, mesh, alpha, tol=ORACLE_TOL, check_gate=False)
    u1 = orc.u1
    for x in np.geomspace(1e-3 * u1, u1, 32):
        x = float(x)
        for r in energy_report(spec, mesh, shoot(spec, mesh, x)).rows():
            r["location"] = f"u1={x!r};{r['location']}".rstrip(";")
            rows.append(r)

    mono = monotonicity_probe(spec, mesh, np.geomspace(0.01 * u1, u1, 64))
    rows.append({"name": "monotonicity probe", "location": f"unresolved={mono.unresolved}",
                 "margin": -float(len(mono.violations)), "pass": mono.passed})
    rows += mono.rows()

    rows += [c.as_row() for c in minor_identity_check(spec, mesh, alpha, u1).checks]
    rows += [c.as_row() for c in inverse_factorization_check(spec, mesh, alpha, u1).checks]
    J = jacobian(spec, mesh, alpha, orc.u)
    rows.append({"name": "Jacobian positive definite", "location": "", "margin": "",
                 "pass": positive_definite_check(J)})
    rows += containment_rows(spec, derived, alpha, orc.u, b)

    gate_ok = n >= b.n_min
    rows.append({"name": "mesh gate", "location": f"n_min={b.n_min}", "margin": n - b.n_min,
                 "pass": gate_ok})
    if gate_ok:
        sol = solve(spec, mesh, alpha, eps)
        gap = float(np.max(np.abs(sol.u - orc.u)))
        rows.append({"name": "homotopy vs oracle", "location": f"eps={eps!r}",
                     "margin": 10 * eps - gap, "pass": bool(sol.converged and gap <= 10 * eps)})
    return rows


def run_verify(cfg):
    rows = verify_rows(cfg.spec(), cfg.n, cfg.alpha, cfg.eps)
    ok = all(r["pass"] for r in rows)
    if cfg.format == "csv":
        _write(cfg.out, _csv_text(["name", "location", "margin", "pass"], rows))
    else:
        _write(cfg.out, dumps({"problem": _problem(cfg), "n": cfg.n, "alpha": cfg.alpha,
                               "passed": ok, "checks": rows}))
    return EXIT_OK if ok else EXIT_VERIFY


def sweep_point(args):
    """One sweep row; module-level so worker processes can import it."""
    p, q, n, alpha, eps = args
    spec = make_power_law(p, q)
    mesh = Mesh(n)
    row = {"n": n, "alpha": alpha, "eps": eps}
    t = time.monotonic()
    try:
        sol = solve(spec, mesh, alpha, eps)
    except (RdhError, ValueError) as exc:
        row.update({"phase1_steps": "", "phase2_steps": "", "residual_inf": "", "kappa": "",
                    "oracle_gap": "", "wall_ms": (time.monotonic() - t) * 1e3,
                    "error": f"{type(exc).__name__}: {exc}"})
        return row
    row["wall_ms"] = (time.monotonic() - t) * 1e3
    try:
        gap = float(np.max(np.abs(sol.u - oracle_solve(spec, mesh, alpha, tol=ORACLE_TOL).u)))
    except RdhError:
        gap = math.nan
    row.update({"phase1_steps": sol.iterations_phase1, "phase2_steps": sol.iterations_phase2,
                "residual_inf": sol.residual_inf, "kappa": sol.kappa_estimate,
                "oracle_gap": gap})
    if not sol.converged:
        row["error"] = "not converged"
    return row


def run_sweep(cfg):
    points = [(cfg.p, cfg.q, n, a, e) for n, a, e in cfg.sweep_points()]
    jobs = cfg.jobs or os.cpu_count() or 1
    if jobs == 1 or len(points) == 1:
        rows = [sweep_point(pt) for pt in points]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(points))) as pool:
            rows = list(pool.map(sweep_point, points))  # map keeps sweep order
    if cfg.format == "csv":
        _write(cfg.out, _csv_text(SWEEP_HEADER, rows))
    else:
        _write(cfg.out, dumps({"problem": _problem(cfg), "rows": rows}))
    return EXIT_SOLVER if any("error" in r for r in rows) else EXIT_OK


def run_plan(cfg):
    spec = cfg.spec()
    derived = derive(spec)
    b = bounds_at(spec, derived, cfg.alpha, strict=False)
    plan = make_plan(spec, derived, cfg.alpha, cfg.eps)
    doc = {"problem": _problem(cfg), "n": cfg.n, "bounds": b.to_dict(), "plan": plan.to_dict(),
           "mesh_ok": cfg.n >= b.n_min}
    if cfg.format == "csv":
        rows = [{"name": k, "value": v} for k, v in
                list(_clean(b.to_dict()).items()) + list(_clean(plan.to_dict()).items())]
        _write(cfg.out, _csv_text(["name", "value"], rows))
    else:
        _write(cfg.out, dumps(doc))
    return EXIT_OK


_RUNNERS = {"solve": run_solve, "oracle": run_oracle, "verify": run_verify,
            "sweep": run_sweep, "plan": run_plan}


def run(cfg):
    return _RUNNERS[cfg.mode](cfg)


def main(argv=None):
    try:
        cfg = load_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MeshGateError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (RdhError, ArithmeticError) as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
