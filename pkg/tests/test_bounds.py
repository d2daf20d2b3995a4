import math
import warnings

import numpy as np
import pytest

from rdhomotopy import bounds_at, derive, make_plan, make_power_law, mesh_gate
from rdhomotopy.bounds import containment_rows
from rdhomotopy.errors import BoundsError
from rdhomotopy.shooting import Mesh, oracle_solve

P31 = make_power_law(3, 1)
D31 = derive(P31)


def test_C1_closed_form():
    b = bounds_at(P31, D31, 1.0)
    assert b.C1 == pytest.approx(math.sqrt(math.sqrt(2) + 2), rel=1e-13)
    assert b.g_inv_alpha == pytest.approx(1.0, rel=1e-14)
    assert b.M == pytest.approx(3 * b.C1**2, rel=1e-14)


def test_chain_by_hand_composition():
    # recompute every link for x^3 / x: g(x) = x^2, G(x) = x^2 / 4
    a, d = 1.0, 0.5
    C1 = math.sqrt(4 * (math.sqrt(a / math.sqrt(1 - d)) ** 2 / 4 + a * a / 2))
    M = 3 * C1**2
    x0 = math.sqrt(a) / math.exp(M)
    C_hat = 1 + 1 * a * a / (2 * x0 * (x0 / 2))
    u1_up = math.sqrt(a * C_hat)
    C2 = math.sqrt(4 * (u1_up**2 / 4 + a * a / 2))
    b = bounds_at(P31, D31, a)
    assert b.C1 == pytest.approx(C1, rel=1e-13)
    assert b.u1_lower == pytest.approx(x0, rel=1e-12)
    assert b.C_hat == pytest.approx(C_hat, rel=1e-12)
    assert b.u1_upper == pytest.approx(u1_up, rel=1e-12)
    assert b.C2 == pytest.approx(C2, rel=1e-12)
    assert b.u_upper == min(b.C1, b.C2)


@pytest.mark.parametrize("alpha", [1e-3, 0.1, 1.0, 5.0])
def test_orderings(alpha):
    b = bounds_at(P31, D31, alpha)
    assert b.u1_lower < b.g_inv_alpha < b.C2
    assert b.u1_lower < b.u1_upper
    assert 0 < b.delta_alpha <= b.C2


def test_limit_ratio_near_zero():
    r4 = bounds_at(P31, D31, 1e-4).C2 / D31.g_inv(1e-4)
    r6 = bounds_at(P31, D31, 1e-6).C2 / D31.g_inv(1e-6)
    assert 1 < r6 < r4


def test_mesh_gate_values():
    b = bounds_at(P31, D31, 1.0)
    assert mesh_gate(P31, D31, 1.0) == math.ceil(1 + 3 * b.u_upper**2 / 1.0) + 1 == 13
    assert mesh_gate(P31, D31, 0.01) <= 3


def test_degenerate_fields_reported():
    s = make_power_law(5, 2)
    b = bounds_at(s, derive(s), 5.0, strict=False)
    assert set(b.nonfinite) == {"u1_lower", "C_hat", "C2", "u1_upper"}
    assert math.isfinite(b.u_upper) and b.n_min == 47068
    with pytest.raises(BoundsError):
        bounds_at(s, derive(s), 5.0)


def test_plan_example():
    p = make_plan(P31, D31, 1.0, 1e-12)
    assert 0 < p.alpha_star_lo < p.alpha_star_hi == 1.0
    assert p.N >= 1 and p.k0 <= 6 and p.delta > 0
    assert p.c_hat == pytest.approx(3 / (4 * p.c))
    assert p.k0 == math.ceil(math.log2(math.log(3 / (4 * p.c * 1e-12), 3)))
    assert p.start_hi - p.start_lo < p.delta / 2
    assert p.capped and p.N_theory > p.N and p.partition == "geometric"
    nodes = p.nodes()
    assert nodes[-1] == 1.0 and np.all(np.diff(nodes) > 0)


def test_plan_deterministic():
    assert make_plan(P31, D31, 1.0, 1e-10) == make_plan(P31, D31, 1.0, 1e-10)


def test_plan_k0_clamp():
    with pytest.warns(RuntimeWarning):
        p = make_plan(P31, D31, 1.0, 0.5)
    assert p.k0 == 1 and p.k0_clamped


def test_plan_uncapped_is_uniform():
    p = make_plan(P31, D31, 1e-3, 1e-8, alpha_star=1e-3)
    assert not p.capped and p.N == p.N_theory == 1
    np.testing.assert_array_equal(p.nodes(), [1e-3])


def test_plan_rejects_bad_eps():
    with pytest.raises(ValueError):
        make_plan(P31, D31, 1.0, 1.5)


@pytest.mark.parametrize("pq", [(3, 1), (4, 1), (5, 2)])
@pytest.mark.parametrize("alpha", [0.01, 0.1, 1.0, 10.0])
def test_containment_over_alpha_grid(pq, alpha):
    s = make_power_law(*pq)
    d = derive(s)
    for n in sorted({max(mesh_gate(s, d, alpha), 2), 64, 512}):
        u = oracle_solve(s, Mesh(n), alpha, tol=1e-15, check_gate=False).u
        rows = containment_rows(s, d, alpha, u)
        assert all(r["pass"] for r in rows), [r for r in rows if not r["pass"]]
