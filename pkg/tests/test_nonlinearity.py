import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdhomotopy import derive, make_custom, make_power_law, validate
from rdhomotopy.errors import InverseError
from rdhomotopy.nonlinearity import increasing_inverse

GRID = np.geomspace(0.01, 10, 200)


def test_power_law_d():
    assert make_power_law(3, 1).d == 0.5
    s = make_power_law(5, 2)
    assert s.d == pytest.approx(2 / 3, rel=1e-15)
    assert s.G1(np.array([2.0]))[0] == pytest.approx(64 / 6, rel=1e-15)


@pytest.mark.parametrize("p,q", [(3, 2), (5, 3), (1, 1), (-1, 1), (3, 0), (3, 0.5)])
def test_power_law_rejects(p, q):
    with pytest.raises(ValueError):
        make_power_law(p, q)


def test_power_law_q1_boundary_is_p1():
    # with q = 1 the admissibility boundary p = 2q - 1 sits at p = 1, so p = 2 is allowed
    assert make_power_law(2, 1).d == pytest.approx(2 / 3)


@pytest.mark.parametrize("p,q", [(3, 1), (4, 1), (5, 2), (3.5, 1), (2, 1)])
def test_power_law_validates(p, q):
    rep = validate(make_power_law(p, q), GRID)
    assert rep.passed, rep.failures()


def test_fractional_q_fails_third_derivative():
    # x^1.5 has a negative third derivative
    rep = validate(make_power_law(3.5, 1.5), GRID)
    assert [c.name for c in rep.failures()] == ["g2'''>=0"]


def _linear_flux_spec(corrupt=False):
    # g1 = x^3, g2 = x: g2'' = 0 violates the strict convexity hypothesis
    d1 = (lambda x: 3 * x**2 * (1.001 if corrupt else 1.0))
    return make_custom(
        lambda x: x**3, d1, lambda x: 6 * x, lambda x: 6 + 0 * x,
        lambda x: x, lambda x: 1 + 0 * x, lambda x: 0 * x, lambda x: 0 * x,
        lambda x: x**4 / 4, 0.5)


def test_custom_linear_flux_fails_g2_convexity():
    rep = validate(_linear_flux_spec(), GRID)
    assert not rep.passed
    assert not rep["g2''>0"].passed
    assert rep["g2''>0"].required


def test_custom_corrupted_derivative_located():
    rep = validate(_linear_flux_spec(corrupt=True), GRID)
    chk = rep["g1_d1"]
    assert not chk.passed
    assert chk.location in GRID


def test_g_and_G_closed_forms():
    D = derive(make_power_law(3, 1))
    assert D.g_inv(4.0) == pytest.approx(2.0, rel=1e-13)
    assert D.G_inv(1.0) == pytest.approx(2.0, rel=1e-13)
    x = np.array([0.5, 2.0])
    np.testing.assert_allclose(D.g(x), x**2, rtol=1e-15)
    np.testing.assert_allclose(D.G(x), x**2 / 4, rtol=1e-15)


def test_inverse_rejects_nonpositive():
    D = derive(make_power_law(3, 1))
    with pytest.raises(InverseError):
        D.g_inv(-1.0)
    with pytest.raises(InverseError):
        D.g_inv(0.0)


def test_inverse_bracket_overflow():
    # f saturates at 1, so a target of 2 is never reached
    with pytest.raises(InverseError):
        increasing_inverse(lambda x: x / (1 + x), 2.0)


def test_inverse_vectorised():
    D = derive(make_power_law(4, 1))
    y = np.geomspace(1e-6, 1e6, 13)
    np.testing.assert_allclose(D.g_inv(y), y ** (1 / 3), rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(p=st.floats(1.2, 8), qfrac=st.floats(0.05, 0.95), logy=st.floats(-8, 8))
def test_inverse_roundtrip(p, qfrac, logy):
    q = max(1.0, qfrac * (p + 1) / 2)
    if not p > 2 * q - 1:
        return
    D = derive(make_power_law(p, q))
    y = 10.0**logy
    x = D.g_inv(y)
    assert abs(D.g(x) - y) <= 1e-12 * y
    assert abs(x - y ** (1 / (p - q))) <= 1e-12 * y ** (1 / (p - q))
    X = D.G_inv(y)
    assert abs(D.G(X) - y) <= 1e-12 * y


@pytest.mark.parametrize("p,q", [(3, 1), (5, 2)])
def test_growth_properties(p, q):
    s = make_power_law(p, q)
    D = derive(s)
    x = np.geomspace(0.01, 10, 400)
    assert np.all(np.diff(s.g1(x) ** 2 / s.G1(x)) > 0)
    assert np.all(np.diff(D.G(x)) > 0)
    assert np.all(np.diff(D.g(x)) > 0)
    assert np.all(D.G_d1(x) > 0)


def test_describe():
    assert make_power_law(3, 1).describe() == {"kind": "power_law", "p": 3.0, "q": 1.0, "d": 0.5}
    assert math.isclose(make_power_law(5, 2).describe()["d"], 2 / 3)
