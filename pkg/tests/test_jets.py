import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from unimodal.jets import Jet3, jet_compose, jet_inverse, schwarzian_of_jet

X = sp.symbols("x")


def sym_jet(expr, x0):
    return tuple(float(sp.diff(expr, X, k).subs(X, x0)) for k in range(4))


def jet_of(expr, x0):
    return Jet3(*sym_jet(expr, x0))


def test_compose_square_of_cube_matches_sixth_power():
    inner = jet_of(X ** 3, 2.0)
    outer = jet_of(X ** 2, inner.v)
    assert jet_compose(outer, inner).as_tuple() == pytest.approx((64, 192, 480, 960))


def test_identity_is_neutral_for_composition():
    j = Jet3(0.3, 1.7, -2.0, 5.0)
    assert jet_compose(Jet3.variable(j.v), j).as_tuple() == j.as_tuple()
    assert jet_compose(j, Jet3.variable(0.9)).as_tuple() == j.as_tuple()


POLYS = [X ** 3 - 2 * X, 1 + X + X ** 4, sp.Rational(1, 2) * X ** 5 - X ** 2]


@pytest.mark.parametrize("f", POLYS)
@pytest.mark.parametrize("g", POLYS)
def test_arithmetic_matches_symbolic(f, g):
    x0 = 0.7
    jf, jg = jet_of(f, x0), jet_of(g, x0)
    assert (jf * jg).as_tuple() == pytest.approx(sym_jet(f * g, x0), rel=1e-12)
    assert (jf + jg).as_tuple() == pytest.approx(sym_jet(f + g, x0), rel=1e-12)
    assert (jf - 3 * jg).as_tuple() == pytest.approx(sym_jet(f - 3 * g, x0), rel=1e-12)
    inner = jet_of(g, x0)
    outer = jet_of(f, inner.v)
    assert jet_compose(outer, inner).as_tuple() == pytest.approx(
        sym_jet(f.subs(X, g), x0), rel=1e-10)


def test_inverse_jet_of_exp_is_log():
    x0 = 0.4
    j = jet_of(sp.exp(X), x0)
    inv = jet_inverse(j, x0)
    assert inv.as_tuple() == pytest.approx(sym_jet(sp.log(X), math.exp(x0)), rel=1e-12)


def test_schwarzian_undefined_below_threshold():
    assert math.isnan(schwarzian_of_jet(Jet3(0.0, 0.0, 1.0, 0.0)))
    assert math.isnan(schwarzian_of_jet(Jet3(0.0, 1e-14, 1.0, 0.0), threshold=1e-12))
    assert schwarzian_of_jet(Jet3(0.0, 2.0, 0.0, 0.0)) == 0.0


@given(st.floats(-3, 3), st.floats(0.1, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_composition_is_associative(x, a, b, c):
    j1 = Jet3(x, a, b, c)
    j2 = Jet3(a, b + 2.0, c, x)
    j3 = Jet3(b, 1.0 + a, x, c)
    left = jet_compose(j3, jet_compose(j2, j1))
    right = jet_compose(jet_compose(j3, j2), j1)
    assert left.as_tuple() == pytest.approx(right.as_tuple(), rel=1e-12, abs=1e-12)


def test_vectorized_jets_broadcast():
    xs = np.linspace(0, 1, 5)
    j = Jet3.variable(xs) * Jet3.variable(xs)
    np.testing.assert_allclose(j.d1, 2 * xs)
    assert j.take(2).as_tuple() == pytest.approx((0.25, 1.0, 2.0, 0.0))
