import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from unimodal.conjugation import PhiSMap
from unimodal.distortion import (
    GaugeEstimate,
    Quadruple,
    cross_ratio,
    gauge_estimate,
    kappa,
    kernel_K,
    koebe_check,
    log_kappa,
    rho,
    sample_quadruples,
)
from unimodal.map_model import (
    AffineMap,
    CallableMap,
    ComposedMap,
    ExpMap,
    Interval,
    LogisticMap,
    MobiusMap,
    PowerMap,
    PrecomposedMap,
    iterate_jet,
    monotone_interval,
)

ordered = st.lists(st.floats(-5, 5), min_size=4, max_size=4, unique=True).map(sorted).filter(
    lambda p: min(np.diff(p)) > 1e-3)


def test_cross_ratio_formula():
    assert cross_ratio(Quadruple(0, 1, 2, 3)) == 0.75
    with pytest.raises(ValueError):
        Quadruple(0, 1, 1, 2)


@given(ordered, st.floats(0.1, 10), st.floats(-10, 10))
def test_affine_preserves_cross_ratio(pts, s, t):
    q = Quadruple(*pts)
    assert cross_ratio(q.mapped(AffineMap(s, t))) == pytest.approx(cross_ratio(q), rel=1e-12)
    assert kappa(AffineMap(s, t), q) == 1.0


def test_mobius_image_of_standard_quadruple():
    h = MobiusMap(2.0, 1.0, 1.0, 5.0)
    assert cross_ratio(Quadruple(0, 1, 2, 3).mapped(h)) == pytest.approx(0.75, rel=1e-14)


def test_kappa_of_square():
    h = PowerMap(2.0)
    q = Quadruple(1, 2, 3, 4)
    assert cross_ratio(q.mapped(h)) == pytest.approx(0.78125)
    assert kappa(h, q) == pytest.approx(25 / 24, rel=1e-14)


def test_composition_rule_example():
    h = PowerMap(2.0)
    g = CallableMap(lambda x: x + 1 / x, jet=lambda x: _jet_x_plus_inv(x))
    q = Quadruple(1, 2, 3, 4)
    lhs = log_kappa(ComposedMap(g, h), q)
    rhs = log_kappa(g, q.mapped(h)) + log_kappa(h, q)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def _jet_x_plus_inv(x):
    from unimodal.jets import Jet3
    return Jet3(x + 1 / x, 1 - x ** -2, 2 * x ** -3, -6 * x ** -4)


def test_non_injective_rejected():
    with pytest.raises(ValueError):
        kappa(LogisticMap(4.0), Quadruple(0.1, 0.4, 0.6, 0.9))


def test_kernel_examples():
    assert kernel_K(AffineMap(3.0, 1.0), 0.2, 0.7) == pytest.approx(0.0, abs=1e-15)
    sq = PowerMap(2.0)
    assert kernel_K(sq, 1.0, 1.0) == 0.5
    for y in (1 - 1e-6, 1 + 1e-6, 1 + 1e-9):
        assert abs(kernel_K(sq, 1.0, y) - 0.5) < 1e-5


@given(st.floats(-2.0, 2.0), st.floats(1.01e-6, 1e-2), st.sampled_from([-1, 1]))
def test_kernel_of_exp_matches_closed_form(x, u, sign):
    # K(x, x+u) = 1/u - 1/expm1(u) for h = exp
    u *= sign
    closed = 1 / u - 1 / math.expm1(u)
    assert kernel_K(ExpMap(), x, x + u) == pytest.approx(closed, abs=1e-9)


@given(st.floats(-2.0, 2.0), st.floats(1e-9, 1e-6))
def test_kernel_series_branch_near_diagonal(x, u):
    y = x + u
    with mpmath.workdps(50):
        d = mpmath.mpf(y) - mpmath.mpf(x)
        closed = float(1 / d - 1 / mpmath.expm1(d))
    assert kernel_K(ExpMap(), x, y) == pytest.approx(closed, abs=1e-10)
    assert kernel_K(ExpMap(), x, x) == 0.5


def test_symmetry_of_rho():
    h = ExpMap()
    q = Quadruple(0.0, 0.1, 0.2, 0.3)
    swapped = Quadruple(0.2, 0.3, 0.0, 0.1)
    assert rho(h, q) == rho(h, swapped)
    assert rho(h, q) >= 0


def test_mobius_rho_is_zero():
    h = MobiusMap(1.0, 2.0, 3.0, 10.0)
    assert abs(rho(h, Quadruple(0.1, 0.2, 0.5, 0.9))) < 1e-10


@given(ordered)
def test_kernel_integral_identity(pts):
    a, b, c, d = (0.2 * p for p in pts)
    h = PhiSMap(1.5)
    q = Quadruple(a, b, c, d)
    integral, _ = quad(lambda x: kernel_K(h, x, c) - kernel_K(h, x, d), a, b, epsabs=1e-13,
                       epsrel=1e-12, limit=200)
    assert integral == pytest.approx(log_kappa(h, q), abs=1e-8)


@given(st.floats(0.1, 10), ordered)
def test_negative_schwarzian_gives_nonnegative_rho(s, pts):
    q = Quadruple(*(0.19 * p for p in pts))
    assert rho(PhiSMap(s), q) >= -1e-10


class TestGauge:
    def test_affine_and_logistic_have_zero_sigma(self):
        g = gauge_estimate(LogisticMap(3.8), trials=100)
        assert max(g.sigma_values) <= 1e-10
        assert g(0.01) == g.sigma_values[int(np.searchsorted(g.sample_scales, 0.01))]

    def test_distorted_logistic_sigma_monotone_and_vanishing(self):
        f = wiggly_logistic()
        g = gauge_estimate(f, trials=200, scales=10)
        s = np.array(g.sigma_values)
        assert np.all(np.diff(s) >= 0)
        assert s[-1] > 0 and s[0] < 0.05 * s[-1]

    def test_empty_estimate(self):
        assert GaugeEstimate((), ())(0.1) == 0.0
        with pytest.raises(ValueError):
            gauge_estimate(LogisticMap(3.0), trials=0)


def wiggly_logistic():
    """Logistic map precomposed with psi(x) = x + sin(6 pi x)/(12 pi).

    psi fixes 0, 1/2 and 1, and its large third derivative creates regions
    of positive Schwarzian derivative, so sigma > 0 at coarse scales.
    """
    from scipy.optimize import brentq

    from unimodal.jets import Jet3

    w = 6 * np.pi

    def jet(x):
        x = np.asarray(x, dtype=float)
        return Jet3(x + 0.5 * np.sin(w * x) / w, 1 + 0.5 * np.cos(w * x),
                    -0.5 * w * np.sin(w * x), -0.5 * w * w * np.cos(w * x))

    psi = CallableMap(lambda x: jet(x).v, jet=jet)

    def inv(y):
        return brentq(lambda t: float(psi(t)) - y, 0.0, 1.0, xtol=1e-15)

    return PrecomposedMap(LogisticMap(3.9), psi, np.vectorize(inv, otypes=[float]))


def test_sample_quadruples_respect_gap():
    qs = sample_quadruples(np.random.default_rng(0), Interval(0.0, 0.5), 0.01, 50)
    for q in qs:
        assert q.ordered and q.d - q.c == pytest.approx(0.01)
        assert 0.0 <= q.a and q.d <= 0.5


class TestKoebe:
    def test_identity(self):
        r = koebe_check(LogisticMap(4.0), Interval(0.1, 0.4), Interval(0.2, 0.3), 0)
        assert r.observed == 1.0 and r.holds

    @pytest.mark.parametrize("x0", [0.05, 0.3, 0.62, 0.9])
    def test_middle_third_of_monotone_branch(self, x0):
        f = LogisticMap(4.0)
        T = monotone_interval(f, x0, 3)
        third = T.length / 3
        J = Interval(T.lo + third, T.hi - third)
        r = koebe_check(f, T, J, 3, samples=100)
        assert r.holds and r.observed >= 1 / (1 + r.nu) ** 2 - 1e-9
        assert r.sigma == 0.0

    def test_affine_ratio_is_one(self):
        from unimodal.map_model import CallableUnimodalMap
        tent_like = CallableUnimodalMap(lambda x: 1 - np.abs(2 * x - 1), Interval(0, 1), 0.5)
        r = koebe_check(tent_like, Interval(0.1, 0.4), Interval(0.2, 0.3), 1)
        assert r.observed == pytest.approx(1.0)
        assert r.bound <= 1.0

    def test_rejects_fold(self):
        with pytest.raises(ValueError, match="f\\^0\\(T\\)"):
            koebe_check(LogisticMap(4.0), Interval(0.2, 0.6), Interval(0.3, 0.4), 3)
        with pytest.raises(ValueError):
            koebe_check(LogisticMap(4.0), Interval(0.2, 0.3), Interval(0.1, 0.4), 1)

    def test_positive_sigma_uses_gauge(self):
        f = wiggly_logistic()
        T = monotone_interval(f, 0.2, 2)
        J = Interval(T.lo + T.length / 3, T.hi - T.length / 3)
        r = koebe_check(f, T, J, 2)
        assert r.holds and r.bound <= 1 / (1 + r.nu) ** 2
        assert r.sigma > 0 and r.P > 0
        d = np.abs(iterate_jet(f, np.linspace(J.lo, J.hi, 400), 2).d1)
        assert r.bound <= d.min() / d.max()
