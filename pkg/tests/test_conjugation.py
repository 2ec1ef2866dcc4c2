import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from unimodal.conjugation import (
    ConjugacyMap,
    ConjugationParams,
    PhiSMap,
    build_conjugacy,
    conjugation_residual,
    estimate_profile,
    phi_s,
    search_conjugacy,
)
from unimodal.jets import schwarzian_of_jet
from unimodal.map_model import AffineConjugate, Interval, LogisticMap


@pytest.mark.parametrize("s", [0.1, 1.0, 10.0])
def test_phi_fixes_minus_one_zero_one(s):
    f = PhiSMap(s)
    np.testing.assert_allclose(f(np.array([-1.0, 0.0, 1.0])), [-1.0, 0.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("s", [0.1, 1.0, 10.0])
def test_phi_has_constant_schwarzian(s):
    xs = np.linspace(-1, 1, 101)
    S = schwarzian_of_jet(phi_s(s, xs), 0.0)
    np.testing.assert_allclose(S, -s, rtol=1e-9)


@given(st.floats(1e-3, 20), st.floats(-1, 1))
def test_phi_is_odd_and_increasing(s, x):
    j = phi_s(s, x)
    assert j.d1 > 0
    assert phi_s(s, -x).v == pytest.approx(-j.v, abs=1e-15)


def test_phi_tends_to_identity_as_s_vanishes():
    xs = np.linspace(-1, 1, 41)
    err = [np.max(np.abs(PhiSMap(s)(xs) - xs)) for s in (1e-2, 1e-4, 1e-6)]
    assert err[0] > err[1] > err[2]
    assert err[2] < 1e-6


@given(st.floats(1e-3, 20), st.floats(-0.999, 0.999))
def test_phi_inverse(s, x):
    f = PhiSMap(s)
    assert f.inverse(f(x)) == pytest.approx(x, abs=1e-12)


def test_phi_rejects_nonpositive_s():
    with pytest.raises(ValueError):
        PhiSMap(0.0)
    with pytest.raises(ValueError):
        phi_s(-1.0, 0.3)


@pytest.mark.parametrize("Y", [Interval(0.4, 0.6), Interval(0.49, 0.52), Interval(-3.0, 5.0)])
def test_conjugacy_schwarzian_scales_with_box(Y):
    p = ConjugationParams.of(0.3, Y)
    h = p.h
    assert float(h(Y.lo)) == pytest.approx(-1.0)
    assert float(h(Y.hi)) == pytest.approx(1.0)
    xs = Y.linspace(50)
    S = schwarzian_of_jet(h.jet(xs), 0.0)
    np.testing.assert_allclose(S, p.schwarzian_h, rtol=1e-8)
    assert p.schwarzian_h == pytest.approx(-4 * 0.3 / Y.length ** 2)


def test_conjugacy_inverse_jet():
    p = ConjugationParams.of(2.0, Interval(0.3, 0.7))
    h: ConjugacyMap = p.h
    y = 0.37
    j = h.inverse_jet(y)
    x = h.inverse(y)
    assert float(h(x)) == pytest.approx(y, abs=1e-14)
    assert j.d1 * float(h.derivative(x)) == pytest.approx(1.0)


def test_profile_of_logistic():
    # -S(x)(x-1/2)^2 = 3/2 identically for a*x*(1-x)
    m = LogisticMap(3.9)
    prof = estimate_profile(m, Interval(0.45, 0.55))
    assert prof.eta == pytest.approx(1.5, rel=1e-9)
    assert prof.L == 0.0
    assert prof.epsilonY == 0.0


def test_profile_invariant_under_affine_change():
    m = LogisticMap(3.8)
    g = AffineConjugate(m, 3.0, -1.0)
    Y = Interval(0.45, 0.55)
    Yg = Interval(3.0 * Y.lo - 1.0, 3.0 * Y.hi - 1.0)
    assert estimate_profile(g, Yg).eta == pytest.approx(estimate_profile(m, Y).eta, rel=1e-9)


def test_conjugation_residual_small_on_branches():
    m = LogisticMap(3.9)
    res = search_conjugacy(m)
    assert res.success
    rng = np.random.default_rng(3)
    branches = res.conjugated.F.branches
    worst = 0.0
    for i in rng.integers(len(branches), size=100):
        br = branches[i]
        x = rng.uniform(br.domain.lo, br.domain.hi)
        worst = max(worst, conjugation_residual(m, res.conjugated.params, x, br.n))
    assert worst <= 1e-7


@given(st.floats(0.05, 5.0), st.floats(0.2, 0.8), st.integers(1, 4))
def test_conjugation_residual_any_s_and_iterate(s, x, n):
    m = LogisticMap(3.7)
    p = ConjugationParams.of(s, Interval(0.0, 1.0))
    if abs(x - 0.5) < 1e-3:
        return
    assert conjugation_residual(m, p, x, n) <= 1e-7


def test_search_makes_every_branch_negative():
    m = LogisticMap(3.9)
    res = search_conjugacy(m)
    assert res.success and res.delta > 0
    assert res.s == pytest.approx(1.5 / 8)
    assert res.Y.contains(m.critical_point)
    for _, vals in res.conjugated.sample(7):
        assert np.all(vals < 0)
    d = res.to_dict()
    assert d["success"] is True and d["branches"] == len(res.conjugated.F.branches)


def test_search_history_is_monotone_in_box_size():
    res = search_conjugacy(LogisticMap(3.95), scale=0.2, halvings=4)
    sizes = [h["Y"][1] - h["Y"][0] for h in res.history]
    assert sizes == sorted(sizes, reverse=True)


def test_build_conjugacy_requires_critical_point():
    with pytest.raises(ValueError, match="critical point"):
        build_conjugacy(LogisticMap(3.9), 0.2, Interval(0.6, 0.7))


def test_build_conjugacy_requires_regular_return():
    # (0.4, 0.6) at a=4: the orbit of 0.4 enters it
    m = LogisticMap(4.0)
    Y = Interval(0.4, 0.6)
    assert any(Y.contains(v) for v in _orbit(m, 0.4, 20))
    with pytest.raises(ValueError, match="regularly returning"):
        build_conjugacy(m, 0.2, Y)


def _orbit(m, x, n):
    out = []
    for _ in range(n):
        x = float(m(x))
        out.append(x)
    return out


def test_params_reject_bad_s():
    with pytest.raises(ValueError):
        ConjugationParams.of(0.0, Interval(0, 1))
    assert math.isclose(ConjugationParams.of(1.0, Interval(0, 2)).schwarzian_h, -1.0)
