import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from unimodal.map_model import LogisticMap, SineMap
from unimodal.orbits import (
    NEUTRAL_BAND,
    classify_multiplier,
    critical_recurrence,
    detect_period,
    find_periodic_orbit,
    iterate_ensemble,
    lyapunov_exponent,
    nonrepelling_scan,
    omega_limit_summary,
)
from unimodal.renorm import FEIGENBAUM_LOGISTIC


def two_cycle(a):
    r = math.sqrt((a - 3) * (a + 1))
    return sorted([(a + 1 - r) / (2 * a), (a + 1 + r) / (2 * a)])


def test_classify_multiplier_bands():
    assert classify_multiplier(0.0) == "super-attracting"
    assert classify_multiplier(0.5) == "attracting"
    assert classify_multiplier(-1.0 + NEUTRAL_BAND / 2) == "neutral"
    assert classify_multiplier(-2.0) == "repelling"


class TestFindPeriodicOrbit:
    def test_repelling_fixed_point_at_a4(self):
        orb = find_periodic_orbit(LogisticMap(4.0), 1, 0.7)
        assert orb.points[0] == pytest.approx(0.75, abs=1e-12)
        assert orb.multiplier == pytest.approx(-2.0, abs=1e-10)
        assert orb.kind == "repelling"

    def test_attracting_two_cycle(self):
        a = 3.2
        orb = find_periodic_orbit(LogisticMap(a), 2, 0.5)
        np.testing.assert_allclose(orb.points, two_cycle(a), atol=1e-12)
        assert orb.multiplier == pytest.approx(4 + 2 * a - a * a, abs=1e-9)
        assert orb.kind == "attracting"

    def test_superattracting_fixed_point(self):
        orb = find_periodic_orbit(LogisticMap(2.0), 1, 0.4)
        assert orb.points[0] == pytest.approx(0.5, abs=1e-9)
        assert orb.kind == "super-attracting"

    def test_lower_period_rejected_unless_requested(self):
        f = LogisticMap(2.8)
        assert find_periodic_orbit(f, 2, 0.6) is None
        orb = find_periodic_orbit(f, 2, 0.6, accept_lower_period=True)
        assert orb.period == 1

    @given(st.floats(3.05, 3.44), st.floats(0.05, 0.95))
    def test_two_cycle_closed_form(self, a, seed):
        orb = find_periodic_orbit(LogisticMap(a), 2, seed)
        if orb is not None:
            np.testing.assert_allclose(orb.points, two_cycle(a), atol=1e-10)
            assert orb.multiplier == pytest.approx(4 + 2 * a - a * a, abs=1e-8)

    @given(st.sampled_from([3.5, 3.83, 3.9, 4.0]), st.integers(1, 6), st.floats(0.01, 0.99))
    def test_cycle_invariants(self, a, p, seed):
        f = LogisticMap(a)
        orb = find_periodic_orbit(f, p, seed)
        if orb is None:
            return
        pts = np.array(orb.points)
        # the cycle is closed under f and the multiplier is the product of f'
        assert np.all(orb.distance(f(pts)) < 1e-9)
        prod = float(np.prod(f.derivative(pts)))
        assert orb.multiplier == pytest.approx(prod, rel=1e-9, abs=1e-12)
        again = find_periodic_orbit(f, p, orb.points[-1])
        assert again is not None and again.same_cycle(orb)


def test_detect_period():
    tail = np.tile([0.1, 0.5, 0.9], 20)
    assert detect_period(tail, 1e-9) == 3
    assert detect_period(np.random.default_rng(0).random(100), 1e-9) is None


class TestOmegaLimit:
    def test_two_cycle_tail(self):
        s = omega_limit_summary(LogisticMap(3.2), 0.3)
        assert s.period == 2
        d = np.min(np.abs(s.tail[:, None] - np.array(two_cycle(3.2))), axis=1)
        assert d.max() < 1e-9

    def test_superattracting_collapse(self):
        s = omega_limit_summary(LogisticMap(2.0), 0.9)
        assert s.period == 1 and s.tail[-1] == pytest.approx(0.5)

    def test_chaotic_tail_is_spread(self):
        s = omega_limit_summary(LogisticMap(4.0), 0.123456789, horizon=20_000, tail=10_000)
        assert s.period is None
        assert np.all(s.histogram > 0)

    def test_bad_window(self):
        with pytest.raises(ValueError):
            omega_limit_summary(LogisticMap(3.0), 0.3, horizon=10, tail=20)


class TestCriticalRecurrence:
    def test_periodic(self):
        r = critical_recurrence(LogisticMap(2.0))
        assert r.periodic and r.period == 1

    def test_nonrecurrent_at_a4(self):
        assert critical_recurrence(LogisticMap(4.0)).kind == "nonrecurrent"

    def test_feigenbaum_gap_shrinks(self):
        f = LogisticMap(FEIGENBAUM_LOGISTIC)
        gaps = [critical_recurrence(f, horizon=h).gap for h in (100, 1000, 10_000)]
        assert critical_recurrence(f).kind == "recurrent"
        assert gaps[0] > gaps[1] > gaps[2]


def test_lyapunov_values():
    assert lyapunov_exponent(LogisticMap(4.0), 0.2, horizon=200_000) == pytest.approx(math.log(2), abs=0.02)
    a = 3.2
    assert lyapunov_exponent(LogisticMap(a), 0.3) == pytest.approx(0.5 * math.log(4 + 2 * a - a * a), abs=1e-6)


def test_ensemble_shape_and_domain():
    out = iterate_ensemble(SineMap(0.95), np.linspace(0, 1, 7), 100, 16)
    assert out.shape == (16, 7)
    assert np.all((out >= 0) & (out <= 1))


@pytest.mark.parametrize("a", np.random.default_rng(1).uniform(2.5, 4.0, 25))
def test_nonrepelling_scan_classifies_consistently(a):
    scan = nonrepelling_scan(LogisticMap(a), max_period=8, seeds=16)
    for orb in scan.orbits:
        assert orb.kind == classify_multiplier(orb.multiplier)
        assert orb.nonrepelling
    assert scan.bound <= 8
    # at most one attracting cycle for a negative-Schwarzian unimodal map
    assert sum(o.kind in ("attracting", "super-attracting") for o in scan.orbits) <= 1
