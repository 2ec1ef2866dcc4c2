import math

import numpy as np
import pytest

from unimodal.boxmaps import (
    BoxMapping,
    Branch,
    HypothesisError,
    NestedPair,
    central_domain,
    decay_tower,
    entry_times,
    fill_in,
    first_entry_map,
    first_return_map,
    is_regularly_returning,
    preimage_components,
    symmetric_regularly_returning,
)
from unimodal.map_model import Interval, LogisticMap, iterate, iterate_jet
from unimodal.renorm import feigenbaum_point

A4 = LogisticMap(4.0)
U4 = Interval(0.25, 0.75)
# f^5(ζ) = ζ-like Fibonacci combinatorics: closest returns at 5, 8, 13, ...
FIBONACCI_A = 1 + math.sqrt(1 + 4 * 1.8705286321646448)


def assert_lands_on_boundary(m, br, box, both_ends=False, tol=1e-10):
    """Endpoint images stay in the closed box (both on ∂box if ``both_ends``).

    Forward error grows like |Df^n|, so the mismatch is measured in domain
    coordinates, as a backward error relative to the domain length.
    """
    ends = np.array([br.domain.lo, br.domain.hi])
    j = iterate_jet(m, ends, br.n)
    scale = tol * m.domain.length * np.abs(j.d1)
    outside = np.maximum(np.maximum(box.lo - j.v, j.v - box.hi), 0.0)
    assert np.all(outside <= scale)
    if both_ends:
        err = np.minimum(np.abs(j.v - box.lo), np.abs(j.v - box.hi))
        assert np.all(err <= scale)
        assert (j.v[0] < box.mid) != (j.v[1] < box.mid)


class TestRegularlyReturning:
    def test_boundary_on_fixed_point(self):
        assert is_regularly_returning(A4, U4).verdict == "yes"

    def test_counterexample_with_witness(self):
        v = is_regularly_returning(A4, Interval(0.3, 0.9))
        assert v.verdict == "no" and v.witness == 1

    def test_orientation_reversing_fixed_point(self):
        a = 3.5
        p = (a - 1) / a
        assert is_regularly_returning(LogisticMap(a), Interval(1 - p, p))

    def test_symmetric_search(self):
        assert symmetric_regularly_returning(A4, 0.6) == U4
        assert symmetric_regularly_returning(LogisticMap(2.0), 0.5) is None

    def test_symmetric_search_at_3_6(self):
        f = LogisticMap(3.6)
        U = symmetric_regularly_returning(f, 0.2)
        assert U is not None and U.length <= 0.2 and U.contains(0.5)
        assert float(f(U.lo)) == pytest.approx(float(f(U.hi)), abs=1e-12)
        # the boundary may sit exactly on a cycle, so allow roundoff at ∂U
        x = np.array([U.lo, U.hi])
        margin = 1e-12 * U.length
        for _ in range(100_000):
            x = f(x)
            assert not np.any(U.contains(x, margin))


class TestFirstEntry:
    @pytest.fixture(scope="class")
    @staticmethod
    def entry():
        return first_entry_map(A4, U4)

    def test_critical_point_never_enters(self, entry):
        assert entry.lookup(0.5) is None
        assert entry_times(A4, U4, [0.5], 1000)[0] == 0

    def test_matches_brute_force(self, entry):
        xs = np.random.default_rng(7).uniform(0, 1, 10_000)
        brute = entry_times(A4, U4, xs, 10_000)
        built = np.array([entry.entry_time(x) or 0 for x in xs])
        assert np.array_equal(brute, built)

    def test_entry_time_locally_constant(self, entry):
        rng = np.random.default_rng(3)
        longest = sorted(entry.branches, key=lambda b: -b.domain.length)[:40]
        for br in longest:
            xs = rng.uniform(br.domain.lo, br.domain.hi, 100)
            assert np.all(entry_times(A4, U4, xs, br.n + 1) == br.n)

    def test_branch_bookkeeping(self, entry):
        for br in entry.branches:
            assert br.n == len(br.laps) >= 1
            assert U4.contains(float(entry.apply(br, br.domain.mid)))
            assert_lands_on_boundary(A4, br, U4)
        assert entry.diagnostics["straddling_components"] == 0

    def test_preimage_components(self):
        comps = preimage_components(A4, Interval(0.0, 0.75))
        assert [c for c, _ in comps] == [Interval(0.0, 0.25), Interval(0.75, 1.0)]
        (fold, side), = preimage_components(LogisticMap(3.9), Interval(0.9, 1.0))
        assert side == 0 and fold.contains(0.5)


@pytest.fixture(scope="module")
def typeII_39():
    f = LogisticMap(3.9)
    U = symmetric_regularly_returning(f, 0.25)
    return first_return_map(f, U, min_length=1e-8, resolution=256)


class TestReturnAndFill:
    def test_return_map_is_typeII(self, typeII_39):
        phi = typeII_39
        assert phi.kind == "typeII" and phi.central is not None
        b, bp = phi.boxes
        assert b.contains(0.5) and bp.compactly_contains(b)
        for br in phi.branches:
            assert bp.contains(float(phi.apply(br, br.domain.mid)))
            if br.kind == "monotone":
                assert_lands_on_boundary(phi.m, br, bp)
            # boundaries of boxes avoid the branch domains
            assert not br.domain.contains(b.lo) and not br.domain.contains(b.hi)

    def test_fill_in_lands_onto_central_box(self, typeII_39):
        F = fill_in(typeII_39, max_branches=2000)
        assert F.kind == "typeI"
        b = F.boxes[0]
        for br in F.monotone:
            assert_lands_on_boundary(F.m, br, b, both_ends=True)
            assert br.n == len(br.laps)

    def test_fill_in_iterates_add_along_chains(self, typeII_39):
        F = fill_in(typeII_39, max_branches=500)
        movers = {br.laps: br.n for br in typeII_39.monotone}
        for br in F.monotone:
            # the chain prefix is a mover of the input map
            first = next(k for k in movers if br.laps[:len(k)] == k)
            assert movers[first] <= br.n

    def test_fill_in_idempotent(self, typeII_39):
        F = fill_in(typeII_39, max_branches=500)
        F2 = fill_in(F)
        assert sorted(b.domain.lo for b in F2.branches) == sorted(b.domain.lo for b in F.branches)

    def test_fill_in_fixes_maps_already_onto_b(self):
        f = LogisticMap(3.9)
        b, bp = Interval(0.4, 0.6), Interval(0.3, 0.7)
        central = Branch(Interval(0.45, 0.55), 2, 1, "folding", (0, 1))
        onto = Branch(Interval(0.31, 0.32), 3, 0, "monotone", (-1, 1, 1))
        phi = BoxMapping(f, [b, bp], [central, onto], "typeII")
        out = fill_in(phi)
        assert {(br.domain, br.n) for br in out.branches} == {(br.domain, br.n) for br in phi.branches}

    def test_fill_in_needs_central_branch(self):
        with pytest.raises(ValueError):
            fill_in(BoxMapping(A4, [U4], [], "general"))


class TestDecay:
    def test_nested_pair(self):
        p = NestedPair.of(Interval(0.4, 0.6), Interval(0.0, 1.0))
        assert p.nu == pytest.approx(0.5)
        with pytest.raises(ValueError):
            NestedPair.of(Interval(0.0, 0.6), Interval(0.0, 1.0))

    def test_gates(self):
        with pytest.raises(HypothesisError, match="periodic"):
            decay_tower(LogisticMap(2.0), 4)
        with pytest.raises(HypothesisError, match="restrictive interval found at stage 0") as exc:
            decay_tower(LogisticMap(feigenbaum_point()), 4)
        assert exc.value.stage == 0
        with pytest.raises(HypothesisError, match="not recurrent"):
            decay_tower(A4, 4)

    def test_central_domain_contains_critical_point(self):
        f = LogisticMap(FIBONACCI_A)
        Yp = symmetric_regularly_returning(f, 0.25)
        Y, k = central_domain(f, Yp)
        assert Y.contains(0.5) and Yp.compactly_contains(Y)
        assert Yp.contains(float(iterate(f, 0.5, k)))
        assert all(not Yp.contains(float(iterate(f, 0.5, i))) for i in range(1, k))

    def test_regression_at_3_6785735(self):
        t = decay_tower(LogisticMap(3.6785735), 4)
        assert t.return_times == [36]
        assert t.nus == pytest.approx([1.516762530255713e-4], rel=1e-6)
        assert t.stop_reason.startswith("floating-point resolution")

    def test_fibonacci_regression(self):
        t = decay_tower(LogisticMap(FIBONACCI_A), 8)
        assert t.return_times == [5, 8, 13, 21, 34, 55, 89, 144]
        expected = [0.7455272496270884, 0.5780241809636018, 0.4226208174573343,
                    0.3195397433298541, 0.24316441307228207, 0.18795824724609483,
                    0.14579837426034983, 0.09803472494760361]
        assert t.nus == pytest.approx(expected, rel=1e-5)
        assert all(x > y for x, y in zip(t.nus, t.nus[1:]))
        assert t.nesting_constant == max(t.nus)
        for p, q in zip(t.pairs, t.pairs[1:]):
            assert q.outer == p.inner
