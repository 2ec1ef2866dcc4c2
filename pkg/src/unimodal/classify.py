"""Empirical classification of the metric attractor of a unimodal map.

The verdict is one of: a nonrepelling periodic orbit, a transitive cycle
of intervals, a solenoid (finite-depth evidence), or indeterminate. "Almost
every point" is read as a fraction of at least 1 - 1/sqrt(samples) of
uniformly sampled starting points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boxmaps import BoxMapping, Branch, HypothesisError, first_return_map
from .map_model import Interval, UnimodalMap, iterate_jet, pullback_point
from .orbits import (
    PeriodicOrbit,
    _detect_periods,
    critical_recurrence,
    find_periodic_orbit,
    iterate_ensemble,
    lyapunov_exponent,
)
from .renorm import renorm_tower

__all__ = [
    "InducedMap",
    "AttractorReport",
    "induce_expansion",
    "classify_attractor",
    "away_from_critical_summary",
    "confidence_threshold",
    "SOLENOID_DEPTH",
]

SOLENOID_DEPTH = 5
MAX_CYCLE_INTERVALS = 32
HIST_BINS = 1024
PERIOD_DETECT_TOL = 1e-6
CAPTURE_TOL = 1e-5
NEUTRAL_CAPTURE = 0.05
NEUTRAL_NOTE = ("the attracting cycle is neutral: it attracts a set of positive measure, yet under "
                "the strict definition the map has no metric attractor")


def confidence_threshold(samples: int) -> float:
    return 1.0 - 1.0 / math.sqrt(samples)


# ---------------------------------------------------------------------------
# induced expansion


@dataclass
class InducedMap:
    J: Interval
    branches: list[Branch]
    rho: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def domain(self) -> list[Interval]:
        return [b.domain for b in self.branches]

    def to_dict(self) -> dict:
        return {"J": self.J.as_list(), "rho": self.rho, "branches": len(self.branches),
                "diagnostics": self.diagnostics}


def _min_derivative(m: UnimodalMap, br: Branch, points: int) -> float:
    xs = np.linspace(br.domain.lo, br.domain.hi, points)
    return float(np.min(np.abs(iterate_jet(m, xs, br.n).d1)))


def induce_expansion(m: UnimodalMap, J: Interval, *, rounds: int = 6, points: int = 9,
                     min_length: float = 1e-10, max_branches: int = 20_000) -> InducedMap | None:
    """Expanding induced map onto J built from monotone first-return branches.

    Branches whose sampled |F'| does not exceed 1 are composed with every
    monotone return branch, up to ``rounds`` times; what still fails is
    dropped and its length reported. Returns None when nothing expands.
    """
    if critical_recurrence(m).periodic:
        raise HypothesisError("critical point is periodic", stage=0)
    F = first_return_map(m, J, min_length=min_length, resolution=256)
    movers = [b for b in F.monotone]
    if not movers:
        return None
    accepted: list[Branch] = []
    pending = list(movers)
    dropped = 0.0
    for _ in range(rounds + 1):
        nxt = []
        for br in pending:
            if _min_derivative(m, br, points) > 1.0:
                accepted.append(br)
            else:
                nxt.append(br)
        if not nxt or len(accepted) >= max_branches:
            pending = nxt
            break
        pending = []
        for br in nxt:
            for w in movers:
                a = float(pullback_point(m, w.domain.lo, br.laps))
                b = float(pullback_point(m, w.domain.hi, br.laps))
                D = Interval(min(a, b), max(a, b))
                if D.length < min_length * m.domain.length:
                    dropped += D.length
                    continue
                pending.append(Branch(D, br.n + w.n, 0, "monotone", br.laps + w.laps))
    dropped += sum(b.domain.length for b in pending)
    if not accepted:
        return None
    rho = min(_min_derivative(m, b, points) for b in accepted)
    bm = BoxMapping(m, [J], accepted, "general")
    forward, backward = 0.0, 0.0
    for b in accepted:
        ends = np.array([b.domain.lo, b.domain.hi])
        jet = iterate_jet(m, ends, b.n)
        err = np.minimum(np.abs(jet.v - J.lo), np.abs(jet.v - J.hi))
        forward = max(forward, float(err.max()))
        # the same mismatch seen in domain coordinates
        backward = max(backward, float(np.max(err / np.abs(jet.d1))))
    return InducedMap(J, bm.branches, rho, {
        "dropped_length": dropped,
        "covered_length": sum(b.domain.length for b in accepted),
        "max_endpoint_error": forward,
        "max_endpoint_backward_error": backward,
        "return_branches": len(F.branches),
    })


# ---------------------------------------------------------------------------
# attractor classification


@dataclass
class AttractorReport:
    verdict: str  # nonrepelling-periodic | transitive-cycle | solenoid | indeterminate
    basin_fraction: float
    samples: int
    horizon: int
    seed: int
    period: int | None = None
    multiplier: float | None = None
    orbit_kind: str | None = None
    cycle_intervals: list[list[float]] | None = None
    solenoid_depth: int | None = None
    reason: str | None = None
    diagnostics: dict = field(default_factory=dict)
    tails: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self, family: str, parameter: float) -> dict:
        out = {"family": family, "parameter": parameter, "verdict": self.verdict}
        if self.period is not None:
            out["period"] = self.period
            out["multiplier"] = self.multiplier
        if self.cycle_intervals is not None:
            out["cycle_intervals"] = self.cycle_intervals
        if self.solenoid_depth is not None:
            out["solenoid_depth"] = self.solenoid_depth
        out.update({"basin_fraction": self.basin_fraction, "samples": self.samples,
                    "horizon": self.horizon, "seed": self.seed})
        diag = dict(self.diagnostics)
        if self.reason:
            diag["indeterminate_reason"] = self.reason
        out["diagnostics"] = diag
        return out


def _polish(m: UnimodalMap, p: int, x: float, captured) -> PeriodicOrbit | None:
    """Newton orbit of period p through x, preferring a nonrepelling orbit of a divisor period.

    At a period-doubling point the doubled cycle degenerates onto the neutral
    orbit of half the period; the divisor pass reports that orbit instead.
    """
    for q in (d for d in range(1, p) if p % d == 0):
        orb = find_periodic_orbit(m, q, x, accept_lower_period=True)
        if orb is not None and orb.nonrepelling and captured(orb):
            return orb
    orb = find_periodic_orbit(m, p, x, accept_lower_period=True)
    return orb if orb is not None and captured(orb) else None


def _group_periodic(m: UnimodalMap, tails: np.ndarray, L: float) -> tuple[list[PeriodicOrbit], np.ndarray]:
    """Polish detected periods by Newton; returns orbits and each sample's orbit index (-1 none)."""
    periods = _detect_periods(tails, PERIOD_DETECT_TOL * L, 64)
    owner = np.full(tails.shape[1], -1)
    orbits: list[PeriodicOrbit] = []
    last = tails[-1]

    def captured(orb: PeriodicOrbit, col: int) -> bool:
        d_end = float(orb.distance(float(last[col])))
        if d_end < CAPTURE_TOL * L:
            return True
        # neutral cycles attract only polynomially: accept a shrinking distance
        d_start = float(orb.distance(float(tails[0, col])))
        return orb.kind == "neutral" and d_end < NEUTRAL_CAPTURE * L and d_end < d_start

    for col in np.flatnonzero(periods):
        x = float(last[col])
        k = next((i for i, o in enumerate(orbits) if captured(o, col)), None)
        if k is None:
            orb = _polish(m, int(periods[col]), x, lambda o: captured(o, col))
            if orb is None:
                continue
            orbits.append(orb)
            k = len(orbits) - 1
        owner[col] = k
    return orbits, owner


def _support_intervals(m: UnimodalMap, pts: np.ndarray, bins: int = HIST_BINS) -> list[Interval]:
    """Closure of the sampled support as a union of intervals (runs of occupied bins)."""
    dom = m.domain
    counts, edges = np.histogram(pts, bins=bins, range=(dom.lo, dom.hi))
    occ = counts > 0
    runs = []
    i = 0
    while i < bins:
        if not occ[i]:
            i += 1
            continue
        j = i
        while j + 1 < bins and occ[j + 1]:
            j += 1
        sel = pts[(pts >= edges[i]) & (pts <= edges[j + 1])]
        runs.append(Interval(float(sel.min()), float(sel.max())))
        i = j + 1
    return runs


def _union_invariant(m: UnimodalMap, runs: list[Interval], slack: float) -> bool:
    for I in runs:
        img = m.image(I)
        if not any(R.lo - slack <= img.lo and img.hi <= R.hi + slack for R in runs):
            # images may straddle several adjacent runs separated by less than slack
            covered = [R for R in runs if R.hi >= img.lo - slack and R.lo <= img.hi + slack]
            if not covered:
                return False
            lo, hi = covered[0].lo, covered[-1].hi
            gaps = [b.lo - a.hi for a, b in zip(covered, covered[1:])]
            if lo - slack > img.lo or hi + slack < img.hi or any(g > slack for g in gaps):
                return False
    return True


def classify_attractor(m: UnimodalMap, samples: int = 1000, horizon: int = 10_000, seed: int = 0,
                       *, tail: int = 512, solenoid_depth: int = SOLENOID_DEPTH,
                       max_period: int = 64) -> AttractorReport:
    """Decide which of the three attractor types the sampled dynamics exhibits."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if horizon < tail:
        raise ValueError("horizon must be at least the tail length")
    dom = m.domain
    L = dom.length
    need = confidence_threshold(samples)
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(dom.lo, dom.hi, samples)
    tails = iterate_ensemble(m, x0, horizon - tail, tail)
    base = dict(samples=samples, horizon=horizon, seed=seed, tails=tails)
    diag: dict = {"confidence_threshold": need}
    rec = critical_recurrence(m)
    diag["critical_orbit"] = rec.kind
    with np.errstate(all="ignore"):
        diag["lyapunov"] = lyapunov_exponent(m, float(x0[0]), horizon=min(horizon, 10_000),
                                             burn_in=min(horizon, 1_000))

    orbits, owner = _group_periodic(m, tails, L)
    fractions = [float(np.mean(owner == k)) for k in range(len(orbits))]
    diag["periodic_orbits"] = [dict(o.to_dict(), basin_fraction=f) for o, f in zip(orbits, fractions)]

    tower = None
    if not rec.periodic:
        tower = renorm_tower(m, max_depth=solenoid_depth, max_period=max_period)
        diag["renormalization"] = tower.to_dict()
        if tower.depth >= solenoid_depth and not orbits:
            cycle = _cycle_of(m, tower)
            inside = np.all(_in_union(tails, cycle, 1e-9 * L), axis=0)
            return AttractorReport("solenoid", float(inside.mean()), solenoid_depth=tower.depth,
                                   diagnostics=dict(diag, cumulative_periods=tower.cumulative_periods),
                                   **base)

    if orbits:
        k = int(np.argmax(fractions))
        orb, frac = orbits[k], fractions[k]
        if orb.nonrepelling and frac >= need:
            if orb.kind == "neutral":
                diag["note"] = NEUTRAL_NOTE
            return AttractorReport("nonrepelling-periodic", frac, period=orb.period,
                                   multiplier=orb.multiplier, orbit_kind=orb.kind,
                                   diagnostics=diag, **base)

    free = owner < 0
    free_frac = float(free.mean())
    if free.any():
        pts = tails[:, free].ravel()
        runs = _support_intervals(m, pts)
        slack = 2 * L / HIST_BINS
        zeta = m.critical_point
        holds_zeta = any(R.lo - slack < zeta < R.hi + slack for R in runs)
        invariant = _union_invariant(m, runs, slack)
        diag["cycle_check"] = {"intervals": len(runs), "contains_critical_point": holds_zeta,
                               "invariant": invariant}
        if orbits and free_frac > 1.0 / math.sqrt(samples) and max(fractions) > 1.0 / math.sqrt(samples):
            diag["inconsistency"] = "periodic orbit and a non-periodic set both claim positive basin"
        if len(runs) <= MAX_CYCLE_INTERVALS and holds_zeta and invariant and free_frac >= need:
            # every free sample must keep returning to the interval around ζ
            home = next(R for R in runs if R.lo - slack < zeta < R.hi + slack)
            visits = np.any((tails[:, free] >= home.lo) & (tails[:, free] <= home.hi), axis=0)
            diag["return_frequency"] = float(visits.mean())
            if visits.mean() >= need:
                return AttractorReport("transitive-cycle", free_frac,
                                       cycle_intervals=[R.as_list() for R in runs],
                                       diagnostics=diag, **base)
    reasons = []
    if orbits:
        reasons.append(f"largest periodic basin fraction {max(fractions):.3g} below {need:.3g}")
    if tower is not None and 0 < tower.depth < solenoid_depth:
        reasons.append(f"renormalization depth {tower.depth}")
    if free.any() and "cycle_check" in diag:
        c = diag["cycle_check"]
        if c["intervals"] > MAX_CYCLE_INTERVALS:
            reasons.append(f"tail support splits into {c['intervals']} intervals")
        elif not c["contains_critical_point"]:
            reasons.append("tail support avoids the critical point")
        elif not c["invariant"]:
            reasons.append("tail support is not invariant")
    reason = "; ".join(reasons) or "no verdict reached the confidence threshold"
    return AttractorReport("indeterminate", 0.0, reason=reason, diagnostics=diag, **base)


def _cycle_of(m: UnimodalMap, tower) -> list[Interval]:
    """Orbit of the deepest restrictive interval: its cycle of intervals."""
    J = tower.intervals[-1]
    out = [J]
    for _ in range(tower.cumulative_periods[-1] - 1):
        out.append(m.image(out[-1]))
    return out


def _in_union(x: np.ndarray, runs: list[Interval], tol: float) -> np.ndarray:
    hit = np.zeros(x.shape, dtype=bool)
    for R in runs:
        hit |= (x >= R.lo - tol) & (x <= R.hi + tol)
    return hit


def away_from_critical_summary(m: UnimodalMap, samples: int = 1000, horizon: int = 10_000,
                               seed: int = 0, *, tail: int = 512, threshold: float = 0.01) -> float:
    """Fraction of samples whose tail neither nears ζ nor settles on a nonrepelling orbit.

    "Nears ζ" means the tail comes within ``threshold`` times the domain length.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    L = m.domain.length
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(m.domain.lo, m.domain.hi, samples)
    tails = iterate_ensemble(m, x0, horizon - tail, tail)
    orbits, owner = _group_periodic(m, tails, L)
    settled = np.array([owner[i] >= 0 and orbits[owner[i]].nonrepelling for i in range(samples)])
    near = np.min(np.abs(tails - m.critical_point), axis=0) < threshold * L
    return float(np.mean(~settled & ~near))
