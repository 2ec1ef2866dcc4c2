"""Orbits, periodic orbits and recurrence of the critical point."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .map_model import Interval, UnimodalMap, iterate_jet

__all__ = [
    "PeriodicOrbit",
    "OrbitSummary",
    "CriticalRecurrence",
    "classify_multiplier",
    "find_periodic_orbit",
    "omega_limit_summary",
    "detect_period",
    "critical_recurrence",
    "iterate_ensemble",
    "lyapunov_exponent",
    "nonrepelling_scan",
    "NEWTON_TOL",
    "NEUTRAL_BAND",
]

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100
NEUTRAL_BAND = 1e-6
SUPERATTRACTING_TOL = 1e-8
RECURRENCE_THRESHOLD = 1e-3
DEFAULT_BURN_IN = 100_000
DEFAULT_TAIL = 512


def classify_multiplier(multiplier: float) -> str:
    """Kind of a periodic orbit from its multiplier Df^p."""
    m = abs(multiplier)
    if m < SUPERATTRACTING_TOL:
        return "super-attracting"
    if abs(1.0 - m) < NEUTRAL_BAND:
        return "neutral"
    return "attracting" if m < 1 else "repelling"


@dataclass(frozen=True)
class PeriodicOrbit:
    points: tuple[float, ...]
    period: int
    multiplier: float
    kind: str

    @property
    def nonrepelling(self) -> bool:
        return self.kind != "repelling"

    def distance(self, x):
        """Distance from x (scalar or array) to the nearest cycle point."""
        pts = np.asarray(self.points)
        return np.min(np.abs(np.asarray(x, dtype=float)[..., None] - pts), axis=-1)

    def same_cycle(self, other: PeriodicOrbit, tol: float = 1e-8) -> bool:
        if self.period != other.period:
            return False
        return bool(np.all(other.distance(np.asarray(self.points)) < tol))

    def to_dict(self) -> dict:
        return {"points": list(self.points), "period": self.period,
                "multiplier": self.multiplier, "kind": self.kind}


def _canonical_cycle(m: UnimodalMap, x: float, p: int) -> list[float]:
    pts = [x]
    for _ in range(p - 1):
        pts.append(float(m(pts[-1])))
    k = int(np.argmin(pts))
    return pts[k:] + pts[:k]


def _minimal_period(m: UnimodalMap, x: float, p: int, tol: float) -> int:
    y = x
    for q in range(1, p + 1):
        y = float(m(y))
        if p % q == 0 and abs(y - x) <= tol:
            return q
    return p


def find_periodic_orbit(m: UnimodalMap, p: int, seed: float, *, tol: float = NEWTON_TOL,
                        max_iter: int = NEWTON_MAX_ITER,
                        accept_lower_period: bool = False) -> PeriodicOrbit | None:
    """Newton's method on f^p(x) - x from ``seed``.

    Returns None on divergence, or when the root has minimal period q < p
    (unless ``accept_lower_period``, in which case the period-q orbit is
    returned).
    """
    if p < 1:
        raise ValueError("period must be >= 1")
    lo, hi = m.domain.lo, m.domain.hi
    x = float(seed)
    converged = False
    for _ in range(max_iter):
        j = iterate_jet(m, x, p)
        g = float(j.v) - x
        if abs(g) < tol:
            converged = True
            break
        dg = float(j.d1) - 1.0
        if dg == 0 or not math.isfinite(dg):
            return None
        x_new = x - g / dg
        if not math.isfinite(x_new):
            return None
        x = min(max(x_new, lo), hi)
    if not converged:
        return None
    # the residual check above is absolute; distinguishing lower periods needs slack
    q = _minimal_period(m, x, p, 1e3 * tol * max(1.0, m.domain.length))
    if q < p and not accept_lower_period:
        return None
    pts = _canonical_cycle(m, x, q)
    multiplier = float(np.prod(m.derivative(np.asarray(pts))))
    return PeriodicOrbit(tuple(pts), q, multiplier, classify_multiplier(multiplier))


def detect_period(tail: np.ndarray, tol: float, max_period: int = 64) -> int | None:
    """Smallest p with |x_{k+p} - x_k| < tol along the whole tail."""
    tail = np.asarray(tail)
    n = tail.shape[0]
    for p in range(1, min(max_period, n - 1) + 1):
        if np.max(np.abs(tail[p:] - tail[:-p])) < tol:
            return p
    return None


def _detect_periods(tails: np.ndarray, tol: float, max_period: int) -> np.ndarray:
    """Per-column version of detect_period; 0 marks no period found."""
    n, k = tails.shape
    out = np.zeros(k, dtype=int)
    undecided = np.ones(k, dtype=bool)
    for p in range(1, min(max_period, n - 1) + 1):
        if not undecided.any():
            break
        cols = np.flatnonzero(undecided)
        d = np.max(np.abs(tails[p:, cols] - tails[:-p, cols]), axis=0)
        hit = cols[d < tol]
        out[hit] = p
        undecided[hit] = False
    return out


@dataclass
class OrbitSummary:
    start: float
    horizon: int
    tail: np.ndarray
    period: int | None
    hull: Interval
    histogram: np.ndarray
    bin_edges: np.ndarray

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "horizon": self.horizon,
            "period": self.period,
            "hull": self.hull.as_list(),
            "histogram": self.histogram.tolist(),
            "tail_head": self.tail[:16].tolist(),
        }


def iterate_ensemble(m: UnimodalMap, x0, burn_in: int, tail: int) -> np.ndarray:
    """Iterate many starting points at once; returns tails of shape (tail, n)."""
    x = np.array(x0, dtype=float, copy=True)
    for _ in range(burn_in):
        x = m(x)
    out = np.empty((tail,) + x.shape)
    for i in range(tail):
        out[i] = x
        x = m(x)
    dom = m.domain
    span = 1e-9 * dom.length
    if np.any((out < dom.lo - span) | (out > dom.hi + span)) or not np.all(np.isfinite(out)):
        raise FloatingPointError("orbit left the domain of the map")
    return out


def omega_limit_summary(m: UnimodalMap, x: float, horizon: int = DEFAULT_BURN_IN,
                        tail: int = DEFAULT_TAIL, *, bins: int = 64,
                        period_tol: float = 1e-9, max_period: int = 64) -> OrbitSummary:
    """Approximate ω(x): the last ``tail`` of ``horizon`` iterates plus diagnostics."""
    if not horizon >= tail >= 1:
        raise ValueError("need horizon >= tail >= 1")
    pts = iterate_ensemble(m, np.array([float(x)]), horizon - tail, tail)[:, 0]
    period = detect_period(pts, period_tol * m.domain.length, max_period)
    hist, edges = np.histogram(pts, bins=bins, range=(m.domain.lo, m.domain.hi))
    return OrbitSummary(float(x), horizon, pts, period,
                        Interval(float(pts.min()), float(pts.max())), hist, edges)


@dataclass(frozen=True)
class CriticalRecurrence:
    kind: str  # "periodic" | "recurrent" | "nonrecurrent"
    period: int | None = None
    gap: float | None = None

    @property
    def periodic(self) -> bool:
        return self.kind == "periodic"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "period": self.period, "gap": self.gap}


def critical_recurrence(m: UnimodalMap, horizon: int = 10_000, *,
                        periodic_tol: float = 1e-12,
                        threshold: float = RECURRENCE_THRESHOLD) -> CriticalRecurrence:
    """Classify the forward orbit of ζ: periodic, recurrent (with gap) or not.

    Tolerances are relative to the domain length.
    """
    zeta = m.critical_point
    L = m.domain.length
    x = zeta
    gap = math.inf
    for k in range(1, horizon + 1):
        x = float(m(x))
        d = abs(x - zeta)
        if d <= periodic_tol * L:
            return CriticalRecurrence("periodic", period=k, gap=0.0)
        gap = min(gap, d)
    if gap < threshold * L:
        return CriticalRecurrence("recurrent", gap=gap)
    return CriticalRecurrence("nonrecurrent", gap=gap)


def lyapunov_exponent(m: UnimodalMap, x0: float, horizon: int = 10_000,
                      burn_in: int = 1_000) -> float:
    """Mean of log|f'| along the orbit; -inf when the orbit hits ζ."""
    xs = iterate_ensemble(m, np.array([float(x0)]), burn_in, horizon)[:, 0]
    with np.errstate(divide="ignore"):
        return float(np.mean(np.log(np.abs(m.derivative(xs)))))


@dataclass
class NonrepellingScan:
    orbits: list[PeriodicOrbit] = field(default_factory=list)

    @property
    def bound(self) -> int:
        """Largest period among located nonrepelling orbits (0 if none)."""
        return max((o.period for o in self.orbits if o.nonrepelling), default=0)


def nonrepelling_scan(m: UnimodalMap, max_period: int = 12, seeds: int = 32) -> NonrepellingScan:
    """Locate periodic orbits up to ``max_period`` from a grid of seeds.

    Every nonrepelling orbit found is kept; its period bounds the observed
    N beyond which all located orbits repel.
    """
    found: list[PeriodicOrbit] = []
    for p in range(1, max_period + 1):
        for s in m.domain.linspace(seeds):
            orb = find_periodic_orbit(m, p, float(s))
            if orb is None or not orb.nonrepelling:
                continue
            if not any(orb.same_cycle(o) for o in found):
                found.append(orb)
    return NonrepellingScan(found)
