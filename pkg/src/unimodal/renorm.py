"""Restrictive intervals, renormalization and finite-depth solenoid evidence.

A candidate restrictive interval of period n is a symmetric interval
J = {x : |f(x) - f(ζ)| < r}. Its forward images are computed exactly, lap
by lap, so the tests "f^i(J) avoids ζ", "f^n(J) ⊆ J" and "J, ..., f^{n-1}(J)
have disjoint interiors" need no sampling. Only closest-return times of the
critical orbit can be renormalization periods, which prunes the scan.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .jets import Jet3, jet_compose
from .map_model import AffineMap, Interval, UnimodalMap, lap
from .orbits import critical_recurrence

__all__ = [
    "RescaledMap",
    "Renormalization",
    "RenormTower",
    "find_restrictive",
    "renorm_tower",
    "superstable_parameters",
    "feigenbaum_point",
    "FEIGENBAUM_LOGISTIC",
]

#: Literature value of the period-doubling accumulation point of a*x*(1-x).
FEIGENBAUM_LOGISTIC = 3.5699456718709449

BOUNDARY_TOL = 1e-9
_GRID = 1024
_BISECT_STEPS = 60


class RescaledMap(UnimodalMap):
    """f^n restricted to J, conjugated onto [0, 1] by the increasing affine map."""

    def __init__(self, base: UnimodalMap, J: Interval, n: int, laps: tuple[int, ...]):
        self.base = base
        self.J = J
        self.n = n
        self.laps = laps  # laps of f^1(J), ..., f^{n-1}(J)
        self.A = AffineMap.onto(J, Interval(0.0, 1.0))
        self.domain = Interval(0.0, 1.0)
        self.critical_point = float(self.A(base.critical_point))
        self.critical_order = base.critical_order
        self.family = f"{base.family}/R{n}"
        self.parameter = base.parameter
        self.negative_schwarzian = base.negative_schwarzian

    def __call__(self, x):
        y = self.A.inverse(x)
        for _ in range(self.n):
            y = self.base(y)
        return self.A(y)

    def jet(self, x) -> Jet3:
        s = self.A.slope
        j = Jet3.affine(x, 1.0 / s, -self.A.offset / s)
        for _ in range(self.n):
            j = jet_compose(self.base.jet(j.v), j)
        return Jet3(self.A(j.v), j.d1, j.d2 / s, j.d3 / s ** 2)

    def inverse(self, y, side: int):
        x = self.A.inverse(y)
        for lp in reversed(self.laps):
            x = self.base.inverse(x, lp)
        return self.A(self.base.inverse(x, side))

    def symmetric_point(self, x):
        return self.A(self.base.symmetric_point(self.A.inverse(x)))


@dataclass(frozen=True)
class Renormalization:
    J: Interval
    n: int
    rescaled: RescaledMap
    boundary_residual: float

    def to_dict(self) -> dict:
        return {"J": self.J.as_list(), "n": self.n,
                "boundary_residual": self.boundary_residual}


def _images(m: UnimodalMap, lo: np.ndarray, hi: np.ndarray):
    a, b = m(lo), m(hi)
    L, H = np.minimum(a, b), np.maximum(a, b)
    inside = (lo < m.critical_point) & (m.critical_point < hi)
    cv = m.critical_value
    if m.turning > 0:
        H = np.where(inside, cv, H)
    else:
        L = np.where(inside, cv, L)
    return L, H


def _candidate(m: UnimodalMap, r):
    y = m.critical_value - m.turning * np.asarray(r, dtype=float)
    return m.inverse(y, -1), m.inverse(y, 1)


def _restrictive_ok(m: UnimodalMap, n: int, r) -> np.ndarray:
    """Vectorized test of the restrictive-interval conditions at radii r."""
    zl, zr = _candidate(m, r)
    zl, zr = np.atleast_1d(zl), np.atleast_1d(zr)
    zeta = m.critical_point
    length = zr - zl
    tol = 1e-12 * length
    los, his = [zl], [zr]
    ok = np.isfinite(zl) & np.isfinite(zr) & (length > 0)
    lo, hi = zl, zr
    for i in range(1, n + 1):
        lo, hi = _images(m, lo, hi)
        if i < n:
            ok &= ~((lo < zeta) & (zeta < hi))
            los.append(lo)
            his.append(hi)
    ok &= (lo >= zl - tol) & (hi <= zr + tol)
    L, H = np.array(los), np.array(his)
    order = np.argsort(L, axis=0)
    Ls = np.take_along_axis(L, order, axis=0)
    Hs = np.take_along_axis(H, order, axis=0)
    ok &= np.all(Ls[1:] >= Hs[:-1] - tol, axis=0)
    return ok


def _return_candidates(m: UnimodalMap, max_period: int):
    """Closest returns of the critical orbit in the symmetric distance."""
    c = m.critical_point
    rho = [0.0]
    for _ in range(max_period):
        c = float(m(c))
        rho.append(float(m.critical_distance(c)))
    best = rho[1]
    out = []
    for n in range(2, max_period + 1):
        if rho[n] < best:
            out.append((n, rho[n], best))
            best = rho[n]
    return out


def find_restrictive(m: UnimodalMap, max_period: int = 64) -> Renormalization | None:
    """Smallest-period restrictive interval of ``m`` (the maximal one of that period)."""
    if max_period < 2:
        raise ValueError("max_period must be >= 2")
    ends = [abs(float(m(m.domain.lo)) - m.critical_value),
            abs(float(m(m.domain.hi)) - m.critical_value)]
    r_dom = min(ends)
    for n, r_min, r_prev in _return_candidates(m, max_period):
        r_max = min(r_prev, r_dom)
        if not r_max > r_min:
            continue
        s = np.linspace(math.sqrt(r_min), math.sqrt(r_max), _GRID)
        radii = s * s
        ok = _restrictive_ok(m, n, radii)
        if not ok.any():
            continue
        k = int(np.flatnonzero(ok)[-1])
        r_ok = radii[k]
        if k + 1 < len(radii):
            r_bad = radii[k + 1]
            for _ in range(_BISECT_STEPS):
                mid = 0.5 * (r_ok + r_bad)
                if mid in (r_ok, r_bad):
                    break
                if _restrictive_ok(m, n, mid)[0]:
                    r_ok = mid
                else:
                    r_bad = mid
        zl, zr = (float(v) for v in _candidate(m, r_ok))
        J = Interval(zl, zr)
        resid = _boundary_residual(m, J, n)
        if resid > BOUNDARY_TOL * J.length:
            continue
        laps = []
        K = J
        for _ in range(n - 1):
            K = m.image(K)
            laps.append(lap(m, K.mid))
        return Renormalization(J, n, RescaledMap(m, J, n, tuple(laps)), resid)
    return None


def _boundary_residual(m: UnimodalMap, J: Interval, n: int) -> float:
    worst = 0.0
    for z in (J.lo, J.hi):
        y = z
        for _ in range(n):
            y = float(m(y))
        worst = max(worst, min(abs(y - J.lo), abs(y - J.hi)))
    return worst


@dataclass
class RenormTower:
    stages: list[Renormalization] = field(default_factory=list)
    intervals: list[Interval] = field(default_factory=list)  # restrictive J in original coordinates
    truncated: bool = False
    reason: str = ""

    @property
    def depth(self) -> int:
        return len(self.stages)

    @property
    def periods(self) -> list[int]:
        return [s.n for s in self.stages]

    @property
    def cumulative_periods(self) -> list[int]:
        return [int(v) for v in np.cumprod(self.periods)] if self.stages else []

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "periods": self.periods,
            "cumulative_periods": self.cumulative_periods,
            "intervals": [J.as_list() for J in self.intervals],
            "truncated": self.truncated,
            "reason": self.reason,
        }


def renorm_tower(m: UnimodalMap, max_depth: int = 8, max_period: int = 64,
                 min_length: float = 1e-12) -> RenormTower:
    """Iterate ``find_restrictive`` on successive rescaled maps.

    ``truncated`` is set when the tower stops at ``max_depth`` or at
    floating-point resolution rather than because no restrictive interval
    exists at the next level.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    tower = RenormTower()
    if critical_recurrence(m).periodic:
        tower.reason = "critical point periodic"
        return tower
    g: UnimodalMap = m
    to_original = AffineMap(1.0, 0.0)  # current coordinates -> original
    for _ in range(max_depth):
        r = find_restrictive(g, max_period)
        if r is None:
            tower.reason = "no restrictive interval at next level"
            return tower
        J0 = Interval(float(to_original(r.J.lo)), float(to_original(r.J.hi)))
        if J0.length < min_length * m.domain.length:
            tower.truncated = True
            tower.reason = "floating-point resolution reached"
            return tower
        tower.stages.append(r)
        tower.intervals.append(J0)
        # rescaled coordinate t corresponds to current x = J.lo + t*|J|
        to_original = AffineMap(to_original.slope * r.J.length,
                                float(to_original(r.J.lo)))
        g = r.rescaled
    tower.truncated = True
    tower.reason = "max depth reached"
    return tower


def _critical_return(a: float, period: int) -> float:
    x = 0.5
    for _ in range(period):
        x = a * x * (1.0 - x)
    return x - 0.5


def _cascade(kmax: int):
    """Yield superstable parameters s_0, s_1, ... of the logistic cascade."""
    s = [2.0, brentq(lambda a: _critical_return(a, 2), 3.0, 3.4, xtol=1e-15)]
    yield s[0]
    yield s[1]
    delta = 4.669
    for k in range(2, kmax + 1):
        step = (s[-1] - s[-2]) / delta
        guess = s[-1] + step
        w = 0.5 * step
        lo, hi = guess - w, guess + w
        g = lambda a: _critical_return(a, 2 ** k)  # noqa: E731
        for _ in range(10):
            if g(lo) * g(hi) < 0:
                break
            w *= 1.3
            lo, hi = guess - w, min(guess + w, 4.0)
        else:
            return
        s.append(brentq(g, lo, hi, xtol=1e-16, rtol=1e-15, maxiter=500))
        delta = (s[-2] - s[-3]) / (s[-1] - s[-2])
        yield s[-1]


def superstable_parameters(kmax: int) -> list[float]:
    """Superstable logistic parameters s_k (ζ of period 2^k), k = 0..kmax.

    Each s_k is bracketed around the geometric extrapolation of the
    previous two and located by Brent's bisection hybrid.
    """
    return list(_cascade(kmax))


def feigenbaum_point(tol: float = 1e-9, kmax: int = 18) -> float:
    """Accumulation point of the logistic superstable cascade, to about ``tol``.

    Extrapolates s_k + (s_k - s_{k-1}) / (δ_k - 1) with growing k until
    successive estimates agree to ``tol / 10``.
    """
    s: list[float] = []
    prev = math.nan
    for v in _cascade(kmax):
        s.append(v)
        if len(s) < 4:
            continue
        d = (s[-2] - s[-3]) / (s[-1] - s[-2])
        est = s[-1] + (s[-1] - s[-2]) / (d - 1)
        if abs(est - prev) < tol / 10:
            return est
        prev = est
    return prev
