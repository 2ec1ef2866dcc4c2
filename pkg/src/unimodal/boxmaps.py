"""Regularly returning intervals, first entry/return maps, box mappings,
filling-in and decay-of-geometry towers.

Branch domains are built by pulling intervals back through the inverse
branches of f, so entry times are exact up to root-finding error. Domains
shorter than ``min_length`` are pruned and their total length reported.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .map_model import Interval, UnimodalMap, lap, nu, pullback_point
from .orbits import critical_recurrence, find_periodic_orbit

__all__ = [
    "NestedPair",
    "Branch",
    "BoxMapping",
    "ReturnVerdict",
    "DecayTower",
    "HypothesisError",
    "is_regularly_returning",
    "symmetric_regularly_returning",
    "preimage_components",
    "first_entry_map",
    "first_return_map",
    "entry_times",
    "central_domain",
    "fill_in",
    "decay_tower",
]

DEFAULT_RESOLUTION = 2 ** 14
DEFAULT_HORIZON = 10 ** 6
DEFAULT_MIN_LENGTH = 1e-13
DEFAULT_MAX_BRANCHES = 200_000


@dataclass(frozen=True)
class NestedPair:
    inner: Interval
    outer: Interval
    nu: float

    @classmethod
    def of(cls, inner: Interval, outer: Interval) -> NestedPair:
        if not outer.compactly_contains(inner):
            raise ValueError("inner interval must be compactly contained in outer")
        return cls(inner, outer, nu(inner, outer))

    def to_dict(self) -> dict:
        return {"inner": self.inner.as_list(), "outer": self.outer.as_list(), "nu": self.nu}


@dataclass(frozen=True)
class Branch:
    """f^n on ``domain``; ``laps[i]`` is the lap of f^i(domain) (0 for the fold)."""

    domain: Interval
    n: int
    target_box: int
    kind: str  # "monotone" | "folding"
    laps: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {"domain": self.domain.as_list(), "iterate": self.n,
                "target_box": self.target_box, "kind": self.kind}


@dataclass
class BoxMapping:
    """Branches of an induced map of ``m`` into nested boxes b_0 ⊂ ... ⊂ b_k."""

    m: UnimodalMap
    boxes: list[Interval]
    branches: list[Branch]
    kind: str  # "typeI" | "typeII" | "general"
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.branches.sort(key=lambda b: b.domain.lo)
        self._los = np.array([b.domain.lo for b in self.branches])

    @property
    def central(self) -> Branch | None:
        for b in self.branches:
            if b.kind == "folding":
                return b
        return None

    @property
    def monotone(self) -> list[Branch]:
        return [b for b in self.branches if b.kind == "monotone"]

    def lookup(self, x: float) -> Branch | None:
        """Branch whose (open) domain contains ``x``."""
        k = int(np.searchsorted(self._los, x, side="right")) - 1
        if k >= 0 and self.branches[k].domain.contains(x):
            return self.branches[k]
        return None

    def entry_time(self, x: float) -> int | None:
        b = self.lookup(x)
        return None if b is None else b.n

    def apply(self, branch: Branch, x):
        y = np.asarray(x, dtype=float)
        for _ in range(branch.n):
            y = self.m(y)
        return y

    def image(self, branch: Branch) -> Interval:
        """f^n(domain), exact for monotone and folding branches."""
        pts = [branch.domain.lo, branch.domain.hi]
        if branch.kind == "folding":
            pts.append(self.m.critical_point)
        vals = [float(self.apply(branch, p)) for p in pts]
        return Interval(min(vals), max(vals))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "boxes": [b.as_list() for b in self.boxes],
            "branches": [b.to_dict() for b in self.branches],
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# regularly returning intervals


@dataclass(frozen=True)
class ReturnVerdict:
    verdict: str  # "yes" | "no" | "undecided"
    witness: int | None = None
    evidence: tuple = ()

    def __bool__(self) -> bool:
        return self.verdict == "yes"


def is_regularly_returning(m: UnimodalMap, U: Interval, horizon: int = 100_000,
                           max_period: int = 64) -> ReturnVerdict:
    """Check f^n(∂U) ∩ U = ∅ along the boundary orbits.

    "yes" needs every boundary orbit to be trapped: it lands (to 1e-9) on a
    periodic orbit, found by Newton, none of whose points lies in U.
    """
    L = m.domain.length
    tol_in = 1e-12 * U.length
    x = np.array([U.lo, U.hi], dtype=float)
    trapped = np.zeros(2, dtype=bool)
    evidence: list = [None, None]
    hist = np.full((max_period, 2), np.nan)
    for n in range(1, horizon + 1):
        x = m(x)
        inside = U.contains(x, tol_in) & ~trapped
        if inside.any():
            return ReturnVerdict("no", witness=n)
        close = np.abs(hist - x) < 1e-9 * L
        for i in np.flatnonzero(close.any(axis=0) & ~trapped):
            # hist row k holds the iterate from (k+1) steps ago
            p = int(np.flatnonzero(close[:, i])[0]) + 1
            orb = find_periodic_orbit(m, p, float(x[i]), accept_lower_period=True)
            if orb is None or orb.distance(float(x[i])) > 1e-8 * L:
                continue
            if np.any(U.contains(np.asarray(orb.points), tol_in)):
                continue
            trapped[i] = True
            evidence[i] = (n, orb.period, orb.points[0], orb.kind)
        if trapped.all():
            return ReturnVerdict("yes", evidence=tuple(evidence))
        hist = np.roll(hist, 1, axis=0)
        hist[0] = x
    return ReturnVerdict("undecided")


def _periodic_points(m: UnimodalMap, max_period: int, grid: int = 2 ** 14) -> list[tuple[float, int]]:
    """(point, period) for fixed points of f^p, p <= max_period, via sign changes."""
    from scipy.optimize import brentq

    xs = m.domain.linspace(grid, endpoints=True)
    found: list[tuple[float, int]] = []
    for p in range(1, max_period + 1):
        y = xs.copy()
        for _ in range(p):
            y = m(y)
        g = y - xs
        roots = list(xs[g == 0])
        idx = np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)

        for k in idx:
            a, b = xs[k], xs[k + 1]

            def h(t, p=p):
                v = t
                for _ in range(p):
                    v = m(v)
                return float(v) - t

            roots.append(brentq(h, a, b, xtol=1e-15, rtol=1e-15))
        for r in roots:
            found.append((float(r), p))
    return found


def preimage_components(m: UnimodalMap, K: Interval) -> list[tuple[Interval, int]]:
    """Components of f^{-1}(K) as (interval, lap); lap 0 marks a component containing ζ."""
    pieces = {}
    for side in (-1, 1):
        R = m.lap_range(side)
        lo, hi = max(K.lo, R.lo), min(K.hi, R.hi)
        if not lo < hi:
            continue
        a, b = m.inverse(lo, side), m.inverse(hi, side)
        pieces[side] = Interval(min(a, b), max(a, b))
    cv = m.critical_value
    if -1 in pieces and 1 in pieces and K.lo < cv < K.hi:
        return [(pieces[-1].hull(pieces[1]), 0)]
    return [(I, s) for s, I in pieces.items() if not I.is_empty]


def symmetric_regularly_returning(m: UnimodalMap, scale: float, *, max_period: int = 8,
                                  preimage_depth: int = 3) -> Interval | None:
    """Largest symmetric regularly returning interval around ζ of length <= scale.

    Candidates are bounded by a periodic point or one of its preimages y;
    U = {x : |f(x) - f(ζ)| < |f(y) - f(ζ)|} is regularly returning exactly
    when no forward image of y is strictly closer to ζ in that distance.
    If every candidate is too long, the shortest one is shrunk through
    successive central domains of first return maps, which are again
    symmetric and regularly returning. Returns None if ζ is periodic or
    nothing fits.
    """
    if critical_recurrence(m).periodic:
        return None
    zeta = m.critical_point
    rng = max(m.lap_range(-1).length, m.lap_range(1).length)
    best: Interval | None = None
    shortest: Interval | None = None
    seen: set = set()
    for z, p in _periodic_points(m, max_period):
        key = round(z, 12)
        if key in seen:
            continue
        seen.add(key)
        cycle = [z]
        for _ in range(p - 1):
            cycle.append(float(m(cycle[-1])))
        cycle_rho = min(float(m.critical_distance(c)) for c in cycle)
        # (point, min f-distance of its strict forward orbit)
        # strict forward orbit of z is the rest of its cycle, then z again
        level = [(z, cycle_rho)]
        for depth in range(preimage_depth + 1):
            nxt = []
            for y, fwd in level:
                if y == zeta or not math.isfinite(y):
                    continue
                r = float(m.critical_distance(y))
                if fwd >= r - 1e-12 * rng and r > 0:
                    U = m.symmetric_interval(y)
                    if m.domain.contains_interval(U) and (shortest is None or U.length < shortest.length):
                        shortest = U
                    if (U.length <= scale and m.domain.contains_interval(U)
                            and (best is None or U.length > best.length)):
                        best = U
                if depth < preimage_depth:
                    for side in (-1, 1):
                        w = m.inverse(y, side)
                        if np.isfinite(w) and w != y:
                            nxt.append((float(w), min(fwd, r)))
            level = nxt
    if best is None and shortest is not None:
        Y = shortest
        for _ in range(64):
            try:
                cd = central_domain(m, Y, horizon=100_000)
            except FloatingPointError:
                return None
            if cd is None or not cd[0].length < Y.length:
                return None
            Y = cd[0]
            if Y.length <= scale:
                return Y
    return best


# ---------------------------------------------------------------------------
# first entry / return maps


def entry_times(m: UnimodalMap, U: Interval, xs, horizon: int) -> np.ndarray:
    """Brute-force n(x) = min{n > 0 : f^n(x) ∈ U}; 0 where none within horizon."""
    x = np.array(xs, dtype=float, copy=True)
    out = np.zeros(x.shape, dtype=int)
    active = np.ones(x.shape, dtype=bool)
    for n in range(1, horizon + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        x[idx] = m(x[idx])
        hit = idx[U.contains(x[idx])]
        out[hit] = n
        active[hit] = False
    return out


def _pull_generation(m: UnimodalMap, lo: np.ndarray, hi: np.ndarray):
    """Vectorized preimage components of the intervals (lo, hi).

    Returns (parent index, child lo, child hi, lap) arrays; lap 0 marks a
    component folded around ζ.
    """
    cv = m.critical_value
    pieces = {}
    for side in (-1, 1):
        R = m.lap_range(side)
        clo, chi = np.maximum(lo, R.lo), np.minimum(hi, R.hi)
        ok = clo < chi
        with np.errstate(invalid="ignore"):
            a = np.asarray(m.inverse(np.where(ok, clo, np.nan), side), dtype=float)
            b = np.asarray(m.inverse(np.where(ok, chi, np.nan), side), dtype=float)
        ok &= np.isfinite(a) & np.isfinite(b)
        pieces[side] = (ok, np.minimum(a, b), np.maximum(a, b))
    okl, llo, lhi = pieces[-1]
    okr, rlo, rhi = pieces[1]
    fold = okl & okr & (lo < cv) & (cv < hi)
    idx = np.arange(lo.size)
    parts = [
        (idx[fold], llo[fold], rhi[fold], np.zeros(fold.sum(), dtype=int)),
        (idx[okl & ~fold], llo[okl & ~fold], lhi[okl & ~fold], np.full((okl & ~fold).sum(), -1)),
        (idx[okr & ~fold], rlo[okr & ~fold], rhi[okr & ~fold], np.full((okr & ~fold).sum(), 1)),
    ]
    return tuple(np.concatenate(c) for c in zip(*parts))


def first_entry_map(m: UnimodalMap, U: Interval, resolution: int = DEFAULT_RESOLUTION,
                    horizon: int = DEFAULT_HORIZON, *, min_length: float = DEFAULT_MIN_LENGTH,
                    max_branches: int = DEFAULT_MAX_BRANCHES) -> BoxMapping:
    """First entry map of f into U as a box mapping with boxes (central domain, U).

    Branches are the components of {n(x) = k}: generation k+1 is pulled back
    from the generation-k components lying outside U, one vectorized step
    at a time. Components shorter than ``min_length`` are pruned; when the
    ``max_branches`` budget runs out the longest components are kept. The
    ``resolution`` grid only measures coverage: cell centres lying in no
    branch are reported as non-entering.
    """
    min_len = min_length * m.domain.length
    branches: list[Branch] = []
    pruned = 0.0
    straddling = 0
    truncated = False
    lo, hi = np.array([U.lo]), np.array([U.hi])
    laps: list[tuple[int, ...]] = [()]
    n = 0
    while lo.size and n < horizon:
        n += 1
        parent, clo, chi, side = _pull_generation(m, lo, hi)
        length = chi - clo
        keep = length >= min_len
        pruned += float(length[~keep].sum())
        parent, clo, chi, side, length = parent[keep], clo[keep], chi[keep], side[keep], length[keep]
        room = max_branches - len(branches)
        if length.size > room:
            truncated = True
            order = np.argsort(-length, kind="stable")
            pruned += float(length[order[room:]].sum())
            sel = np.sort(order[:room])
            parent, clo, chi, side = parent[sel], clo[sel], chi[sel], side[sel]
        nxt_lo, nxt_hi, nxt_laps = [], [], []
        for p, a, b, sd in zip(parent.tolist(), clo.tolist(), chi.tolist(), side.tolist()):
            lp = (sd,) + laps[p]
            kind = "folding" if 0 in lp else "monotone"
            V = Interval(a, b)
            if U.contains_interval(V):
                branches.append(Branch(V, n, 1, kind, lp))
                continue
            if V.intersects(U):
                # only possible when U is not regularly returning
                straddling += 1
                inner = Interval(max(a, U.lo), min(b, U.hi))
                branches.append(Branch(inner, n, 1, kind, lp))
                outs = [P for P in (Interval(a, U.lo), Interval(U.hi, b)) if not P.is_empty]
            else:
                outs = [V]
            for P in outs:
                branches.append(Branch(P, n, 1, kind, lp))
                nxt_lo.append(P.lo)
                nxt_hi.append(P.hi)
                nxt_laps.append(lp)
        lo, hi, laps = np.array(nxt_lo), np.array(nxt_hi), nxt_laps
        if len(branches) >= max_branches:
            truncated = truncated or bool(lo.size)
            pruned += float((hi - lo).sum()) if lo.size else 0.0
            break
    else:
        if lo.size:
            truncated = True
            pruned += float((hi - lo).sum())
    central = next((b for b in branches if b.kind == "folding" and U.contains_interval(b.domain)), None)
    boxes = ([central.domain] if central is not None else []) + [U]
    bm = BoxMapping(m, boxes, branches, "general")
    cells = m.domain.linspace(resolution)
    k = np.searchsorted(bm._los, cells, side="right") - 1
    his = np.array([b.domain.hi for b in bm.branches])
    covered = (k >= 0) & (cells < his[np.maximum(k, 0)]) if his.size else np.zeros(cells.size, bool)
    bm.diagnostics = {
        "branches": len(branches),
        "pruned_length": pruned,
        "non_entering_cells": int((~covered).sum()),
        "resolution": resolution,
        "straddling_components": straddling,
        "truncated": truncated,
    }
    return bm


def first_return_map(m: UnimodalMap, U: Interval, **kw) -> BoxMapping:
    """Restriction of the first entry map to U: a type II box mapping when ζ returns."""
    entry = first_entry_map(m, U, **kw)
    inside = [b for b in entry.branches if U.contains_interval(b.domain)]
    central = next((b for b in inside if b.kind == "folding"), None)
    if central is None:
        return BoxMapping(m, [U], inside, "general", dict(entry.diagnostics, central=None))
    inside = [Branch(b.domain, b.n, 1, b.kind, b.laps) for b in inside]
    return BoxMapping(m, [central.domain, U], inside, "typeII", dict(entry.diagnostics))


def central_domain(m: UnimodalMap, Yp: Interval, horizon: int = 100_000) -> tuple[Interval, int] | None:
    """Component of the first return domain to Y' containing ζ, with its return time.

    Returns None when ζ does not return within ``horizon``. Raises
    FloatingPointError when the pullback collapses below double precision,
    which happens for long returns along expanding orbits.
    """
    zeta = m.critical_point
    orbit = [zeta]
    x = zeta
    k = None
    for i in range(1, horizon + 1):
        x = float(m(x))
        orbit.append(x)
        if Yp.contains(x):
            k = i
            break
    if k is None:
        return None
    K = Yp
    for i in range(k - 1, 0, -1):
        side = lap(m, orbit[i])
        R = m.lap_range(side)
        lo, hi = max(K.lo, R.lo), min(K.hi, R.hi)
        if not lo < hi:
            raise FloatingPointError(f"pullback lost resolution {k - i} steps before the return")
        a, b = m.inverse(lo, side), m.inverse(hi, side)
        K = Interval(min(a, b), max(a, b))
    for C, _ in preimage_components(m, K):
        if C.lo < zeta < C.hi:
            return C, k
    raise FloatingPointError("central domain collapsed below double precision")


# ---------------------------------------------------------------------------
# filling-in


def fill_in(phi: BoxMapping, *, max_chain: int = 64, min_length: float = 1e-8,
            max_branches: int = 5_000) -> BoxMapping:
    """Canonical type I box mapping from a type II one.

    The folding branch is kept. Each monotone branch onto b' is composed
    with further monotone branches until it lands on the central domain b;
    chains longer than ``max_chain`` or shorter than ``min_length`` are
    dropped and counted in the diagnostics.
    """
    central = phi.central
    if central is None or len(phi.boxes) != 2:
        raise ValueError("filling-in needs a box mapping with a central domain and two boxes")
    m = phi.m
    b, bp = phi.boxes
    min_len = min_length * m.domain.length
    out = [Branch(central.domain, central.n, 1, "folding", central.laps)]
    movers = [br for br in phi.monotone if br.target_box == 1]
    out.extend(br for br in phi.monotone if br.target_box == 0)
    ends = np.array([b.lo, b.hi] + [e for w in movers for e in (w.domain.lo, w.domain.hi)])
    heap = []
    counter = 0
    for br in movers:
        heapq.heappush(heap, (-br.domain.length, counter, br.n, br.laps, 1))
        counter += 1
    dropped = 0.0
    dropped_count = 0
    while heap:
        neg_len, _, n, laps, chain = heapq.heappop(heap)
        if len(out) >= max_branches:
            dropped += -neg_len + sum(-item[0] for item in heap)
            dropped_count += 1 + len(heap)
            break
        # b and every mover domain pulled back through this chain at once
        pts = np.asarray(pullback_point(m, ends, laps))
        out.append(Branch(Interval(*sorted(pts[:2])), n, 0, "monotone", laps))
        for w, (lo, hi) in zip(movers, pts[2:].reshape(-1, 2)):
            length = abs(hi - lo)
            if length < min_len or chain >= max_chain:
                dropped += length
                dropped_count += 1
                continue
            heapq.heappush(heap, (-length, counter, n + w.n, laps + w.laps, chain + 1))
            counter += 1
    diag = dict(phi.diagnostics)
    diag.update({"fill_dropped_length": dropped, "fill_dropped_chains": dropped_count})
    return BoxMapping(m, [b, bp], out, "typeI", diag)


# ---------------------------------------------------------------------------
# decay of geometry


class HypothesisError(RuntimeError):
    """A precondition of the construction failed; ``stage`` is where it was detected."""

    def __init__(self, message: str, stage: int = 0):
        super().__init__(message)
        self.stage = stage


@dataclass
class DecayTower:
    pairs: list[NestedPair]
    return_times: list[int]
    stop_reason: str

    @property
    def nus(self) -> list[float]:
        return [p.nu for p in self.pairs]

    @property
    def nesting_constant(self) -> float:
        """Empirical K: the largest ν seen along the tower."""
        return max(self.nus, default=math.nan)

    def to_dict(self) -> dict:
        return {
            "nu": self.nus,
            "return_times": self.return_times,
            "pairs": [p.to_dict() for p in self.pairs],
            "nesting_constant": self.nesting_constant,
            "stop_reason": self.stop_reason,
        }


def decay_tower(m: UnimodalMap, depth: int, *, scale: float = 0.25, horizon: int = DEFAULT_HORIZON,
                solenoid_depth: int = 5, min_length: float = 1e-12) -> DecayTower:
    """ν(Y, Y') along the tower Y'_0 ⊃ Y_0 = Y'_1 ⊃ Y_1 ⊃ ...

    Y'_0 is the symmetric regularly returning interval of length at most
    ``scale`` (relative to the domain); each Y is the central domain of the
    first return map to Y'. Raises HypothesisError when ζ is periodic or the
    map shows solenoid-depth renormalization.
    """
    from .renorm import renorm_tower

    rec = critical_recurrence(m, horizon=min(horizon, 10_000))
    if rec.periodic:
        raise HypothesisError(f"critical point is periodic (period {rec.period})", stage=0)
    if rec.kind == "nonrecurrent":
        raise HypothesisError(f"critical point is not recurrent (gap {rec.gap:.3g})", stage=0)
    tower = renorm_tower(m, max_depth=solenoid_depth)
    if tower.depth >= solenoid_depth:
        raise HypothesisError("restrictive interval found at stage 0 (infinitely renormalizable)",
                              stage=0)
    Yp = symmetric_regularly_returning(m, scale * m.domain.length)
    if Yp is None:
        raise HypothesisError("no symmetric regularly returning interval at this scale", stage=0)
    pairs: list[NestedPair] = []
    times: list[int] = []
    reason = "depth reached"
    for stage in range(depth):
        try:
            cd = central_domain(m, Yp, horizon)
        except FloatingPointError:
            reason = f"floating-point resolution reached at stage {stage}"
            break
        if cd is None:
            reason = f"critical point does not return to Y' at stage {stage}"
            break
        Y, k = cd
        if not Yp.compactly_contains(Y):
            reason = f"central domain not compactly nested at stage {stage}"
            break
        pairs.append(NestedPair.of(Y, Yp))
        times.append(k)
        if Y.length < min_length * m.domain.length:
            reason = "floating-point resolution reached"
            break
        Yp = Y
    return DecayTower(pairs, times, reason)
