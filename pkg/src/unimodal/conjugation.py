"""Constant-Schwarzian conjugation of first return maps.

h = φ_s ∘ A, where A takes Y increasingly onto (-1, 1) and φ_s has
Schwarzian identically -s, so S(h) = -4s/|Y|². Conjugating the first
return map F to Y by h adds (4s/|Y|²)(1 - F'²) to S(F); for small Y this
makes S(h∘F∘h⁻¹) negative on every branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boxmaps import BoxMapping, Branch, first_entry_map, first_return_map, is_regularly_returning
from .boxmaps import symmetric_regularly_returning
from .jets import Jet3, jet_compose, jet_inverse, schwarzian_of_jet
from .map_model import AffineMap, Interval, SmoothMap, UnimodalMap, iterate_jet

__all__ = [
    "phi_s",
    "PhiSMap",
    "ConjugacyMap",
    "ConjugationParams",
    "ConjugatedReturnMap",
    "SchwarzianProfile",
    "ConjugacySearch",
    "build_conjugacy",
    "conjugation_residual",
    "estimate_profile",
    "search_conjugacy",
]


def phi_s(s: float, x) -> Jet3:
    """Jet of tanh(kx)/tanh(k), k = sqrt(s/2); its Schwarzian is -s everywhere."""
    if not s > 0:
        raise ValueError("s must be positive")
    k = math.sqrt(s / 2)
    T = math.tanh(k)
    x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
    t = np.tanh(k * x)
    g = 1.0 / np.cosh(k * x) ** 2  # sech², kept separate from 1 - t² for accuracy
    return Jet3(
        t / T,
        k * g / T,
        -2 * k * k * g * t / T,
        -2 * k ** 3 * g * (g - 2 * t * t) / T,
    )


class PhiSMap(SmoothMap):
    """φ_s as a map; fixes -1, 0 and 1."""

    def __init__(self, s: float):
        if not s > 0:
            raise ValueError("s must be positive")
        self.s = float(s)
        self.k = math.sqrt(s / 2)
        self.T = math.tanh(self.k)

    def __call__(self, x):
        return np.tanh(self.k * np.asarray(x, dtype=float)) / self.T

    def jet(self, x) -> Jet3:
        return phi_s(self.s, x)

    def inverse(self, y):
        return np.arctanh(np.asarray(y, dtype=float) * self.T) / self.k

    def divided_difference(self, x, y):
        # tanh a - tanh b = sinh(a - b) / (cosh a cosh b)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        z = self.k * (x - y)
        with np.errstate(invalid="ignore", divide="ignore"):
            shc = np.where(z == 0, 1.0, np.sinh(z) / z)
        return self.k * shc / (np.cosh(self.k * x) * np.cosh(self.k * y) * self.T)

    @property
    def derivative_scale(self) -> float:
        return self.k / self.T


class ConjugacyMap(SmoothMap):
    """h = φ_s ∘ A with a closed-form inverse."""

    def __init__(self, s: float, A: AffineMap):
        self.phi = PhiSMap(s)
        self.A = A

    def __call__(self, x):
        return self.phi(self.A(x))

    def jet(self, x) -> Jet3:
        ja = self.A.jet(x)
        return jet_compose(self.phi.jet(ja.v), ja)

    def inverse(self, y):
        return self.A.inverse(self.phi.inverse(y))

    def inverse_jet(self, y) -> Jet3:
        x = self.inverse(y)
        return jet_inverse(self.jet(x), x)

    @property
    def derivative_scale(self) -> float:
        return self.phi.derivative_scale * self.A.slope


@dataclass(frozen=True)
class ConjugationParams:
    s: float
    Y: Interval
    A: AffineMap

    @classmethod
    def of(cls, s: float, Y: Interval) -> ConjugationParams:
        if not s > 0:
            raise ValueError("s must be positive")
        return cls(float(s), Y, AffineMap.onto(Y, Interval(-1.0, 1.0)))

    @property
    def h(self) -> ConjugacyMap:
        return ConjugacyMap(self.s, self.A)

    @property
    def schwarzian_h(self) -> float:
        """S(h) = -4s/|Y|²."""
        return -4 * self.s / self.Y.length ** 2


def _interior_points(I: Interval, k: int) -> np.ndarray:
    # Chebyshev-like nodes avoid the branch endpoints
    t = np.cos(np.pi * (np.arange(k) + 0.5) / k)
    return I.mid + 0.5 * I.length * t


@dataclass
class ConjugatedReturnMap:
    """G = h∘F∘h⁻¹ for the first return map F of ``m`` to Y."""

    m: UnimodalMap
    params: ConjugationParams
    F: BoxMapping

    @property
    def h(self) -> ConjugacyMap:
        return self.params.h

    def G_jet(self, n: int, x) -> Jet3:
        """Jet of G at h(x), for x in a branch domain of F with iterate n."""
        h = self.h
        jh_inv = jet_inverse(h.jet(x), x)
        jF = iterate_jet(self.m, x, n)
        inner = jet_compose(jF, jh_inv)
        return jet_compose(h.jet(jF.v), inner)

    def schwarzian_G(self, n: int, x):
        j = self.G_jet(n, x)
        return schwarzian_of_jet(j, 0.0)

    def sample(self, points_per_branch: int = 5) -> list[tuple[Branch, np.ndarray]]:
        """S(G) at interior points of every branch (ζ excluded)."""
        out = []
        zeta = self.m.critical_point
        for br in self.F.branches:
            xs = _interior_points(br.domain, points_per_branch)
            xs = xs[xs != zeta]
            out.append((br, np.atleast_1d(self.schwarzian_G(br.n, xs))))
        return out

    def max_schwarzian(self, points_per_branch: int = 5) -> float:
        vals = [np.nanmax(v) for _, v in self.sample(points_per_branch) if v.size]
        return float(max(vals)) if vals else math.nan


def build_conjugacy(m: UnimodalMap, s: float, Y: Interval, *, return_map: BoxMapping | None = None,
                    min_length: float = 1e-10, check_regular: bool = True) -> ConjugatedReturnMap:
    """Conjugate the first return map to Y by h = φ_s ∘ A."""
    if not Y.contains(m.critical_point):
        raise ValueError("Y must contain the critical point")
    if check_regular and is_regularly_returning(m, Y).verdict == "no":
        raise ValueError("Y is not regularly returning")
    F = return_map if return_map is not None else first_return_map(m, Y, min_length=min_length,
                                                                      resolution=256)
    if not F.branches:
        raise ValueError("first return map to Y is empty")
    return ConjugatedReturnMap(m, ConjugationParams.of(s, Y), F)


def conjugation_residual(m: UnimodalMap, params: ConjugationParams, x, n: int):
    """Relative residual of S(G)(h(x))·h'(x)² = (4s/|Y|²)(1 - F'(x)²) + S(F)(x), F = f^n."""
    conj = ConjugatedReturnMap(m, params, BoxMapping(m, [params.Y], [], "general"))
    h = params.h
    lhs = np.asarray(conj.schwarzian_G(n, x)) * np.asarray(h.jet(x).d1) ** 2
    jF = iterate_jet(m, x, n)
    c = 4 * params.s / params.Y.length ** 2
    first = c * (1 - np.asarray(jF.d1) ** 2)
    SF = np.asarray(schwarzian_of_jet(jF, 0.0))
    rhs = first + SF
    scale = np.maximum.reduce([np.abs(lhs), np.abs(first), np.abs(SF), np.ones_like(lhs)])
    r = np.abs(lhs - rhs) / scale
    return float(r) if r.ndim == 0 else r


# ---------------------------------------------------------------------------
# Schwarzian profile and the (s, Y) search


@dataclass(frozen=True)
class SchwarzianProfile:
    eta: float
    L: float
    epsilonY: float

    def to_dict(self) -> dict:
        return {"eta": self.eta, "L": self.L, "epsilonY": self.epsilonY}


def estimate_profile(m: UnimodalMap, Y: Interval, *, mesh: int = 4001, near: float = 0.25,
                     max_branches: int = 2000, points_per_branch: int = 5) -> SchwarzianProfile:
    """η near ζ, L over the domain and ε(Y) over entry branches disjoint from Y.

    η = inf of -S(f)(x)(x-ζ)² for 0 < |x-ζ| <= near·|I|; L = max(0, sup S(f));
    ε(Y) = max of S(f^n)(x)|J|² over branch domains J of the first entry map
    into Y with J ∩ Y = ∅. All three are clamped at 0.
    """
    zeta = m.critical_point
    dom = m.domain
    xs = dom.linspace(mesh, endpoints=True)
    xs = xs[xs != zeta]
    S = np.asarray(m.schwarzian(xs), dtype=float)
    close = np.abs(xs - zeta) <= near * dom.length
    vals = -S[close] * (xs[close] - zeta) ** 2
    eta = max(0.0, float(np.nanmin(vals))) if vals.size else 0.0
    L = max(0.0, float(np.nanmax(S)))
    entry = first_entry_map(m, Y, resolution=256, max_branches=max_branches, min_length=1e-10)
    eps = 0.0
    for br in entry.branches:
        if br.domain.intersects(Y):
            continue
        pts = _interior_points(br.domain, points_per_branch)
        SF = np.asarray(schwarzian_of_jet(iterate_jet(m, pts, br.n), 0.0))
        eps = max(eps, float(np.nanmax(SF)) * br.domain.length ** 2)
    return SchwarzianProfile(eta, L, eps)


@dataclass
class ConjugacySearch:
    success: bool
    s: float
    Y: Interval | None
    max_schwarzian: float
    branches: int
    profile: SchwarzianProfile | None
    inequalities: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    conjugated: ConjugatedReturnMap | None = None
    reason: str = ""

    @property
    def delta(self) -> float:
        """Margin δ with every sampled S(G) < -δ."""
        return -self.max_schwarzian if self.success else math.nan

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "s": self.s,
            "Y": self.Y.as_list() if self.Y is not None else None,
            "max_schwarzian_G": self.max_schwarzian,
            "delta": self.delta,
            "branches": self.branches,
            "profile": self.profile.to_dict() if self.profile else None,
            "inequalities": self.inequalities,
            "history": self.history,
            "reason": self.reason,
        }


def search_conjugacy(m: UnimodalMap, *, scale: float = 0.05, halvings: int = 8,
                     points_per_branch: int = 5, nesting_constant: float | None = None,
                     min_length: float = 1e-10) -> ConjugacySearch:
    """Shrink Y geometrically until S(h∘F∘h⁻¹) < 0 at every sampled point.

    s = η/8 is fixed from the profile at the first Y. The two smallness
    conditions used in the existence argument are reported per candidate:
    ε(Y) - 4s/K² < 0 and S(f) + 4s/|Y|² < 0 on Y.
    """
    history: list = []
    s = math.nan
    profile = None
    K = nesting_constant if nesting_constant is not None else 1.0
    for k in range(halvings + 1):
        target = scale * 0.5 ** k * m.domain.length
        Y = symmetric_regularly_returning(m, target)
        if Y is None:
            return ConjugacySearch(False, s, None, math.nan, 0, profile, history=history,
                                   reason="no symmetric regularly returning interval at this scale")
        if history and Y == history[-1]["Y_interval"]:
            continue
        profile = estimate_profile(m, Y)
        if k == 0 or not s > 0:
            s = profile.eta / 8
        if not s > 0:
            return ConjugacySearch(False, s, Y, math.nan, 0, profile, history=history,
                                   reason="no negative-Schwarzian margin near the critical point")
        try:
            conj = build_conjugacy(m, s, Y, min_length=min_length, check_regular=False)
        except ValueError as exc:
            history.append({"Y": Y.as_list(), "Y_interval": Y, "error": str(exc)})
            continue
        worst = conj.max_schwarzian(points_per_branch)
        ys = _interior_points(Y, 65)
        ys = ys[ys != m.critical_point]
        cond_b = float(np.nanmax(np.asarray(m.schwarzian(ys)))) + 4 * s / Y.length ** 2
        ineq = {
            "epsilon_minus_4s_over_K2": profile.epsilonY - 4 * s / K ** 2,
            "max_SF_plus_4s_over_Y2": cond_b,
        }
        history.append({"Y": Y.as_list(), "Y_interval": Y, "max_SG": worst,
                        "branches": len(conj.F.branches), **ineq})
        if worst < 0:
            for hrec in history:
                hrec.pop("Y_interval", None)
            return ConjugacySearch(True, s, Y, worst, len(conj.F.branches), profile, ineq,
                                   history, conj)
    for hrec in history:
        hrec.pop("Y_interval", None)
    return ConjugacySearch(False, s, None, math.nan, 0, profile, history=history,
                           reason="sampled Schwarzian of the conjugated map stayed nonnegative")
