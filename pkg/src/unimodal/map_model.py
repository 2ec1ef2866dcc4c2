"""Interval maps with exact third-order jets and the Schwarzian derivative.

Built-in families (logistic ``a*x*(1-x)`` and sine ``a*sin(pi*x)`` on
[0, 1]) ship closed-form jets and closed-form inverse branches. Maps given
only as a callable get jets from central finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, ClassVar, Sequence

import numpy as np
from scipy.optimize import brentq

from .jets import Jet3, jet_compose, schwarzian_of_jet

__all__ = [
    "Interval",
    "nu",
    "SmoothMap",
    "AffineMap",
    "MobiusMap",
    "ExpMap",
    "PowerMap",
    "CallableMap",
    "ComposedMap",
    "UnimodalMap",
    "LogisticMap",
    "SineMap",
    "CallableUnimodalMap",
    "AffineConjugate",
    "PrecomposedMap",
    "FAMILIES",
    "make_family",
    "schwarzian",
    "schwarzian_composition_residual",
    "iterate",
    "iterate_jet",
    "propagate",
    "lap",
    "pullback_point",
    "monotone_interval",
    "UNDEFINED_RTOL",
]

#: |f'| below this fraction of the map's derivative scale makes S(f) undefined.
UNDEFINED_RTOL = 1e-12

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    EMPTY: ClassVar[Interval]

    @property
    def is_empty(self) -> bool:
        return not self.lo < self.hi

    @property
    def length(self) -> float:
        return 0.0 if self.is_empty else self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x, tol: float = 0.0):
        """Open-interval membership, shrunk by ``tol`` on both sides."""
        return (self.lo + tol < x) & (x < self.hi - tol)

    def contains_closed(self, x, tol: float = 0.0):
        return (self.lo - tol <= x) & (x <= self.hi + tol)

    def contains_interval(self, other: Interval, tol: float = 0.0) -> bool:
        """True when ``other`` lies in the closure of self (up to ``tol``)."""
        return other.lo >= self.lo - tol and other.hi <= self.hi + tol

    def compactly_contains(self, other: Interval) -> bool:
        return self.lo < other.lo and other.hi < self.hi

    def intersects(self, other: Interval) -> bool:
        """Open intervals intersect."""
        return max(self.lo, other.lo) < min(self.hi, other.hi)

    def hull(self, *others: Interval) -> Interval:
        return Interval(min(self.lo, *(o.lo for o in others)),
                        max(self.hi, *(o.hi for o in others)))

    def dist_to_boundary(self, inner: Interval) -> float:
        """dist(inner, ∂self) for ``inner`` compactly inside self."""
        return min(inner.lo - self.lo, self.hi - inner.hi)

    def linspace(self, n: int, endpoints: bool = False) -> np.ndarray:
        if endpoints:
            return np.linspace(self.lo, self.hi, n)
        return self.lo + (np.arange(n) + 0.5) * (self.length / n)

    def as_list(self) -> list[float]:
        return [float(self.lo), float(self.hi)]

    @classmethod
    def around(cls, center: float, radius: float) -> Interval:
        return cls(center - radius, center + radius)

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"


Interval.EMPTY = Interval(math.inf, -math.inf)


def nu(inner: Interval, outer: Interval) -> float:
    """Nesting ratio |J| / dist(J, ∂I); infinite when J touches ∂I."""
    d = outer.dist_to_boundary(inner)
    if d <= 0:
        return math.inf
    return inner.length / d


class SmoothMap:
    """A C^3 map of an interval into the line, with third-order jets."""

    domain: Interval = Interval(-math.inf, math.inf)

    def __call__(self, x):
        raise NotImplementedError

    def jet(self, x) -> Jet3:
        raise NotImplementedError

    def derivative(self, x):
        return self.jet(x).d1

    def divided_difference(self, x, y):
        """(h(x) - h(y)) / (x - y); subclasses override for accuracy."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (self(x) - self(y)) / (x - y)

    @property
    def derivative_scale(self) -> float:
        return 1.0

    def schwarzian(self, x):
        return schwarzian(self, x)


@dataclass(frozen=True)
class AffineMap(SmoothMap):
    slope: float
    offset: float = 0.0
    domain: Interval = Interval(-math.inf, math.inf)

    def __call__(self, x):
        return self.slope * np.asarray(x, dtype=float) + self.offset

    def jet(self, x) -> Jet3:
        return Jet3.affine(x, self.slope, self.offset)

    def inverse(self, y):
        return (np.asarray(y, dtype=float) - self.offset) / self.slope

    def divided_difference(self, x, y):
        return self.slope + 0.0 * np.asarray(x, dtype=float)

    @classmethod
    def onto(cls, source: Interval, target: Interval) -> AffineMap:
        """Increasing affine map taking ``source`` onto ``target``."""
        slope = target.length / source.length
        return cls(slope, target.lo - slope * source.lo)


@dataclass(frozen=True)
class MobiusMap(SmoothMap):
    """x -> (a*x + b) / (c*x + d), restricted to a pole-free domain."""

    a: float
    b: float
    c: float
    d: float
    domain: Interval = Interval(-math.inf, math.inf)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (self.a * x + self.b) / (self.c * x + self.d)

    def jet(self, x) -> Jet3:
        x = np.asarray(x, dtype=float)
        det = self.a * self.d - self.b * self.c
        den = self.c * x + self.d
        return Jet3(
            self(x),
            det / den ** 2,
            -2 * det * self.c / den ** 3,
            6 * det * self.c ** 2 / den ** 4,
        )

    def divided_difference(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        det = self.a * self.d - self.b * self.c
        return det / ((self.c * x + self.d) * (self.c * y + self.d))


@dataclass(frozen=True)
class ExpMap(SmoothMap):
    """x -> exp(x); Schwarzian is identically -1/2."""

    domain: Interval = Interval(-math.inf, math.inf)

    def __call__(self, x):
        return np.exp(np.asarray(x, dtype=float))

    def jet(self, x) -> Jet3:
        e = np.exp(np.asarray(x, dtype=float))
        return Jet3(e, e, e, e)

    def divided_difference(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        h = x - y
        return np.exp(y) * np.expm1(h) / h


@dataclass(frozen=True)
class PowerMap(SmoothMap):
    """x -> x**k on a domain where it is a diffeomorphism (x > 0)."""

    k: float
    domain: Interval = Interval(0.0, math.inf)

    def __call__(self, x):
        return np.asarray(x, dtype=float) ** self.k

    def jet(self, x) -> Jet3:
        x = np.asarray(x, dtype=float)
        k = self.k
        return Jet3(x ** k, k * x ** (k - 1), k * (k - 1) * x ** (k - 2),
                    k * (k - 1) * (k - 2) * x ** (k - 3))

    def divided_difference(self, x, y):
        # y^(k-1) * ((1 + r)^k - 1) / r with r = (x - y) / y, no cancellation
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = (x - y) / y
        with np.errstate(invalid="ignore", divide="ignore"):
            q = np.where(r == 0, self.k, np.expm1(self.k * np.log1p(r)) / r)
        return y ** (self.k - 1) * q


def _fd_jet(func: Callable, x, scale: float) -> Jet3:
    # per-order optimal steps: eps^(1/3), eps^(1/4), eps^(1/5)
    x = np.asarray(x, dtype=float)
    h1 = _EPS ** (1 / 3) * scale
    h2 = _EPS ** (1 / 4) * scale
    h3 = _EPS ** (1 / 5) * scale
    f0 = func(x)
    d1 = (func(x + h1) - func(x - h1)) / (2 * h1)
    d2 = (func(x + h2) - 2 * f0 + func(x - h2)) / h2 ** 2
    d3 = (func(x + 2 * h3) - 2 * func(x + h3) + 2 * func(x - h3)
          - func(x - 2 * h3)) / (2 * h3 ** 3)
    return Jet3(f0, d1, d2, d3)


class CallableMap(SmoothMap):
    """Wraps a plain function; jets by finite differences unless given."""

    def __init__(self, func: Callable, jet: Callable | None = None,
                 domain: Interval = Interval(-math.inf, math.inf), scale: float = 1.0):
        self.func = func
        self._jet = jet
        self.domain = domain
        self.scale = scale

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def jet(self, x) -> Jet3:
        if self._jet is not None:
            return self._jet(x)
        return _fd_jet(self.func, x, self.scale)


class ComposedMap(SmoothMap):
    """outer ∘ inner."""

    def __init__(self, outer: SmoothMap, inner: SmoothMap):
        self.outer = outer
        self.inner = inner
        self.domain = inner.domain

    def __call__(self, x):
        return self.outer(self.inner(x))

    def jet(self, x) -> Jet3:
        j = self.inner.jet(x)
        return jet_compose(self.outer.jet(j.v), j)

    def divided_difference(self, x, y):
        # chain rule for divided differences keeps each factor accurate
        return (self.outer.divided_difference(self.inner(x), self.inner(y))
                * self.inner.divided_difference(x, y))


# ---------------------------------------------------------------------------
# unimodal maps


class UnimodalMap(SmoothMap):
    """Interval self-map with a single turning point ``critical_point``.

    Laps are indexed by side: -1 for [lo, ζ], +1 for [ζ, hi].
    """

    domain: Interval
    critical_point: float
    critical_order: float = 2.0
    family: str = "custom"
    parameter: float = math.nan
    negative_schwarzian: bool = False

    @property
    def critical_value(self) -> float:
        return float(self(self.critical_point))

    @property
    def turning(self) -> int:
        """+1 if ζ is a maximum, -1 if a minimum."""
        return 1 if self.critical_value >= self(self.domain.lo) else -1

    @property
    def derivative_scale(self) -> float:
        lo, hi = self(self.domain.lo), self(self.domain.hi)
        spread = max(abs(self.critical_value - lo), abs(self.critical_value - hi))
        return max(spread / self.domain.length, _EPS)

    def lap_range(self, side: int) -> Interval:
        end = self.domain.lo if side < 0 else self.domain.hi
        a, b = float(self(end)), self.critical_value
        return Interval(min(a, b), max(a, b))

    def inverse(self, y, side: int):
        """Preimage of ``y`` in the lap on ``side``; NaN when out of range."""
        y = np.asarray(y, dtype=float)
        out = np.vectorize(lambda v: self._inverse_scalar(v, side), otypes=[float])(y)
        return float(out) if out.ndim == 0 else out

    def _inverse_scalar(self, y: float, side: int) -> float:
        zeta = self.critical_point
        end = self.domain.lo if side < 0 else self.domain.hi
        g = lambda t: float(self(t)) - y  # noqa: E731
        ga, gb = g(zeta), g(end)
        if ga == 0:
            return zeta
        if gb == 0:
            return end
        if ga * gb > 0 or math.isnan(y):
            return math.nan
        a, b = (end, zeta) if side < 0 else (zeta, end)
        return brentq(g, a, b, xtol=1e-15, rtol=4 * _EPS, maxiter=200)

    def symmetric_point(self, x):
        """The other preimage of f(x); ζ is its own symmetric point."""
        x = np.asarray(x, dtype=float)
        side = np.where(x < self.critical_point, 1, -1)
        fx = self(x)
        out = np.where(side > 0, self.inverse(fx, 1), self.inverse(fx, -1))
        out = np.where(x == self.critical_point, x, out)
        return float(out) if out.ndim == 0 else out

    def image(self, interval: Interval) -> Interval:
        """Exact image of an interval (monotone on each lap)."""
        a, b = float(self(interval.lo)), float(self(interval.hi))
        lo, hi = min(a, b), max(a, b)
        if interval.lo < self.critical_point < interval.hi:
            c = self.critical_value
            lo, hi = min(lo, c), max(hi, c)
        return Interval(lo, hi)

    def critical_distance(self, x):
        """|f(x) - f(ζ)|: a symmetric distance to ζ."""
        return np.abs(self(x) - self.critical_value)

    def symmetric_interval(self, x: float) -> Interval:
        """Open symmetric interval bounded by ``x`` and its symmetric point."""
        y = self.symmetric_point(x)
        return Interval(min(x, y), max(x, y))

    def describe(self) -> str:
        return f"{self.family}({self.parameter:g})"


class LogisticMap(UnimodalMap):
    """x -> a*x*(1-x) on [0, 1], 0 < a <= 4."""

    family = "logistic"
    negative_schwarzian = True

    def __init__(self, a: float):
        if not 0 < a <= 4:
            raise ValueError(f"logistic parameter must lie in (0, 4], got {a}")
        self.a = float(a)
        self.parameter = self.a
        self.domain = Interval(0.0, 1.0)
        self.critical_point = 0.5

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.a * x * (1.0 - x)

    def jet(self, x) -> Jet3:
        x = np.asarray(x, dtype=float)
        a = self.a
        return Jet3(a * x * (1 - x), a * (1 - 2 * x), -2 * a + 0 * x, 0 * x)

    @property
    def derivative_scale(self) -> float:
        return self.a / 4

    def divided_difference(self, x, y):
        return self.a * (1.0 - np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    def inverse(self, y, side: int):
        y = np.asarray(y, dtype=float)
        disc = 1.0 - 4.0 * y / self.a
        with np.errstate(invalid="ignore"):
            root = np.sqrt(disc)
            left = 2.0 * y / self.a / (1.0 + root)
        out = left if side < 0 else 1.0 - left
        out = np.where((disc < 0) | (y < 0), np.nan, out)
        return float(out) if out.ndim == 0 else out

    def symmetric_point(self, x):
        return 1.0 - np.asarray(x, dtype=float) if np.ndim(x) else 1.0 - float(x)

    def __repr__(self) -> str:
        return f"LogisticMap({self.a!r})"


class SineMap(UnimodalMap):
    """x -> a*sin(pi*x) on [0, 1], 0 < a <= 1."""

    family = "sine"
    negative_schwarzian = True

    def __init__(self, a: float):
        if not 0 < a <= 1:
            raise ValueError(f"sine parameter must lie in (0, 1], got {a}")
        self.a = float(a)
        self.parameter = self.a
        self.domain = Interval(0.0, 1.0)
        self.critical_point = 0.5

    def __call__(self, x):
        return self.a * np.sin(np.pi * np.asarray(x, dtype=float))

    def jet(self, x) -> Jet3:
        t = np.pi * np.asarray(x, dtype=float)
        s, c = np.sin(t), np.cos(t)
        a, p = self.a, np.pi
        return Jet3(a * s, a * p * c, -a * p * p * s, -a * p ** 3 * c)

    @property
    def derivative_scale(self) -> float:
        return self.a

    def divided_difference(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        h = 0.5 * np.pi * (x - y)
        return self.a * np.pi * np.cos(0.5 * np.pi * (x + y)) * np.sinc(h / np.pi)

    def inverse(self, y, side: int):
        y = np.asarray(y, dtype=float)
        with np.errstate(invalid="ignore"):
            left = np.arcsin(y / self.a) / np.pi
        out = left if side < 0 else 1.0 - left
        out = np.where((y < 0) | (y > self.a), np.nan, out)
        return float(out) if out.ndim == 0 else out

    def symmetric_point(self, x):
        return 1.0 - np.asarray(x, dtype=float) if np.ndim(x) else 1.0 - float(x)

    def __repr__(self) -> str:
        return f"SineMap({self.a!r})"


class CallableUnimodalMap(UnimodalMap):
    """User-supplied unimodal map; finite-difference jets unless ``jet`` is given."""

    def __init__(self, func: Callable, domain: Interval, critical_point: float,
                 jet: Callable | None = None, critical_order: float = 2.0,
                 family: str = "custom", parameter: float = math.nan):
        self.func = func
        self._jet = jet
        self.domain = domain
        self.critical_point = float(critical_point)
        self.critical_order = critical_order
        self.family = family
        self.parameter = parameter

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def jet(self, x) -> Jet3:
        if self._jet is not None:
            return self._jet(x)
        return _fd_jet(self.func, x, self.domain.length)


class AffineConjugate(UnimodalMap):
    """A∘f∘A⁻¹ for an increasing affine A(x) = slope*x + offset."""

    def __init__(self, base: UnimodalMap, slope: float, offset: float):
        if slope <= 0:
            raise ValueError("conjugating affine map must be increasing")
        self.base = base
        self.A = AffineMap(slope, offset)
        self.domain = Interval(float(self.A(base.domain.lo)), float(self.A(base.domain.hi)))
        self.critical_point = float(self.A(base.critical_point))
        self.critical_order = base.critical_order
        self.family = base.family
        self.parameter = base.parameter
        self.negative_schwarzian = base.negative_schwarzian

    def __call__(self, x):
        return self.A(self.base(self.A.inverse(x)))

    def jet(self, x) -> Jet3:
        y = self.A.inverse(x)
        j = self.base.jet(y)
        s = self.A.slope
        return Jet3(self.A(j.v), j.d1, j.d2 / s, j.d3 / s ** 2)

    def inverse(self, y, side: int):
        return self.A(self.base.inverse(self.A.inverse(y), side))

    def symmetric_point(self, x):
        return self.A(self.base.symmetric_point(self.A.inverse(x)))


class PrecomposedMap(UnimodalMap):
    """f∘ψ for a diffeomorphism ψ of f's domain onto itself.

    ``psi_inverse`` is needed for the critical point and inverse branches.
    """

    def __init__(self, base: UnimodalMap, psi: SmoothMap, psi_inverse: Callable,
                 family: str | None = None):
        self.base = base
        self.psi = psi
        self.psi_inverse = psi_inverse
        self.domain = base.domain
        self.critical_point = float(psi_inverse(base.critical_point))
        self.critical_order = base.critical_order
        self.family = family or f"{base.family}-reparam"
        self.parameter = base.parameter

    def __call__(self, x):
        return self.base(self.psi(x))

    def jet(self, x) -> Jet3:
        j = self.psi.jet(x)
        return jet_compose(self.base.jet(j.v), j)

    def inverse(self, y, side: int):
        return self.psi_inverse(self.base.inverse(y, side))


FAMILIES: dict[str, type[UnimodalMap]] = {"logistic": LogisticMap, "sine": SineMap}


def make_family(name: str, parameter: float) -> UnimodalMap:
    try:
        cls = FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from None
    return cls(parameter)


# ---------------------------------------------------------------------------
# Schwarzian calculus


def schwarzian(m: SmoothMap, x):
    """S(f)(x) = f'''/f' - 3/2 (f''/f')^2.

    Returns NaN (undefined) where |f'(x)| falls below
    ``UNDEFINED_RTOL * m.derivative_scale``, e.g. at the critical point.
    """
    return schwarzian_of_jet(m.jet(x), UNDEFINED_RTOL * m.derivative_scale)


def schwarzian_composition_residual(g: SmoothMap, h: SmoothMap, x):
    """|S(g∘h)(x) - S(g)(h(x)) h'(x)^2 - S(h)(x)|, with every term from jets."""
    jh = h.jet(x)
    jg = g.jet(jh.v)
    thr_g = UNDEFINED_RTOL * g.derivative_scale
    thr_h = UNDEFINED_RTOL * h.derivative_scale
    lhs = schwarzian_of_jet(jet_compose(jg, jh), thr_g * thr_h)
    rhs = schwarzian_of_jet(jg, thr_g) * np.asarray(jh.d1) ** 2 + schwarzian_of_jet(jh, thr_h)
    return np.abs(lhs - rhs)


def iterate(m: SmoothMap, x, n: int):
    x = np.asarray(x, dtype=float)
    for _ in range(n):
        x = m(x)
    return x


def iterate_jet(m: SmoothMap, x, n: int) -> Jet3:
    """Jet of f^n at x by n-fold composition along the orbit."""
    j = Jet3.variable(x)
    for _ in range(n):
        j = jet_compose(m.jet(j.v), j)
    return j


def propagate(m: UnimodalMap, interval: Interval, n: int) -> list[Interval]:
    """Images f^i(interval) for i = 0..n, computed lap by lap."""
    out = [interval]
    for _ in range(n):
        out.append(m.image(out[-1]))
    return out


def lap(m: UnimodalMap, x: float) -> int:
    return -1 if x < m.critical_point else (1 if x > m.critical_point else 0)


def pullback_point(m: UnimodalMap, y, laps: Sequence[int]):
    """Pull ``y`` back through f^len(laps), where laps[i] is the lap of the i-th iterate."""
    for side in reversed(laps):
        y = m.inverse(y, side if side != 0 else 1)
    return y


def monotone_interval(m: UnimodalMap, x0: float, n: int) -> Interval:
    """Maximal interval T ∋ x0 on which f^n is a diffeomorphism.

    Raises ValueError when x0 is a critical point of f^n.
    """
    T = m.domain
    laps: list[int] = []
    p = float(x0)
    K = T
    for i in range(n):
        side = lap(m, p)
        if side == 0:
            raise ValueError(f"x0 is a critical point of f^{n} (hits ζ at step {i})")
        if K.lo < m.critical_point < K.hi:
            cut = float(pullback_point(m, m.critical_point, laps))
            T = Interval(T.lo, cut) if x0 < cut else Interval(cut, T.hi)
            K = propagate(m, T, i)[-1]
        laps.append(side)
        p = float(m(p))
        K = m.image(K)
    return T
