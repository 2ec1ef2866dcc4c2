"""Third-order jets: a value together with its first three derivatives.

Jets carry everything needed for the Schwarzian derivative, and they
compose by the chain rule, so iterates of a map can be differentiated
exactly by composing jets along an orbit. Fields may be floats or numpy
arrays; all arithmetic broadcasts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Jet3", "jet_compose", "jet_inverse", "schwarzian_of_jet", "UNDEFINED"]

#: In-band marker for an undefined Schwarzian (critical points).
UNDEFINED = float("nan")


@dataclass(frozen=True)
class Jet3:
    v: float | np.ndarray
    d1: float | np.ndarray
    d2: float | np.ndarray
    d3: float | np.ndarray

    @classmethod
    def variable(cls, x) -> Jet3:
        """Jet of the identity at ``x``."""
        x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
        one = np.ones_like(x) if np.ndim(x) else 1.0
        zero = np.zeros_like(x) if np.ndim(x) else 0.0
        return cls(x, one, zero, zero)

    @classmethod
    def constant(cls, c) -> Jet3:
        zero = np.zeros_like(c, dtype=float) if np.ndim(c) else 0.0
        return cls(c, zero, zero, zero)

    @classmethod
    def affine(cls, x, slope: float, offset: float) -> Jet3:
        """Jet of ``t -> slope*t + offset`` at ``x``."""
        x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
        zero = np.zeros_like(x) if np.ndim(x) else 0.0
        return cls(slope * x + offset, slope + zero, zero, zero)

    def __add__(self, other):
        if isinstance(other, Jet3):
            return Jet3(self.v + other.v, self.d1 + other.d1,
                        self.d2 + other.d2, self.d3 + other.d3)
        return Jet3(self.v + other, self.d1, self.d2, self.d3)

    __radd__ = __add__

    def __neg__(self):
        return Jet3(-self.v, -self.d1, -self.d2, -self.d3)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet3):
            # Leibniz rule to order three
            return Jet3(
                self.v * other.v,
                self.d1 * other.v + self.v * other.d1,
                self.d2 * other.v + 2 * self.d1 * other.d1 + self.v * other.d2,
                self.d3 * other.v + 3 * self.d2 * other.d1
                + 3 * self.d1 * other.d2 + self.v * other.d3,
            )
        return Jet3(self.v * other, self.d1 * other, self.d2 * other, self.d3 * other)

    __rmul__ = __mul__

    def compose(self, inner: Jet3) -> Jet3:
        """``self`` is the jet of g at ``inner.v``; returns the jet of g∘h."""
        return jet_compose(self, inner)

    def schwarzian(self, threshold: float = 0.0):
        return schwarzian_of_jet(self, threshold)

    def as_tuple(self) -> tuple:
        return (self.v, self.d1, self.d2, self.d3)

    def take(self, idx) -> Jet3:
        return Jet3(*(np.asarray(c)[idx] for c in self.as_tuple()))


def jet_compose(outer: Jet3, inner: Jet3) -> Jet3:
    """Faà di Bruno to third order.

    ``outer`` must be the jet of g evaluated at ``inner.v`` and ``inner`` the
    jet of h at x. The result is the jet of g∘h at x.
    """
    h1, h2, h3 = inner.d1, inner.d2, inner.d3
    g1, g2, g3 = outer.d1, outer.d2, outer.d3
    return Jet3(
        outer.v,
        g1 * h1,
        g2 * h1 * h1 + g1 * h2,
        g3 * h1 ** 3 + 3 * g2 * h1 * h2 + g1 * h3,
    )


def jet_inverse(j: Jet3, x) -> Jet3:
    """Jet of the inverse function at ``j.v``, given the jet ``j`` of h at ``x``."""
    d1, d2, d3 = j.d1, j.d2, j.d3
    return Jet3(
        x,
        1.0 / d1,
        -d2 / d1 ** 3,
        (3 * d2 * d2 - d1 * d3) / d1 ** 5,
    )


def schwarzian_of_jet(j: Jet3, threshold: float = 0.0):
    """``d3/d1 - 1.5*(d2/d1)**2``, NaN where ``|d1| <= threshold``."""
    d1 = np.asarray(j.d1, dtype=float)
    undefined = np.abs(d1) <= threshold
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.asarray(j.d2) / d1
        s = np.asarray(j.d3) / d1 - 1.5 * r2 * r2
    s = np.where(undefined, np.nan, s)
    return float(s) if s.ndim == 0 else s
