"""Gauss-Legendre rules and a cumulative (running-integral) operator.

``CumulativeRule`` is the workhorse behind every nested integral in the
package.  Nodes are the Gauss points of ``panels`` equal panels.  For a
function whose restriction to each panel is a polynomial of degree below
``order`` the running integral ``int_t^x f`` is reproduced exactly at every
node, so nested integrals of polynomials are exact once ``order`` covers the
accumulated degree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .basis import Interval, legendre_table
from .errors import DomainError


@dataclass(frozen=True)
class Quadrature:
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> float:
        return float(np.dot(np.asarray(values, dtype=float), self.weights))


@lru_cache(maxsize=64)
def _reference_rule(n: int):
    x, w = roots_legendre(n)
    return np.asarray(x), np.asarray(w)


@lru_cache(maxsize=64)
def _reference_cumulative(n: int) -> np.ndarray:
    """S[a, b] = int_{-1}^{x_a} l_b, with l_b the Lagrange basis on Gauss nodes."""
    x, w = _reference_rule(n)
    P = legendre_table(n, x)  # (n+1, n)
    norm = np.sqrt((2 * np.arange(n) + 1) / 2.0)
    Pn = norm[:, None] * P[:n]  # orthonormal on [-1, 1]
    integ = np.empty((n, n))
    integ[0] = norm[0] * (x + 1)
    for j in range(1, n):
        integ[j] = norm[j] * (P[j + 1] - P[j - 1]) / (2 * j + 1)
    # l_b(s) = sum_j w_b Pn_j(x_b) Pn_j(s), exact for Gauss nodes
    return integ.T @ (Pn * w)


def gauss_legendre(n: int, interval: Interval = Interval()) -> Quadrature:
    if n < 1:
        raise DomainError("need at least one node")
    x, w = _reference_rule(n)
    h = interval.length / 2
    return Quadrature(interval.t + h * (x + 1), h * w)


def composite_gauss(panels: int, order: int, interval: Interval = Interval()) -> Quadrature:
    rule = CumulativeRule(interval, panels, order)
    return Quadrature(rule.nodes, rule.weights)


@dataclass(frozen=True)
class CumulativeRule:
    interval: Interval
    panels: int
    order: int
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.panels < 1 or self.order < 1:
            raise DomainError("panels and order must be positive")
        x, w = _reference_rule(self.order)
        h = self.interval.length / self.panels
        left = self.interval.t + h * np.arange(self.panels)
        object.__setattr__(self, "nodes", (left[:, None] + h * (x + 1) / 2).ravel())
        object.__setattr__(self, "weights", np.tile(h * w / 2, self.panels))

    @classmethod
    def exact_for_degree(cls, interval: Interval, degree: int) -> CumulativeRule:
        """Single panel, exact for running integrals of polynomials up to ``degree``."""
        return cls(interval, 1, max(degree + 1, 1))

    @property
    def size(self) -> int:
        return self.panels * self.order

    @property
    def panel_width(self) -> float:
        return self.interval.length / self.panels

    def _split(self, values):
        values = np.asarray(values, dtype=float)
        return values.reshape(values.shape[:-1] + (self.panels, self.order))

    def panel_integrals(self, values) -> np.ndarray:
        """Integral over each panel, shape (..., panels)."""
        x, w = _reference_rule(self.order)
        return self._split(values) @ w * (self.panel_width / 2)

    def local_cumulative(self, values) -> np.ndarray:
        """Running integral measured from the left edge of each node's panel."""
        S = _reference_cumulative(self.order)
        V = self._split(values)
        out = V @ S.T * (self.panel_width / 2)
        return out.reshape(np.shape(values))

    def cumulative(self, values) -> np.ndarray:
        """int_t^{x_a} f at every node x_a, same shape as ``values``."""
        local = self._split(self.local_cumulative(values))
        totals = self.panel_integrals(values)
        offsets = np.cumsum(totals, axis=-1) - totals
        return (local + offsets[..., None]).reshape(np.shape(values))

    def integrate(self, values) -> np.ndarray:
        return np.asarray(values, dtype=float) @ self.weights
