"""Complete orthonormal systems on an interval [t, T].

Two systems are provided:

* ``legendre``: phi_j(tau) = sqrt((2j+1)/D) P_j(2(tau-t)/D - 1)
* ``trigonometric``: phi_0 = 1/sqrt(D); odd j -> sqrt(2/D) sin(2 pi r u),
  even j >= 2 -> sqrt(2/D) cos(2 pi r u), with u = (tau-t)/D and
  r = ceil(j/2).

where D = T - t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

LEGENDRE = "legendre"
TRIGONOMETRIC = "trigonometric"
_KINDS = (LEGENDRE, TRIGONOMETRIC)

# endpoints are accepted up to this fraction of the interval length
_EDGE_SLACK = 1e-12


@dataclass(frozen=True)
class Interval:
    t: float = 0.0
    T: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.T)) or not self.T > self.t:
            raise DomainError(f"invalid interval [{self.t}, {self.T}]")

    @property
    def length(self) -> float:
        return self.T - self.t

    def check(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        slack = _EDGE_SLACK * self.length
        if np.any(tau < self.t - slack) or np.any(tau > self.T + slack):
            raise DomainError(f"point outside [{self.t}, {self.T}]")
        return tau

    def to_list(self) -> list[float]:
        return [self.t, self.T]


@dataclass(frozen=True)
class BasisSpec:
    kind: str = LEGENDRE
    interval: Interval = Interval()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown basis kind {self.kind!r}; expected one of {_KINDS}")

    @classmethod
    def legendre(cls, t: float = 0.0, T: float = 1.0) -> BasisSpec:
        return cls(LEGENDRE, Interval(t, T))

    @classmethod
    def trigonometric(cls, t: float = 0.0, T: float = 1.0) -> BasisSpec:
        return cls(TRIGONOMETRIC, Interval(t, T))

    @property
    def length(self) -> float:
        return self.interval.length


def legendre_table(n: int, x: np.ndarray) -> np.ndarray:
    """P_0..P_n at points x in [-1, 1], shape (n+1, *x.shape)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n + 1,) + x.shape)
    out[0] = 1.0
    if n >= 1:
        out[1] = x
    for j in range(1, n):
        out[j + 1] = ((2 * j + 1) * x * out[j] - j * out[j - 1]) / (j + 1)
    return out


def _trig_freq(j: np.ndarray) -> np.ndarray:
    return (j + 1) // 2


def basis_matrix(spec: BasisSpec, p: int, tau) -> np.ndarray:
    """Values phi_j(tau) for j = 0..p, shape (p+1, *tau.shape)."""
    tau = spec.interval.check(tau)
    D = spec.length
    u = (tau - spec.interval.t) / D
    if spec.kind == LEGENDRE:
        scale = np.sqrt((2 * np.arange(p + 1) + 1) / D)
        return scale.reshape((-1,) + (1,) * tau.ndim) * legendre_table(p, 2 * u - 1)
    out = np.empty((p + 1,) + tau.shape)
    out[0] = 1 / math.sqrt(D)
    c = math.sqrt(2 / D)
    for j in range(1, p + 1):
        r = (j + 1) // 2
        arg = 2 * math.pi * r * u
        out[j] = c * (np.sin(arg) if j % 2 else np.cos(arg))
    return out


def eval_basis(spec: BasisSpec, j: int, tau):
    """phi_j(tau); scalar in, scalar out."""
    if j < 0:
        raise DomainError("basis index must be nonnegative")
    val = basis_matrix(spec, j, tau)[j]
    return float(val) if np.ndim(val) == 0 else val


def antiderivative_matrix(spec: BasisSpec, p: int, s) -> np.ndarray:
    """F_j(s) = int_t^s phi_j for j = 0..p, shape (p+1, *s.shape)."""
    s = spec.interval.check(s)
    D = spec.length
    u = (s - spec.interval.t) / D
    out = np.empty((p + 1,) + s.shape)
    out[0] = (s - spec.interval.t) / math.sqrt(D)
    if p == 0:
        return out
    if spec.kind == LEGENDRE:
        x = 2 * u - 1
        P = legendre_table(p + 1, x)
        for j in range(1, p + 1):
            # int_{-1}^x P_j = (P_{j+1} - P_{j-1}) / (2j+1)
            out[j] = math.sqrt((2 * j + 1) / D) * (D / 2) * (P[j + 1] - P[j - 1]) / (2 * j + 1)
        return out
    c = math.sqrt(2 / D)
    for j in range(1, p + 1):
        r = (j + 1) // 2
        w = 2 * math.pi * r
        if j % 2:
            out[j] = c * D / w * (1 - np.cos(w * u))
        else:
            out[j] = c * D / w * np.sin(w * u)
    return out


def basis_antiderivative(spec: BasisSpec, j: int, s):
    if j < 0:
        raise DomainError("basis index must be nonnegative")
    val = antiderivative_matrix(spec, j, s)[j]
    return float(val) if np.ndim(val) == 0 else val


def full_integrals(spec: BasisSpec, p: int) -> np.ndarray:
    """int_t^T phi_j for j = 0..p: sqrt(D) at j = 0 and zero otherwise.

    Both systems integrate to zero past j = 0; the closed form is used so the
    deterministic channel carries no rounding noise.
    """
    out = np.zeros(p + 1)
    out[0] = math.sqrt(spec.length)
    return out


def gram_matrix(spec: BasisSpec, p: int, quad) -> np.ndarray:
    """Entry (a, b) is the quadrature value of int phi_a phi_b."""
    B = basis_matrix(spec, p, quad.nodes)
    return (B * quad.weights) @ B.T
