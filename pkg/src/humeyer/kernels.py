"""Volterra kernels, general kernels and their Fourier coefficients.

The coefficient of the factorized Volterra kernel is

    C[j_1, ..., j_k] = int_t^T psi_k phi_{j_k} ... int_t^{t_2} psi_1 phi_{j_1} dt_1 ... dt_k

and is stored as a dense array indexed ``data[j_1, ..., j_k]``.  The flat
export order is j_1 fastest.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import LEGENDRE, BasisSpec, Interval, basis_matrix
from .combinatorics import PairPartition
from .errors import CapacityError, ContractError, DomainError
from .nested import nested_integral
from .quadrature import CumulativeRule

DEFAULT_MAX_ENTRIES = 2**24
# per-panel Gauss order for the non-exact (quadrature) route
QUAD_ORDER = 16


@dataclass(frozen=True)
class WeightSpec:
    """Exponents (l_1, ..., l_k) of psi_i(tau) = (tau - t)^{l_i}."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if not exps or any(e < 0 for e in exps):
            raise DomainError("weights need k >= 1 nonnegative exponents")
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def ones(cls, k: int) -> WeightSpec:
        return cls((0,) * k)

    @property
    def k(self) -> int:
        return len(self.exponents)

    def psi(self, a: int, tau, t: float) -> np.ndarray:
        """psi_a at tau; ``a`` is 1-based."""
        return (np.asarray(tau, dtype=float) - t) ** self.exponents[a - 1]


@dataclass(frozen=True)
class VolterraKernel:
    weights: WeightSpec
    interval: Interval = Interval()

    @property
    def k(self) -> int:
        return self.weights.k

    def __call__(self, *coords) -> np.ndarray:
        """Vectorized K(t_1, ..., t_k); zero off the open ordered simplex."""
        if len(coords) != self.k:
            raise ContractError(f"expected {self.k} coordinates")
        coords = [np.asarray(c, dtype=float) for c in coords]
        val = np.ones(np.broadcast_shapes(*(c.shape for c in coords)))
        for a, c in enumerate(coords, start=1):
            val = val * self.weights.psi(a, c, self.interval.t)
        for lo, hi in zip(coords, coords[1:]):
            val = np.where(lo < hi, val, 0.0)
        return val

    def as_general(self) -> GeneralKernel:
        return GeneralKernel(self.k, self, self.interval)


@dataclass(frozen=True)
class GeneralKernel:
    """Arbitrary square-integrable Phi on [t, T]^k.

    ``evaluator`` receives k broadcastable numpy arrays and must return the
    kernel values with the broadcast shape.
    """

    k: int
    evaluator: Callable[..., np.ndarray]
    interval: Interval = Interval()

    def __call__(self, *coords) -> np.ndarray:
        if len(coords) != self.k:
            raise ContractError(f"expected {self.k} coordinates")
        coords = [np.asarray(c, dtype=float) for c in coords]
        shape = np.broadcast_shapes(*(c.shape for c in coords))
        return np.broadcast_to(np.asarray(self.evaluator(*coords), dtype=float), shape)


def kernel_eval(kern: VolterraKernel, point: Sequence[float]) -> float:
    point = kern.interval.check(point)
    if point.shape != (kern.k,):
        raise ContractError(f"point must have {kern.k} coordinates")
    return float(kern(*point))


# --- rule selection ---------------------------------------------------------


def level_rule(basis: BasisSpec, exps: Sequence[int], degs: Sequence[int], exact: bool) -> CumulativeRule:
    """Rule for a nested integral whose level a has weight exponent exps[a] and
    basis index up to degs[a] (-1: no basis factor)."""
    k = len(exps)
    if exact and basis.kind == LEGENDRE:
        degree = sum(exps) + sum(max(d, 0) for d in degs) + k - 1
        return CumulativeRule.exact_for_degree(basis.interval, degree)
    cycles = sum((max(d, 0) + 1) // 2 for d in degs)
    panels = max(4, 2 * cycles)
    return CumulativeRule(basis.interval, panels, QUAD_ORDER + sum(exps))


def _check_budget(entries: int, max_entries: int):
    if entries > max_entries:
        raise CapacityError(f"capacity: {entries} entries exceeds the cap of {max_entries}")


# --- coefficient tensor -----------------------------------------------------


@dataclass(frozen=True)
class CoeffTensor:
    basis: BasisSpec
    source: VolterraKernel | GeneralKernel
    p: int
    data: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return self.data.ndim

    def __getitem__(self, jvec) -> float:
        return float(self.data[tuple(jvec)])

    def truncate(self, p: int) -> CoeffTensor:
        if p > self.p:
            raise ContractError(f"cannot extend a p={self.p} tensor to p={p}")
        if p == self.p:
            return self
        return CoeffTensor(self.basis, self.source, p, self.data[(slice(0, p + 1),) * self.k])

    def flat(self) -> np.ndarray:
        """Entries in layout order (j_1 fastest)."""
        return self.data.ravel(order="F")

    def to_dict(self) -> dict:
        weights = list(self.source.weights.exponents) if isinstance(self.source, VolterraKernel) else None
        return {
            "basis": self.basis.kind,
            "interval": self.basis.interval.to_list(),
            "weights": weights,
            "k": self.k,
            "p": self.p,
            "layout": "j1-fastest",
            "data": [float(x) for x in self.flat()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> CoeffTensor:
        interval = Interval(*d["interval"])
        basis = BasisSpec(d["basis"], interval)
        if d.get("weights") is None:
            raise ContractError("only Volterra-kernel tensors can be reloaded")
        kern = VolterraKernel(WeightSpec(tuple(d["weights"])), interval)
        k, p = len(d["weights"]), int(d["p"])
        data = np.asarray(d["data"], dtype=float).reshape((p + 1,) * k, order="F")
        return cls(basis, kern, p, data)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"j{a}" for a in range(1, self.k + 1)] + ["value"])
        for idx in itertools.product(range(self.p + 1), repeat=self.k):
            jvec = idx[::-1]  # j_1 fastest
            writer.writerow(list(jvec) + [repr(float(self.data[jvec]))])
        return buf.getvalue()


def _basis_factors(basis: BasisSpec, kern: VolterraKernel, rule: CumulativeRule, p: int):
    B = basis_matrix(basis, p, rule.nodes)
    t = basis.interval.t
    return [kern.weights.psi(a, rule.nodes, t) * B for a in range(1, kern.k + 1)]


def _check_interval(basis: BasisSpec, kern):
    if basis.interval != kern.interval:
        raise ContractError("basis and kernel live on different intervals")


def fourier_coeff(basis: BasisSpec, kern: VolterraKernel, jvec: Sequence[int], exact: bool = True) -> float:
    """A single C_{j_k ... j_1}; ``jvec`` is (j_1, ..., j_k)."""
    _check_interval(basis, kern)
    jvec = tuple(int(j) for j in jvec)
    if len(jvec) != kern.k or min(jvec) < 0:
        raise ContractError("jvec must hold k nonnegative indices")
    rule = level_rule(basis, kern.weights.exponents, jvec, exact)
    t = basis.interval.t
    factors = [
        kern.weights.psi(a, rule.nodes, t) * basis_matrix(basis, j, rule.nodes)[j]
        for a, j in enumerate(jvec, start=1)
    ]
    return float(nested_integral(rule, factors, [None] * kern.k))


def coeff_tensor(
    basis: BasisSpec,
    kern: VolterraKernel,
    p: int,
    exact: bool = True,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> CoeffTensor:
    """All C_{j_k ... j_1} with every index in 0..p.

    Legendre tensors are exact up to rounding (polynomial integrands on a
    single high-order panel); trigonometric tensors use composite Gauss
    panels, 16 nodes each, two panels per cycle of the fastest factor.
    """
    _check_interval(basis, kern)
    if p < 0:
        raise DomainError("p must be nonnegative")
    _check_budget((p + 1) ** kern.k, max_entries)
    rule = level_rule(basis, kern.weights.exponents, [p] * kern.k, exact)
    factors = _basis_factors(basis, kern, rule, p)
    data = nested_integral(rule, factors, list(range(kern.k)))
    return CoeffTensor(basis, kern, p, np.ascontiguousarray(data))


def _collapsed_levels(kern: VolterraKernel, partition: PairPartition):
    """Reduced level list: ('free', slot) or ('merged', lower slot)."""
    if partition.k != kern.k:
        raise ContractError("partition and kernel disagree on k")
    if not partition.adjacent:
        raise ContractError(f"collapsed coefficients need adjacent pairs, got {partition.label()}")
    lower = {a for a, _ in partition.pairs}
    upper = {b for _, b in partition.pairs}
    levels = []
    for a in range(1, kern.k + 1):
        if a in lower:
            continue
        levels.append(("merged", a - 1) if a in upper else ("free", a))
    return levels


def collapsed_tensor(
    basis: BasisSpec, kern: VolterraKernel, partition: PairPartition, p: int, exact: bool = True
) -> np.ndarray:
    """Collapsed coefficients for every free multi-index up to p.

    Each adjacent pair {s, s+1} becomes a single integration of
    psi_s psi_{s+1} with no basis factor.  Axes follow ``partition.free``;
    with no free slots the result is a 0-d array.
    """
    _check_interval(basis, kern)
    levels = _collapsed_levels(kern, partition)
    t = basis.interval.t
    exps, degs = [], []
    for kind, a in levels:
        if kind == "free":
            exps.append(kern.weights.exponents[a - 1])
            degs.append(p)
        else:
            exps.append(kern.weights.exponents[a - 1] + kern.weights.exponents[a])
            degs.append(-1)
    rule = level_rule(basis, exps, degs, exact)
    B = basis_matrix(basis, p, rule.nodes)
    factors, labels = [], []
    for kind, a in levels:
        if kind == "free":
            factors.append(kern.weights.psi(a, rule.nodes, t) * B)
            labels.append(a)
        else:
            factors.append(kern.weights.psi(a, rule.nodes, t) * kern.weights.psi(a + 1, rule.nodes, t))
            labels.append(None)
    return np.asarray(nested_integral(rule, factors, labels, out=list(partition.free)))


def collapsed_coeff(
    basis: BasisSpec, kern: VolterraKernel, partition: PairPartition, jfree: Sequence[int] = ()
) -> float:
    jfree = tuple(int(j) for j in jfree)
    if len(jfree) != len(partition.free):
        raise ContractError("jfree must index exactly the free slots")
    p = max(jfree, default=0)
    return float(collapsed_tensor(basis, kern, partition, p)[jfree])


# --- general kernels ----------------------------------------------------------


def default_general_rule(basis: BasisSpec, p: int, k: int = 2, max_entries: int = DEFAULT_MAX_ENTRIES) -> CumulativeRule:
    """Composite 8-point Gauss rule: at least two panels per basis degree and
    as many as the grid budget allows up to 32 panels.

    Kernels with jumps (Volterra kernels seen as general kernels) converge
    only at first order in the panel width, hence the generous default.
    """
    budget = int(round(max_entries ** (1.0 / k))) // 8
    panels = max(2 * (p + 1), min(32, budget), 1)
    return CumulativeRule(basis.interval, panels, 8)


def general_coeff_tensor(
    basis: BasisSpec,
    kern: GeneralKernel | VolterraKernel,
    p: int,
    rule: CumulativeRule | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> CoeffTensor:
    """Coefficients int Phi prod phi_{j_l}(t_l) by tensor-product Gauss quadrature."""
    _check_interval(basis, kern)
    k = kern.k
    rule = rule or default_general_rule(basis, p, k, max_entries)
    n = rule.size
    _check_budget(n**k, max_entries)
    _check_budget((p + 1) ** k, max_entries)
    coords = [rule.nodes.reshape((1,) * a + (n,) + (1,) * (k - a - 1)) for a in range(k)]
    vals = np.asarray(kern(*coords), dtype=float)
    W = basis_matrix(basis, p, rule.nodes) * rule.weights  # (p+1, n)
    for _ in range(k):
        # contract the leading node axis; the new basis axis goes last
        vals = np.tensordot(vals, W, axes=([0], [1]))
    return CoeffTensor(basis, kern, p, np.ascontiguousarray(vals))


def general_coeff(
    basis: BasisSpec, kern: GeneralKernel | VolterraKernel, jvec: Sequence[int], rule: CumulativeRule | None = None
) -> float:
    jvec = tuple(int(j) for j in jvec)
    if len(jvec) != kern.k:
        raise ContractError("jvec must hold k indices")
    tensor = general_coeff_tensor(basis, kern, max(jvec), rule)
    return tensor[jvec]


def kernel_l2_norm_sq(kern: VolterraKernel) -> float:
    """int K^2 over the simplex for monomial weights (closed form)."""
    # int_{simplex} prod u_a^{2 l_a} in u = (tau - t)/D, times D^{k + 2 sum l}
    D = kern.interval.length
    exps = kern.weights.exponents
    acc = 1.0
    deg = 0
    for l in exps:
        deg += 2 * l + 1
        acc /= deg
    return acc * D ** (kern.k + 2 * sum(exps))
