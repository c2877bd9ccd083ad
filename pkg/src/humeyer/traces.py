"""Trace constructions for kernels on [t, T]^k and the condition residual.

Every trace removes the r pairs of a pair partition and leaves a function
of the free variables, stored through its basis coefficients up to p:

* limiting: sum over paired indices <= p with indices equalized in each pair
* tilde: the same sum taken to its limit before truncating the free indices
* breve: the kernel restricted to its diagonals t_g = t_g' and integrated
* bar: cell-averaged Riemann analogue on a uniform partition of [t, T]
"""

from __future__ import annotations

import csv
import io
import math
import string
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import LEGENDRE, BasisSpec, basis_matrix
from .combinatorics import PairPartition
from .errors import CapacityError, ContractError, ConvergenceError
from .kernels import (
    DEFAULT_MAX_ENTRIES,
    QUAD_ORDER,
    CoeffTensor,
    GeneralKernel,
    VolterraKernel,
    collapsed_tensor,
    general_coeff_tensor,
    level_rule,
)
from .nested import nested_integral
from .quadrature import CumulativeRule

EXTRAPOLATION_TOL = 1e-8
EXTRAPOLATION_P_MAX = 256
# residual norms below this multiple of the trace norm are rounding
ROUNDING_FLOOR = 1e-13


@dataclass(frozen=True)
class TraceTensor:
    """Coefficients of a function of the free slots; order 0 is a scalar."""

    basis: BasisSpec
    p: int
    data: np.ndarray = field(repr=False)
    free: tuple[int, ...] = ()

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != len(self.free) or any(n != self.p + 1 for n in data.shape):
            raise ContractError(f"trace data of shape {data.shape} does not fit p={self.p}, free={self.free}")
        object.__setattr__(self, "data", data)

    @property
    def order(self) -> int:
        return self.data.ndim

    def scalar(self) -> float:
        if self.order:
            raise ContractError("trace is not a scalar")
        return float(self.data)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.data**2)))

    def to_dict(self) -> dict:
        return {
            "basis": self.basis.kind,
            "p": self.p,
            "free": list(self.free),
            "data": [float(x) for x in self.data.ravel(order="F")],
        }


@dataclass(frozen=True)
class ResidualSeries:
    partition: PairPartition
    values: tuple[tuple[int, float], ...]

    @property
    def residuals(self) -> np.ndarray:
        return np.array([v for _, v in self.values])

    def strictly_decreasing(self) -> bool:
        res = self.residuals
        return bool(np.all(np.diff(res) < 0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["p", "residual", "partition"])
        for p, v in self.values:
            writer.writerow([p, repr(float(v)), self.partition.label()])
        return buf.getvalue()


def _check_partition(partition: PairPartition, k: int):
    if partition.k != k:
        raise ContractError(f"partition over k={partition.k} used with an order-{k} kernel")


# --- limiting (partial) traces ------------------------------------------------


def _einsum_spec(partition: PairPartition) -> str:
    letters = iter(string.ascii_letters)
    slot = {}
    for a, b in partition.pairs:
        slot[a] = slot[b] = next(letters)
    for q in partition.free:
        slot[q] = next(letters)
    inp = "".join(slot[a] for a in range(1, partition.k + 1))
    return f"{inp}->" + "".join(slot[q] for q in partition.free)


def partial_trace_array(data: np.ndarray, partition: PairPartition) -> np.ndarray:
    """Contract the paired axes of a coefficient array (axis a-1 is slot a)."""
    _check_partition(partition, data.ndim)
    if partition.r == 0:
        return np.asarray(data)
    return np.einsum(_einsum_spec(partition), data)


def limiting_trace_partial(tensor: CoeffTensor, partition: PairPartition, p: int | None = None) -> TraceTensor:
    """T^{k-2r,p}: paired indices equalized and summed up to p."""
    p = tensor.p if p is None else p
    data = partial_trace_array(tensor.truncate(p).data, partition)
    return TraceTensor(tensor.basis, p, data, partition.free)


def partial_trace_direct(
    basis: BasisSpec, kern: VolterraKernel, partition: PairPartition, p: int, P: int | None = None
) -> np.ndarray:
    """Partial trace of a Volterra kernel without forming the full tensor.

    Free indices run to ``p`` and paired indices to ``P`` (default p).  Each
    pair is contracted inside the nested integral as soon as its upper slot
    is reached, so the cost grows with (P+1)^(open pairs) only.
    """
    _check_partition(partition, kern.k)
    P = p if P is None else P
    pair_of = {}
    for s, (a, b) in enumerate(partition.pairs):
        pair_of[a] = pair_of[b] = s
    degs = [P if a in pair_of else p for a in range(1, kern.k + 1)]
    rule = level_rule(basis, kern.weights.exponents, degs, exact=True)
    t = basis.interval.t
    Bp = basis_matrix(basis, p, rule.nodes)
    BP = basis_matrix(basis, P, rule.nodes) if P != p else Bp
    factors, labels = [], []
    for a in range(1, kern.k + 1):
        psi = kern.weights.psi(a, rule.nodes, t)
        if a in pair_of:
            factors.append(psi * BP)
            labels.append(("pair", pair_of[a]))
        else:
            factors.append(psi * Bp)
            labels.append(("free", a))
    out = [("free", q) for q in partition.free]
    return np.asarray(nested_integral(rule, factors, labels, out=out))


# --- tilde traces -------------------------------------------------------------


def tilde_trace_partial(
    inner: Callable[[tuple[int, ...]], float], p: int, basis: BasisSpec, free: Sequence[int]
) -> TraceTensor:
    """Trace tensor from a callable giving the inner limit for each free multi-index."""
    free = tuple(free)
    data = np.empty((p + 1,) * len(free))
    for idx in np.ndindex(*data.shape):
        data[idx] = inner(idx)
    return TraceTensor(basis, p, data, free)


def _extrapolate(partial: Callable[[int], np.ndarray], p0: int, tol: float, p_max: int) -> np.ndarray:
    """Romberg extrapolation of paired partial sums over P = p0, 2 p0, 4 p0, ...

    The partial sums approach their limit like c_1/P + c_2/P^2 + ..., so
    column q of the table removes the P^-q term.  Stops once two successive
    diagonal entries differ by less than tol in max norm.
    """
    P = max(p0, 1)
    rows = [[partial(P)]]
    while 2 * P <= p_max:
        P *= 2
        row = [partial(P)]
        for q in range(1, len(rows) + 1):
            row.append((2**q * row[q - 1] - rows[-1][q - 1]) / (2**q - 1))
        if np.max(np.abs(row[-1] - rows[-1][-1]), initial=0.0) < tol:
            return row[-1]
        rows.append(row)
    raise ConvergenceError(f"inner paired sums did not settle below {tol} by P={p_max}")


def tilde_trace(
    basis: BasisSpec,
    kern: VolterraKernel | GeneralKernel,
    partition: PairPartition,
    p: int,
    method: str = "auto",
    tol: float = EXTRAPOLATION_TOL,
    p_max: int = EXTRAPOLATION_P_MAX,
) -> TraceTensor:
    """Tilde trace: inner paired sums taken to their limit first.

    ``analytic`` (Volterra kernels with adjacent pairs) uses the collapsed
    coefficients times 1/2^r.  ``extrapolate`` doubles the paired
    truncation P and Romberg-extrapolates until successive estimates differ
    by less than ``tol`` in max norm, giving up at ``p_max``.  ``auto``
    picks analytic when it applies.
    """
    _check_partition(partition, kern.k)
    if partition.r == 0:
        raise ContractError("a trace needs at least one pair")
    volterra = isinstance(kern, VolterraKernel)
    if method == "auto":
        method = "analytic" if volterra and partition.adjacent else "extrapolate"
    if method == "analytic":
        if not (volterra and partition.adjacent):
            raise ContractError("the analytic tilde trace needs a Volterra kernel and adjacent pairs")
        data = collapsed_tensor(basis, kern, partition, p) / 2**partition.r
        return TraceTensor(basis, p, data, partition.free)
    if method != "extrapolate":
        raise ContractError(f"unknown tilde method {method!r}")

    if volterra:
        def partial(P):
            # nodes grow like k P; at most r pair axes and all free axes are open at once
            work = kern.k * (P + 1) * (P + 1) ** partition.r * (p + 1) ** len(partition.free)
            if work > 16 * DEFAULT_MAX_ENTRIES:
                raise ConvergenceError(f"extrapolation budget exhausted at P={P}")
            return partial_trace_direct(basis, kern, partition, p, P)
    else:
        def partial(P):
            if (P + 1) ** kern.k > DEFAULT_MAX_ENTRIES:
                raise ConvergenceError(f"extrapolation budget exhausted at P={P}")
            full = general_coeff_tensor(basis, kern, P).data
            arr = partial_trace_array(full, partition)
            return arr[(slice(0, p + 1),) * arr.ndim]

    data = _extrapolate(partial, max(p, 4), tol, p_max)
    return TraceTensor(basis, p, data, partition.free)


# --- breve (diagonal) traces --------------------------------------------------


def default_trace_rule(basis: BasisSpec, p: int) -> CumulativeRule:
    return CumulativeRule(basis.interval, max(4, p + 1), QUAD_ORDER)


def _project(vals: np.ndarray, W: np.ndarray, n_free: int) -> np.ndarray:
    """Contract the trailing n_free node axes of vals against W = (p+1, nodes) * weights."""
    for _ in range(n_free):
        vals = np.tensordot(vals, W, axes=([vals.ndim - n_free], [1]))
    return vals


def breve_trace(
    kern: GeneralKernel | VolterraKernel,
    partition: PairPartition,
    p: int,
    basis: BasisSpec | None = None,
    rule: CumulativeRule | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> TraceTensor:
    """Kernel restricted to t_g = t_g' for every pair, integrated over the
    diagonal variables and projected on the free slots.

    Volterra kernels vanish on ties, so their breve traces are zero.
    """
    basis = basis or BasisSpec(interval=kern.interval)
    _check_partition(partition, kern.k)
    rule = rule or default_trace_rule(basis, p)
    n, r, f = rule.size, partition.r, len(partition.free)
    if n ** (r + f) > max_entries:
        raise CapacityError(f"capacity: {n ** (r + f)} grid points exceed {max_entries}")
    axis_of = {}
    for s, (a, b) in enumerate(partition.pairs):
        axis_of[a] = axis_of[b] = s
    for q_i, q in enumerate(partition.free):
        axis_of[q] = r + q_i
    dims = r + f
    coords = [rule.nodes.reshape([n if d == axis_of[a] else 1 for d in range(dims)]) for a in range(1, kern.k + 1)]
    vals = np.broadcast_to(kern(*coords), (n,) * dims)
    for _ in range(r):
        vals = np.tensordot(rule.weights, vals, axes=([0], [0]))
    W = basis_matrix(basis, p, rule.nodes) * rule.weights
    return TraceTensor(basis, p, _project(vals, W, f), partition.free)


# --- bar (Riemann) traces -----------------------------------------------------


def _bar_volterra(basis: BasisSpec, kern: VolterraKernel, partition: PairPartition, N: int, p: int) -> np.ndarray:
    """Exact for polynomial weights: panels line up with the cells and the
    cell indicators are constant on every panel."""
    exps = kern.weights.exponents
    f = len(partition.free)
    if basis.kind == LEGENDRE:
        per_cell, order = 1, sum(exps) + f * p + kern.k
    else:
        per_cell = max(1, math.ceil(max(4, (p + 1) * f) / N))
        order = QUAD_ORDER + sum(exps)
    rule = CumulativeRule(basis.interval, N * per_cell, order)
    cell = np.repeat(np.arange(N), per_cell * order)
    ind = (cell[None, :] == np.arange(N)[:, None]).astype(float)  # (N, nodes)
    B = basis_matrix(basis, p, rule.nodes)
    t = basis.interval.t
    pair_of = {}
    for s, (a, b) in enumerate(partition.pairs):
        pair_of[a] = pair_of[b] = s
    factors, labels = [], []
    for a in range(1, kern.k + 1):
        psi = kern.weights.psi(a, rule.nodes, t)
        if a in pair_of:
            factors.append(psi * ind)
            labels.append(("cell", pair_of[a]))
        else:
            factors.append(psi * B)
            labels.append(("free", a))
    dt = basis.length / N
    res = nested_integral(rule, factors, labels, out=[("free", q) for q in partition.free])
    return np.asarray(res) / dt**partition.r


def _bar_general(
    basis: BasisSpec, kern: GeneralKernel, partition: PairPartition, N: int, p: int, q: int, max_entries: int
) -> np.ndarray:
    r, f = partition.r, len(partition.free)
    x, w = np.polynomial.legendre.leggauss(q)
    dt = basis.length / N
    left = basis.interval.t + dt * np.arange(N)
    cell_nodes = left[:, None] + dt * (x + 1) / 2  # (N, q)
    cell_w = dt * w / 2
    free_rule = default_trace_rule(basis, p)
    n = free_rule.size
    total = (N * q * q) ** r * n**f
    if total > max_entries:
        raise CapacityError(f"capacity: {total} grid points exceed {max_entries}")
    # axes: per pair (cell, node_a, node_b), then one node axis per free slot
    dims = 3 * r + f
    coords = [None] * kern.k
    for s, (a, b) in enumerate(partition.pairs):
        shape_a = [1] * dims
        shape_a[3 * s], shape_a[3 * s + 1] = N, q
        shape_b = [1] * dims
        shape_b[3 * s], shape_b[3 * s + 2] = N, q
        coords[a - 1] = cell_nodes.reshape(shape_a)
        coords[b - 1] = cell_nodes.reshape(shape_b)
    for q_i, slot in enumerate(partition.free):
        shape = [1] * dims
        shape[3 * r + q_i] = n
        coords[slot - 1] = free_rule.nodes.reshape(shape)
    vals = np.broadcast_to(kern(*coords), tuple(s for s in np.broadcast_shapes(*(c.shape for c in coords))))
    for _ in range(r):
        vals = np.einsum("cab...,a,b->...", vals, cell_w, cell_w) / dt
    W = basis_matrix(basis, p, free_rule.nodes) * free_rule.weights
    return _project(vals, W, f)


def bar_trace(
    kern: GeneralKernel | VolterraKernel,
    partition: PairPartition,
    N: int,
    p: int = 0,
    basis: BasisSpec | None = None,
    q: int = 8,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> TraceTensor:
    """Riemann-type trace on the uniform partition of [t, T] into N cells.

    Each pair contributes sum_c (1/dt) int int over cell c x cell c.  For
    Volterra kernels with monomial weights the result is exact; otherwise
    every cell block uses a q x q Gauss rule.
    """
    if N < 1:
        raise ContractError("need at least one cell")
    basis = basis or BasisSpec(interval=kern.interval)
    _check_partition(partition, kern.k)
    if isinstance(kern, VolterraKernel):
        data = _bar_volterra(basis, kern, partition, N, p)
    else:
        data = _bar_general(basis, kern, partition, N, p, q, max_entries)
    return TraceTensor(basis, p, data, partition.free)


# --- comparisons ----------------------------------------------------------------


def trace_l2_distance(a: TraceTensor, b: TraceTensor) -> float:
    if a.basis != b.basis or a.data.shape != b.data.shape:
        raise ContractError("traces differ in basis, order or truncation")
    return float(np.sqrt(np.sum((a.data - b.data) ** 2)))


def condition_residual(
    basis: BasisSpec, kern: VolterraKernel, partition: PairPartition, p_list: Sequence[int]
) -> ResidualSeries:
    """Squared L2 distance between the p-partial trace and its claimed limit.

    The limit is (1/2^r) times the collapsed coefficients when every pair is
    adjacent and zero otherwise.
    """
    _check_partition(partition, kern.k)
    values = []
    for p in p_list:
        partial = partial_trace_direct(basis, kern, partition, p)
        scale = max(1.0, float(np.sqrt(np.sum(partial**2))))
        if partition.adjacent:
            partial = partial - collapsed_tensor(basis, kern, partition, p) / 2**partition.r
        res = float(np.sum(partial**2))
        # a difference at the level of rounding in the trace itself counts as zero
        if np.sqrt(res) <= ROUNDING_FLOOR * scale:
            res = 0.0
        values.append((int(p), res))
    return ResidualSeries(partition, tuple(values))
