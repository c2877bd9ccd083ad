"""Path-coupled Monte Carlo oracle.

Paths are reproducible per (seed, path index, channel): each channel of
each path has its own generator.  A path with N = N0 * 2^L steps (N0 odd)
is built from N0 coarse increments followed by L Brownian-bridge
midpoint refinements, so the path with 2N steps restricted to every
other grid point is exactly the path with N steps.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import BasisSpec, Interval, basis_matrix
from .errors import CapacityError, ContractError, DomainError
from .kernels import DEFAULT_MAX_ENTRIES, GeneralKernel, VolterraKernel, WeightSpec
from .quadrature import CumulativeRule
from .wiener import NoiseSample

DEFAULT_BLOCK = 100


@dataclass(frozen=True)
class WienerPath:
    """values[..., i-1, n] is w^(i) at grid point n (w = 0 at the left end).

    Increments are differences of the stored values, so restricting a path
    to a coarser grid is a plain subsample with no rounding.
    """

    m: int
    N: int
    values: np.ndarray = field(repr=False)
    interval: Interval = Interval()

    def __post_init__(self):
        w = np.asarray(self.values, dtype=float)
        if w.shape[-2:] != (self.m, self.N + 1):
            raise ContractError(f"values of shape {w.shape} do not match m={self.m}, N={self.N}")
        object.__setattr__(self, "values", w)
        object.__setattr__(self, "_increments", np.diff(w, axis=-1))

    @classmethod
    def from_increments(cls, m: int, N: int, increments, interval: Interval = Interval()) -> WienerPath:
        inc = np.asarray(increments, dtype=float)
        values = np.zeros(inc.shape[:-1] + (inc.shape[-1] + 1,))
        np.cumsum(inc, axis=-1, out=values[..., 1:])
        return cls(m, N, values, interval)

    @property
    def increments(self) -> np.ndarray:
        """increments[..., i-1, n] is the increment of channel i over step n."""
        return self._increments

    @property
    def dt(self) -> float:
        return self.interval.length / self.N

    @property
    def grid(self) -> np.ndarray:
        return self.interval.t + self.dt * np.arange(self.N + 1)

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.values.shape[:-2]

    def channel(self, i: int) -> np.ndarray:
        """Increments of channel i; channel 0 is the time channel (dt per step)."""
        if i == 0:
            return np.full(self.batch_shape + (self.N,), self.dt)
        if not 1 <= i <= self.m:
            raise ContractError(f"channel {i} outside 0..{self.m}")
        return self.increments[..., i - 1, :]

    def coarsen(self, factor: int) -> WienerPath:
        """The same path seen on every factor-th grid point."""
        if self.N % factor:
            raise ContractError("factor must divide N")
        return WienerPath(self.m, self.N // factor, self.values[..., ::factor], self.interval)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    variance: float
    paths: int

    @property
    def ci95(self) -> float:
        return 1.96 * math.sqrt(self.variance / self.paths)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "variance": self.variance, "paths": self.paths, "ci95": self.ci95}


def _split_steps(N: int) -> tuple[int, int]:
    levels = 0
    while N % 2 == 0:
        N //= 2
        levels += 1
    return N, levels


def _channel_values(gen: np.random.Generator, N: int, length: float) -> np.ndarray:
    """w on the N-step grid: N0 coarse steps, then midpoints by Brownian bridge."""
    n0, levels = _split_steps(N)
    h = length / n0
    w = np.zeros(n0 + 1)
    np.cumsum(gen.standard_normal(n0) * math.sqrt(h), out=w[1:])
    for _ in range(levels):
        # the midpoint of a bridge over width h is the average of its ends plus N(0, h/4)
        mid = (w[:-1] + w[1:]) / 2 + math.sqrt(h) / 2 * gen.standard_normal(w.size - 1)
        fine = np.empty(2 * w.size - 1)
        fine[0::2], fine[1::2] = w, mid
        w = fine
        h /= 2
    return w


def simulate_path(m: int, N: int, seed: int, interval: Interval = Interval(), path_index: int = 0) -> WienerPath:
    if N < 1 or m < 1:
        raise DomainError("need N >= 1 and m >= 1")
    if seed < 0 or path_index < 0:
        raise DomainError("seed and path index must be nonnegative")
    rows = [
        _channel_values(np.random.default_rng(np.random.SeedSequence([seed, path_index, i])), N, interval.length)
        for i in range(1, m + 1)
    ]
    return WienerPath(m, N, np.stack(rows), interval)


def simulate_paths(m: int, N: int, seed: int, count: int, interval: Interval = Interval(), start: int = 0) -> WienerPath:
    """Paths start..start+count-1 stacked along a leading batch axis."""
    values = np.stack([simulate_path(m, N, seed, interval, start + q).values for q in range(count)])
    return WienerPath(m, N, values, interval)


def noise_from_path(path: WienerPath, basis: BasisSpec, p: int) -> NoiseSample:
    """zeta_j^(i) ~ sum_n phi_j(tau_n) dw_n^(i) with left endpoints tau_n."""
    if basis.interval != path.interval:
        raise ContractError("basis and path live on different intervals")
    if p < 0:
        raise DomainError("p must be nonnegative")
    B = basis_matrix(basis, p, path.grid[:-1])  # (p+1, N)
    return NoiseSample(path.m, p, path.increments @ B.T, basis)


def _check_k(weights: WeightSpec, channels: Sequence[int]) -> tuple[int, ...]:
    ch = tuple(int(i) for i in channels)
    if len(ch) != weights.k:
        raise ContractError(f"{len(ch)} channels for an order-{weights.k} integral")
    if weights.k > 4:
        raise CapacityError("capacity: nested path integrals are limited to k <= 4")
    return ch


def _exclusive_cumsum(x: np.ndarray) -> np.ndarray:
    out = np.zeros(x.shape[:-1] + (x.shape[-1] + 1,))
    np.cumsum(x, axis=-1, out=out[..., 1:])
    return out


def iterated_ito_mc(weights: WeightSpec, channels: Sequence[int], path: WienerPath):
    """Left-point discretization: S_a(n+1) = S_a(n) + psi_a(tau_n) S_{a-1}(tau_n) dw_n."""
    ch = _check_k(weights, channels)
    tau = path.grid[:-1]
    S = np.ones(path.batch_shape + (path.N + 1,))
    for a, i in enumerate(ch, start=1):
        S = _exclusive_cumsum(weights.psi(a, tau, path.interval.t) * S[..., :-1] * path.channel(i))
    return _out(S[..., -1])


def iterated_strat_mc(weights: WeightSpec, channels: Sequence[int], path: WienerPath):
    """Trapezoidal discretization:
    S_a(n+1) = S_a(n) + psi_a(mid_n) (S_{a-1}(n) + S_{a-1}(n+1))/2 dw_n.

    For k = 2, psi = 1 and equal channels this returns W^2/2 exactly.
    """
    ch = _check_k(weights, channels)
    mid = path.grid[:-1] + path.dt / 2
    S = np.ones(path.batch_shape + (path.N + 1,))
    for a, i in enumerate(ch, start=1):
        avg = (S[..., :-1] + S[..., 1:]) / 2
        S = _exclusive_cumsum(weights.psi(a, mid, path.interval.t) * avg * path.channel(i))
    return _out(S[..., -1])


def _out(x: np.ndarray):
    return float(x) if np.ndim(x) == 0 else x


# --- Riemann multiple Stratonovich sums -----------------------------------------


def _compositions(k: int):
    """Ordered splittings of 1..k into consecutive groups."""
    for cuts in range(1 << (k - 1)):
        groups, start = [], 1
        for a in range(1, k):
            if cuts >> (a - 1) & 1:
                groups.append(tuple(range(start, a + 1)))
                start = a + 1
        groups.append(tuple(range(start, k + 1)))
        yield groups


def _group_averages(kern: VolterraKernel, group: Sequence[int], N: int) -> np.ndarray:
    """(1/dt^g) int over {tau_{a_1} < ... < tau_{a_g}} inside each cell of prod psi_a."""
    exps = kern.weights.exponents
    rule = CumulativeRule(kern.interval, N, sum(exps[a - 1] for a in group) + len(group))
    t = kern.interval.t
    cur = kern.weights.psi(group[0], rule.nodes, t)
    for a in group[1:]:
        cur = rule.local_cumulative(cur) * kern.weights.psi(a, rule.nodes, t)
    return rule.panel_integrals(cur) / rule.panel_width ** len(group)


def _riemann_volterra(kern: VolterraKernel, ch: tuple, path: WienerPath) -> np.ndarray:
    """Cells ordered n_1 <= ... <= n_k; equal consecutive cells share the
    exact within-cell simplex average, distinct ones factorize."""
    total = np.zeros(path.batch_shape)
    for groups in _compositions(kern.k):
        prev = None
        for grp in groups:
            X = _group_averages(kern, grp, path.N)
            for a in grp:
                X = X * path.channel(ch[a - 1])
            prev = X if prev is None else X * _exclusive_cumsum(prev)[..., :-1]
        total = total + prev.sum(axis=-1)
    return total


def cell_average_tensor(kern: GeneralKernel | VolterraKernel, N: int, q: int = 4, max_entries: int = DEFAULT_MAX_ENTRIES) -> np.ndarray:
    """A[n_1, ..., n_k]: average of the kernel over the cell product, q Gauss points per cell and axis."""
    k = kern.k
    if N**k > max_entries:
        raise CapacityError(f"capacity: {N}^{k} cells exceed {max_entries}")
    x, w = np.polynomial.legendre.leggauss(q)
    dt = kern.interval.length / N
    nodes = (kern.interval.t + dt * np.arange(N)[:, None] + dt * (x + 1) / 2).ravel()
    wts = np.tile(w / 2, N)  # average weights inside a cell
    A = np.zeros((N,) * k)
    # one leading-axis block at a time keeps the evaluation grid small
    step = max(1, max_entries // max(1, (N * q) ** (k - 1)) // q)
    for c0 in range(0, N, step):
        c1 = min(N, c0 + step)
        lead = nodes[c0 * q : c1 * q]
        coords = [lead.reshape((-1,) + (1,) * (k - 1))]
        coords += [nodes.reshape((1,) * a + (-1,) + (1,) * (k - a - 1)) for a in range(1, k)]
        vals = np.asarray(kern(*coords), dtype=float)
        vals = np.broadcast_to(vals, (lead.size,) + (N * q,) * (k - 1))
        vals = vals * wts[: lead.size].reshape((-1,) + (1,) * (k - 1))
        for a in range(1, k):
            shape = [1] * k
            shape[a] = N * q
            vals = vals * wts.reshape(shape)
        A[c0:c1] = vals.reshape(sum(((n // q, q) for n in vals.shape), ())).sum(axis=tuple(range(1, 2 * k, 2)))
    return A


def riemann_multiple_strat(kern: GeneralKernel | VolterraKernel, channels: Sequence[int], path: WienerPath, q: int = 4):
    """sum over cell multi-indices of the cell-averaged kernel times prod dw.

    Volterra kernels use the exact ordered-cell recursion (cost O(2^k N)).
    General kernels build the dense cell-average tensor, limited to k <= 3
    and N^k within the entry cap.
    """
    ch = tuple(int(i) for i in channels)
    if len(ch) != kern.k:
        raise ContractError(f"{len(ch)} channels for an order-{kern.k} kernel")
    if kern.interval != path.interval:
        raise ContractError("kernel and path live on different intervals")
    if isinstance(kern, VolterraKernel):
        return _out(_riemann_volterra(kern, ch, path))
    if kern.k > 3:
        raise CapacityError("capacity: dense Riemann sums are limited to k <= 3")
    A = cell_average_tensor(kern, path.N, q)
    letters = "abc"[: kern.k]
    spec = letters + "," + ",".join(f"...{c}" for c in letters) + "->..."
    return _out(np.einsum(spec, A, *(path.channel(i) for i in ch), optimize=True))


# --- estimators ---------------------------------------------------------------------


def mc_estimate(values) -> MCEstimate:
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 2:
        raise DomainError("need at least two samples")
    return MCEstimate(float(np.mean(values)), float(np.var(values, ddof=1)), int(values.size))


def ms_error(
    sampler_a: Callable[[WienerPath], np.ndarray],
    sampler_b: Callable[[WienerPath], np.ndarray],
    paths: int,
    seed: int,
    m: int,
    N: int,
    interval: Interval = Interval(),
    workers: int = 1,
    block: int = DEFAULT_BLOCK,
) -> MCEstimate:
    """Estimate E[(a - b)^2] with both samplers fed the same paths.

    Paths are processed in fixed blocks; each block depends only on its
    path indices, and the squared differences are concatenated in path
    order before reduction, so the result does not depend on ``workers``.
    """
    if paths < 2:
        raise DomainError("need at least two paths")

    def run(start: int) -> np.ndarray:
        batch = simulate_paths(m, N, seed, min(block, paths - start), interval, start)
        return (np.asarray(sampler_a(batch)) - np.asarray(sampler_b(batch))) ** 2

    starts = range(0, paths, block)
    if workers <= 1:
        parts = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    return mc_estimate(np.concatenate([np.atleast_1d(x) for x in parts]))


def mc_sample(
    sampler: Callable[[WienerPath], np.ndarray],
    paths: int,
    seed: int,
    m: int,
    N: int,
    interval: Interval = Interval(),
    workers: int = 1,
    block: int = DEFAULT_BLOCK,
) -> np.ndarray:
    """Sampler values for paths 0..paths-1, in path order."""

    def run(start: int) -> np.ndarray:
        return np.atleast_1d(sampler(simulate_paths(m, N, seed, min(block, paths - start), interval, start)))

    starts = range(0, paths, block)
    if workers <= 1:
        parts = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    return np.concatenate(parts)


def coupled_ms_exact(tensor, N: int) -> float:
    """Exact E[(a - b)^2] for k = 2 with two distinct channels, where a is the
    product expansion fed by ``noise_from_path`` and b is ``iterated_strat_mc``
    with psi = 1, both on the same N-step path.

    Both are bilinear in the increments of independent channels, so the
    expectation is dt^2 ||A - D||_F^2 with A[n, m] = sum C phi(tau_n) phi(tau_m)
    and D the trapezoidal weights (1 above the diagonal, 1/2 on it).  The
    gap between this value and the continuum Parseval tail is the
    discretization bias of the coupled comparison.
    """
    if tensor.k != 2:
        raise ContractError("defined for order-2 tensors")
    interval = tensor.basis.interval
    dt = interval.length / N
    B = basis_matrix(tensor.basis, tensor.p, interval.t + dt * np.arange(N))  # (p+1, N)
    C = tensor.data
    G = B @ B.T
    norm_A = np.sum((G @ C @ G) * C)
    # (D B^T)[n] = sum_{m > n} B[:, m] + B[:, n] / 2
    tail = np.cumsum(B[:, ::-1], axis=1)[:, ::-1] - B
    DBt = (tail + B / 2).T  # (N, p+1)
    cross = np.sum(C * (B @ DBt))
    norm_D = N * (N - 1) / 2 + N / 4
    return float(dt**2 * (norm_A - 2 * cross + norm_D))
