"""Spectral Gaussians, Hermite realization of multiple Wiener integrals and
truncated expansions.

A NoiseSample holds zeta[i, j] = int phi_j dw^(i) for channels i = 1..m.
Channel 0 is the time channel (w^(0)_tau = tau); its "Gaussians" are the
deterministic integrals F_j(T) = int_t^T phi_j.

Evaluators accept a leading batch axis in ``zeta`` so that many noise
draws can be processed at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import BasisSpec, full_integrals
from .errors import ContractError, DomainError
from .kernels import CoeffTensor

# flat indices are processed in chunks of this many entries
_CHUNK = 1 << 15


@dataclass(frozen=True)
class NoiseSample:
    """zeta has shape (m, p+1), or (batch, m, p+1) for several draws."""

    m: int
    p: int
    zeta: np.ndarray = field(repr=False)
    basis: BasisSpec = BasisSpec()

    def __post_init__(self):
        z = np.asarray(self.zeta, dtype=float)
        if z.shape[-2:] != (self.m, self.p + 1):
            raise ContractError(f"zeta shape {z.shape} does not match m={self.m}, p={self.p}")
        z.setflags(write=False)
        object.__setattr__(self, "zeta", z)

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.zeta.shape[:-2]

    def full(self) -> np.ndarray:
        """(..., m+1, p+1) table with the deterministic channel 0 in row 0."""
        row0 = np.broadcast_to(full_integrals(self.basis, self.p), self.batch_shape + (1, self.p + 1))
        return np.concatenate([row0, self.zeta], axis=-2)

    def truncate(self, p: int) -> NoiseSample:
        if p > self.p:
            raise ContractError(f"noise only holds p={self.p}")
        return NoiseSample(self.m, p, self.zeta[..., : p + 1], self.basis)


def sample_noise(m: int, p: int, seed: int, basis: BasisSpec = BasisSpec(), size: int | None = None) -> NoiseSample:
    """Standard normal zeta_j^(i) with one stream per channel.

    Channel i draws from a generator keyed by (seed, i); within a channel
    the draws for j = 0, 1, 2, ... come in order (``size`` at a time), so a
    larger p extends the table without touching existing entries and the
    value of zeta_j^(i) does not depend on m.
    """
    if m < 1 or p < 0:
        raise DomainError("need m >= 1 and p >= 0")
    if seed < 0:
        raise DomainError("seed must be nonnegative")
    n = 1 if size is None else int(size)
    rows = []
    for i in range(1, m + 1):
        gen = np.random.default_rng(np.random.SeedSequence([seed, i]))
        rows.append(np.stack([gen.standard_normal(n) for _ in range(p + 1)], axis=-1))
    zeta = np.stack(rows, axis=1)  # (n, m, p+1)
    if size is None:
        zeta = zeta[0]
    return NoiseSample(m, p, zeta, basis)


def hermite(n: int, x):
    """Probabilists' Hermite polynomial He_n."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    return hermite_table(n, x)[n] if np.ndim(x) else float(hermite_table(n, x)[n])


def hermite_table(n: int, x) -> np.ndarray:
    """He_0..He_n at x, shape (n+1, *x.shape)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n + 1,) + x.shape)
    out[0] = 1.0
    if n >= 1:
        out[1] = x
    for q in range(1, n):
        out[q + 1] = x * out[q] - q * out[q - 1]
    return out


def _check_channels(channels: Sequence[int], k: int, m: int) -> tuple[int, ...]:
    ch = tuple(int(i) for i in channels)
    if len(ch) != k:
        raise ContractError(f"{len(ch)} channels for an order-{k} integral")
    if any(i < 0 or i > m for i in ch):
        raise ContractError(f"channels must lie in 0..{m}")
    return ch


def _flat_indices(p: int, k: int, start: int, stop: int) -> np.ndarray:
    """Multi-indices (j_1, ..., j_k) for flat positions start..stop-1, j_1 fastest."""
    flat = np.arange(start, stop)
    return np.stack(np.unravel_index(flat, (p + 1,) * k, order="F"), axis=-1) if k else np.zeros((stop - start, 0), int)


def _product_sum(data: np.ndarray, channels: tuple[int, ...], full: np.ndarray) -> np.ndarray:
    """sum_j data[j] prod_a full[i_a, j_a] in flat layout order."""
    k = data.ndim
    if k == 0:
        return np.broadcast_to(data, full.shape[:-2]).astype(float)
    p = data.shape[0] - 1
    flat = data.ravel(order="F")
    total = np.zeros(full.shape[:-2])
    for start in range(0, flat.size, _CHUNK):
        stop = min(start + _CHUNK, flat.size)
        J = _flat_indices(p, k, start, stop)
        prod = np.ones(full.shape[:-2] + (stop - start,))
        for a, i in enumerate(channels):
            prod = prod * full[..., i, J[:, a]]
        total = total + prod @ flat[start:stop]
    return total


def _wiener_sum(data: np.ndarray, channels: tuple[int, ...], full: np.ndarray) -> np.ndarray:
    """sum_j data[j] J'[phi_{j_1} ... phi_{j_k}] with the Hermite realization.

    Slots sharing (i, j) with i != 0 form a group of multiplicity n and
    contribute He_n(zeta_j^(i)) once; channel-0 slots contribute F_j(T).
    """
    k = data.ndim
    if k == 0:
        return np.broadcast_to(data, full.shape[:-2]).astype(float)
    p = data.shape[0] - 1
    H = np.moveaxis(hermite_table(k, full), 0, -3)  # (..., k+1, m+1, p+1)
    ch = np.asarray(channels)
    flat = data.ravel(order="F")
    total = np.zeros(full.shape[:-2])
    for start in range(0, flat.size, _CHUNK):
        stop = min(start + _CHUNK, flat.size)
        J = _flat_indices(p, k, start, stop)
        # same (i, j) key, channel 0 never groups
        same = (J[:, :, None] == J[:, None, :]) & (ch[:, None] == ch[None, :]) & (ch[:, None] != 0)
        mult = same.sum(axis=2)
        earlier = np.tril(np.ones((k, k), bool), -1)
        leader = ~(same & earlier[None]).any(axis=2)
        prod = np.ones(full.shape[:-2] + (stop - start,))
        for a, i in enumerate(channels):
            if i == 0:
                prod = prod * full[..., 0, J[:, a]]
            else:
                n = np.where(leader[:, a], mult[:, a], 0)
                prod = prod * H[..., n, i, J[:, a]]
        total = total + prod @ flat[start:stop]
    return total


def multiple_wiener_elementary(channels: Sequence[int], jvec: Sequence[int], noise: NoiseSample):
    """J'[phi_{j_1} ... phi_{j_k}]^{(i_1 ... i_k)} for one multi-index."""
    jvec = tuple(int(j) for j in jvec)
    ch = _check_channels(channels, len(jvec), noise.m)
    if jvec and max(jvec) > noise.p:
        raise ContractError(f"index exceeds noise truncation p={noise.p}")
    full = noise.full()
    out = np.ones(noise.batch_shape)
    counts: dict = {}
    for i, j in zip(ch, jvec):
        if i != 0:
            counts[(i, j)] = counts.get((i, j), 0) + 1
        else:
            out = out * full[..., 0, j]
    for (i, j), n in counts.items():
        out = out * hermite_table(n, full[..., i, j])[n]
    return float(out) if out.ndim == 0 else out


def _prepare(tensor: CoeffTensor, channels, noise: NoiseSample):
    if tensor.p > noise.p:
        raise ContractError(f"tensor p={tensor.p} exceeds noise p={noise.p}")
    if tensor.basis != noise.basis:
        raise ContractError("tensor and noise use different bases")
    ch = _check_channels(channels, tensor.k, noise.m)
    return ch, noise.truncate(tensor.p).full()


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def product_expansion(tensor: CoeffTensor, channels: Sequence[int], noise: NoiseSample):
    """sum C_{j_k ... j_1} zeta_{j_1}^(i_1) ... zeta_{j_k}^(i_k) over all j <= tensor.p."""
    ch, full = _prepare(tensor, channels, noise)
    return _scalar(_product_sum(tensor.data, ch, full))


def ito_truncated(tensor: CoeffTensor, channels: Sequence[int], noise: NoiseSample):
    """sum C_{j_k ... j_1} J'[phi_{j_1} ... phi_{j_k}]: the truncated Itô expansion."""
    ch, full = _prepare(tensor, channels, noise)
    return _scalar(_wiener_sum(tensor.data, ch, full))
