"""Hu-Meyer decompositions and Itô/Stratonovich conversion on truncated expansions.

Forward: the spectral Stratonovich value splits into the multiple Wiener
part plus one term per pair partition whose pairs sit on equal nonzero
channels; each term is the multiple Wiener integral of a trace on the
free slots.  Inverse: the Wiener part equals the Stratonovich value plus
the same terms with sign (-1)^r, now evaluated as Stratonovich values.

Conversion: an iterated Itô integral becomes Stratonovich by adding, for
every set of non-adjacent levels (s_r, ..., s_1), 1/2^r times the reduced
integral in which slots s and s+1 merge into one dt-integration of
psi_s psi_{s+1}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .combinatorics import PairPartition, all_pair_partitions, enum_A
from .errors import ContractError
from .kernels import CoeffTensor, VolterraKernel, WeightSpec, coeff_tensor
from .traces import TraceTensor, bar_trace, breve_trace, partial_trace_array, tilde_trace
from .wiener import NoiseSample, _check_channels, _product_sum, _scalar, _wiener_sum, product_expansion

TRACE_SOURCES = ("limiting", "tilde", "breve", "bar")
DEFAULT_BAR_CELLS = 1024

Evaluator = Callable[[np.ndarray, tuple, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TraceTerm:
    partition: PairPartition
    active: bool
    value: float | np.ndarray


@dataclass(frozen=True)
class HuMeyerDecomposition:
    base_term: float | np.ndarray
    trace_terms: tuple[TraceTerm, ...]
    total: float | np.ndarray

    def active_terms(self) -> list[TraceTerm]:
        return [term for term in self.trace_terms if term.active]

    def to_dict(self) -> dict:
        return {
            "base": float(self.base_term),
            "terms": [
                {"pairs": [list(pair) for pair in term.partition.pairs], "active": term.active, "value": float(term.value)}
                for term in self.trace_terms
            ],
            "total": float(self.total),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class ConversionTerm:
    sr: tuple[int, ...]
    sign_weight: float
    reduced_weights: WeightSpec
    reduced_channels: tuple[int, ...]
    active: bool


# --- raw evaluators on coefficient arrays ------------------------------------------


def _free_channels(channels: tuple, partition: PairPartition) -> tuple:
    return tuple(channels[q - 1] for q in partition.free)


def _forward_raw(data: np.ndarray, channels: tuple, full: np.ndarray) -> np.ndarray:
    """Wiener part plus every active partial-trace term."""
    total = _wiener_sum(data, channels, full)
    for part in all_pair_partitions(data.ndim):
        if part.indicator(channels):
            trace = partial_trace_array(data, part)
            total = total + _wiener_sum(trace, _free_channels(channels, part), full)
    return total


def _inverse_raw(data: np.ndarray, channels: tuple, full: np.ndarray, strat: Evaluator = _product_sum) -> np.ndarray:
    """Stratonovich value plus (-1)^r times the active partial-trace terms."""
    total = strat(data, channels, full)
    for part in all_pair_partitions(data.ndim):
        if part.indicator(channels):
            trace = partial_trace_array(data, part)
            total = total + (-1) ** part.r * strat(trace, _free_channels(channels, part), full)
    return total


# --- public Hu-Meyer operations ---------------------------------------------------


def stratonovich_spectral(tensor: CoeffTensor, channels: Sequence[int], noise: NoiseSample):
    """Spectral multiple Stratonovich integral: the product expansion sum C prod zeta."""
    return product_expansion(tensor, channels, noise)


def _setup(tensor: CoeffTensor, channels, noise: NoiseSample, p: int | None):
    p = tensor.p if p is None else p
    tensor = tensor.truncate(p)
    if tensor.p > noise.p:
        raise ContractError(f"tensor p={tensor.p} exceeds noise p={noise.p}")
    if tensor.basis != noise.basis:
        raise ContractError("tensor and noise use different bases")
    ch = _check_channels(channels, tensor.k, noise.m)
    return tensor, ch, noise.truncate(p).full()


def trace_for(tensor: CoeffTensor, partition: PairPartition, source: str, bar_cells: int = DEFAULT_BAR_CELLS) -> TraceTensor:
    """Trace of the requested kind truncated at tensor.p."""
    if source == "limiting":
        return TraceTensor(tensor.basis, tensor.p, partial_trace_array(tensor.data, partition), partition.free)
    kern = tensor.source
    if source == "tilde":
        return tilde_trace(tensor.basis, kern, partition, tensor.p)
    if source == "breve":
        return breve_trace(kern, partition, tensor.p, tensor.basis)
    if source == "bar":
        return bar_trace(kern, partition, bar_cells, tensor.p, tensor.basis)
    raise ContractError(f"unknown trace source {source!r}; expected one of {TRACE_SOURCES}")


def hu_meyer_forward(
    tensor: CoeffTensor,
    channels: Sequence[int],
    noise: NoiseSample,
    trace_source: str = "limiting",
    p: int | None = None,
    bar_cells: int = DEFAULT_BAR_CELLS,
) -> HuMeyerDecomposition:
    """Decompose the spectral Stratonovich value at truncation p.

    With limiting (p-partial) traces the total equals the product
    expansion up to rounding.  The other trace sources replace the partial
    traces by their limits, so their totals differ from it by truncation
    effects (and, for breve traces of Volterra kernels, by the missing
    diagonal mass).
    """
    tensor, ch, full = _setup(tensor, channels, noise, p)
    base = _wiener_sum(tensor.data, ch, full)
    terms, total = [], base
    for part in all_pair_partitions(tensor.k):
        active = part.indicator(ch)
        if active:
            trace = trace_for(tensor, part, trace_source, bar_cells)
            value = _wiener_sum(trace.data, _free_channels(ch, part), full)
            total = total + value
        else:
            value = np.zeros(noise.batch_shape)
        terms.append(TraceTerm(part, active, _scalar(value)))
    return HuMeyerDecomposition(_scalar(base), tuple(terms), _scalar(total))


def hu_meyer_inverse(
    tensor: CoeffTensor,
    channels: Sequence[int],
    noise: NoiseSample,
    p: int | None = None,
    trace_source: str = "limiting",
):
    """Multiple Wiener part recovered from spectral Stratonovich values.

    Partial (limiting) traces make the identity exact at every p.  A tilde
    trace source reproduces the literal limit form, which is exact only as
    p grows.
    """
    tensor, ch, full = _setup(tensor, channels, noise, p)
    if trace_source == "limiting":
        return _scalar(_inverse_raw(tensor.data, ch, full))
    total = _product_sum(tensor.data, ch, full)
    for part in all_pair_partitions(tensor.k):
        if part.indicator(ch):
            trace = trace_for(tensor, part, trace_source)
            total = total + (-1) ** part.r * _product_sum(trace.data, _free_channels(ch, part), full)
    return _scalar(total)


def hu_meyer_round_trip(tensor: CoeffTensor, channels: Sequence[int], noise: NoiseSample, p: int | None = None):
    """(Wiener part, Wiener part recovered by the inverse formula when every
    Stratonovich value it needs comes from the forward formula)."""
    tensor, ch, full = _setup(tensor, channels, noise, p)
    base = _wiener_sum(tensor.data, ch, full)
    recovered = _inverse_raw(tensor.data, ch, full, strat=_forward_raw)
    return _scalar(base), _scalar(recovered)


# --- conversion -------------------------------------------------------------------


def reduce_levels(exponents: Sequence[int], channels: Sequence[int], sr: Sequence[int]):
    """Merge slots (s, s+1) into one channel-0 slot for each s, largest s first."""
    exps, ch = list(exponents), list(channels)
    for s in sorted(sr, reverse=True):
        exps[s - 1 : s + 1] = [exps[s - 1] + exps[s]]
        ch[s - 1 : s + 1] = [0]
    return tuple(exps), tuple(ch)


def conversion_terms(weights: WeightSpec, channels: Sequence[int], direction: str = "ito_to_strat") -> list[ConversionTerm]:
    """One term per (s_r, ..., s_1) in A(k, r), r = 1..k/2."""
    if direction not in ("ito_to_strat", "strat_to_ito"):
        raise ContractError(f"unknown direction {direction!r}")
    k = weights.k
    ch = tuple(int(i) for i in channels)
    if len(ch) != k:
        raise ContractError(f"{len(ch)} channels for an order-{k} integral")
    sign = 1.0 if direction == "ito_to_strat" else -1.0
    out = []
    for r in range(1, k // 2 + 1):
        for sr in enum_A(k, r):
            exps, red = reduce_levels(weights.exponents, ch, sr)
            active = all(ch[s - 1] == ch[s] != 0 for s in sr)
            out.append(ConversionTerm(sr, sign**r / 2**r, WeightSpec(exps), red, active))
    return out


def _reduced_tensor(tensor: CoeffTensor, weights: WeightSpec, cache: dict) -> CoeffTensor:
    if weights not in cache:
        kern = VolterraKernel(weights, tensor.basis.interval)
        cache[weights] = coeff_tensor(tensor.basis, kern, tensor.p)
    return cache[weights]


def _convert(tensor: CoeffTensor, ch: tuple, direction: str, cache: dict, base_eval) -> np.ndarray:
    """base_eval(tensor, channels) for the kernel plus the active conversion terms."""
    total = base_eval(tensor, ch)
    for term in conversion_terms(tensor.source.weights, ch, direction):
        if term.active:
            red = _reduced_tensor(tensor, term.reduced_weights, cache)
            total = total + term.sign_weight * base_eval(red, term.reduced_channels)
    return total


def _volterra_setup(tensor: CoeffTensor, channels, noise: NoiseSample):
    if not isinstance(tensor.source, VolterraKernel):
        raise ContractError("conversion needs a Volterra-kernel tensor")
    return _setup(tensor, channels, noise, None)


def convert_expansion(tensor: CoeffTensor, channels: Sequence[int], noise: NoiseSample, direction: str = "ito_to_strat"):
    """Itô -> Stratonovich (or back) with every integral truncated at tensor.p.

    ``ito_to_strat`` returns J + sum 1/2^r J[reduced] using truncated Itô
    expansions; ``strat_to_ito`` returns J* + sum (-1/2)^r J*[reduced] using
    spectral Stratonovich values.
    """
    tensor, ch, full = _volterra_setup(tensor, channels, noise)
    raw = _wiener_sum if direction == "ito_to_strat" else _product_sum
    return _scalar(_convert(tensor, ch, direction, {}, lambda T, c: raw(T.data, c, full)))


def convert_round_trip(tensor: CoeffTensor, channels: Sequence[int], noise: NoiseSample):
    """(truncated Itô value, Itô value recovered by strat_to_ito applied to
    Stratonovich values that were themselves produced by ito_to_strat)."""
    tensor, ch, full = _volterra_setup(tensor, channels, noise)
    cache: dict = {}

    def ito(T, c):
        return _wiener_sum(T.data, c, full)

    def strat_via_forward(T, c):
        return _convert(T, c, "ito_to_strat", cache, ito)

    recovered = _convert(tensor, ch, "strat_to_ito", cache, strat_via_forward)
    return _scalar(ito(tensor, ch)), _scalar(recovered)
