"""Pair partitions of {1, ..., k} and the non-adjacent level sets A(k, r).

Slots are 1-based throughout, matching the usual labelling of the levels of
an iterated integral (slot 1 is the innermost integration).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import ContractError, DomainError


@dataclass(frozen=True)
class PairPartition:
    """r unordered pairs plus the ascending list of free slots."""

    k: int
    pairs: tuple[tuple[int, int], ...]
    free: tuple[int, ...]

    def __post_init__(self):
        seen = [g for pair in self.pairs for g in pair] + list(self.free)
        if sorted(seen) != list(range(1, self.k + 1)):
            raise ContractError(f"pairs {self.pairs} and free {self.free} do not cover 1..{self.k}")
        if any(len(pair) != 2 for pair in self.pairs):
            raise ContractError("every pair needs exactly two slots")

    @classmethod
    def from_pairs(cls, k: int, pairs) -> PairPartition:
        """Build a canonical partition from any iterable of 2-element pairs."""
        canon = tuple(sorted(tuple(sorted(int(g) for g in pair)) for pair in pairs))
        used = {g for pair in canon for g in pair}
        free = tuple(q for q in range(1, k + 1) if q not in used)
        return cls(k, canon, free)

    @property
    def r(self) -> int:
        return len(self.pairs)

    def canonical(self) -> PairPartition:
        return PairPartition.from_pairs(self.k, self.pairs)

    @property
    def adjacent(self) -> bool:
        return all(b == a + 1 for a, b in self.pairs)

    def label(self) -> str:
        if not self.pairs:
            return "-"
        return ",".join(f"{a}-{b}" for a, b in self.pairs)

    def indicator(self, channels) -> bool:
        """prod_s 1{i_g = i_g' != 0} over the pairs (channels are 1-based by slot)."""
        return all(channels[a - 1] == channels[b - 1] != 0 for a, b in self.pairs)


def partition_count(k: int, r: int) -> int:
    return math.factorial(k) // (2**r * math.factorial(r) * math.factorial(k - 2 * r))


def _matchings(items: tuple[int, ...]):
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for i, other in enumerate(rest):
        for tail in _matchings(rest[:i] + rest[i + 1:]):
            yield ((first, other),) + tail


@lru_cache(maxsize=None)
def _enum(k: int, r: int) -> tuple[PairPartition, ...]:
    out = []
    for chosen in itertools.combinations(range(1, k + 1), 2 * r):
        for m in _matchings(chosen):
            out.append(PairPartition.from_pairs(k, m))
    out.sort(key=lambda part: part.pairs)
    return tuple(out)


def enum_pair_partitions(k: int, r: int) -> list[PairPartition]:
    """All partitions of {1..k} into r pairs and k-2r free slots.

    Ordered lexicographically by the sorted pair list.
    """
    if k < 0 or r < 0 or 2 * r > k:
        raise DomainError(f"no pair partitions with k={k}, r={r}")
    return list(_enum(k, r))


def all_pair_partitions(k: int) -> list[PairPartition]:
    """Partitions with r = 1..[k/2], r-major."""
    return [part for r in range(1, k // 2 + 1) for part in _enum(k, r)]


def enum_A(k: int, r: int) -> list[tuple[int, ...]]:
    """Tuples (s_r, ..., s_1) with s_{l} > s_{l-1} + 1 and s in 1..k-1."""
    if not 1 <= r <= k // 2:
        raise DomainError(f"r={r} outside 1..{k // 2}")
    out = []
    for combo in itertools.combinations(range(1, k), r):
        if all(b > a + 1 for a, b in zip(combo, combo[1:])):
            out.append(tuple(reversed(combo)))
    return out


def adjacent_to_sr(partition: PairPartition) -> tuple[int, ...] | None:
    """(s_r, ..., s_1) with s_i the lower slot of each pair, or None if any pair is non-adjacent."""
    if not partition.adjacent:
        return None
    return tuple(sorted((a for a, _ in partition.pairs), reverse=True))


def sr_to_partition(k: int, sr) -> PairPartition:
    return PairPartition.from_pairs(k, [(s, s + 1) for s in sr])
