"""
subsets.py

State-space primitives: a subset of the p columns stored as a machine-word bit mask, its
Hamming geometry, and deterministic enumeration of the state space {0,1}^p.

Columns are indexed from 0. Bit j of `Subset.bits` is set exactly when column j belongs to
the subset, so the numeric value of the bit pattern gives the canonical (ascending) order
used everywhere in the package, and doubles as the row index of a state in the exact
oracle matrices.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .errors import EnumerationTooLarge, StateSpaceTooLarge

MAX_WIDTH = 64
# Full enumeration guard; the exact oracle applies its own, much smaller cap.
DEFAULT_ENUMERATION_CAP = 2**24


@dataclass(frozen=True, order=True, slots=True)
class Subset:
    """
    Subset is an immutable member of {0,1}^p, identified with its indicator bit vector.

    Attributes:
        bits (int): Bit mask; bit j set means column j is a member.
        p (int): Dimension of the ambient state space, 1 <= p <= 64.

    Description:
        Instances are hashable value objects, which lets them key the posterior tables,
        the G-tree parent map and the loading tables directly. Every operation that
        "changes" a subset returns a new one.

    Usage:
        S = Subset.from_indices([0, 2], p=5)
        S.size           # 2
        S.flip(1)        # Subset {0,1,2}
        S.hamming(T)     # size of the symmetric difference
    """
    bits: int
    p: int

    def __post_init__(self):
        if not 1 <= self.p <= MAX_WIDTH:
            raise ValueError(f"Dimension p={self.p} is outside the supported range 1..{MAX_WIDTH}.")
        if not 0 <= self.bits < (1 << self.p):
            raise ValueError(f"Bit pattern {self.bits:#x} does not fit in p={self.p} bits.")

    @classmethod
    def from_indices(cls, indices: Iterable[int], p: int) -> "Subset":
        bits = 0
        for j in indices:
            j = int(j)
            if not 0 <= j < p:
                raise ValueError(f"Index {j} is outside 0..{p - 1}.")
            bits |= 1 << j
        return cls(bits, p)

    @classmethod
    def empty(cls, p: int) -> "Subset":
        return cls(0, p)

    @classmethod
    def full(cls, p: int) -> "Subset":
        return cls((1 << p) - 1, p)

    @property
    def size(self) -> int:
        return self.bits.bit_count()

    def __len__(self) -> int:
        return self.bits.bit_count()

    @property
    def indices(self) -> tuple:
        """Members in ascending order."""
        return tuple(j for j in range(self.p) if self.bits >> j & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, j) -> bool:
        return 0 <= j < self.p and bool(self.bits >> j & 1)

    def _check_same_width(self, other: "Subset"):
        if other.p != self.p:
            raise ValueError(f"Subsets live in different dimensions (p={self.p} and p={other.p}).")

    def flip(self, j: int) -> "Subset":
        if not 0 <= j < self.p:
            raise ValueError(f"Index {j} is outside 0..{self.p - 1}.")
        return Subset(self.bits ^ (1 << j), self.p)

    def union(self, other: "Subset") -> "Subset":
        self._check_same_width(other)
        return Subset(self.bits | other.bits, self.p)

    def intersection(self, other: "Subset") -> "Subset":
        self._check_same_width(other)
        return Subset(self.bits & other.bits, self.p)

    def difference(self, other: "Subset") -> "Subset":
        self._check_same_width(other)
        return Subset(self.bits & ~other.bits, self.p)

    def issubset(self, other: "Subset") -> bool:
        self._check_same_width(other)
        return self.bits & ~other.bits == 0

    def issuperset(self, other: "Subset") -> bool:
        return other.issubset(self)

    def isdisjoint(self, other: "Subset") -> bool:
        self._check_same_width(other)
        return self.bits & other.bits == 0

    def hamming(self, other: "Subset") -> int:
        self._check_same_width(other)
        return (self.bits ^ other.bits).bit_count()

    def hex(self) -> str:
        return f"{self.bits:0{(self.p + 3) // 4}x}"

    def __str__(self) -> str:
        return "{" + ",".join(str(j) for j in self.indices) + "}"


def hamming(S: Subset, S2: Subset) -> int:
    return S.hamming(S2)


def neighbors(S: Subset) -> list:
    """All p states at Hamming distance 1 from S, ordered by flipped index."""
    return [S.flip(j) for j in range(S.p)]


def count_states(p: int, max_size: Optional[int] = None) -> int:
    if max_size is None or max_size >= p:
        return 2**p
    return sum(math.comb(p, k) for k in range(max(max_size, -1) + 1))


def enumerate_states(p: int, max_size: Optional[int] = None, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[Subset]:
    """
    Yields every subset of {0..p-1} exactly once in ascending bit-pattern order,
    restricted to |S| <= max_size when given.

    Raises StateSpaceTooLarge for a full enumeration of more than `cap` states and
    EnumerationTooLarge when the size-filtered family itself exceeds the cap.
    """
    if max_size is None or max_size >= p:
        if 2**p > cap:
            raise StateSpaceTooLarge(p, cap)
        return (Subset(bits, p) for bits in range(2**p))

    count = count_states(p, max_size)
    if count > cap:
        raise EnumerationTooLarge(f"subsets of size <= {max_size} out of p={p}", count, cap)
    patterns = sorted(
        sum(1 << j for j in combo)
        for k in range(max_size + 1)
        for combo in itertools.combinations(range(p), k)
    )
    return (Subset(bits, p) for bits in patterns)


def states_of_size(p: int, k: int) -> Iterator[Subset]:
    """The layer {S : |S| = k}, ascending bit pattern within the layer."""
    patterns = sorted(sum(1 << j for j in combo) for combo in itertools.combinations(range(p), k))
    return (Subset(bits, p) for bits in patterns)
