"""Slot-pattern combinatorics shared by the moment machinery.

Patterns are abstract: they refer to slot positions 0..m-1 of an
ordered operator product, independent of the phase dimension.  Pairs
are always stored with ascending slot indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

MAX_ORDER = 8


class OrderTooLargeError(ValueError):
    """Requested moment order exceeds the combinatorial guard."""


def pairings(items):
    """Yield all perfect matchings of items as tuples of ascending pairs.

    Yields nothing for an odd number of items; yields the empty tuple
    once for no items.
    """
    items = tuple(items)
    if len(items) % 2 == 1:
        return
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for k, partner in enumerate(rest):
        head = (first, partner) if first < partner else (partner, first)
        remaining = rest[:k] + rest[k + 1:]
        for tail in pairings(remaining):
            yield (head,) + tail


@dataclass(frozen=True)
class PartitionTerm:
    """One summand of the moment solution: drive slots, noise pairs,
    and the slots carrying the initial moment."""

    drive_slots: tuple
    pairs: tuple
    initial_slots: tuple

    @property
    def initial_order(self) -> int:
        return len(self.initial_slots)


@lru_cache(maxsize=None)
def triple_partitions(order: int, max_order: int = MAX_ORDER) -> tuple:
    """Enumerate all splits of slots 0..order-1 into drive slots, paired
    noise slots (with an explicit perfect matching), and initial slots.

    Each (drive set, matching, initial set) appears exactly once.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    if order > max_order:
        raise OrderTooLargeError(
            f"moment order {order} exceeds the guard {max_order}; "
            "the partition count grows factorially"
        )
    slots = tuple(range(order))
    terms = []
    for paired_size in range(0, order + 1, 2):
        for paired in combinations(slots, paired_size):
            rest = tuple(s for s in slots if s not in paired)
            for match in pairings(paired):
                for drive_size in range(len(rest) + 1):
                    for drive in combinations(rest, drive_size):
                        initial = tuple(s for s in rest if s not in drive)
                        terms.append(PartitionTerm(drive, match, initial))
    return tuple(terms)


@lru_cache(maxsize=None)
def mean_pair_splits(order: int, max_order: int = MAX_ORDER) -> tuple:
    """Enumerate splits of slots 0..order-1 into mean slots and paired
    slots with an explicit matching (the Gaussian moment expansion)."""
    if order > max_order:
        raise OrderTooLargeError(
            f"moment order {order} exceeds the guard {max_order}"
        )
    slots = tuple(range(order))
    splits = []
    for paired_size in range(0, order + 1, 2):
        for paired in combinations(slots, paired_size):
            mean = tuple(s for s in slots if s not in paired)
            for match in pairings(paired):
                splits.append((mean, match))
    return tuple(splits)
