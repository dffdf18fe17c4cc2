"""Moment hierarchies of ordered operator products and their dynamics.

A hierarchy holds one dense tensor per order k = 0..m, each of shape
(2n,)^k over phase indices, entry (i_1..i_k) being the expectation of
the ordered product of phase operators i_1..i_k.  The order-0 entry is
the constant 1, which turns the affine dynamics into a linear one.
Operator order matters, so no symmetry reduction is applied.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .partitions import MAX_ORDER, triple_partitions
from .propagators import DriftData, PropagatorBundle

_LETTERS = string.ascii_lowercase


@dataclass
class MomentHierarchy:
    """Ordered moment tensors for orders 0..m over 2n phase indices."""

    n: int
    tensors: list

    def __post_init__(self):
        dim = 2 * self.n
        fixed = []
        for k, T in enumerate(self.tensors):
            arr = np.asarray(T, dtype=complex)
            if arr.shape != (dim,) * k:
                raise ValueError(f"order-{k} tensor has shape {arr.shape}, expected {(dim,) * k}")
            fixed.append(arr)
        if not fixed:
            raise ValueError("hierarchy needs at least the order-0 entry")
        if not np.isclose(complex(fixed[0]), 1.0):
            raise ValueError("order-0 entry must be 1")
        self.tensors = fixed

    @property
    def order(self) -> int:
        return len(self.tensors) - 1

    @property
    def dim(self) -> int:
        return 2 * self.n

    @classmethod
    def zeros(cls, n: int, m: int) -> "MomentHierarchy":
        dim = 2 * n
        tensors = [np.ones((), dtype=complex)]
        tensors += [np.zeros((dim,) * k, dtype=complex) for k in range(1, m + 1)]
        return cls(n, tensors)

    def copy(self) -> "MomentHierarchy":
        return MomentHierarchy(self.n, [T.copy() for T in self.tensors])

    def flatten(self) -> np.ndarray:
        return np.concatenate([T.reshape(-1) for T in self.tensors])

    @classmethod
    def from_flat(cls, n: int, m: int, vec: np.ndarray) -> "MomentHierarchy":
        dim = 2 * n
        tensors, pos = [], 0
        for k in range(m + 1):
            size = dim**k
            tensors.append(np.asarray(vec[pos:pos + size], dtype=complex).reshape((dim,) * k))
            pos += size
        if pos != len(vec):
            raise ValueError("flat vector length does not match (n, m)")
        return cls(n, tensors)


def apply_slotwise(M: np.ndarray, T: np.ndarray, slot: int) -> np.ndarray:
    """Contract matrix M into tensor slot: out[..i..] = sum_j M[i,j] T[..j..]."""
    return np.moveaxis(np.tensordot(M, T, axes=([1], [slot])), 0, slot)


def insert_vector(v: np.ndarray, T: np.ndarray, slot: int) -> np.ndarray:
    """Raise order by one, placing vector v at the given slot."""
    return np.moveaxis(np.multiply.outer(v, T), 0, slot)


def insert_pair(M: np.ndarray, T: np.ndarray, pair) -> np.ndarray:
    """Raise order by two, placing matrix M at the (row, column) slots."""
    a, b = pair
    return np.moveaxis(np.multiply.outer(M, T), (0, 1), (a, b))


def heisenberg_rhs(hier: MomentHierarchy, drift: DriftData) -> MomentHierarchy:
    """Time derivative of the hierarchy under a quadratic generator.

    Order k picks up the flow matrix on every slot, the drive vector
    inserted at every slot against the order k-1 tensor, and the pair
    noise inserted at every ascending slot pair against order k-2.
    """
    if drift.dim != hier.dim:
        raise ValueError(f"drift dimension {drift.dim} does not match hierarchy {hier.dim}")
    out = [np.zeros((), dtype=complex)]
    for k in range(1, hier.order + 1):
        T = hier.tensors[k]
        dT = np.zeros_like(T)
        for s in range(k):
            dT += apply_slotwise(drift.B, T, s)
            dT += insert_vector(drift.phi, hier.tensors[k - 1], s)
        for a, b in combinations(range(k), 2):
            dT += insert_pair(drift.xi, hier.tensors[k - 2], (a, b))
        out.append(dT)
    rhs = MomentHierarchy.__new__(MomentHierarchy)
    rhs.n = hier.n
    rhs.tensors = out  # bypass the order-0 = 1 check: this is a derivative
    return rhs


def _partition_term(term, drive, pair, initial_tensors) -> np.ndarray:
    """Evaluate one partition summand as an outer product with slots
    placed at their original positions."""
    operands, subs = [], []
    for s in term.drive_slots:
        operands.append(drive)
        subs.append(_LETTERS[s])
    for a, b in term.pairs:
        operands.append(pair)
        subs.append(_LETTERS[a] + _LETTERS[b])
    if term.initial_slots:
        operands.append(initial_tensors[term.initial_order])
        subs.append("".join(_LETTERS[s] for s in term.initial_slots))
    # an empty initial set contributes the scalar 1
    order = len(term.drive_slots) + 2 * len(term.pairs) + len(term.initial_slots)
    out = "".join(_LETTERS[s] for s in range(order))
    return np.einsum(",".join(subs) + "->" + out, *operands)


def evolve_hierarchy(initial: MomentHierarchy, bundle: PropagatorBundle, t: float) -> MomentHierarchy:
    """Closed-form hierarchy at a bundle grid time.

    Each order sums over all splits of its slots into drive slots,
    paired noise slots and initial-moment slots; the propagator then
    dresses every slot of the result.
    """
    return _evolve_at_index(initial, bundle, bundle.index_of(t))


def _evolve_at_index(initial: MomentHierarchy, bundle: PropagatorBundle, k: int) -> MomentHierarchy:
    if bundle.dim != initial.dim:
        raise ValueError("bundle and hierarchy dimensions differ")
    G = bundle.G[k]
    drive = bundle.drive[k]
    pair = bundle.pair_kernel[k]
    tensors = [np.ones((), dtype=complex)]
    for order in range(1, initial.order + 1):
        acc = np.zeros((initial.dim,) * order, dtype=complex)
        for term in triple_partitions(order):
            acc += _partition_term(term, drive, pair, initial.tensors)
        for s in range(order):
            acc = apply_slotwise(G, acc, s)
        tensors.append(acc)
    return MomentHierarchy(initial.n, tensors)


def evolve_trajectory(initial: MomentHierarchy, bundle: PropagatorBundle) -> list:
    """Hierarchy at every bundle grid time."""
    return [_evolve_at_index(initial, bundle, k) for k in range(len(bundle.times))]


def central_second_moment(hier: MomentHierarchy) -> np.ndarray:
    """Matrix of second central moments: order-2 tensor minus the outer
    product of the first moments."""
    if hier.order < 2:
        raise ValueError("hierarchy must hold at least order 2")
    mu = hier.tensors[1]
    return hier.tensors[2] - np.outer(mu, mu)


def ccr_defect(hier: MomentHierarchy) -> float:
    """Max-abs violation of the commutation constraint on order 2."""
    from .algebra import symplectic_form

    if hier.order < 2:
        raise ValueError("hierarchy must hold at least order 2")
    T2 = hier.tensors[2]
    return float(np.abs(T2 - T2.T + symplectic_form(hier.n)).max())


def max_relative_error(a: MomentHierarchy, b: MomentHierarchy, floor: float = 1.0) -> float:
    """Largest entrywise deviation |a - b| / (floor + |b|) over all orders."""
    if a.order != b.order or a.dim != b.dim:
        raise ValueError("hierarchies are not comparable")
    worst = 0.0
    for Ta, Tb in zip(a.tensors, b.tensors):
        err = np.abs(Ta - Tb) / (floor + np.abs(Tb))
        if err.size:
            worst = max(worst, float(err.max()))
    return worst
