"""Gaussian moment synthesis by pairing sums and Gaussianity testing.

Gaussian data is a mean vector plus the matrix of second central
moments.  The matrix is not symmetric: its skew part is pinned by the
canonical commutation relations, and the pair factors below always
take the row index from the earlier slot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import symplectic_form
from .moments import MomentHierarchy
from .partitions import mean_pair_splits, pairings
from .moments import _LETTERS


@dataclass(frozen=True)
class GaussianData:
    """Mean vector and matrix of second central moments."""

    mean: np.ndarray
    second: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=complex)
        second = np.asarray(self.second, dtype=complex)
        if mean.ndim != 1 or mean.size % 2 or second.shape != (mean.size, mean.size):
            raise ValueError("mean must be a 2n vector and second a matching square matrix")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "second", second)

    @property
    def n(self) -> int:
        return self.mean.size // 2

    def skew_defect(self) -> float:
        """Max-abs deviation of the skew part from the commutation value."""
        J = symplectic_form(self.n)
        return float(np.abs(self.second - self.second.T + J).max())

    def covariance(self) -> np.ndarray:
        return (self.second + self.second.T) / 2


def pairing_sum(second: np.ndarray, idx) -> complex:
    """Sum over perfect matchings of the slots of idx of products of
    second-moment entries; 0 for odd length, 1 for the empty tuple."""
    idx = tuple(int(i) for i in idx)
    second = np.asarray(second, dtype=complex)
    if len(idx) % 2 == 1:
        return 0.0 + 0.0j
    total = 0.0 + 0.0j
    for match in pairings(range(len(idx))):
        prod = 1.0 + 0.0j
        for a, b in match:
            prod *= second[idx[a], idx[b]]
        total += prod
    return total


def gaussian_hierarchy(g: GaussianData, m: int, tol_ccr: float = 1e-8) -> MomentHierarchy:
    """Moment hierarchy of Gaussian data up to order m.

    Every order sums, over all splits of its slots into mean slots and
    matched pairs, the product of mean entries and pair entries.
    """
    if tol_ccr is not None:
        defect = g.skew_defect()
        scale = max(1.0, float(np.abs(g.second).max()))
        if defect > tol_ccr * scale:
            raise ValueError(
                f"second-moment skew part violates the commutation constraint by {defect:.3e}"
            )
    dim = 2 * g.n
    tensors = [np.ones((), dtype=complex)]
    for order in range(1, m + 1):
        acc = np.zeros((dim,) * order, dtype=complex)
        out = "".join(_LETTERS[:order])
        for mean_slots, pairs in mean_pair_splits(order):
            operands, subs = [], []
            for s in mean_slots:
                operands.append(g.mean)
                subs.append(_LETTERS[s])
            for a, b in pairs:
                operands.append(g.second)
                subs.append(_LETTERS[a] + _LETTERS[b])
            acc += np.einsum(",".join(subs) + "->" + out, *operands)
        tensors.append(acc)
    return MomentHierarchy(g.n, tensors)


def gaussian_data_of(hier: MomentHierarchy) -> GaussianData:
    """Mean and second central moment read off a hierarchy."""
    if hier.order < 2:
        raise ValueError("hierarchy must hold at least order 2")
    mu = hier.tensors[1]
    return GaussianData(mu, hier.tensors[2] - np.outer(mu, mu))


def gaussianity_residual(hier: MomentHierarchy) -> float:
    """Largest deviation of orders 3..m from the Gaussian moments that
    the hierarchy's own mean and second central moment predict."""
    if hier.order < 3:
        raise ValueError("need at least order 3 to test Gaussianity")
    rebuilt = gaussian_hierarchy(gaussian_data_of(hier), hier.order, tol_ccr=None)
    worst = 0.0
    for k in range(3, hier.order + 1):
        worst = max(worst, float(np.abs(hier.tensors[k] - rebuilt.tensors[k]).max()))
    return worst
