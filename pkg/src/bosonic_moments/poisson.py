"""Moment dynamics under Poisson-averaged quadratic generators.

Averaging the quadratic dynamics over a classical jump process of rate
lambda yields a generator built from the one-step channel at unit jump
duration.  Moments of order k then couple only to orders below k, so
the stacked hierarchy obeys a block lower-triangular linear system that
can be solved either by one stacked matrix exponential or order by
order through convolution integrals.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import expm

from .algebra import QuadraticGenerator
from .moments import MomentHierarchy, _LETTERS, central_second_moment
from .partitions import OrderTooLargeError, triple_partitions
from .propagators import (
    dressed_pair_integral_constant,
    drift_data,
    drive_integral_constant,
    pair_integral_constant,
)

MAX_ORDER_POISSON = 5


@dataclass(frozen=True)
class PoissonProcessSpec:
    """Jump rate and the constant-coefficient generator applied per jump."""

    rate: float
    gen: QuadraticGenerator

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("jump rate must be positive")


@dataclass(frozen=True)
class PoissonModel:
    """One or more independent jump processes acting together."""

    processes: tuple

    def __post_init__(self):
        processes = tuple(self.processes)
        if not processes:
            raise ValueError("model needs at least one process")
        object.__setattr__(self, "processes", processes)

    @property
    def n(self) -> int:
        return self.processes[0].gen.n

    @classmethod
    def single(cls, rate: float, gen: QuadraticGenerator) -> "PoissonModel":
        return cls((PoissonProcessSpec(rate, gen),))


@dataclass(frozen=True)
class OneStepMap:
    """Propagator and kernels of the inner dynamics evaluated at the
    jump duration; drive and pair are undressed."""

    G: np.ndarray
    drive: np.ndarray
    pair: np.ndarray

    @property
    def dressed_drive(self) -> np.ndarray:
        return self.G @ self.drive

    @property
    def dressed_pair(self) -> np.ndarray:
        return self.G @ self.pair @ self.G.T


def one_step_coefficients(spec: PoissonProcessSpec, duration: float = 1.0) -> OneStepMap:
    """Evaluate the constant-coefficient propagator bundle of the inner
    generator at the jump duration (1 by convention)."""
    drift = drift_data(spec.gen)
    G = expm(drift.B * duration)
    drive = drive_integral_constant(drift.B, drift.phi, duration)
    pair = pair_integral_constant(drift.B, drift.xi, duration)
    return OneStepMap(G=G, drive=drive, pair=pair)


def _kron_power(M: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, [M] * k)


@dataclass
class BlockSystem:
    """Block lower-triangular generator of the stacked hierarchy."""

    n: int
    order: int
    diag: list                 # diag[r]: (2n)^r square block
    couplings: dict            # (r, r') -> (2n)^r x (2n)^r' block, r' < r

    @property
    def dims(self) -> list:
        return [(2 * self.n) ** r for r in range(self.order + 1)]

    @property
    def offsets(self) -> list:
        offs, pos = [], 0
        for d in self.dims:
            offs.append(pos)
            pos += d
        return offs + [pos]

    @property
    def total_dim(self) -> int:
        return self.offsets[-1]

    def block(self, r: int, rp: int) -> np.ndarray:
        if r == rp:
            return self.diag[r]
        return self.couplings.get((r, rp), np.zeros((self.dims[r], self.dims[rp]), dtype=complex))

    def matrix(self) -> np.ndarray:
        offs = self.offsets
        A = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        for r in range(self.order + 1):
            A[offs[r]:offs[r + 1], offs[r]:offs[r + 1]] = self.diag[r]
        for (r, rp), blk in self.couplings.items():
            A[offs[r]:offs[r + 1], offs[rp]:offs[rp + 1]] = blk
        return A

    def truncated_matrix(self, order: int) -> np.ndarray:
        offs = self.offsets
        cut = offs[order + 1]
        return self.matrix()[:cut, :cut]


def _coupling_term(term, dressed_drive, dressed_pair, G, dim) -> np.ndarray:
    """One partition summand of the coupling from order |initial| to the
    full order, as a matrix (output indices x input indices)."""
    r = len(term.drive_slots) + 2 * len(term.pairs) + len(term.initial_slots)
    out_letters = _LETTERS[:r]
    in_letters = _LETTERS[r:r + len(term.initial_slots)]
    operands, subs = [], []
    for s in term.drive_slots:
        operands.append(dressed_drive)
        subs.append(out_letters[s])
    for a, b in term.pairs:
        operands.append(dressed_pair)
        subs.append(out_letters[a] + out_letters[b])
    for pos, s in enumerate(term.initial_slots):
        operands.append(G)
        subs.append(out_letters[s] + in_letters[pos])
    spec = ",".join(subs) + "->" + out_letters + in_letters
    tensor = np.einsum(*([spec] + operands))
    return tensor.reshape(dim**r, dim ** len(term.initial_slots))


def build_block_system(
    model: PoissonModel,
    order: int,
    duration: float = 1.0,
    max_order: int = MAX_ORDER_POISSON,
) -> BlockSystem:
    """Assemble the stacked linear system d(hierarchy)/dt = A hierarchy.

    Diagonal blocks are rate-weighted slotwise one-step propagators
    minus the identity; couplings to strictly lower orders come from
    the drive/pair partition sum with the full-initial term excluded
    (it is the diagonal contribution already counted).
    """
    if order > max_order:
        raise OrderTooLargeError(
            f"stacked order {order} exceeds the guard {max_order}; "
            f"dimension grows as (2n)^order"
        )
    n = model.n
    dim = 2 * n
    diag = [np.zeros((dim**r, dim**r), dtype=complex) for r in range(order + 1)]
    couplings: dict = {}
    for spec in model.processes:
        if spec.gen.n != n:
            raise ValueError("all processes must share one mode count")
        step = one_step_coefficients(spec, duration)
        gdrive = step.dressed_drive
        gpair = step.dressed_pair
        for r in range(order + 1):
            diag[r] += spec.rate * (_kron_power(step.G, r) - np.eye(dim**r, dtype=complex))
            for term in triple_partitions(r):
                if term.initial_order == r:
                    continue
                blk = spec.rate * _coupling_term(term, gdrive, gpair, step.G, dim)
                key = (r, term.initial_order)
                if key in couplings:
                    couplings[key] += blk
                else:
                    couplings[key] = blk
    return BlockSystem(n=n, order=order, diag=diag, couplings=couplings)


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("time grid must be a nonempty 1-d array")
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be nonnegative and strictly increasing")
    return times


def _unstack(n: int, order: int, v: np.ndarray) -> MomentHierarchy:
    return MomentHierarchy.from_flat(n, order, v)


def evolve_poisson(
    model: PoissonModel,
    initial: MomentHierarchy,
    times,
    method: str = "auto",
    duration: float = 1.0,
    quad_tol: float = 1e-12,
) -> list:
    """Hierarchy trajectory of the Poisson-averaged dynamics.

    method "expm" exponentiates the stacked block system; method
    "convolution" solves order by order, evaluating the inhomogeneity
    from the lower-order subsystem and resolving the top order with
    adaptive quadrature of the convolution integral.  "auto" picks
    expm up to order 3 and convolution above.
    """
    times = _check_times(times)
    m = initial.order
    system = build_block_system(model, m, duration)
    if method == "auto":
        method = "expm" if m <= 3 else "convolution"
    v0 = initial.flatten()
    n = initial.n
    if method == "expm":
        A = system.matrix()
        return [_unstack(n, m, expm(A * float(t)) @ v0) for t in times]
    if method != "convolution":
        raise ValueError(f"unknown method {method!r}")

    offs = system.offsets
    out = []
    for t in times:
        t = float(t)
        parts = [np.ones(1, dtype=complex)]
        for r in range(1, m + 1):
            lam = system.diag[r]
            vr0 = v0[offs[r]:offs[r + 1]]
            value = expm(lam * t) @ vr0
            if t > 0:
                lower = system.truncated_matrix(r - 1)
                v_low = v0[:offs[r]]
                coups = [(rp, system.couplings[(r, rp)]) for rp in range(r)
                         if (r, rp) in system.couplings]
                if coups:
                    def integrand(tau):
                        w = expm(lower * tau) @ v_low
                        u = np.zeros(offs[r + 1] - offs[r], dtype=complex)
                        for rp, blk in coups:
                            u += blk @ w[offs[rp]:offs[rp + 1]]
                        return expm(lam * (t - tau)) @ u

                    conv, _ = quad_vec(integrand, 0.0, t, epsabs=quad_tol, epsrel=quad_tol)
                    value = value + conv
            parts.append(value)
        out.append(_unstack(n, m, np.concatenate(parts)))
    return out


def central_moment_poisson_rhs(
    hier: MomentHierarchy, spec: PoissonProcessSpec, duration: float = 1.0
) -> np.ndarray:
    """Time derivative of the second central moment under one averaged
    process, evaluated on the current hierarchy.

    The derivative couples to the first moments through the dressed
    drive, so the equation is not closed in the central moment unless
    both the mean and the drive vanish.
    """
    if hier.order < 2:
        raise ValueError("hierarchy must hold at least order 2")
    drift = drift_data(spec.gen)
    G = expm(drift.B * duration)
    svec = G @ drive_integral_constant(drift.B, drift.phi, duration)
    Q = dressed_pair_integral_constant(drift.B, drift.xi, duration)
    mu = hier.tensors[1]
    D = central_second_moment(hier)
    u = (G - np.eye(G.shape[0], dtype=complex)) @ mu
    growth = G @ D @ G.T - D + Q
    cross = np.outer(u, u) + np.outer(u, svec) + np.outer(svec, u) + np.outer(svec, svec)
    return spec.rate * (growth + cross)
