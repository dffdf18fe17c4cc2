"""Drift data and propagator kernels for quadratic generators.

The first-moment flow matrix B, drive vector phi and pair-noise matrix
xi are assembled from generator data; the bundle (G, drive, pair
kernel) collects the propagator and the two convolution kernels that
enter the closed-form moment solution.  The drive and pair kernels are
stored undressed (in the picture where the propagator has been divided
out); dressed values are available via accessors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .algebra import (
    TOL_STRUCT,
    GeneratorValidationError,
    QuadraticGenerator,
    symplectic_form,
    validate_generator,
)

DEFAULT_TOL_ODE = 1e-10

# Below this value of ||A|| * t the Taylor series of the integral
# kernels converges in a handful of terms and is used instead of the
# augmented-block exponential.
_TAYLOR_GATE = 0.5
_TAYLOR_TERMS = 24


@dataclass(frozen=True)
class DriftData:
    """First-moment flow matrix B, drive vector phi, pair noise xi."""

    B: np.ndarray
    phi: np.ndarray
    xi: np.ndarray

    @property
    def dim(self) -> int:
        return self.B.shape[0]


def drift_data(gen: QuadraticGenerator, tol_struct: float = TOL_STRUCT) -> DriftData:
    """Build (B, phi, xi) from validated generator data.

    B = J (iH + (Gamma^T - Gamma)/2), phi = i J f, xi = J Gamma^T J.
    """
    report = validate_generator(gen, tol_struct)
    if not report.ok:
        raise GeneratorValidationError(report)
    return _drift_data_unchecked(gen)


def _drift_data_unchecked(gen: QuadraticGenerator) -> DriftData:
    J = symplectic_form(gen.n)
    B = J @ (1j * gen.H + (gen.gamma.T - gen.gamma) / 2)
    phi = 1j * (J @ gen.f)
    xi = J @ gen.gamma.T @ J
    return DriftData(B=B, phi=phi, xi=xi)


def propagator_constant(B: np.ndarray, t: float) -> np.ndarray:
    """exp(B t)."""
    return expm(np.asarray(B, dtype=complex) * t)


def expm_integral(A: np.ndarray, t: float) -> np.ndarray:
    """Integral of exp(A tau) over tau in [0, t].

    Well defined for singular A.  Uses the Taylor series
    sum_j A^(j-1) t^j / j! for small ||A|| t and otherwise the top-right
    block of exp([[A, I], [0, 0]] t).
    """
    A = np.asarray(A, dtype=complex)
    d = A.shape[0]
    if np.linalg.norm(A, 2) * abs(t) < _TAYLOR_GATE:
        term = np.eye(d, dtype=complex) * t
        total = term.copy()
        for j in range(2, _TAYLOR_TERMS + 1):
            term = (A @ term) * (t / j)
            total += term
            if np.abs(term).max() < 1e-18 * max(1.0, np.abs(total).max()):
                break
        return total
    M = np.zeros((2 * d, 2 * d), dtype=complex)
    M[:d, :d] = A
    M[:d, d:] = np.eye(d)
    return expm(M * t)[:d, d:]


def drive_integral_constant(B: np.ndarray, phi: np.ndarray, t: float) -> np.ndarray:
    """Drive kernel for constant coefficients: integral of
    exp(-B tau) phi over [0, t], i.e. (1 - exp(-B t))/B applied to phi."""
    B = np.asarray(B, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    return expm_integral(-B, t) @ phi


def sylvester_action(B: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Pair-space action of B on a matrix kernel: B X + X B^T."""
    return B @ X + X @ B.T


def pair_integral_constant(B: np.ndarray, xi: np.ndarray, t: float) -> np.ndarray:
    """Pair-noise kernel for constant coefficients: integral of
    exp(-B tau) xi exp(-B^T tau) over [0, t].

    This is (1 - exp(-(B1+B2) t))/(B1+B2) applied to xi, with the
    two-slot operator realized through the Sylvester action, so it is
    well defined for singular B.
    """
    B = np.asarray(B, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    d = B.shape[0]
    if np.linalg.norm(B, 2) * abs(t) < _TAYLOR_GATE / 2:
        # sum_j (-1)^(j+1) t^j / j! S^(j-1) applied to xi, S = pair action
        term = xi * t
        total = term.copy()
        for j in range(2, _TAYLOR_TERMS + 1):
            term = -sylvester_action(B, term) * (t / j)
            total += term
            if np.abs(term).max() < 1e-18 * max(1.0, np.abs(total).max()):
                break
        return total
    M = np.zeros((2 * d, 2 * d), dtype=complex)
    M[:d, :d] = -B
    M[:d, d:] = xi
    M[d:, d:] = B.T
    F = expm(M * t)
    return F[:d, d:] @ expm(-B.T * t)


def dressed_pair_integral_constant(B: np.ndarray, xi: np.ndarray, t: float) -> np.ndarray:
    """Integral of exp(B tau) xi exp(B^T tau) over [0, t]; equals the
    pair kernel dressed by the propagator on both slots."""
    return pair_integral_constant(-np.asarray(B, dtype=complex), xi, t)


class CoefficientSchedule:
    """Generator coefficients as a function of time.

    Three flavours: a single constant generator, piecewise-constant
    segments, or an arbitrary callable t -> QuadraticGenerator.  The
    first two integrate exactly via per-segment matrix exponentials;
    the callable flavour goes through the adaptive ODE path.
    """

    def __init__(self, kind, gens=None, breakpoints=None, func=None, tol_struct=TOL_STRUCT):
        self.kind = kind
        self.tol_struct = tol_struct
        self._func = func
        if kind in ("constant", "piecewise"):
            self.gens = tuple(gens)
            self.breakpoints = tuple(float(b) for b in (breakpoints or ()))
            if list(self.breakpoints) != sorted(set(self.breakpoints)) or any(
                b <= 0 for b in self.breakpoints
            ):
                raise ValueError("breakpoints must be positive and strictly increasing")
            if len(self.gens) != len(self.breakpoints) + 1:
                raise ValueError("need exactly one more segment than breakpoints")
            for gen in self.gens:
                report = validate_generator(gen, tol_struct)
                if not report.ok:
                    raise GeneratorValidationError(report)
            self._drifts = tuple(_drift_data_unchecked(g) for g in self.gens)
        elif kind == "callable":
            if func is None:
                raise ValueError("callable schedule needs a function")
        else:
            raise ValueError(f"unknown schedule kind {kind!r}")

    @classmethod
    def constant(cls, gen: QuadraticGenerator, tol_struct: float = TOL_STRUCT):
        return cls("constant", gens=[gen], tol_struct=tol_struct)

    @classmethod
    def piecewise(cls, gens, breakpoints, tol_struct: float = TOL_STRUCT):
        """Segments gens[k] on [breakpoints[k-1], breakpoints[k]); the
        last segment extends indefinitely."""
        return cls("piecewise", gens=gens, breakpoints=breakpoints, tol_struct=tol_struct)

    @classmethod
    def from_function(cls, func, tol_struct: float = TOL_STRUCT):
        return cls("callable", func=func, tol_struct=tol_struct)

    @property
    def is_exactly_integrable(self) -> bool:
        return self.kind in ("constant", "piecewise")

    def segment_index(self, t: float) -> int:
        k = 0
        for b in self.breakpoints:
            if t >= b:
                k += 1
            else:
                break
        return k

    def generator_at(self, t: float) -> QuadraticGenerator:
        if self.kind == "callable":
            return self._func(t)
        return self.gens[self.segment_index(t)]

    def drift_at(self, t: float, validate: bool = False) -> DriftData:
        if self.kind == "callable":
            gen = self._func(t)
            if validate:
                report = validate_generator(gen, self.tol_struct)
                if not report.ok:
                    raise GeneratorValidationError(report)
            return _drift_data_unchecked(gen)
        return self._drifts[self.segment_index(t)]


@dataclass(frozen=True)
class PropagatorBundle:
    """Propagator G, drive kernel and pair kernel on a time grid.

    Kernels are stored undressed; dressed_drive / dressed_pair apply
    the propagator the way the moment solution consumes them.
    """

    times: np.ndarray
    G: np.ndarray
    drive: np.ndarray
    pair_kernel: np.ndarray
    provenance: str

    @property
    def dim(self) -> int:
        return self.G.shape[1]

    def index_of(self, t: float) -> int:
        hits = np.nonzero(np.isclose(self.times, t, rtol=0.0, atol=1e-12))[0]
        if hits.size == 0:
            raise ValueError(f"time {t} is not on the bundle grid")
        return int(hits[0])

    def dressed_drive(self, k: int) -> np.ndarray:
        return self.G[k] @ self.drive[k]

    def dressed_pair(self, k: int) -> np.ndarray:
        return self.G[k] @ self.pair_kernel[k] @ self.G[k].T


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid[0] != 0.0:
        raise ValueError("time grid must be one-dimensional and start at 0")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return grid


def constant_bundle(drift: DriftData, grid) -> PropagatorBundle:
    """Bundle for constant coefficients via the closed-form kernels."""
    grid = _check_grid(grid)
    d = drift.dim
    G = np.empty((grid.size, d, d), dtype=complex)
    drive = np.empty((grid.size, d), dtype=complex)
    pair = np.empty((grid.size, d, d), dtype=complex)
    for k, t in enumerate(grid):
        G[k] = propagator_constant(drift.B, t)
        drive[k] = drive_integral_constant(drift.B, drift.phi, t)
        pair[k] = pair_integral_constant(drift.B, drift.xi, t)
    return PropagatorBundle(grid, G, drive, pair, provenance="constant")


def _integrate_bundle_exact(schedule: CoefficientSchedule, grid: np.ndarray) -> PropagatorBundle:
    d = schedule.gens[0].dim
    eye = np.eye(d, dtype=complex)
    # Walk the union of grid points and segment boundaries, keeping the
    # accumulated G, G^-1, drive and pair kernels.
    boundaries = [b for b in schedule.breakpoints if 0.0 < b < grid[-1]]
    stops = np.unique(np.concatenate([grid, boundaries]))
    G_acc, Ginv_acc = eye.copy(), eye.copy()
    drive_acc = np.zeros(d, dtype=complex)
    pair_acc = np.zeros((d, d), dtype=complex)
    out_G = [eye.copy()]
    out_drive = [drive_acc.copy()]
    out_pair = [pair_acc.copy()]
    t_prev = 0.0
    for t in stops[1:]:
        # Segment membership is determined by the interval's interior.
        drift = schedule.drift_at((t_prev + t) / 2)
        dt = t - t_prev
        step = propagator_constant(drift.B, dt)
        drive_acc = drive_acc + Ginv_acc @ drive_integral_constant(drift.B, drift.phi, dt)
        pair_acc = pair_acc + Ginv_acc @ pair_integral_constant(drift.B, drift.xi, dt) @ Ginv_acc.T
        G_acc = step @ G_acc
        Ginv_acc = Ginv_acc @ propagator_constant(drift.B, -dt)
        t_prev = t
        if np.any(np.isclose(grid, t, rtol=0.0, atol=1e-12)):
            out_G.append(G_acc.copy())
            out_drive.append(drive_acc.copy())
            out_pair.append(pair_acc.copy())
    provenance = "constant" if schedule.kind == "constant" else "time-dependent"
    return PropagatorBundle(
        grid, np.array(out_G), np.array(out_drive), np.array(out_pair), provenance
    )


def _integrate_bundle_ode(
    schedule: CoefficientSchedule, grid: np.ndarray, tol_ode: float
) -> PropagatorBundle:
    drift0 = schedule.drift_at(0.0, validate=True)
    d = drift0.dim
    # Validate callable schedules at the requested grid points only; the
    # integrator then samples freely in between.
    if schedule.kind == "callable":
        for t in grid[1:]:
            schedule.drift_at(float(t), validate=True)

    n2 = d * d

    def rhs(t, y):
        G = y[:n2].reshape(d, d)
        Ginv = y[n2:2 * n2].reshape(d, d)
        drift = schedule.drift_at(t)
        dG = drift.B @ G
        dGinv = -Ginv @ drift.B
        dpsi = Ginv @ drift.phi
        dbeta = Ginv @ drift.xi @ Ginv.T
        return np.concatenate([dG.ravel(), dGinv.ravel(), dpsi, dbeta.ravel()])

    eye = np.eye(d, dtype=complex)
    y0 = np.concatenate(
        [eye.ravel(), eye.ravel(), np.zeros(d, dtype=complex), np.zeros(n2, dtype=complex)]
    )
    sol = solve_ivp(
        rhs,
        (0.0, float(grid[-1])),
        y0,
        method="DOP853",
        t_eval=grid,
        rtol=max(tol_ode, 1e-13),
        atol=tol_ode * 1e-2,
    )
    if not sol.success:
        raise RuntimeError(f"bundle integration failed: {sol.message}")
    ys = sol.y.T
    G = ys[:, :n2].reshape(-1, d, d)
    drive = ys[:, 2 * n2:2 * n2 + d]
    pair = ys[:, 2 * n2 + d:].reshape(-1, d, d)
    provenance = "constant" if schedule.kind == "constant" else "time-dependent"
    return PropagatorBundle(grid, G, drive.copy(), pair, provenance)


def integrate_bundle(
    schedule: CoefficientSchedule,
    grid,
    tol_ode: float = DEFAULT_TOL_ODE,
    method: str = "auto",
) -> PropagatorBundle:
    """Propagator bundle for a coefficient schedule on a time grid.

    method "exact" integrates piecewise-constant schedules segment by
    segment through matrix exponentials; "ode" runs the adaptive
    integrator on the defining differential equations (co-integrating
    the inverse propagator instead of inverting).  "auto" picks exact
    when available.
    """
    grid = _check_grid(grid)
    if method == "auto":
        method = "exact" if schedule.is_exactly_integrable else "ode"
    if method == "exact":
        if not schedule.is_exactly_integrable:
            raise ValueError("exact integration needs a constant or piecewise schedule")
        return _integrate_bundle_exact(schedule, grid)
    if method == "ode":
        return _integrate_bundle_ode(schedule, grid, tol_ode)
    raise ValueError(f"unknown method {method!r}")
