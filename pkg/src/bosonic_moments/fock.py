"""Dense truncated-Fock-space oracle.

Everything here is brute force on purpose: dense density matrices with
a per-mode occupation cutoff, an adaptive integrator plus a
superoperator-exponential second path, and moment extraction by
explicit operator products.  A leakage monitor watches the top two
occupation levels of every mode so truncation error cannot masquerade
as engine error; helper drivers double the cutoff automatically when
it trips.

Superoperators use the column-stacking convention throughout:
vec(A rho B) = (B^T kron A) vec(rho).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .algebra import QuadraticGenerator
from .moments import MomentHierarchy

D_MAX = 4096
SUPEROP_DIM_MAX = 64
LEAKAGE_THRESHOLD = 1e-8
CUTOFF_MAX = 64


class LeakageError(RuntimeError):
    """Truncation leakage stayed above threshold at the maximum cutoff."""


@dataclass(frozen=True)
class FockConfig:
    """Mode count and per-mode occupation cutoff (basis 0..cutoff-1)."""

    n: int
    cutoff: int

    def __post_init__(self):
        if self.n < 1 or self.cutoff < 2:
            raise ValueError("need at least one mode and cutoff >= 2")
        if self.dim > D_MAX:
            raise ValueError(f"total dimension {self.dim} exceeds the budget {D_MAX}")

    @property
    def dim(self) -> int:
        return self.cutoff**self.n


def ladder(cutoff: int) -> np.ndarray:
    """Single-mode annihilation matrix on the truncated basis."""
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)


def _mode_operator(single: np.ndarray, mode: int, cfg: FockConfig) -> np.ndarray:
    op = np.array([[1.0 + 0.0j]])
    for k in range(cfg.n):
        op = np.kron(op, single if k == mode else np.eye(cfg.cutoff, dtype=complex))
    return op


@dataclass(frozen=True)
class OperatorSet:
    """Dense phase operators and the assembled Hamiltonian / jumps."""

    cfg: FockConfig
    phase: tuple       # 2n matrices: annihilators then creators
    H_op: np.ndarray
    jump_ops: tuple

    @property
    def dim(self) -> int:
        return self.cfg.dim


def build_operators(gen: QuadraticGenerator, cfg: FockConfig) -> OperatorSet:
    """Assemble H = (1/2) a^T H a + f^T a and the linear jump operators
    as dense matrices on the truncated space."""
    if gen.n != cfg.n:
        raise ValueError("generator and Fock configuration disagree on the mode count")
    a_single = ladder(cfg.cutoff)
    ann = [_mode_operator(a_single, k, cfg) for k in range(cfg.n)]
    phase = tuple(ann) + tuple(op.conj().T for op in ann)
    d = cfg.dim
    H_op = np.zeros((d, d), dtype=complex)
    for k in range(2 * cfg.n):
        if gen.f[k] != 0:
            H_op += gen.f[k] * phase[k]
        for l in range(2 * cfg.n):
            if gen.H[k, l] != 0:
                H_op += 0.5 * gen.H[k, l] * (phase[k] @ phase[l])
    jump_ops = []
    for gamma_vec in gen.jumps:
        C = np.zeros((d, d), dtype=complex)
        for k in range(2 * cfg.n):
            if gamma_vec[k] != 0:
                C += gamma_vec[k] * phase[k]
        jump_ops.append(C)
    return OperatorSet(cfg=cfg, phase=phase, H_op=H_op, jump_ops=tuple(jump_ops))


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class StatePrep:
    """Rebuildable initial state so cutoff doubling can reprepare it."""

    kind: str
    params: tuple = ()

    @classmethod
    def vacuum(cls):
        return cls("vacuum")

    @classmethod
    def coherent(cls, alphas):
        return cls("coherent", tuple(complex(a) for a in np.atleast_1d(alphas)))

    @classmethod
    def number(cls, ks):
        return cls("number", tuple(int(k) for k in np.atleast_1d(ks)))

    @classmethod
    def thermal(cls, nbars):
        return cls("thermal", tuple(float(v) for v in np.atleast_1d(nbars)))

    def build(self, cfg: FockConfig) -> np.ndarray:
        if self.kind == "vacuum":
            return self._pure([_vacuum_vec(cfg.cutoff)] * cfg.n)
        if self.kind == "coherent":
            self._check_modes(cfg)
            return self._pure([_coherent_vec(a, cfg.cutoff) for a in self.params])
        if self.kind == "number":
            self._check_modes(cfg)
            return self._pure([_number_vec(k, cfg.cutoff) for k in self.params])
        if self.kind == "thermal":
            self._check_modes(cfg)
            rho = np.array([[1.0 + 0.0j]])
            for nbar in self.params:
                rho = np.kron(rho, _thermal_density(nbar, cfg.cutoff))
            return rho
        raise ValueError(f"unknown state kind {self.kind!r}")

    def _check_modes(self, cfg):
        if len(self.params) != cfg.n:
            raise ValueError(f"state needs {cfg.n} per-mode parameters, got {len(self.params)}")

    @staticmethod
    def _pure(vecs) -> np.ndarray:
        psi = np.array([1.0 + 0.0j])
        for v in vecs:
            psi = np.kron(psi, v)
        return np.outer(psi, psi.conj())


def _vacuum_vec(cutoff: int) -> np.ndarray:
    v = np.zeros(cutoff, dtype=complex)
    v[0] = 1.0
    return v


def _coherent_vec(alpha: complex, cutoff: int) -> np.ndarray:
    ks = np.arange(cutoff)
    log_fact = np.cumsum(np.log(np.maximum(ks, 1)))
    amps = np.exp(ks * np.log(complex(alpha)) - log_fact / 2) if alpha != 0 else np.zeros(cutoff, complex)
    if alpha == 0:
        amps[0] = 1.0
    v = amps.astype(complex)
    return v / np.linalg.norm(v)


def _number_vec(k: int, cutoff: int) -> np.ndarray:
    if not 0 <= k < cutoff:
        raise ValueError(f"Fock level {k} outside cutoff {cutoff}")
    v = np.zeros(cutoff, dtype=complex)
    v[k] = 1.0
    return v


def _thermal_density(nbar: float, cutoff: int) -> np.ndarray:
    if nbar < 0:
        raise ValueError("mean occupation must be nonnegative")
    if nbar == 0:
        w = np.zeros(cutoff)
        w[0] = 1.0
    else:
        q = nbar / (nbar + 1.0)
        w = q ** np.arange(cutoff)
        w /= w.sum()
    return np.diag(w).astype(complex)


def vacuum_state(cfg: FockConfig) -> np.ndarray:
    return StatePrep.vacuum().build(cfg)


def coherent_state(cfg: FockConfig, alphas) -> np.ndarray:
    return StatePrep.coherent(alphas).build(cfg)


def number_state(cfg: FockConfig, ks) -> np.ndarray:
    return StatePrep.number(ks).build(cfg)


def thermal_state(cfg: FockConfig, nbars) -> np.ndarray:
    return StatePrep.thermal(nbars).build(cfg)


# ---------------------------------------------------------------------------
# generator application and integration


def lindblad_rhs(rho: np.ndarray, ops: OperatorSet) -> np.ndarray:
    """Schroedinger-picture generator applied to a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ops.dim, ops.dim):
        raise ValueError(f"state shape {rho.shape} does not match dimension {ops.dim}")
    out = -1j * (ops.H_op @ rho - rho @ ops.H_op)
    for C in ops.jump_ops:
        Cd = C.conj().T
        CdC = Cd @ C
        out += C @ rho @ Cd - 0.5 * (CdC @ rho + rho @ CdC)
    return out


def heisenberg_apply(X: np.ndarray, H_op: np.ndarray, jump_ops) -> np.ndarray:
    """Heisenberg-picture generator applied to an observable:
    i[H, X] + (1/2) sum_j ([C_j^dag, X] C_j + C_j^dag [X, C_j])."""
    out = 1j * (H_op @ X - X @ H_op)
    for C in jump_ops:
        Cd = C.conj().T
        out += 0.5 * ((Cd @ X - X @ Cd) @ C + Cd @ (X @ C - C @ X))
    return out


def leakage_population(rho: np.ndarray, cfg: FockConfig) -> float:
    """Largest per-mode population of the top two occupation levels."""
    pops = np.real(np.diag(rho))
    occupations = np.array(np.unravel_index(np.arange(cfg.dim), (cfg.cutoff,) * cfg.n))
    worst = 0.0
    for mode in range(cfg.n):
        mask = occupations[mode] >= cfg.cutoff - 2
        worst = max(worst, float(pops[mask].sum()))
    return worst


@dataclass
class MasterTrajectory:
    """States on a time grid plus the leakage verdict of the run."""

    times: np.ndarray
    states: list
    leakage: float
    flagged: bool
    cfg: FockConfig


def integrate_master(
    rho0: np.ndarray,
    ops: OperatorSet,
    times,
    tol: float = 1e-10,
    leakage_threshold: float = LEAKAGE_THRESHOLD,
) -> MasterTrajectory:
    """Adaptive integration of the master equation on a time grid."""
    times = np.asarray(times, dtype=float)
    d = ops.dim

    def rhs(t, y):
        return lindblad_rhs(y.reshape(d, d), ops).ravel()

    sol = solve_ivp(
        rhs,
        (float(times[0]), float(times[-1])),
        np.asarray(rho0, dtype=complex).ravel(),
        method="DOP853",
        t_eval=times,
        rtol=max(tol, 1e-13),
        atol=tol * 1e-2,
    )
    if not sol.success:
        raise RuntimeError(f"master equation integration failed: {sol.message}")
    states = [sol.y[:, k].reshape(d, d) for k in range(times.size)]
    leak = max(leakage_population(rho, ops.cfg) for rho in states)
    return MasterTrajectory(times, states, leak, leak > leakage_threshold, ops.cfg)


def master_states_expm(rho0: np.ndarray, ops: OperatorSet, times) -> list:
    """Second oracle path: superoperator exponential per grid time."""
    L = lindblad_superoperator(ops)
    d = ops.dim
    v0 = vec(np.asarray(rho0, dtype=complex))
    return [unvec(expm(L * float(t)) @ v0, d) for t in np.asarray(times, dtype=float)]


# ---------------------------------------------------------------------------
# superoperators (column stacking)


def vec(M: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(M).T.reshape(-1)


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d).T


def _left_right_super(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> A rho B."""
    return np.kron(B.T, A)


def lindblad_superoperator(ops: OperatorSet) -> np.ndarray:
    """Dense matrix of the Schroedinger-picture generator."""
    d = ops.dim
    eye = np.eye(d, dtype=complex)
    L = -1j * (_left_right_super(ops.H_op, eye) - _left_right_super(eye, ops.H_op))
    for C in ops.jump_ops:
        Cd = C.conj().T
        CdC = Cd @ C
        L += _left_right_super(C, Cd)
        L -= 0.5 * (_left_right_super(CdC, eye) + _left_right_super(eye, CdC))
    return L


def poisson_jump_map(ops: OperatorSet, duration: float = 1.0) -> np.ndarray:
    """One-jump channel exp(L * duration) as a dense superoperator."""
    if ops.dim > SUPEROP_DIM_MAX:
        raise ValueError(
            f"dimension {ops.dim} exceeds the superoperator budget {SUPEROP_DIM_MAX}"
        )
    return expm(lindblad_superoperator(ops) * duration)


def choi_matrix(S: np.ndarray) -> np.ndarray:
    """Choi matrix of a superoperator in column-stacking convention."""
    d = int(round(np.sqrt(S.shape[0])))
    S4 = S.reshape(d, d, d, d)
    return np.transpose(S4, (3, 1, 2, 0)).reshape(d * d, d * d)


def trace_preservation_defect(S: np.ndarray) -> float:
    """Max-abs deviation of S^dag applied to vec(I) from vec(I)."""
    d = int(round(np.sqrt(S.shape[0])))
    vI = vec(np.eye(d, dtype=complex))
    return float(np.abs(S.conj().T @ vI - vI).max())


def complete_positivity_defect(S: np.ndarray) -> float:
    """Most negative Choi eigenvalue (0 when the map is CP)."""
    ch = choi_matrix(S)
    herm = (ch + ch.conj().T) / 2
    return float(max(0.0, -np.linalg.eigvalsh(herm).min()))


def integrate_poisson_master(
    rho0: np.ndarray,
    jump_map: np.ndarray,
    rate: float,
    times,
    leakage_threshold: float = LEAKAGE_THRESHOLD,
    cfg: FockConfig | None = None,
) -> MasterTrajectory:
    """Solve d rho / dt = rate (Phi(rho) - rho) by exponentiating the
    generator of the averaged semigroup."""
    times = np.asarray(times, dtype=float)
    dsq = jump_map.shape[0]
    d = int(round(np.sqrt(dsq)))
    gen = rate * (jump_map - np.eye(dsq, dtype=complex))
    v0 = vec(np.asarray(rho0, dtype=complex))
    states = [unvec(expm(gen * float(t)) @ v0, d) for t in times]
    if cfg is None:
        cfg = FockConfig(1, d)
    leak = max(leakage_population(rho, cfg) for rho in states)
    return MasterTrajectory(times, states, leak, leak > leakage_threshold, cfg)


# ---------------------------------------------------------------------------
# moment extraction


def extract_moments(rho: np.ndarray, ops: OperatorSet, m: int) -> MomentHierarchy:
    """Hierarchy of ordered-product expectations tr(a_{i1}..a_{ik} rho)."""
    rho = np.asarray(rho, dtype=complex)
    dim = 2 * ops.cfg.n
    products = {(): np.eye(ops.dim, dtype=complex)}
    tensors = [np.ones((), dtype=complex)]
    for k in range(1, m + 1):
        T = np.empty((dim,) * k, dtype=complex)
        next_products = {}
        for idx in product(range(dim), repeat=k):
            P = products[idx[:-1]] @ ops.phase[idx[-1]]
            next_products[idx] = P
            T[idx] = np.einsum("ij,ji->", P, rho)
        products = next_products
        tensors.append(T)
    return MomentHierarchy(ops.cfg.n, tensors)


def moments_trajectory(
    gen: QuadraticGenerator,
    prep: StatePrep,
    times,
    m: int,
    cutoff: int,
    tol: float = 1e-10,
    leakage_threshold: float = LEAKAGE_THRESHOLD,
    max_cutoff: int = CUTOFF_MAX,
):
    """Oracle moment trajectory with automatic cutoff doubling.

    Returns (hierarchies, trajectory).  Raises LeakageError when the
    leakage monitor still trips at the maximum cutoff.
    """
    cutoff = int(cutoff)
    while True:
        cfg = FockConfig(gen.n, cutoff)
        ops = build_operators(gen, cfg)
        rho0 = prep.build(cfg)
        traj = integrate_master(rho0, ops, times, tol=tol, leakage_threshold=leakage_threshold)
        if not traj.flagged:
            hiers = [extract_moments(rho, ops, m) for rho in traj.states]
            return hiers, traj
        if cutoff * 2 > max_cutoff:
            raise LeakageError(
                f"leakage {traj.leakage:.3e} above {leakage_threshold:.1e} at cutoff {cutoff}"
            )
        cutoff *= 2


def poisson_moments_trajectory(
    gen: QuadraticGenerator,
    rate: float,
    prep: StatePrep,
    times,
    m: int,
    cutoff: int,
    duration: float = 1.0,
    leakage_threshold: float = LEAKAGE_THRESHOLD,
    max_cutoff: int = CUTOFF_MAX,
):
    """Oracle trajectory for the Poisson-averaged master equation."""
    cutoff = int(cutoff)
    while True:
        cfg = FockConfig(gen.n, cutoff)
        if cfg.dim > SUPEROP_DIM_MAX:
            raise ValueError(
                f"dimension {cfg.dim} exceeds the superoperator budget {SUPEROP_DIM_MAX}"
            )
        ops = build_operators(gen, cfg)
        rho0 = prep.build(cfg)
        phi = poisson_jump_map(ops, duration)
        traj = integrate_poisson_master(
            rho0, phi, rate, times, leakage_threshold=leakage_threshold, cfg=cfg
        )
        if not traj.flagged:
            hiers = [extract_moments(rho, ops, m) for rho in traj.states]
            return hiers, traj
        if cutoff * 2 > max_cutoff or FockConfig(gen.n, cutoff * 2).dim > SUPEROP_DIM_MAX:
            raise LeakageError(
                f"leakage {traj.leakage:.3e} above {leakage_threshold:.1e} at cutoff {cutoff}"
            )
        cutoff *= 2


# ---------------------------------------------------------------------------
# exact finite-dimensional identity check


def leibniz_residual(H_op: np.ndarray, jump_ops, X_list) -> float:
    """Max-abs residual of the product rule for the Heisenberg generator
    on arbitrary same-size matrices: generator of the full product
    minus single-slot terms minus commutator-sandwich corrections."""
    X_list = [np.asarray(X, dtype=complex) for X in X_list]
    if not X_list:
        raise ValueError("need at least one factor")
    d = X_list[0].shape[0]
    for X in X_list:
        if X.shape != (d, d):
            raise ValueError("all factors must share one square shape")
    m = len(X_list)

    def chain(mats):
        out = np.eye(d, dtype=complex)
        for M in mats:
            out = out @ M
        return out

    lhs = heisenberg_apply(chain(X_list), H_op, jump_ops)
    rhs = np.zeros((d, d), dtype=complex)
    for k in range(m):
        rhs += chain(X_list[:k]) @ heisenberg_apply(X_list[k], H_op, jump_ops) @ chain(X_list[k + 1:])
    for k in range(m):
        for l in range(k + 1, m):
            for C in jump_ops:
                Cd = C.conj().T
                left = Cd @ X_list[k] - X_list[k] @ Cd
                right = X_list[l] @ C - C @ X_list[l]
                rhs += (
                    chain(X_list[:k]) @ left @ chain(X_list[k + 1:l]) @ right @ chain(X_list[l + 1:])
                )
    return float(np.abs(lhs - rhs).max())
