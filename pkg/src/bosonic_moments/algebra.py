"""Phase-space linear algebra for multimode bosonic generators.

The 2n-component phase vector stacks annihilation components first and
creation components second: index k in [0, n) addresses mode k's
annihilation operator, index n + k its creation operator.  Every other
module inherits this ordering, which pins down all signs in the
structural matrices below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Structural checks on user input should catch typos, not fight roundoff.
TOL_STRUCT = 1e-10


class DimensionError(ValueError):
    """Input does not have the expected phase-space dimension."""


class GeneratorValidationError(ValueError):
    """Generator data violates a structural invariant."""

    def __init__(self, report: "ValidationReport"):
        super().__init__(str(report))
        self.report = report


def _mode_count(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DimensionError(f"mode count must be a positive integer, got {n!r}")
    return int(n)


def symplectic_form(n: int) -> np.ndarray:
    """Commutation kernel J: [f^T a, a^T g] = -f^T J g for phase vectors."""
    n = _mode_count(n)
    J = np.zeros((2 * n, 2 * n), dtype=complex)
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def conjugation_swap(n: int) -> np.ndarray:
    """Block swap E exchanging annihilation and creation components."""
    n = _mode_count(n)
    E = np.zeros((2 * n, 2 * n), dtype=complex)
    E[:n, n:] = np.eye(n)
    E[n:, :n] = np.eye(n)
    return E


def structural_matrices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (J, E) for n modes."""
    return symplectic_form(n), conjugation_swap(n)


def _as_phase_vector(g, n: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.asarray(g, dtype=complex)
    if arr.ndim != 1 or arr.size % 2 != 0 or arr.size == 0:
        raise DimensionError(f"{name} must be a flat vector of even length, got shape {arr.shape}")
    if n is not None and arr.size != 2 * n:
        raise DimensionError(f"{name} has length {arr.size}, expected {2 * n}")
    return arr


def _as_phase_matrix(K, n: int | None = None, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(K, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2 != 0 or arr.shape[0] == 0:
        raise DimensionError(f"{name} must be square with even dimension, got shape {arr.shape}")
    if n is not None and arr.shape[0] != 2 * n:
        raise DimensionError(f"{name} has dimension {arr.shape[0]}, expected {2 * n}")
    return arr


def tilde_vec(g, n: int | None = None) -> np.ndarray:
    """Tilde conjugate of a phase vector: E @ conj(g)."""
    arr = _as_phase_vector(g, n)
    half = arr.size // 2
    return np.concatenate([np.conj(arr[half:]), np.conj(arr[:half])])


def tilde_mat(K, n: int | None = None) -> np.ndarray:
    """Tilde conjugate of a phase matrix: E @ conj(K) @ E."""
    arr = _as_phase_matrix(K, n)
    half = arr.shape[0] // 2
    swap = np.concatenate([np.arange(half, 2 * half), np.arange(half)])
    return np.conj(arr)[np.ix_(swap, swap)]


def gamma_from_jumps(jumps, n: int | None = None) -> np.ndarray:
    """Assemble the dissipation matrix sum_j gamma_j tilde(gamma_j)^T.

    An empty jump list yields the zero matrix (n must then be given so
    the dimension is known).
    """
    jumps = [np.asarray(j, dtype=complex) for j in jumps]
    if not jumps:
        if n is None:
            raise DimensionError("mode count n required to build Gamma from no jumps")
        return np.zeros((2 * n, 2 * n), dtype=complex)
    dim = int(jumps[0].size)
    gamma = np.zeros((dim, dim), dtype=complex)
    for j in jumps:
        vec = _as_phase_vector(j, n if n is not None else dim // 2, name="jump vector")
        gamma += np.outer(vec, tilde_vec(vec))
    return gamma


@dataclass(frozen=True)
class QuadraticGenerator:
    """Coefficients (H, f, jumps / Gamma) of a quadratic GKSL generator.

    The Hamiltonian is (1/2) a^T H a + f^T a and each jump operator is
    gamma_j^T a, all expressed over the 2n phase vector.  Gamma may be
    supplied directly instead of jump vectors; it is otherwise derived
    as sum_j gamma_j tilde(gamma_j)^T.
    """

    n: int
    H: np.ndarray = None
    f: np.ndarray = None
    jumps: tuple = ()
    gamma: np.ndarray = None

    def __post_init__(self):
        n = _mode_count(self.n)
        dim = 2 * n
        H = np.zeros((dim, dim), dtype=complex) if self.H is None else _as_phase_matrix(self.H, n, "H")
        f = np.zeros(dim, dtype=complex) if self.f is None else _as_phase_vector(self.f, n, "f")
        jumps = tuple(_as_phase_vector(j, n, "jump vector") for j in self.jumps)
        if self.gamma is None:
            gamma = gamma_from_jumps(jumps, n)
        else:
            gamma = _as_phase_matrix(self.gamma, n, "Gamma")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "gamma", gamma)

    @property
    def dim(self) -> int:
        return 2 * self.n


@dataclass
class ValidationReport:
    """Violated structural invariants with their magnitudes."""

    violations: list = field(default_factory=list)
    tol: float = TOL_STRUCT

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, name: str, magnitude: float, threshold: float):
        if magnitude > threshold:
            self.violations.append((name, float(magnitude)))

    def __str__(self):
        if self.ok:
            return "generator data valid"
        lines = [f"{name}: max violation {mag:.3e}" for name, mag in self.violations]
        return "invalid generator data: " + "; ".join(lines)


def validate_generator(gen: QuadraticGenerator, tol_struct: float = TOL_STRUCT) -> ValidationReport:
    """Check the structural invariants of generator data.

    Violations are measured as max-abs deviations and compared against
    tol_struct scaled by the magnitude of the array involved.  The
    positivity of Gamma E (the Gram-form consequence of building Gamma
    from jump vectors) is enforced also for directly supplied Gamma.
    """
    report = ValidationReport(tol=tol_struct)
    H, f, gamma = gen.H, gen.f, gen.gamma
    scale_H = max(1.0, np.abs(H).max(initial=0.0))
    scale_f = max(1.0, np.abs(f).max(initial=0.0))
    scale_g = max(1.0, np.abs(gamma).max(initial=0.0))

    report.add("H = H^T", np.abs(H - H.T).max(initial=0.0), tol_struct * scale_H)
    report.add("H = tilde(H)", np.abs(H - tilde_mat(H)).max(initial=0.0), tol_struct * scale_H)
    report.add("f = tilde(f)", np.abs(f - tilde_vec(f)).max(initial=0.0), tol_struct * scale_f)
    report.add(
        "tilde(Gamma) = Gamma^T",
        np.abs(tilde_mat(gamma) - gamma.T).max(initial=0.0),
        tol_struct * scale_g,
    )
    # Gamma E is Hermitian whenever the tilde condition holds; check
    # positivity of its Hermitian part so the report stays meaningful
    # even when the previous invariant already failed.
    ge = gamma @ conjugation_swap(gen.n)
    ge_herm = (ge + ge.conj().T) / 2
    min_eig = float(np.linalg.eigvalsh(ge_herm).min()) if ge_herm.size else 0.0
    report.add("Gamma E >= 0", max(0.0, -min_eig), tol_struct * scale_g)
    return report
