"""
Bloch Core - Two-qubit states in Bloch/Pauli form
Conversion to and from 4x4 density matrices, physicality checks, state families
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

import numpy as np
from numpy.typing import NDArray

from src.utils.errors import InputError

logger = logging.getLogger(__name__)

Vec3 = NDArray[np.float64]
Mat3 = NDArray[np.float64]
DensityMatrix4 = NDArray[np.complex128]

# Eigenvalue threshold for physicality; boundary states (pure states) sit at 0
PHYSICALITY_TOL = 1e-10
HERMITIAN_TOL = 1e-10

_I2 = np.eye(2, dtype=complex)
_PAULIS = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _frozen(values, shape: Tuple[int, ...], name: str) -> NDArray[np.float64]:
    """Copy input into a read-only float array of the given shape."""
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise InputError(f"{name} is not numeric: {e}") from e

    if arr.shape != shape:
        raise InputError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")

    arr.setflags(write=False)
    return arr


def normalize(v) -> Vec3:
    """
    Return the unit vector along v.

    Args:
        v: 3-vector

    Returns:
        v / |v| as a float array

    Raises:
        InputError: if v is zero or non-finite
    """
    arr = np.array(v, dtype=float)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise InputError(f"Cannot normalize {v!r}")

    norm = np.linalg.norm(arr)
    if norm < 1e-15:
        raise InputError("Cannot normalize a zero vector")
    return arr / norm


class PhysicalityReport(NamedTuple):
    physical: bool
    min_eigenvalue: float


@dataclass(frozen=True)
class TwoQubitState:
    """
    Two-qubit state rho = 1/4 [I + a.sigma x I + I x b.sigma + sum E_ij sigma_i x sigma_j].

    Unphysical parameter combinations are kept but flagged, so sweeps can
    explore the edge of the physical region.
    """

    a: Vec3
    b: Vec3
    E: Mat3
    physical: bool = True
    min_eigenvalue: float = 0.0
    label: str = field(default="", compare=False)

    def is_bell_diagonal(self, tol: float = 1e-9) -> bool:
        """True when both local Bloch vectors vanish."""
        return bool(np.linalg.norm(self.a) <= tol and np.linalg.norm(self.b) <= tol)

    def summary(self) -> dict:
        """JSON-friendly description used in reports."""
        return {
            "label": self.label,
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "E": self.E.tolist(),
            "physical": self.physical,
            "min_eigenvalue": self.min_eigenvalue,
        }


def _pauli_expansion(a: Vec3, b: Vec3, E: Mat3) -> DensityMatrix4:
    rho = np.kron(_I2, _I2)
    for i in range(3):
        rho = rho + a[i] * np.kron(_PAULIS[i], _I2)
        rho = rho + b[i] * np.kron(_I2, _PAULIS[i])
        for j in range(3):
            rho = rho + E[i, j] * np.kron(_PAULIS[i], _PAULIS[j])
    rho = rho / 4.0
    # enforce exact Hermiticity against rounding in the sum
    return (rho + rho.conj().T) / 2.0


def _physicality(a: Vec3, b: Vec3, E: Mat3, tol: float) -> PhysicalityReport:
    min_eig = float(np.linalg.eigvalsh(_pauli_expansion(a, b, E))[0])
    return PhysicalityReport(min_eig >= -tol, min_eig)


def new_state(a, b, E, label: str = "", tol: float = PHYSICALITY_TOL) -> TwoQubitState:
    """
    Build a two-qubit state from its Bloch parameters.

    Args:
        a: Alice's local Bloch vector
        b: Bob's local Bloch vector
        E: 3x3 correlation matrix E_ij = Tr[sigma_i x sigma_j rho]
        label: Optional name carried into reports
        tol: Eigenvalue tolerance for the physicality flag

    Returns:
        TwoQubitState with the physicality flag and minimum eigenvalue recorded

    Raises:
        InputError: on wrong shapes or non-finite entries
    """
    a_arr = _frozen(a, (3,), "a")
    b_arr = _frozen(b, (3,), "b")
    e_arr = _frozen(E, (3, 3), "E")

    report = _physicality(a_arr, b_arr, e_arr, tol)
    if not report.physical:
        logger.debug(f"[!] Unphysical state flagged (min eigenvalue {report.min_eigenvalue:.3e})")

    return TwoQubitState(
        a=a_arr,
        b=b_arr,
        E=e_arr,
        physical=report.physical,
        min_eigenvalue=report.min_eigenvalue,
        label=label,
    )


def to_density_matrix(s: TwoQubitState) -> DensityMatrix4:
    """
    Expand the Pauli sum into a 4x4 density matrix.

    The result is Hermitian with unit trace whether or not the state is physical.
    """
    return _pauli_expansion(s.a, s.b, s.E)


def from_density_matrix(rho, tol: float = HERMITIAN_TOL, label: str = "") -> TwoQubitState:
    """
    Read Bloch parameters off a density matrix.

    Args:
        rho: 4x4 complex matrix
        tol: Tolerance for the Hermiticity and trace checks
        label: Optional state name

    Returns:
        TwoQubitState with a_i = Tr[(sigma_i x I) rho], b_j = Tr[(I x sigma_j) rho],
        E_ij = Tr[(sigma_i x sigma_j) rho]

    Raises:
        InputError: if rho is not 4x4, not Hermitian, or not trace one
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InputError(f"Density matrix must be 4x4, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InputError("Density matrix contains non-finite entries")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InputError("Density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InputError(f"Density matrix trace is {np.trace(rho).real:.6g}, expected 1")

    a = [np.trace(np.kron(p, _I2) @ rho).real for p in _PAULIS]
    b = [np.trace(np.kron(_I2, p) @ rho).real for p in _PAULIS]
    E = [[np.trace(np.kron(pi, pj) @ rho).real for pj in _PAULIS] for pi in _PAULIS]
    return new_state(a, b, E, label=label)


def is_physical(s: TwoQubitState, tol: float = PHYSICALITY_TOL) -> PhysicalityReport:
    """
    Check positivity of the density matrix.

    Returns:
        (physical, min_eigenvalue) with physical True iff min eigenvalue >= -tol
    """
    return _physicality(s.a, s.b, s.E, tol)


def bell_region_inequalities(l1: float, l2: float, l3: float) -> Tuple[float, float, float, float]:
    """Left-hand sides of the four tetrahedron inequalities (all >= 0 inside)."""
    return (
        1 - l1 - l2 - l3,
        1 - l1 + l2 + l3,
        1 + l1 - l2 + l3,
        1 + l1 + l2 - l3,
    )


def bell_region_check(l1: float, l2: float, l3: float, tol: float = PHYSICALITY_TOL) -> bool:
    """
    Membership of (l1, l2, l3) in the tetrahedron of physical Bell-diagonal states.

    Vertices are (-1,-1,-1), (-1,1,1), (1,-1,1), (1,1,-1).
    """
    return all(value >= -tol for value in bell_region_inequalities(l1, l2, l3))


def bell_diagonal(l1: float, l2: float, l3: float, label: str = "") -> TwoQubitState:
    """Bell-diagonal state a = b = 0, E = diag(l1, l2, l3)."""
    return new_state(np.zeros(3), np.zeros(3), np.diag([l1, l2, l3]), label=label)


def werner(lam: float) -> TwoQubitState:
    """
    Werner state lam |psi-><psi-| + (1 - lam) I/4, i.e. a = b = 0, E = -lam I.

    Raises:
        InputError: if lam is outside [0, 1]
    """
    if not np.isfinite(lam) or lam < 0 or lam > 1:
        raise InputError(f"Werner parameter must lie in [0, 1], got {lam}")
    return new_state(np.zeros(3), np.zeros(3), -lam * np.eye(3), label=f"werner({lam:g})")


def singlet() -> TwoQubitState:
    return new_state(np.zeros(3), np.zeros(3), -np.eye(3), label="singlet")


def correlation_capability(s: TwoQubitState) -> Mat3:
    """
    Pauli coefficients E_ij - a_i b_j of rho_AB - rho_A x rho_B (up to the 1/4 factor).

    Vanishes exactly for product states.
    """
    return s.E - np.outer(s.a, s.b)


def squared_correlation_eigs(E) -> Tuple[float, float, float]:
    """
    Eigenvalues of E^T E in descending order.

    Computed as squared singular values of E, which keeps them nonnegative
    and invariant under E -> O1 E O2.
    """
    singular = np.linalg.svd(np.asarray(E, dtype=float), compute_uv=False)
    squared = np.sort(singular ** 2)[::-1]
    return float(squared[0]), float(squared[1]), float(squared[2])


def random_physical_state(rng: np.random.Generator, label: str = "") -> TwoQubitState:
    """
    Draw a random physical state from the Ginibre ensemble.

    Args:
        rng: numpy Generator

    Returns:
        TwoQubitState built from G G^dagger / Tr[G G^dagger]
    """
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return from_density_matrix((rho + rho.conj().T) / 2, label=label)
