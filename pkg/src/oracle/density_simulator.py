"""
Density Simulator - Full 4x4 density-matrix simulation of the RSP protocol
Independent matrix path used to cross-check the Bloch-space formulas
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from src.state.bloch_core import TwoQubitState
from src.strategy.decoding_strategy import DecodingStrategy
from src.utils.errors import InputError

logger = logging.getLogger(__name__)

DEGENERATE_PROB = 1e-14

# Matrix path keeps its own Pauli basis, separate from the Bloch kernels
SIGMA = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


def _dot_sigma(v) -> np.ndarray:
    return np.einsum("i,ijk->jk", np.asarray(v, dtype=float), SIGMA[1:])


def unitary(n, gamma: float) -> np.ndarray:
    """
    Qubit rotation U = cos(gamma/2) I - i sin(gamma/2) n.sigma.

    Raises:
        InputError: if n is not a unit 3-vector within 1e-9
    """
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise InputError(f"Rotation axis must be a unit 3-vector, got {n}")
    return math.cos(gamma / 2) * SIGMA[0] - 1j * math.sin(gamma / 2) * _dot_sigma(n)


def density_matrix(s: TwoQubitState) -> np.ndarray:
    """rho_AB = 1/4 sum_ij T_ij sigma_i x sigma_j with T = [[1, b], [a, E]]."""
    T = np.zeros((4, 4))
    T[0, 0] = 1.0
    T[0, 1:] = s.b
    T[1:, 0] = s.a
    T[1:, 1:] = s.E
    return 0.25 * np.einsum("ij,iab,jcd->acbd", T, SIGMA, SIGMA).reshape(4, 4)


def partial_trace_a(rho: np.ndarray) -> np.ndarray:
    """Trace out the first qubit of a 4x4 operator."""
    return np.einsum("ijik->jk", rho.reshape(2, 2, 2, 2))


def bloch_of(rho2: np.ndarray) -> np.ndarray:
    """Bloch vector Tr[sigma_i rho] of a qubit operator."""
    return np.einsum("ijk,kj->i", SIGMA[1:], rho2).real


def pure_state_from_bloch(s_hat) -> np.ndarray:
    """
    Pure qubit state with Bloch vector s_hat.

    The +1 eigenvector of s.sigma, phase fixed so the first nonzero amplitude
    is real and positive.
    """
    s_hat = np.asarray(s_hat, dtype=float)
    if s_hat.shape != (3,) or abs(np.linalg.norm(s_hat) - 1.0) > 1e-9:
        raise InputError(f"Signal must be a unit 3-vector, got {s_hat}")

    _, vecs = np.linalg.eigh(_dot_sigma(s_hat))
    psi = vecs[:, -1]
    lead = psi[0] if abs(psi[0]) > 1e-12 else psi[1]
    return psi * (abs(lead) / lead)


def state_fidelity(psi: np.ndarray, rho2: np.ndarray) -> float:
    """<psi|rho|psi>."""
    return float(np.vdot(psi, rho2 @ psi).real)


@dataclass
class OracleResult:
    """Bob's averaged state plus per-outcome probabilities."""

    rho_b: np.ndarray
    probabilities: Tuple[float, float]
    bloch: np.ndarray


def simulate_protocol(s: TwoQubitState, alpha, dec: DecodingStrategy) -> OracleResult:
    """
    Run measurement, partial trace, decoding and mixing on the 4x4 matrix.

    Args:
        s: Shared state
        alpha: Alice's unit measurement direction
        dec: Bob's decoding rotations

    Returns:
        OracleResult; a branch with probability below 1e-14 contributes nothing
    """
    rho = density_matrix(s)
    rotations = (unitary(dec.n1, dec.gamma1), unitary(dec.n2, dec.gamma2))

    alpha_sigma = _dot_sigma(alpha)
    rho_b = np.zeros((2, 2), dtype=complex)
    probabilities = []

    for sign, U in zip((1.0, -1.0), rotations):
        projector = np.kron((SIGMA[0] + sign * alpha_sigma) / 2, SIGMA[0])
        branch = partial_trace_a(projector @ rho @ projector)
        p = float(np.trace(branch).real)
        probabilities.append(p)
        if p < DEGENERATE_PROB:
            continue
        # branch is already weighted by p
        rho_b += U @ branch @ U.conj().T

    return OracleResult(rho_b=rho_b, probabilities=tuple(probabilities), bloch=bloch_of(rho_b))


@dataclass
class DemoRun:
    phi: float
    probabilities: Tuple[float, float]
    fidelities: Tuple[float, float]
    average_fidelity: float


@dataclass
class DemoTranscript:
    runs: List[DemoRun] = field(default_factory=list)

    @property
    def min_fidelity(self) -> float:
        return min(run.average_fidelity for run in self.runs)


def standard_rsp_demo(n_phases: int = 64) -> DemoTranscript:
    """
    Ideal protocol on the singlet for equatorial signals (|0> + e^{i phi}|1>)/sqrt(2).

    Alice measures in {psi_s, psi_s_perp}. On outcome psi_s Bob holds psi_s_perp
    and applies sigma_z; on the other outcome he does nothing.
    """
    singlet = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)
    rho = np.outer(singlet, singlet.conj())
    corrections = (unitary([0.0, 0.0, 1.0], math.pi), SIGMA[0])

    transcript = DemoTranscript()
    for k in range(n_phases):
        phi = 2.0 * math.pi * k / n_phases
        psi_s = np.array([1.0, np.exp(1j * phi)]) / math.sqrt(2)
        psi_perp = np.array([1.0, -np.exp(1j * phi)]) / math.sqrt(2)

        probabilities = []
        fidelities = []
        for outcome, U in zip((psi_s, psi_perp), corrections):
            projector = np.kron(np.outer(outcome, outcome.conj()), SIGMA[0])
            branch = partial_trace_a(projector @ rho @ projector)
            p = float(np.trace(branch).real)
            bob = U @ (branch / p) @ U.conj().T
            probabilities.append(p)
            fidelities.append(state_fidelity(psi_s, bob))

        average = sum(p * f for p, f in zip(probabilities, fidelities))
        transcript.runs.append(DemoRun(phi, tuple(probabilities), tuple(fidelities), average))

    logger.debug(f"Singlet demo: min fidelity {transcript.min_fidelity:.15f} over {n_phases} phases")
    return transcript
