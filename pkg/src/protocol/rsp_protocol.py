"""
RSP Protocol - Single-shot remote state preparation in Bloch space
Measurement branches, decoding rotations, averaged output, fidelity and payoff
"""

import logging
import math
from typing import NamedTuple, Optional, Tuple

import numpy as np

from src.state.bloch_core import Mat3, TwoQubitState, Vec3
from src.strategy.decoding_strategy import DecodingStrategy
from src.utils.errors import InputError

logger = logging.getLogger(__name__)

AXIS_NORM_TOL = 1e-9
BRANCH_EPS = 1e-12
DEGENERATE_NORM = 1e-12

Z_HAT = np.array([0.0, 0.0, 1.0])


def _cross_matrix(n: Vec3) -> Mat3:
    return np.array([
        [0.0, -n[2], n[1]],
        [n[2], 0.0, -n[0]],
        [-n[1], n[0], 0.0],
    ])


def rotation_matrix(n, gamma: float) -> Mat3:
    """
    Rotation by gamma about the unit axis n (Rodrigues form).

    R v = cos(g) v + sin(g) n x v + (1 - cos(g)) (n.v) n

    Raises:
        InputError: if |n| differs from 1 by more than 1e-9
    """
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > AXIS_NORM_TOL:
        raise InputError(f"Rotation axis must be a unit 3-vector, got {n}")

    c = math.cos(gamma)
    s = math.sin(gamma)
    return c * np.eye(3) + s * _cross_matrix(n) + (1.0 - c) * np.outer(n, n)


def decoding_rotations(dec: DecodingStrategy) -> Tuple[Mat3, Mat3]:
    """Rotation matrices (R1, R2) of a decoding strategy."""
    return rotation_matrix(dec.n1, dec.gamma1), rotation_matrix(dec.n2, dec.gamma2)


class BranchResult(NamedTuple):
    probability: float
    bloch: Optional[Vec3]  # None when the branch has zero probability
    weighted: Vec3


def measure_branch(s: TwoQubitState, alpha, m: int) -> BranchResult:
    """
    Outcome m of Alice's projective measurement along alpha.

    Outcome 1 projects on +alpha, outcome 2 on -alpha.

    Args:
        s: Shared two-qubit state
        alpha: Unit measurement direction
        m: Outcome label, 1 or 2

    Returns:
        BranchResult with P_m = (1 + a.alpha_m)/2, Bob's conditional Bloch
        vector and the always-finite product P_m * bloch = (b + E^T alpha_m)/2
    """
    if m not in (1, 2):
        raise InputError(f"Outcome label must be 1 or 2, got {m}")

    alpha_m = np.asarray(alpha, dtype=float) * (1.0 if m == 1 else -1.0)
    probability = 0.5 * (1.0 + float(s.a @ alpha_m))
    weighted = 0.5 * (s.b + s.E.T @ alpha_m)

    bloch = weighted / probability if probability > BRANCH_EPS else None
    return BranchResult(probability, bloch, weighted)


def average_bloch(s: TwoQubitState, alpha, dec: DecodingStrategy) -> Vec3:
    """
    Bob's averaged Bloch vector after decoding.

    r = 1/2 [(R1 + R2) b + (R1 - R2) E^T alpha], never dividing by P_m.
    """
    r1, r2 = decoding_rotations(dec)
    alpha = np.asarray(alpha, dtype=float)
    return 0.5 * ((r1 + r2) @ s.b + (r1 - r2) @ (s.E.T @ alpha))


def linear_fidelity(r, s_hat) -> float:
    """F = (1 + r.s)/2."""
    return 0.5 * (1.0 + float(np.dot(r, s_hat)))


def payoff(r, s_hat) -> float:
    """Quadratic fidelity (r.s)^2. Blind to the sign of the overlap."""
    return float(np.dot(r, s_hat)) ** 2


def overlap_terms(s: TwoQubitState, dec: DecodingStrategy) -> Tuple[Vec3, Mat3]:
    """
    Kernel of the encoding-maximized overlap.

    Returns:
        (u, M) with u = (R1 + R2) b and M = E (R1^T - R2^T), so that
        max over alpha of r.s equals (u.s + |M s|) / 2
    """
    r1, r2 = decoding_rotations(dec)
    return (r1 + r2) @ s.b, s.E @ (r1.T - r2.T)


def optimal_encoding_axis(s: TwoQubitState, dec: DecodingStrategy, s_hat) -> Vec3:
    """
    Measurement direction maximizing r.s for a fixed decoding.

    alpha* = M s / |M s|; when |M s| < 1e-12 the overlap does not depend on
    alpha and z is returned.
    """
    _, M = overlap_terms(s, dec)
    g = M @ np.asarray(s_hat, dtype=float)
    norm = np.linalg.norm(g)
    if norm < DEGENERATE_NORM:
        return Z_HAT.copy()
    return g / norm


def max_encoded_overlap(s: TwoQubitState, dec: DecodingStrategy, s_hat) -> float:
    """max over alpha of r.s = ((R1 + R2) b . s + |E (R1^T - R2^T) s|) / 2."""
    u, M = overlap_terms(s, dec)
    s_hat = np.asarray(s_hat, dtype=float)
    return 0.5 * (float(u @ s_hat) + float(np.linalg.norm(M @ s_hat)))
