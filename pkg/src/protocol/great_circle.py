"""
Great Circle - Signal ensembles on a great circle of the Bloch sphere
Frame construction, signal vectors and quadrature averages of fidelity and payoff
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.protocol.rsp_protocol import overlap_terms
from src.state.bloch_core import TwoQubitState, Vec3, normalize
from src.strategy.decoding_strategy import DecodingStrategy
from src.utils.errors import ConvergenceError

logger = logging.getLogger(__name__)

MAX_QUAD_POINTS = 2 ** 16
POLE_TOL = 1e-12


class QuadratureSpec(BaseModel):
    """Uniform phi-grid trapezoid settings."""

    model_config = ConfigDict(frozen=True)

    n_points: int = Field(default=256, ge=8)
    refine: bool = False
    tol: float = Field(default=1e-10, gt=0)

    @model_validator(mode="after")
    def _check_grid(self):
        # antipodal points must pair up so odd-in-s terms cancel
        if self.n_points % 2:
            raise ValueError(f"n_points must be even, got {self.n_points}")
        if self.refine and self.n_points & (self.n_points - 1):
            raise ValueError(f"n_points must be a power of two when refine is on, got {self.n_points}")
        if self.n_points > MAX_QUAD_POINTS:
            raise ValueError(f"n_points must not exceed {MAX_QUAD_POINTS}")
        return self


@dataclass(frozen=True)
class GreatCircle:
    """
    Circle of pure states orthogonal to beta, with in-plane frame (e1, e2).

    e1 lies in the xy-plane, e2 = beta x e1, so e1 x e2 = beta.
    """

    beta: Vec3
    theta_beta: float
    phi_beta: float
    e1: Vec3
    e2: Vec3


def frame_from_beta(beta) -> GreatCircle:
    """
    Build the great circle with normal beta.

    Away from the poles e1 = (-beta_y, beta_x, 0)/rho, the intersection of the
    circle plane with the xy-plane. At the poles phi_beta is taken as 0,
    which gives e1 = y and keeps the frame continuous along phi_beta = 0.
    """
    beta = normalize(beta)
    rho = math.hypot(beta[0], beta[1])
    theta_beta = math.acos(max(-1.0, min(1.0, float(beta[2]))))

    if rho < POLE_TOL:
        phi_beta = 0.0
        e1 = np.array([0.0, 1.0, 0.0])
    else:
        phi_beta = math.atan2(beta[1], beta[0]) % (2.0 * math.pi)
        e1 = np.array([-beta[1], beta[0], 0.0]) / rho

    e2 = np.cross(beta, e1)
    return GreatCircle(beta=beta, theta_beta=theta_beta, phi_beta=phi_beta, e1=e1, e2=e2)


def signal_vector(gc: GreatCircle, phi: float) -> Vec3:
    """s(phi) = cos(phi) e1 + sin(phi) e2."""
    return math.cos(phi) * gc.e1 + math.sin(phi) * gc.e2


def signal_vectors(gc: GreatCircle, n: int) -> np.ndarray:
    """Signal vectors on the uniform grid phi_k = 2 pi k / n, shape (n, 3)."""
    phis = 2.0 * math.pi * np.arange(n) / n
    return np.outer(np.cos(phis), gc.e1) + np.outer(np.sin(phis), gc.e2)


def circle_average(
    integrand: Callable[[np.ndarray], np.ndarray],
    gc: GreatCircle,
    q: QuadratureSpec,
) -> float:
    """
    Trapezoid average of a vectorized integrand over the circle.

    Args:
        integrand: Maps an (n, 3) array of signal vectors to n values
        gc: Great circle
        q: Quadrature settings

    Returns:
        Mean of the integrand on the grid (the periodic trapezoid rule)

    Raises:
        ConvergenceError: if refinement needs more than 2^16 points
    """
    n = q.n_points
    value = math.fsum(integrand(signal_vectors(gc, n))) / n
    if not q.refine:
        return value

    while True:
        n *= 2
        if n > MAX_QUAD_POINTS:
            raise ConvergenceError(
                f"Quadrature did not converge to {q.tol:g} within {MAX_QUAD_POINTS} points"
            )
        refined = math.fsum(integrand(signal_vectors(gc, n))) / n
        if abs(refined - value) < q.tol:
            logger.debug(f"Quadrature converged at {n} points")
            return refined
        value = refined


def _max_overlaps(s: TwoQubitState, dec: DecodingStrategy) -> Callable[[np.ndarray], np.ndarray]:
    u, M = overlap_terms(s, dec)

    def overlaps(signals: np.ndarray) -> np.ndarray:
        return 0.5 * (signals @ u + np.linalg.norm(signals @ M.T, axis=1))

    return overlaps


def avg_max_fidelity(
    s: TwoQubitState,
    dec: DecodingStrategy,
    gc: GreatCircle,
    q: QuadratureSpec = QuadratureSpec(),
) -> float:
    """Circle average of the encoding-maximized linear fidelity."""
    overlaps = _max_overlaps(s, dec)
    return circle_average(lambda signals: 0.5 * (1.0 + overlaps(signals)), gc, q)


def avg_max_payoff(
    s: TwoQubitState,
    dec: DecodingStrategy,
    gc: GreatCircle,
    q: QuadratureSpec = QuadratureSpec(),
) -> float:
    """Circle average of the squared encoding-maximized overlap."""
    overlaps = _max_overlaps(s, dec)
    return circle_average(lambda signals: overlaps(signals) ** 2, gc, q)


def standard_avg_payoff(s: TwoQubitState, beta) -> float:
    """Circle-averaged payoff under standard decoding: (Tr E^T E - |E beta|^2) / 2."""
    beta = normalize(beta)
    E = s.E
    return 0.5 * (float(np.sum(E * E)) - float(np.sum((E @ beta) ** 2)))


def constrained_avg_payoff(s: TwoQubitState, beta, gamma1: float, gamma2: float) -> float:
    """
    Circle-averaged payoff when both rotations share the axis beta.

    P_c = (|b|^2 - (b.beta)^2)/2 cos^2(dg/2) + (Tr E^T E - |E beta|^2)/2 sin^2(dg/2)
    with dg = gamma1 - gamma2.
    """
    beta = normalize(beta)
    half = 0.5 * (gamma1 - gamma2)
    local = 0.5 * (float(s.b @ s.b) - float(s.b @ beta) ** 2)
    return local * math.cos(half) ** 2 + standard_avg_payoff(s, beta) * math.sin(half) ** 2
