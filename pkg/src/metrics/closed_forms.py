"""
Closed Forms - Analytic transmission-efficiency quantities
Eigenvalue metrics of the correlation matrix, fidelity relations, guessing baseline, state comparison
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import ellipe, entr

from src.state.bloch_core import (
    Mat3,
    TwoQubitState,
    correlation_capability,
    squared_correlation_eigs,
)
from src.utils.errors import InputError

logger = logging.getLogger(__name__)

BELL_DIAGONAL_TOL = 1e-9
TIE_TOL = 1e-12
RANGE_SLACK = 1e-12

Evaluator = Callable[[TwoQubitState], Dict[str, float]]


def metric_D(E: Mat3) -> float:
    """Half the sum of the two largest eigenvalues of E^T E."""
    eigs = squared_correlation_eigs(E)
    return 0.5 * (eigs[0] + eigs[1])


def metric_d(E: Mat3) -> float:
    """Half the sum of the two smallest eigenvalues of E^T E."""
    eigs = squared_correlation_eigs(E)
    return 0.5 * (eigs[1] + eigs[2])


def metric_Q(E: Mat3) -> float:
    """Tr[E^T E] / 3."""
    return float(sum(squared_correlation_eigs(E))) / 3.0


def binary_entropy(x: float) -> float:
    """
    Shannon entropy h(x) in bits, with h(0) = h(1) = 0.

    Raises:
        InputError: if x is outside [0, 1]
    """
    if not (-RANGE_SLACK <= x <= 1.0 + RANGE_SLACK):
        raise InputError(f"Binary entropy argument must lie in [0, 1], got {x}")
    x = min(1.0, max(0.0, x))
    return float((entr(x) + entr(1.0 - x)) / math.log(2.0))


def metric_C3(Q: float) -> float:
    """
    Simultaneous-correlation measure 1 - h((1 + sqrt(Q))/2) of a Bell-diagonal state.

    Raises:
        InputError: if Q is outside [0, 1]
    """
    if not (-RANGE_SLACK <= Q <= 1.0 + RANGE_SLACK):
        raise InputError(f"Q must lie in [0, 1], got {Q}")
    Q = min(1.0, max(0.0, Q))
    return 1.0 - binary_entropy(0.5 * (1.0 + math.sqrt(Q)))


def fidelity_from_payoff(P: float) -> float:
    """F = (1 + sqrt(P)) / 2."""
    if P < 0:
        raise InputError(f"Payoff must be nonnegative, got {P}")
    return 0.5 * (1.0 + math.sqrt(P))


def optimal_fidelity_exact(E: Mat3) -> float:
    """
    Fully optimized circle-averaged fidelity.

    1/2 + sigma1 * E(1 - sigma2^2/sigma1^2) / pi, where sigma1 >= sigma2 are the
    two largest singular values of E and E(m) is the complete elliptic integral
    of the second kind. Never exceeds (1 + sqrt(D))/2, with equality iff sigma1 = sigma2.
    """
    sigma = np.sort(np.linalg.svd(np.asarray(E, dtype=float), compute_uv=False))[::-1]
    s1, s2 = float(sigma[0]), float(sigma[1])
    if s1 < 1e-15:
        return 0.5
    return 0.5 + s1 * float(ellipe(1.0 - (s2 / s1) ** 2)) / math.pi


@dataclass(frozen=True)
class ClosedForms:
    """Closed-form references recorded in every report."""

    D: float
    d: float
    Q: float
    C3: Optional[float]
    eigs: Tuple[float, float, float]
    D_chi: float
    fidelity_closed: float
    fidelity_exact: float
    payoff_valid: float

    def to_dict(self) -> dict:
        data = asdict(self)
        data["eigs"] = list(self.eigs)
        return data


def closed_forms(s: TwoQubitState) -> ClosedForms:
    """
    Collect every analytic quantity for a state.

    C3 is only defined for Bell-diagonal states (a = b = 0) and is None otherwise.
    payoff_valid is D when b = 0 and the sphere-averaged standard-decoding
    payoff Q otherwise.
    """
    eigs = squared_correlation_eigs(s.E)
    D = 0.5 * (eigs[0] + eigs[1])
    Q = sum(eigs) / 3.0

    C3 = None
    if s.is_bell_diagonal(BELL_DIAGONAL_TOL):
        C3 = metric_C3(Q)

    b_zero = float(np.linalg.norm(s.b)) <= BELL_DIAGONAL_TOL
    return ClosedForms(
        D=D,
        d=0.5 * (eigs[1] + eigs[2]),
        Q=Q,
        C3=C3,
        eigs=eigs,
        D_chi=metric_D(correlation_capability(s)),
        fidelity_closed=fidelity_from_payoff(D),
        fidelity_exact=optimal_fidelity_exact(s.E),
        payoff_valid=D if b_zero else Q,
    )


class GuessingStats(NamedTuple):
    avg_payoff: float
    avg_fidelity: float


def guessing_protocol_stats(
    n_samples: int = 1024,
    method: str = "exact",
    rng: Optional[np.random.Generator] = None,
) -> GuessingStats:
    """
    Baseline where Bob outputs a random pure state on the signal circle.

    The overlap with the signal is cos(t) for a uniform angle t, so the payoff
    averages cos^2 = 1/2 while the linear fidelity averages (1 + cos)/2 = 1/2.

    Args:
        n_samples: Grid size (exact, at least 3) or number of draws (monte_carlo)
        method: "exact" for the uniform trapezoid grid, "monte_carlo" for sampling
        rng: Generator for monte_carlo draws

    Returns:
        GuessingStats(avg_payoff, avg_fidelity)
    """
    if n_samples < 1:
        raise InputError(f"n_samples must be >= 1, got {n_samples}")

    if method == "exact":
        # two points only see cos = +-1, one only cos = 1
        if n_samples < 3:
            raise InputError(f"Exact grid needs at least 3 points, got {n_samples}")
        angles = 2.0 * math.pi * np.arange(n_samples) / n_samples
    elif method == "monte_carlo":
        rng = rng if rng is not None else np.random.default_rng()
        angles = rng.uniform(0.0, 2.0 * math.pi, size=n_samples)
    else:
        raise InputError(f"Unknown guessing method: {method}")

    overlaps = np.cos(angles)
    return GuessingStats(
        avg_payoff=math.fsum(overlaps ** 2) / n_samples,
        avg_fidelity=math.fsum(0.5 * (1.0 + overlaps)) / n_samples,
    )


@dataclass
class StateComparison:
    """Outcome of ranking two resource states; winner is 1, 2 or 0 for a tie."""

    winner: int
    entries: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"winner": self.winner, "states": self.entries}


def compare_states(
    s1: TwoQubitState,
    s2: TwoQubitState,
    evaluator: Optional[Evaluator] = None,
) -> StateComparison:
    """
    Rank two resource states by their RSP usefulness.

    Args:
        s1: First state
        s2: Second state
        evaluator: Optional numeric evaluator returning e.g. optimized fidelity
            and payoff; its values are attached to each entry

    Returns:
        StateComparison ordered by D, ties within 1e-12
    """
    entries = []
    for s in (s1, s2):
        forms = closed_forms(s)
        entry = {
            "label": s.label,
            "D": forms.D,
            "fidelity_closed": forms.fidelity_closed,
            "fidelity_exact": forms.fidelity_exact,
            "payoff_valid": forms.payoff_valid,
            "physical": s.physical,
        }
        if evaluator is not None:
            entry["numeric"] = evaluator(s)
        entries.append(entry)

    gap = entries[0]["D"] - entries[1]["D"]
    if abs(gap) <= TIE_TOL:
        winner = 0
    else:
        winner = 1 if gap > 0 else 2

    logger.info(f"Comparison: D1={entries[0]['D']:.6f} D2={entries[1]['D']:.6f} winner={winner or 'tie'}")
    return StateComparison(winner=winner, entries=entries)
