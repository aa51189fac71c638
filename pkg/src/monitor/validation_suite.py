"""
Validation Suite - Cross-checks between the Bloch formulas, quadrature and the matrix oracle
"""

import logging
import math
from typing import Callable, List, Tuple

import numpy as np

from src.metrics.closed_forms import guessing_protocol_stats
from src.monitor.validation_monitor import ValidationMonitor
from src.optimizer.decoding_optimizer import fibonacci_sphere
from src.oracle.density_simulator import (
    SIGMA,
    bloch_of,
    pure_state_from_bloch,
    simulate_protocol,
    standard_rsp_demo,
    state_fidelity,
    unitary,
)
from src.protocol.great_circle import (
    QuadratureSpec,
    avg_max_payoff,
    constrained_avg_payoff,
    frame_from_beta,
    standard_avg_payoff,
)
from src.protocol.rsp_protocol import (
    average_bloch,
    decoding_rotations,
    linear_fidelity,
    optimal_encoding_axis,
    rotation_matrix,
)
from src.state.bloch_core import (
    TwoQubitState,
    bell_diagonal,
    bell_region_check,
    is_physical,
    normalize,
    random_physical_state,
)
from src.strategy.decoding_strategy import DecodingStrategy

logger = logging.getLogger(__name__)

Instance = Tuple[TwoQubitState, np.ndarray, DecodingStrategy]


def _random_unit(rng: np.random.Generator) -> np.ndarray:
    return normalize(rng.normal(size=3))


def _instances(rng: np.random.Generator, count: int) -> List[Instance]:
    return [(random_physical_state(rng), _random_unit(rng), DecodingStrategy.random(rng)) for _ in range(count)]


def check_oracle_bloch(instances: List[Instance]) -> float:
    return max(
        float(np.max(np.abs(simulate_protocol(s, alpha, dec).bloch - average_bloch(s, alpha, dec))))
        for s, alpha, dec in instances
    )


def check_oracle_probabilities(instances: List[Instance]) -> float:
    worst = 0.0
    for s, alpha, dec in instances:
        p1, p2 = simulate_protocol(s, alpha, dec).probabilities
        expected = 0.5 * (1.0 + float(s.a @ alpha))
        worst = max(worst, abs(p1 - expected), abs(p2 - (1.0 - expected)))
    return worst


def check_oracle_fidelity(instances: List[Instance], rng: np.random.Generator) -> float:
    worst = 0.0
    for s, alpha, dec in instances:
        s_hat = _random_unit(rng)
        oracle = state_fidelity(pure_state_from_bloch(s_hat), simulate_protocol(s, alpha, dec).rho_b)
        worst = max(worst, abs(oracle - linear_fidelity(average_bloch(s, alpha, dec), s_hat)))
    return worst


def check_unitary_conjugation(rng: np.random.Generator, count: int) -> float:
    worst = 0.0
    for _ in range(count):
        n = _random_unit(rng)
        gamma = rng.uniform(-math.pi, math.pi)
        v = _random_unit(rng) * rng.uniform(0.0, 1.0)
        rho = 0.5 * (SIGMA[0] + np.einsum("i,ijk->jk", v, SIGMA[1:]))
        U = unitary(n, gamma)
        rotated = bloch_of(U @ rho @ U.conj().T)
        worst = max(worst, float(np.max(np.abs(rotated - rotation_matrix(n, gamma) @ v))))
    return worst


def check_singlet_demo(n_phases: int = 64) -> float:
    transcript = standard_rsp_demo(n_phases)
    return max(abs(f - 1.0) for run in transcript.runs for f in run.fidelities + (run.average_fidelity,))


def check_standard_quadrature(rng: np.random.Generator, count: int) -> float:
    q = QuadratureSpec(n_points=256)
    worst = 0.0
    for _ in range(count):
        s = random_physical_state(rng)
        gc = frame_from_beta(_random_unit(rng))
        numeric = avg_max_payoff(s, DecodingStrategy.standard(gc.beta), gc, q)
        worst = max(worst, abs(numeric - standard_avg_payoff(s, gc.beta)))
    return worst


def check_constrained_quadrature(rng: np.random.Generator, count: int) -> float:
    q = QuadratureSpec(n_points=256)
    worst = 0.0
    for _ in range(count):
        s = random_physical_state(rng)
        gc = frame_from_beta(_random_unit(rng))
        g1, g2 = rng.uniform(-math.pi, math.pi, size=2)
        numeric = avg_max_payoff(s, DecodingStrategy.create(gc.beta, g1, gc.beta, g2), gc, q)
        worst = max(worst, abs(numeric - constrained_avg_payoff(s, gc.beta, g1, g2)))
    return worst


def check_encoding_grid(instances: List[Instance], rng: np.random.Generator, directions: int = 4096) -> float:
    """Largest amount by which any grid direction beats the analytic encoding axis."""
    grid = fibonacci_sphere(directions)
    worst = 0.0
    for s, _, dec in instances:
        s_hat = _random_unit(rng)
        r1, r2 = decoding_rotations(dec)
        # r(alpha) for every grid alpha at once
        blochs = 0.5 * ((r1 + r2) @ s.b + grid @ ((r1 - r2) @ s.E.T).T)
        best_grid = float(np.max(blochs @ s_hat))
        analytic = float(average_bloch(s, optimal_encoding_axis(s, dec, s_hat), dec) @ s_hat)
        worst = max(worst, best_grid - analytic)
    return max(worst, 0.0)


def check_region_agreement(rng: np.random.Generator, count: int) -> float:
    """Number of samples where the tetrahedron test and eigenvalue positivity disagree."""
    samples = rng.uniform(-1.0, 1.0, size=(count, 3))
    mismatches = 0
    for l1, l2, l3 in samples:
        if bell_region_check(l1, l2, l3) != is_physical(bell_diagonal(l1, l2, l3)).physical:
            mismatches += 1
    return float(mismatches)


def check_guessing_protocol() -> float:
    stats = guessing_protocol_stats(n_samples=1024, method="exact")
    return max(abs(stats.avg_payoff - 0.5), abs(stats.avg_fidelity - 0.5))


def run_validation_suite(
    seed: int = 42,
    n_instances: int = 100,
    n_region_samples: int = 10_000,
) -> ValidationMonitor:
    """
    Run every cross-check and collect the outcomes.

    Args:
        seed: Seed of the random instances
        n_instances: Random (state, alpha, decoding) triples per check
        n_region_samples: Samples for the tetrahedron agreement check

    Returns:
        ValidationMonitor holding one CheckResult per check
    """
    rng = np.random.default_rng(seed)
    instances = _instances(rng, n_instances)
    monitor = ValidationMonitor()

    checks: List[Tuple[str, float, Callable[[], float]]] = [
        ("oracle_bloch_vs_formula", 1e-12, lambda: check_oracle_bloch(instances)),
        ("oracle_branch_probabilities", 1e-14, lambda: check_oracle_probabilities(instances)),
        ("oracle_fidelity_vs_formula", 1e-12, lambda: check_oracle_fidelity(instances, rng)),
        ("unitary_vs_rotation_matrix", 1e-12, lambda: check_unitary_conjugation(rng, n_instances)),
        ("singlet_protocol_64_phases", 1e-12, check_singlet_demo),
        ("standard_payoff_quadrature", 1e-10, lambda: check_standard_quadrature(rng, n_instances)),
        ("constrained_payoff_quadrature", 1e-10, lambda: check_constrained_quadrature(rng, n_instances)),
        ("encoding_axis_vs_grid", 1e-9, lambda: check_encoding_grid(instances, rng)),
        ("tetrahedron_vs_eigenvalues", 0.0, lambda: check_region_agreement(rng, n_region_samples)),
        ("guessing_protocol_exact", 1e-12, check_guessing_protocol),
    ]

    for name, tolerance, check in checks:
        try:
            monitor.record(name, check(), tolerance)
        except Exception as e:
            logger.exception(f"[X] Check {name} raised")
            monitor.record_failure(name, tolerance, e)

    return monitor
