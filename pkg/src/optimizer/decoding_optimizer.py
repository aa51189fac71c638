"""
Decoding Optimizer - Numerical maximization of transmission efficiency
Multi-start simplex search over decoding rotations, beta sweeps, grid oracle and TE reports
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation
from scipy.stats import qmc

from src.metrics.closed_forms import ClosedForms, closed_forms, fidelity_from_payoff
from src.oracle.density_simulator import simulate_protocol
from src.protocol.great_circle import (
    GreatCircle,
    QuadratureSpec,
    avg_max_fidelity,
    avg_max_payoff,
    frame_from_beta,
    signal_vector,
    signal_vectors,
    standard_avg_payoff,
)
from src.protocol.rsp_protocol import average_bloch, optimal_encoding_axis, rotation_matrix
from src.state.bloch_core import Mat3, TwoQubitState, Vec3, normalize
from src.strategy.decoding_strategy import (
    DecodingParams6,
    DecodingStrategy,
    axis_from_angles,
    strategy_from_array,
)
from src.utils.errors import ConvergenceError, InputError

logger = logging.getLogger(__name__)

B_ZERO_TOL = 1e-9
MAX_GRID_POINTS = 10 ** 7
FIDELITY_STREAM = 0
PAYOFF_STREAM = 1

# theta in [0, pi], phi in [0, 2pi), gamma in (-pi, pi]
_PARAM_LOW = np.array([0.0, 0.0, -math.pi] * 2)
_PARAM_SPAN = np.array([math.pi, 2.0 * math.pi, 2.0 * math.pi] * 2)


class OptimizerConfig(BaseModel):
    """Settings for the decoding search and beta sweeps."""

    model_config = ConfigDict(frozen=True)

    starts: int = Field(default=16, ge=1)
    max_iter: int = Field(default=400, ge=1)
    simplex_tol: float = Field(default=1e-9, gt=0)
    param_tol: float = Field(default=1e-6, gt=0)
    quad: QuadratureSpec = QuadratureSpec()
    beta_samples: int = Field(default=200, ge=8)
    seed: int = Field(default=42, ge=0)
    threads: int = Field(default=1, ge=1)
    tol_closed_form: float = Field(default=5e-3, gt=0)


@dataclass
class OptResult:
    """Best decoding found for one objective on one great circle."""

    value: float
    strategy: DecodingStrategy
    starts_used: int
    converged: bool
    best_start_index: int
    standard_value: float
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "strategy": self.strategy.to_dict(),
            "starts_used": self.starts_used,
            "converged": self.converged,
            "best_start_index": self.best_start_index,
            "standard_value": self.standard_value,
            "warnings": list(self.warnings),
        }


@dataclass
class BetaSample:
    beta: Vec3
    fidelity: float
    payoff: float
    standard_payoff: float
    converged: bool = True
    fidelity_result: Optional[OptResult] = None
    payoff_result: Optional[OptResult] = None

    def to_dict(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "fidelity": self.fidelity,
            "payoff": self.payoff,
            "standard_payoff": self.standard_payoff,
            "converged": self.converged,
        }


@dataclass
class BetaSweepReport:
    """Min/avg/max of the optimized figures of merit over the beta samples."""

    mode: str
    samples: List[BetaSample]
    f_min: float
    f_avg: float
    f_max: float
    p_min: float
    p_avg: float
    p_max: float
    standard_min: float
    standard_avg: float
    standard_max: float
    converged: bool

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "f_min": self.f_min,
            "f_avg": self.f_avg,
            "f_max": self.f_max,
            "p_min": self.p_min,
            "p_avg": self.p_avg,
            "p_max": self.p_max,
            "standard_min": self.standard_min,
            "standard_avg": self.standard_avg,
            "standard_max": self.standard_max,
            "converged": self.converged,
            "samples": [sample.to_dict() for sample in self.samples],
        }


def _stream(seed: int, beta_index: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, beta index, stream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, beta_index, stream])))


def _start_points(gc: GreatCircle, cfg: OptimizerConfig, beta_index: int, stream: int) -> np.ndarray:
    """Standard decoding first, then scrambled Halton points over the parameter box."""
    standard = DecodingParams6.from_strategy(DecodingStrategy.standard(gc.beta)).as_array()
    if cfg.starts == 1:
        return standard[None, :]

    halton = qmc.Halton(d=6, scramble=True, seed=_stream(cfg.seed, beta_index, stream))
    unit = halton.random(cfg.starts - 1)
    return np.vstack([standard, _PARAM_LOW + unit * _PARAM_SPAN])


class CircleObjective:
    """
    Circle-averaged encoding-maximized fidelity or payoff as a function of six raw angles.

    The signal grid is built once; evaluation uses the fixed grid of the
    quadrature spec without refinement. Non-finite angles score -inf.
    """

    def __init__(self, s: TwoQubitState, gc: GreatCircle, q: QuadratureSpec, kind: str):
        if kind not in ("fidelity", "payoff"):
            raise InputError(f"Unknown objective: {kind}")
        self.kind = kind
        self.b = s.b
        self.E = s.E
        self.signals = signal_vectors(gc, q.n_points)

    def __call__(self, x: np.ndarray) -> float:
        if not np.all(np.isfinite(x)):
            return -math.inf
        r1 = rotation_matrix(axis_from_angles(x[0], x[1]), x[2])
        r2 = rotation_matrix(axis_from_angles(x[3], x[4]), x[5])
        u = (r1 + r2) @ self.b
        M = self.E @ (r1.T - r2.T)
        overlaps = 0.5 * (self.signals @ u + np.linalg.norm(self.signals @ M.T, axis=1))

        if self.kind == "fidelity":
            return 0.5 * (1.0 + math.fsum(overlaps) / len(overlaps))
        return math.fsum(overlaps ** 2) / len(overlaps)


def refined_average(
    average: Callable[..., float],
    s: TwoQubitState,
    dec: DecodingStrategy,
    gc: GreatCircle,
    q: QuadratureSpec,
) -> Tuple[float, bool]:
    """
    Circle average with refinement, keeping the base-grid value if refinement runs out.

    Returns:
        (value, converged); converged is False when refinement raised
        ConvergenceError and the fixed-grid value was used instead
    """
    try:
        return average(s, dec, gc, q), True
    except ConvergenceError as e:
        logger.warning(f"[!] {e}; keeping the {q.n_points}-point value")
        return average(s, dec, gc, q.model_copy(update={"refine": False})), False


def bounded_mean(values: Sequence[float]) -> float:
    """Mean clamped into [min, max] so rounding cannot push it outside the samples."""
    mean = math.fsum(values) / len(values)
    return min(max(mean, min(values)), max(values))


def _simplex_spread(result) -> float:
    values = result.final_simplex[1]
    return float(np.max(values) - np.min(values))


def _run_search(
    s: TwoQubitState,
    gc: GreatCircle,
    cfg: OptimizerConfig,
    kind: str,
    beta_index: int,
) -> OptResult:
    objective = CircleObjective(s, gc, cfg.quad, kind)
    average = avg_max_fidelity if kind == "fidelity" else avg_max_payoff

    options = {
        "maxiter": cfg.max_iter,
        "xatol": cfg.param_tol,
        "fatol": cfg.simplex_tol,
        "adaptive": True,
    }

    stream = FIDELITY_STREAM if kind == "fidelity" else PAYOFF_STREAM
    starts = _start_points(gc, cfg, beta_index, stream)

    best_x = starts[0]
    best_value = -math.inf
    best_index = 0
    converged = False

    for index, x0 in enumerate(starts):
        result = minimize(lambda x: -objective(x), x0, method="Nelder-Mead", options=options)
        start_converged = bool(result.success) or _simplex_spread(result) <= cfg.simplex_tol
        converged = converged or start_converged
        if not start_converged:
            logger.debug(f"[!] {kind} start {index} stopped after {result.nit} iterations")

        value = -float(result.fun)
        if value > best_value:
            best_value = value
            best_x = result.x
            best_index = index

    # restart from the incumbent to collapse a stretched simplex
    polish = minimize(lambda x: -objective(x), best_x, method="Nelder-Mead", options=options)
    converged = converged or bool(polish.success) or _simplex_spread(polish) <= cfg.simplex_tol
    if -float(polish.fun) > best_value:
        best_x = polish.x

    standard = DecodingStrategy.standard(gc.beta)
    standard_value, standard_ok = refined_average(average, s, standard, gc, cfg.quad)
    strategy = strategy_from_array(best_x, fallback=standard)
    value, value_ok = refined_average(average, s, strategy, gc, cfg.quad)

    if value < standard_value:
        strategy, value, best_index, value_ok = standard, standard_value, 0, standard_ok
    converged = converged and value_ok

    if not converged:
        logger.warning(f"[!] {kind} search did not converge on any of {len(starts)} starts")

    return OptResult(
        value=value,
        strategy=strategy,
        starts_used=len(starts),
        converged=converged,
        best_start_index=best_index,
        standard_value=standard_value,
    )


def optimize_decoding_fidelity(
    s: TwoQubitState,
    gc: GreatCircle,
    cfg: OptimizerConfig = OptimizerConfig(),
    beta_index: int = 0,
) -> OptResult:
    """
    Maximize the circle-averaged, encoding-maximized linear fidelity over decodings.

    Args:
        s: Resource state
        gc: Great circle of signal states
        cfg: Search settings
        beta_index: Index of gc within a sweep, keys the random start stream

    Returns:
        OptResult; its value never falls below the standard-decoding value
    """
    return _run_search(s, gc, cfg, "fidelity", beta_index)


def optimize_decoding_payoff(
    s: TwoQubitState,
    gc: GreatCircle,
    cfg: OptimizerConfig = OptimizerConfig(),
    beta_index: int = 0,
) -> OptResult:
    """
    Maximize the circle-averaged, encoding-maximized payoff over decodings.

    The result carries a warning when b is nonzero: the payoff then rewards
    overlaps of either sign and is not a valid figure of merit.
    """
    result = _run_search(s, gc, cfg, "payoff", beta_index)
    if float(np.linalg.norm(s.b)) > B_ZERO_TOL:
        result.warnings.append("payoff_b_nonzero")
    return result


def fibonacci_sphere(M: int) -> np.ndarray:
    """
    Fibonacci lattice of M nearly uniform unit vectors, shape (M, 3).

    z_i = 1 - (2i + 1)/M, azimuth advancing by the golden angle.
    """
    if M < 1:
        raise InputError(f"Number of sphere samples must be positive, got {M}")
    i = np.arange(M)
    z = 1.0 - (2.0 * i + 1.0) / M
    radius = np.sqrt(1.0 - z * z)
    azimuth = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.column_stack([radius * np.cos(azimuth), radius * np.sin(azimuth), z])


def _beta_angles(beta: Vec3) -> np.ndarray:
    return np.array([
        math.acos(max(-1.0, min(1.0, float(beta[2])))),
        math.atan2(float(beta[1]), float(beta[0])),
    ])


def _refine_standard_extreme(s: TwoQubitState, beta0: Vec3, sign: float) -> float:
    """Local search over beta for the min (sign=+1) or max (sign=-1) standard payoff."""
    result = minimize(
        lambda x: sign * standard_avg_payoff(s, axis_from_angles(x[0], x[1])),
        _beta_angles(beta0),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 2000},
    )
    return sign * float(result.fun)


def _as_betas(sampling: Union[int, Sequence]) -> np.ndarray:
    if isinstance(sampling, (int, np.integer)):
        if sampling < 8:
            raise InputError(f"Fibonacci sampling needs at least 8 points, got {sampling}")
        return fibonacci_sphere(int(sampling))

    betas = [normalize(beta) for beta in sampling]
    if not betas:
        raise InputError("Beta sample list is empty")
    return np.array(betas)


def sweep_beta(
    s: TwoQubitState,
    sampling: Union[int, Sequence],
    cfg: OptimizerConfig = OptimizerConfig(),
    mode: str = "full",
) -> BetaSweepReport:
    """
    Evaluate the figures of merit over many great-circle normals.

    Args:
        s: Resource state
        sampling: Fibonacci point count (>= 8) or an explicit list of normals
        cfg: Search settings; threads parallelize over beta samples
        mode: "full" runs both decoding searches per beta; "standard" only
            evaluates standard decoding

    Returns:
        BetaSweepReport; standard_min/standard_max are refined by local search
        from the extreme samples, standard_avg is the sample mean
    """
    if mode not in ("full", "standard"):
        raise InputError(f"Unknown sweep mode: {mode}")
    betas = _as_betas(sampling)

    def evaluate(item) -> BetaSample:
        index, beta = item
        gc = frame_from_beta(beta)
        standard_payoff = standard_avg_payoff(s, gc.beta)

        if mode == "standard":
            fidelity, ok = refined_average(avg_max_fidelity, s, DecodingStrategy.standard(gc.beta), gc, cfg.quad)
            return BetaSample(gc.beta, fidelity, standard_payoff, standard_payoff, converged=ok)

        fid = optimize_decoding_fidelity(s, gc, cfg, beta_index=index)
        pay = optimize_decoding_payoff(s, gc, cfg, beta_index=index)
        return BetaSample(
            beta=gc.beta,
            fidelity=fid.value,
            payoff=pay.value,
            standard_payoff=standard_payoff,
            converged=fid.converged and pay.converged,
            fidelity_result=fid,
            payoff_result=pay,
        )

    items = list(enumerate(betas))
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            samples = list(pool.map(evaluate, items))
    else:
        samples = [evaluate(item) for item in items]

    fidelities = [sample.fidelity for sample in samples]
    payoffs = [sample.payoff for sample in samples]
    standard = [sample.standard_payoff for sample in samples]

    worst = samples[int(np.argmin(standard))].beta
    best = samples[int(np.argmax(standard))].beta
    standard_min = min(min(standard), _refine_standard_extreme(s, worst, 1.0))
    standard_max = max(max(standard), _refine_standard_extreme(s, best, -1.0))

    converged = all(sample.converged for sample in samples)
    if not converged:
        logger.warning(f"[!] {sum(not x.converged for x in samples)} beta samples did not converge")

    return BetaSweepReport(
        mode=mode,
        samples=samples,
        f_min=min(fidelities),
        f_avg=bounded_mean(fidelities),
        f_max=max(fidelities),
        p_min=min(payoffs),
        p_avg=bounded_mean(payoffs),
        p_max=max(payoffs),
        standard_min=standard_min,
        standard_avg=bounded_mean(standard),
        standard_max=standard_max,
        converged=converged,
    )


def _grid_rotations(resolution: int) -> np.ndarray:
    """Rotation matrices on a theta x phi x gamma grid, shape (resolution^3, 3, 3)."""
    thetas = np.linspace(0.0, math.pi, resolution)
    phis = 2.0 * math.pi * np.arange(resolution) / resolution
    # includes gamma = pi and, for even resolution, gamma = 0
    gammas = -math.pi + 2.0 * math.pi * (np.arange(resolution) + 1) / resolution

    rotations = []
    for theta in thetas:
        for phi in phis:
            axis = axis_from_angles(theta, phi)
            rotations.extend(rotation_matrix(axis, gamma) for gamma in gammas)
    return np.array(rotations)


def grid_decoding_oracle(
    s: TwoQubitState,
    gc: GreatCircle,
    resolution: int = 6,
    objective: str = "fidelity",
    quad_points: int = 64,
) -> float:
    """
    Exhaustive coarse-grid maximum over decoding pairs.

    Args:
        s: Resource state
        gc: Great circle
        resolution: Points per angle; resolution^6 decoding pairs are scanned
        objective: "fidelity" or "payoff"
        quad_points: Even circle grid used for the average

    Returns:
        Best circle-averaged objective over the grid

    Raises:
        InputError: if the grid exceeds 10^7 decoding pairs
    """
    if resolution < 2 or resolution ** 6 > MAX_GRID_POINTS:
        raise InputError(f"Grid resolution {resolution} outside [2, {int(MAX_GRID_POINTS ** (1 / 6))}]")
    if objective not in ("fidelity", "payoff"):
        raise InputError(f"Unknown objective: {objective}")

    signals = signal_vectors(gc, quad_points)
    rotations = _grid_rotations(resolution)
    n = len(rotations)

    # W_k = E R_k^T s for every signal, V_k = (R_k b).s
    W = np.einsum("ij,kmj,qm->kiq", s.E, rotations, signals)
    V = np.einsum("kij,j,qi->kq", rotations, s.b, signals)

    chunk = max(1, 4_000_000 // (n * 3 * quad_points))
    best = -math.inf
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        diff = np.linalg.norm(W[start:stop, None] - W[None, :], axis=2)
        overlaps = 0.5 * (V[start:stop, None] + V[None, :] + diff)
        if objective == "fidelity":
            values = 0.5 * (1.0 + overlaps.mean(axis=2))
        else:
            values = (overlaps ** 2).mean(axis=2)
        best = max(best, float(values.max()))

    return best


def _axis_angle(R: Mat3, fallback_axis: Vec3):
    rotvec = Rotation.from_matrix(R).as_rotvec()
    angle = float(np.linalg.norm(rotvec))
    if angle < 1e-12:
        return fallback_axis, 0.0
    return rotvec / angle, angle


def aligned_strategy(E: Mat3, beta) -> DecodingStrategy:
    """
    Decoding that maps the circle plane onto the two strongest correlation directions.

    R1 sends (e1, e2, beta) to (v1, v2, v1 x v2) under R1^T, where v1, v2 are
    the leading right singular vectors of E; R2 = R(beta, pi) R1. The circle
    average then reaches 1/2 + sigma1 E(1 - sigma2^2/sigma1^2)/pi.
    """
    gc = frame_from_beta(beta)
    _, _, vt = np.linalg.svd(np.asarray(E, dtype=float))
    v1, v2 = vt[0], vt[1]
    target = np.column_stack([v1, v2, np.cross(v1, v2)])
    frame = np.column_stack([gc.e1, gc.e2, gc.beta])

    r1 = frame @ target.T
    r2 = rotation_matrix(gc.beta, math.pi) @ r1

    n1, g1 = _axis_angle(r1, gc.beta)
    n2, g2 = _axis_angle(r2, gc.beta)
    return DecodingStrategy.create(n1, g1, n2, g2)


@dataclass
class TEReport:
    """Transmission-efficiency report for a single resource state."""

    state: dict
    sweep: BetaSweepReport
    closed_forms: ClosedForms
    discrepancies: Dict[str, float]
    fidelity: float
    payoff: float
    payoff_valid: float
    aligned_fidelity: float
    oracle_check: Dict[str, float]
    converged: bool
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "state": self.state,
            "fidelity": self.fidelity,
            "payoff": self.payoff,
            "payoff_valid": self.payoff_valid,
            "aligned_fidelity": self.aligned_fidelity,
            "closed_forms": self.closed_forms.to_dict(),
            "discrepancies": dict(self.discrepancies),
            "oracle_check": dict(self.oracle_check),
            "converged": self.converged,
            "warnings": list(self.warnings),
            "sweep": self.sweep.to_dict(),
        }


def _oracle_spot_check(s: TwoQubitState, sample: BetaSample) -> Dict[str, float]:
    """Compare the density-matrix path with the Bloch formulas at the best decoding."""
    gc = frame_from_beta(sample.beta)
    dec = sample.fidelity_result.strategy if sample.fidelity_result else DecodingStrategy.standard(gc.beta)
    s_hat = signal_vector(gc, 0.0)
    alpha = optimal_encoding_axis(s, dec, s_hat)

    bloch = average_bloch(s, alpha, dec)
    oracle = simulate_protocol(s, alpha, dec)
    return {
        "bloch_error": float(np.max(np.abs(oracle.bloch - bloch))),
        "probability_error": abs(oracle.probabilities[0] - 0.5 * (1.0 + float(s.a @ alpha))),
    }


def build_te_report(
    s: TwoQubitState,
    cfg: OptimizerConfig = OptimizerConfig(),
    sampling: Union[int, Sequence, None] = None,
    mode: str = "full",
) -> TEReport:
    """
    Run the beta sweep and line it up against every closed form.

    Args:
        s: Resource state
        cfg: Search settings
        sampling: Beta samples; defaults to cfg.beta_samples Fibonacci points
        mode: Sweep mode, "full" or "standard"

    Returns:
        TEReport with all discrepancies recorded
    """
    sweep = sweep_beta(s, cfg.beta_samples if sampling is None else sampling, cfg, mode)
    forms = closed_forms(s)

    fid = np.array([sample.fidelity for sample in sweep.samples])
    pay = np.array([sample.payoff for sample in sweep.samples])
    relation = np.array([abs(f - fidelity_from_payoff(max(p, 0.0))) for f, p in zip(fid, pay)])

    discrepancies = {
        "fidelity_vs_closed_form": float(np.max(np.abs(fid - forms.fidelity_closed))),
        "fidelity_vs_exact": float(np.max(np.abs(fid - forms.fidelity_exact))),
        "payoff_vs_closed_form": float(np.max(np.abs(pay - forms.D))),
        "fidelity_payoff_relation": float(np.max(relation)),
        "standard_min_vs_d": abs(sweep.standard_min - forms.d),
        "standard_sphere_avg_vs_Q": abs(sweep.standard_avg - forms.Q),
        "beta_spread_fidelity": sweep.f_max - sweep.f_min,
    }

    warnings = []
    b_zero = float(np.linalg.norm(s.b)) <= B_ZERO_TOL
    if not b_zero:
        warnings.append("payoff_b_nonzero")
    if not s.physical:
        warnings.append("unphysical_state")

    first = sweep.samples[0]
    aligned, _ = refined_average(
        avg_max_fidelity, s, aligned_strategy(s.E, first.beta), frame_from_beta(first.beta), cfg.quad
    )

    report = TEReport(
        state=s.summary(),
        sweep=sweep,
        closed_forms=forms,
        discrepancies=discrepancies,
        fidelity=sweep.f_avg,
        payoff=sweep.p_avg,
        payoff_valid=sweep.p_avg if b_zero else sweep.standard_avg,
        aligned_fidelity=aligned,
        oracle_check=_oracle_spot_check(s, first),
        converged=sweep.converged,
        warnings=warnings,
    )

    if discrepancies["fidelity_vs_exact"] > cfg.tol_closed_form:
        logger.warning(f"[!] Optimized fidelity is {discrepancies['fidelity_vs_exact']:.2e} away from the exact optimum")
    else:
        logger.info(f"[OK] F={report.fidelity:.6f} P={report.payoff:.6f} D={forms.D:.6f}")
    return report
