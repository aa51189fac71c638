"""
RSP Analyzer - Transmission efficiency of remote state preparation
Analyzes resource states, sweeps state families, compares states and validates the numerics
"""

import argparse
import logging
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.api.state_io import load_state
from src.config.settings import RSPSettings, load_settings
from src.execution.sweep_executor import RowResult, SweepExecutor
from src.metrics.closed_forms import closed_forms, compare_states
from src.monitor.validation_suite import run_validation_suite
from src.optimizer.decoding_optimizer import build_te_report, fibonacci_sphere, sweep_beta
from src.scanner.state_scanner import GridPoint, StateScanner, SweepSpec
from src.state.bloch_core import (
    TwoQubitState,
    bell_diagonal,
    bell_region_check,
    bell_region_inequalities,
    is_physical,
)
from src.storage.result_store import ResultStore
from src.utils.errors import (
    EXIT_INPUT_ERROR,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_VALIDATION_FAILURE,
    ConvergenceError,
    InputError,
    ValidationFailure,
)
from src.utils.log_setup import setup_logging

logger = logging.getLogger("rsp_analyzer")

SWEEP_BELL_HEADER = [
    "lambda1", "lambda2", "lambda3", "F_num", "P_num",
    "D", "d", "Q", "in_region", "F_closed", "F_exact", "error",
]
WERNER_HEADER = ["lambda", "F_num", "P_num", "F_closed", "P_closed"]
FILES_HEADER = [
    "file", "label", "F_num", "P_num", "D", "d", "Q",
    "physical", "F_closed", "F_exact", "error",
]


def banner(title: str):
    print("=" * 70, file=sys.stderr)
    print(title, file=sys.stderr)
    print("=" * 70, file=sys.stderr)


class RSPAnalyzer:
    """
    Front-end tying settings, optimizer, sweeps and validation together.
    """

    def __init__(self, settings: RSPSettings, out: Optional[str] = None, allow_unphysical: bool = False):
        """
        Initialize analyzer.

        Args:
            settings: Resolved settings
            out: Output path; None writes to stdout
            allow_unphysical: Evaluate states outside the physical region
        """
        self.settings = settings
        self.cfg = settings.optimizer_config()
        self.store = ResultStore(out)
        self.executor = SweepExecutor(threads=settings.threads)
        self.allow_unphysical = allow_unphysical
        self.not_converged = False

    def _row_betas(self, count: int) -> np.ndarray:
        """Normals used for per-row sweeps; a single row normal is z."""
        if count <= 1:
            return np.array([[0.0, 0.0, 1.0]])
        return fibonacci_sphere(count)

    def _require_physical(self, s: TwoQubitState):
        if not s.physical and not self.allow_unphysical:
            raise InputError(
                f"State '{s.label}' is unphysical (min eigenvalue {s.min_eigenvalue:.3e}); "
                "pass --allow-unphysical to analyze it anyway"
            )

    def _numeric(self, s: TwoQubitState, row_betas: int) -> Dict[str, float]:
        """Optimized fidelity and payoff averaged over the row normals."""
        # row parallelism already uses the threads
        cfg = self.cfg.model_copy(update={"threads": 1})
        sweep = sweep_beta(s, list(self._row_betas(row_betas)), cfg)
        return {"F_num": sweep.f_avg, "P_num": sweep.p_avg, "converged": sweep.converged}

    def cmd_analyze(self, paths: Sequence[str]) -> int:
        """
        Full TE report for one or more state files.

        Returns:
            Exit code (3 if any optimization did not converge)
        """
        banner("RSP ANALYZE")
        reports = []
        for path in paths:
            state = load_state(path)
            self._require_physical(state)
            logger.info(f"Analyzing '{state.label}' over {self.cfg.beta_samples} beta samples")
            report = build_te_report(state, self.cfg)
            self.not_converged |= not report.converged
            reports.append(report.to_dict())

        self.store.write_json(reports[0] if len(reports) == 1 else reports)
        return EXIT_NOT_CONVERGED if self.not_converged else EXIT_OK

    def _bell_row(self, point: GridPoint, result: RowResult) -> List:
        forms = closed_forms(point.state)
        return [
            *point.params,
            result.values.get("F_num"),
            result.values.get("P_num"),
            forms.D,
            forms.d,
            forms.Q,
            point.in_region,
            forms.fidelity_closed,
            forms.fidelity_exact,
            result.error,
        ]

    def cmd_sweep_bell(self, spec: SweepSpec, row_betas: int = 1) -> int:
        """
        Tetrahedron-slice sweep of Bell-diagonal states as CSV.

        Numeric columns stay empty outside the physical region unless
        --allow-unphysical is given; failing rows carry their error message.
        """
        banner("RSP SWEEP - Bell-diagonal states")
        points = StateScanner(spec).scan_bell_diagonal()
        results = self.executor.run(points, lambda p: self._numeric(p.state, row_betas), progress_every=50)
        self.not_converged |= any(not r.converged for r in results)

        self.store.write_csv(SWEEP_BELL_HEADER, (self._bell_row(r.point, r) for r in results))
        return EXIT_NOT_CONVERGED if self.not_converged else EXIT_OK

    def cmd_werner(self, steps: int, row_betas: int = 1) -> int:
        """Werner line sweep with closed forms (1 + lam)/2 and lam^2."""
        banner("RSP SWEEP - Werner states")
        points = StateScanner(SweepSpec(family="werner", werner_steps=steps)).scan_werner()
        results = self.executor.run(points, lambda p: self._numeric(p.state, row_betas))
        self.not_converged |= any(not r.converged for r in results)

        rows = []
        for r in results:
            lam = r.point.params[0]
            rows.append([lam, r.values.get("F_num"), r.values.get("P_num"), 0.5 * (1.0 + lam), lam * lam])
        self.store.write_csv(WERNER_HEADER, rows)
        return EXIT_NOT_CONVERGED if self.not_converged else EXIT_OK

    def cmd_sweep_files(self, paths: Sequence[str], row_betas: int = 1) -> int:
        """
        One CSV row per state file.

        Files that fail to load keep their row with the load error; unphysical
        states keep empty numeric columns unless --allow-unphysical is given.
        """
        banner("RSP SWEEP - State files")
        spec = SweepSpec(family="custom", state_files=tuple(paths), allow_unphysical=self.allow_unphysical)
        points = StateScanner(spec).scan()
        results = self.executor.run(points, lambda p: self._numeric(p.state, row_betas))
        self.not_converged |= any(not r.converged for r in results)

        rows = []
        for path, r in zip(paths, results):
            s = r.point.state
            if s is None:
                rows.append([path, "", None, None, None, None, None, False, None, None, r.point.load_error])
                continue
            forms = closed_forms(s)
            rows.append([
                path, s.label,
                r.values.get("F_num"), r.values.get("P_num"),
                forms.D, forms.d, forms.Q, s.physical,
                forms.fidelity_closed, forms.fidelity_exact,
                r.error,
            ])
        self.store.write_csv(FILES_HEADER, rows)
        return EXIT_NOT_CONVERGED if self.not_converged else EXIT_OK

    def cmd_compare(self, path1: str, path2: str, row_betas: int = 1) -> int:
        """Rank two states by closed form, confirmed numerically."""
        banner("RSP COMPARE")
        s1, s2 = load_state(path1), load_state(path2)
        for s in (s1, s2):
            self._require_physical(s)

        def evaluate(s: TwoQubitState) -> Dict[str, float]:
            values = self._numeric(s, row_betas)
            self.not_converged |= not values.pop("converged")
            return {"fidelity": values["F_num"], "payoff": values["P_num"]}

        comparison = compare_states(s1, s2, evaluator=evaluate)
        numeric_f = [entry["numeric"]["fidelity"] for entry in comparison.entries]
        data = comparison.to_dict()
        data["numeric_agrees"] = _numeric_agrees(comparison.winner, numeric_f, self.cfg.tol_closed_form)

        label = {0: "tie", 1: s1.label, 2: s2.label}[comparison.winner]
        print(f"[OK] More useful resource: {label}", file=sys.stderr)
        self.store.write_json(data)
        return EXIT_NOT_CONVERGED if self.not_converged else EXIT_OK

    def cmd_validate(self, n_instances: int = 100) -> int:
        """
        Run the cross-check suite.

        Raises:
            ValidationFailure: after writing the table, if any check failed
        """
        banner("RSP VALIDATE")
        monitor = run_validation_suite(seed=self.settings.seed, n_instances=n_instances)
        print(monitor.format_table(), file=sys.stderr)
        self.store.write_json(monitor.to_dict())

        if not monitor.all_passed():
            names = ", ".join(check.name for check in monitor.failures)
            raise ValidationFailure(f"{len(monitor.failures)} check(s) failed: {names}")
        return EXIT_OK

    def cmd_region(self, l1: float, l2: float, l3: float) -> int:
        """Tetrahedron membership of a Bell-diagonal parameter triple."""
        report = is_physical(bell_diagonal(l1, l2, l3))
        self.store.write_json({
            "lambda": [l1, l2, l3],
            "in_region": bell_region_check(l1, l2, l3),
            "inequalities": list(bell_region_inequalities(l1, l2, l3)),
            "min_eigenvalue": report.min_eigenvalue,
        })
        return EXIT_OK


def _numeric_agrees(winner: int, fidelities: List[float], tol: float) -> bool:
    gap = fidelities[0] - fidelities[1]
    if winner == 0:
        return abs(gap) <= tol
    return gap > -tol if winner == 1 else gap < tol


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsp_analyzer",
        description="Transmission efficiency of remote state preparation over two-qubit states",
    )
    parser.add_argument("--config", help="YAML/JSON config file (default: $RSP_CONFIG or config/config.yaml)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--quad-points", type=int)
    parser.add_argument("--quad-tol", type=float)
    parser.add_argument("--quad-refine", action="store_true", default=None)
    parser.add_argument("--starts", type=int)
    parser.add_argument("--max-iter", type=int)
    parser.add_argument("--beta-samples", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--log-level", help="Override logging.level")
    parser.add_argument("--out", help="Write output to this file instead of stdout")
    parser.add_argument("--allow-unphysical", action="store_true", help="Evaluate states outside the physical region")

    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="Full TE report for state files")
    analyze.add_argument("state_files", nargs="+")

    sweep = sub.add_parser("sweep-bell", help="Bell-diagonal tetrahedron sweep (CSV)")
    sweep.add_argument("--physical-only", action="store_true")
    sweep.add_argument("--lambda-step", type=float, default=0.1)
    sweep.add_argument("--lambda-min", type=float, default=-1.0)
    sweep.add_argument("--lambda-max", type=float, default=1.0)
    sweep.add_argument("--lambda3", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75])
    sweep.add_argument("--row-betas", type=int, default=1, help="Great-circle normals per row")

    werner_cmd = sub.add_parser("werner", help="Werner-state sweep (CSV)")
    werner_cmd.add_argument("--steps", type=int, default=11)
    werner_cmd.add_argument("--row-betas", type=int, default=1)

    files = sub.add_parser("sweep-files", help="One CSV row per state file")
    files.add_argument("state_files", nargs="+")
    files.add_argument("--row-betas", type=int, default=1)

    compare = sub.add_parser("compare", help="Compare two resource states")
    compare.add_argument("state_file_1")
    compare.add_argument("state_file_2")
    compare.add_argument("--row-betas", type=int, default=1)

    validate = sub.add_parser("validate", help="Run the cross-check suite")
    validate.add_argument("--instances", type=int, default=100)

    region = sub.add_parser("region", help="Tetrahedron membership of (l1, l2, l3)")
    region.add_argument("lambdas", type=float, nargs=3)

    return parser


def run(args: argparse.Namespace) -> int:
    overrides = {
        "seed": args.seed,
        "quad_points": args.quad_points,
        "quad_tol": args.quad_tol,
        "quad_refine": args.quad_refine,
        "starts": args.starts,
        "max_iter": args.max_iter,
        "beta_samples": args.beta_samples,
        "threads": args.threads,
    }
    settings = load_settings(args.config, overrides)
    setup_logging(args.log_level or settings.logging.level, settings.logging.log_file)

    analyzer = RSPAnalyzer(settings, out=args.out, allow_unphysical=args.allow_unphysical)

    if args.command == "analyze":
        return analyzer.cmd_analyze(args.state_files)
    if args.command == "sweep-bell":
        spec = SweepSpec(
            family="bell_diagonal",
            lambda_min=args.lambda_min,
            lambda_max=args.lambda_max,
            lambda_step=args.lambda_step,
            lambda3_slices=tuple(args.lambda3),
            physical_only=args.physical_only,
            allow_unphysical=args.allow_unphysical,
        )
        return analyzer.cmd_sweep_bell(spec, row_betas=args.row_betas)
    if args.command == "werner":
        if args.steps < 2:
            raise InputError(f"--steps must be at least 2, got {args.steps}")
        return analyzer.cmd_werner(args.steps, row_betas=args.row_betas)
    if args.command == "sweep-files":
        return analyzer.cmd_sweep_files(args.state_files, row_betas=args.row_betas)
    if args.command == "compare":
        return analyzer.cmd_compare(args.state_file_1, args.state_file_2, row_betas=args.row_betas)
    if args.command == "validate":
        return analyzer.cmd_validate(n_instances=args.instances)
    return analyzer.cmd_region(*args.lambdas)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        Process exit code: 0 ok, 1 input error, 2 validation failure, 3 not converged
    """
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ValidationFailure as e:
        print(f"[X] Validation failed: {e}", file=sys.stderr)
        return EXIT_VALIDATION_FAILURE
    except ConvergenceError as e:
        print(f"[X] Did not converge: {e}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (InputError, ValueError) as e:
        print(f"[X] Input error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
