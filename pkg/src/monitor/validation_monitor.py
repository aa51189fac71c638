"""
Validation Monitor - Track cross-check outcomes
Records worst error against tolerance per check and renders the pass/fail table
"""

import logging
from dataclasses import dataclass
from typing import Dict, List

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    worst_error: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "worst_error": self.worst_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "detail": self.detail,
        }


class ValidationMonitor:
    """
    Collect validation checks in registration order.
    """

    def __init__(self):
        self.checks: Dict[str, CheckResult] = {}

    def record(self, name: str, worst_error: float, tolerance: float, detail: str = "") -> CheckResult:
        """
        Record a check; it passes when worst_error <= tolerance.

        Args:
            name: Unique check name
            worst_error: Largest deviation observed
            tolerance: Allowed deviation
            detail: Free-form note shown in the table

        Returns:
            The stored CheckResult
        """
        passed = bool(worst_error <= tolerance)
        result = CheckResult(name, float(worst_error), float(tolerance), passed, detail)
        self.checks[name] = result

        if passed:
            logger.info(f"[OK] {name}: {worst_error:.3e} <= {tolerance:.1e}")
        else:
            logger.error(f"[X] {name}: {worst_error:.3e} > {tolerance:.1e} {detail}")
        return result

    def record_failure(self, name: str, tolerance: float, error: Exception) -> CheckResult:
        """Record a check that raised instead of producing a number."""
        return self.record(name, float("inf"), tolerance, detail=f"raised {type(error).__name__}: {error}")

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks.values() if not check.passed]

    def all_passed(self) -> bool:
        return not self.failures

    def format_table(self) -> str:
        """Fixed-width pass/fail table."""
        lines = ["=" * 70, f"{'check':<34} {'worst error':>12} {'tolerance':>10}  status", "-" * 70]
        for check in self.checks.values():
            status = "[OK]" if check.passed else "[X]"
            lines.append(f"{check.name:<34} {check.worst_error:>12.3e} {check.tolerance:>10.1e}  {status}")
        lines.append("=" * 70)
        lines.append(f"{len(self.checks) - len(self.failures)}/{len(self.checks)} checks passed")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "passed": self.all_passed(),
            "checks": [check.to_dict() for check in self.checks.values()],
        }
