"""
Sweep Executor - Run per-row evaluations of a sweep
Ordered results, optional thread pool, per-row failure capture
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from src.scanner.state_scanner import GridPoint

logger = logging.getLogger(__name__)

RowFunction = Callable[[GridPoint], Dict[str, float]]


@dataclass
class RowResult:
    point: GridPoint
    values: Dict[str, float] = field(default_factory=dict)
    error: str = ""
    converged: bool = True


class SweepExecutor:
    """
    Execute a row function over grid points.

    Rows come back in grid order whatever the thread count. An exception in
    one row is logged and stored on that row; the sweep carries on.
    """

    def __init__(self, threads: int = 1):
        """
        Initialize executor.

        Args:
            threads: Worker threads; 1 runs inline
        """
        self.threads = max(1, threads)

    def _run_row(self, fn: RowFunction, point: GridPoint) -> RowResult:
        if not point.evaluate or point.state is None:
            return RowResult(point=point)

        try:
            values = fn(point)
        except Exception as e:
            logger.error(f"[X] Row {point.index} {point.params}: {e}")
            return RowResult(point=point, error=str(e))

        converged = bool(values.pop("converged", True))
        return RowResult(point=point, values=values, converged=converged)

    def run(self, points: List[GridPoint], fn: RowFunction, progress_every: Optional[int] = None) -> List[RowResult]:
        """
        Evaluate every point.

        Args:
            points: Grid points from the scanner
            fn: Row function returning named numeric values
                (a "converged" entry is lifted onto the result)
            progress_every: Log progress every N rows

        Returns:
            RowResult list in the order of points
        """
        logger.info(f"Running {len(points)} rows on {self.threads} thread(s)")

        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(lambda p: self._run_row(fn, p), points))
        else:
            results = []
            for i, point in enumerate(points):
                results.append(self._run_row(fn, point))
                if progress_every and (i + 1) % progress_every == 0:
                    logger.info(f"  {i + 1}/{len(points)} rows done")

        failures = sum(1 for r in results if r.error)
        if failures:
            logger.warning(f"[!] {failures} of {len(results)} rows failed")
        else:
            logger.info(f"[OK] {len(results)} rows complete")
        return results
