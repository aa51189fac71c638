"""
State Scanner - Build the grids of resource states a sweep walks through
Bell-diagonal tetrahedron slices, Werner line and custom state lists
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.api.state_io import load_state
from src.state.bloch_core import TwoQubitState, bell_diagonal, bell_region_check, werner

logger = logging.getLogger(__name__)


class SweepSpec(BaseModel):
    """
    Grid description for a sweep.

    The default Bell-diagonal grid is lambda1, lambda2 in [-1, 1] with step 0.1
    on the slices lambda3 in {0, 0.25, 0.5, 0.75}.
    """

    model_config = ConfigDict(frozen=True)

    family: Literal["bell_diagonal", "werner", "custom"] = "bell_diagonal"
    lambda_min: float = -1.0
    lambda_max: float = 1.0
    lambda_step: float = Field(default=0.1, gt=0)
    lambda3_slices: Tuple[float, ...] = (0.0, 0.25, 0.5, 0.75)
    werner_steps: int = Field(default=11, ge=2)
    physical_only: bool = False
    allow_unphysical: bool = False
    state_files: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def _check_range(self):
        if self.lambda_max < self.lambda_min:
            raise ValueError("lambda_max must not be below lambda_min")
        return self

    def axis_values(self) -> np.ndarray:
        """Grid values for lambda1 and lambda2, rounded to kill step drift."""
        count = int(round((self.lambda_max - self.lambda_min) / self.lambda_step)) + 1
        return np.round(np.linspace(self.lambda_min, self.lambda_max, count), 10)


@dataclass
class GridPoint:
    """One row of a sweep."""

    index: int
    params: Tuple[float, ...]
    in_region: bool
    state: Optional[TwoQubitState]
    evaluate: bool
    load_error: str = ""


class StateScanner:
    """Scanner that turns a SweepSpec into ordered grid points."""

    def __init__(self, spec: SweepSpec = SweepSpec()):
        self.spec = spec

    def scan(self) -> List[GridPoint]:
        if self.spec.family == "werner":
            return self.scan_werner()
        if self.spec.family == "custom":
            return self.scan_custom(self.spec.state_files)
        return self.scan_bell_diagonal()

    def scan_bell_diagonal(self) -> List[GridPoint]:
        """
        Walk the tetrahedron slices.

        Order is lambda3 slice, then lambda1, then lambda2. Points outside the
        physical region are dropped with physical_only and otherwise kept
        unevaluated unless allow_unphysical is set.
        """
        values = self.spec.axis_values()
        points: List[GridPoint] = []
        skipped = 0

        for l3 in self.spec.lambda3_slices:
            for l1 in values:
                for l2 in values:
                    params = (float(l1), float(l2), float(l3))
                    inside = bell_region_check(*params)
                    if not inside and self.spec.physical_only:
                        skipped += 1
                        continue

                    points.append(GridPoint(
                        index=len(points),
                        params=params,
                        in_region=inside,
                        state=bell_diagonal(*params, label=f"bell{params}"),
                        evaluate=inside or self.spec.allow_unphysical,
                    ))

        logger.info(f"Scanned {len(points)} Bell-diagonal points ({skipped} outside region skipped)")
        return points

    def scan_werner(self) -> List[GridPoint]:
        """Uniform lambda grid over [0, 1]."""
        lambdas = np.round(np.linspace(0.0, 1.0, self.spec.werner_steps), 12)
        return [
            GridPoint(index=i, params=(float(lam),), in_region=True, state=werner(float(lam)), evaluate=True)
            for i, lam in enumerate(lambdas)
        ]

    def scan_custom(self, paths: Sequence[str]) -> List[GridPoint]:
        """One grid point per state file; load failures become unevaluated rows."""
        points = []
        for i, path in enumerate(paths):
            try:
                state = load_state(path)
            except Exception as e:
                logger.error(f"[X] Could not load {path}: {e}")
                points.append(GridPoint(i, (), False, None, False, load_error=str(e)))
                continue
            points.append(GridPoint(
                index=i,
                params=(),
                in_region=state.physical,
                state=state,
                evaluate=state.physical or self.spec.allow_unphysical,
            ))
            logger.debug(f"Queued {Path(path).name}")
        return points
