"""
State IO - JSON schemas for resource states
Reads Bloch-form, density-matrix and family shorthand files
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from src.state.bloch_core import (
    TwoQubitState,
    bell_diagonal,
    from_density_matrix,
    new_state,
    werner,
)
from src.utils.errors import InputError

logger = logging.getLogger(__name__)

ComplexPair = List[float]


class StateModel(BaseModel):
    """
    One resource state. Exactly one of the representations must be given:

    - Bloch form: {"a": [..], "b": [..], "E": [[..], [..], [..]]}
    - density matrix: {"rho": 4x4 nested or 16 flat [re, im] pairs, row-major}
    - Werner shorthand: {"werner": lam}
    - Bell-diagonal shorthand: {"bell_diagonal": [l1, l2, l3]}
    """

    model_config = ConfigDict(extra="forbid")

    label: str = ""
    a: Optional[List[float]] = None
    b: Optional[List[float]] = None
    E: Optional[List[List[float]]] = None
    rho: Optional[Union[List[List[ComplexPair]], List[ComplexPair]]] = None
    werner: Optional[float] = None
    bell_diagonal: Optional[List[float]] = None

    @model_validator(mode="after")
    def _one_representation(self):
        given = [
            self.E is not None or self.a is not None or self.b is not None,
            self.rho is not None,
            self.werner is not None,
            self.bell_diagonal is not None,
        ]
        if sum(given) != 1:
            raise ValueError("state must use exactly one of: a/b/E, rho, werner, bell_diagonal")
        if given[0] and (self.a is None or self.b is None or self.E is None):
            raise ValueError("Bloch form needs all of a, b and E")
        return self

    def to_state(self) -> TwoQubitState:
        if self.rho is not None:
            return from_density_matrix(_complex_matrix(self.rho), label=self.label)
        if self.werner is not None:
            state = werner(self.werner)
            return new_state(state.a, state.b, state.E, label=self.label or state.label)
        if self.bell_diagonal is not None:
            if len(self.bell_diagonal) != 3:
                raise InputError("bell_diagonal needs three coefficients")
            return bell_diagonal(*self.bell_diagonal, label=self.label)
        return new_state(self.a, self.b, self.E, label=self.label)


def _complex_matrix(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.shape == (16, 2):
        arr = arr.reshape(4, 4, 2)
    if arr.shape != (4, 4, 2):
        raise InputError(f"rho must hold 4x4 complex pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def parse_state(data: dict) -> TwoQubitState:
    """
    Build a state from decoded JSON.

    Raises:
        InputError: on schema violations or invalid values
    """
    try:
        model = StateModel.model_validate(data)
    except ValidationError as e:
        raise InputError(f"Invalid state description: {e}") from e
    return model.to_state()


def load_state(path: Union[str, Path]) -> TwoQubitState:
    """
    Load a resource state from a JSON file.

    Args:
        path: Path to the state file

    Returns:
        TwoQubitState, labelled with the file stem when no label is given

    Raises:
        InputError: if the file is missing, unparseable or invalid
    """
    path = Path(path)
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise InputError(f"State file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"State file {path} is not valid JSON: {e}") from e

    if not isinstance(data, dict):
        raise InputError(f"State file {path} must contain a JSON object")
    data.setdefault("label", path.stem)

    state = parse_state(data)
    logger.debug(f"Loaded state '{state.label}' from {path}")
    return state
