"""
Decoding Strategy - Bob's two axis-angle rotations
One rotation per measurement outcome, plus the six-angle parameterization used by the optimizer
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.state.bloch_core import Vec3, normalize
from src.utils.errors import InputError

TWO_PI = 2.0 * math.pi


def wrap_angle(gamma: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = gamma - TWO_PI * math.ceil((gamma - math.pi) / TWO_PI)
    # ceil can land exactly on -pi through rounding
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def _read_only(v: Vec3) -> Vec3:
    arr = np.array(v, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DecodingStrategy:
    """
    Bob's decoding: rotation (n1, gamma1) after outcome 1, (n2, gamma2) after outcome 2.

    Axes are unit vectors and angles live in (-pi, pi]. The gauge
    (n, gamma) ~ (-n, -gamma) is not quotiented out.
    """

    n1: Vec3
    gamma1: float
    n2: Vec3
    gamma2: float

    @classmethod
    def create(cls, n1, gamma1: float, n2, gamma2: float) -> "DecodingStrategy":
        """
        Build a strategy from raw axes and angles.

        Args:
            n1: Rotation axis for outcome 1 (normalized here)
            gamma1: Rotation angle for outcome 1 in radians
            n2: Rotation axis for outcome 2
            gamma2: Rotation angle for outcome 2

        Raises:
            InputError: on zero axes or non-finite angles
        """
        if not (math.isfinite(gamma1) and math.isfinite(gamma2)):
            raise InputError("Rotation angles must be finite")
        return cls(
            n1=_read_only(normalize(n1)),
            gamma1=wrap_angle(float(gamma1)),
            n2=_read_only(normalize(n2)),
            gamma2=wrap_angle(float(gamma2)),
        )

    @classmethod
    def standard(cls, beta) -> "DecodingStrategy":
        """Standard decoding ((beta, 0), (beta, pi)) of the ideal singlet protocol."""
        return cls.create(beta, 0.0, beta, math.pi)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "DecodingStrategy":
        """Uniformly random axes on the sphere and uniform angles."""
        n1 = rng.normal(size=3)
        n2 = rng.normal(size=3)
        g1, g2 = rng.uniform(-math.pi, math.pi, size=2)
        return cls.create(n1, g1, n2, g2)

    def to_dict(self) -> dict:
        return {
            "n1": self.n1.tolist(),
            "gamma1": self.gamma1,
            "n2": self.n2.tolist(),
            "gamma2": self.gamma2,
        }


def _spherical(n: Vec3):
    theta = math.acos(max(-1.0, min(1.0, float(n[2]))))
    phi = math.atan2(float(n[1]), float(n[0])) % TWO_PI
    return theta, phi


def axis_from_angles(theta: float, phi: float) -> Vec3:
    return np.array([
        math.sin(theta) * math.cos(phi),
        math.sin(theta) * math.sin(phi),
        math.cos(theta),
    ])


@dataclass(frozen=True)
class DecodingParams6:
    """Spherical axis angles plus rotation angles for both outcomes."""

    theta1: float
    phi1: float
    gamma1: float
    theta2: float
    phi2: float
    gamma2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.phi1, self.gamma1, self.theta2, self.phi2, self.gamma2])

    @classmethod
    def from_array(cls, x) -> "DecodingParams6":
        """
        Read six raw parameters (as produced by an unconstrained search).

        Angles are mapped into their canonical ranges: theta in [0, pi],
        phi in [0, 2pi), gamma in (-pi, pi]. The axis is preserved exactly.
        """
        values = np.asarray(x, dtype=float)
        if values.shape != (6,):
            raise InputError(f"Expected 6 decoding parameters, got shape {values.shape}")
        strategy = DecodingStrategy.create(
            axis_from_angles(values[0], values[1]), values[2],
            axis_from_angles(values[3], values[4]), values[5],
        )
        return cls.from_strategy(strategy)

    @classmethod
    def from_strategy(cls, dec: DecodingStrategy) -> "DecodingParams6":
        t1, p1 = _spherical(dec.n1)
        t2, p2 = _spherical(dec.n2)
        return cls(t1, p1, dec.gamma1, t2, p2, dec.gamma2)

    def to_strategy(self) -> DecodingStrategy:
        return DecodingStrategy.create(
            axis_from_angles(self.theta1, self.phi1), self.gamma1,
            axis_from_angles(self.theta2, self.phi2), self.gamma2,
        )


def strategy_from_array(x, fallback: Optional[DecodingStrategy] = None) -> DecodingStrategy:
    """
    Turn a raw six-vector from the search into a strategy.

    x may leave the canonical box; the fallback is returned for non-finite x.
    """
    try:
        return DecodingStrategy.create(
            axis_from_angles(x[0], x[1]), x[2],
            axis_from_angles(x[3], x[4]), x[5],
        )
    except InputError:
        if fallback is None:
            raise
        return fallback
