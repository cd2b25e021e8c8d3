"""Physical inputs, reduced coordinates and unit conversion.

Everything downstream of this module works in the dimensionless pair

    zeta  = omega0 * z / c          (distance in transition wavelengths)
    theta = hbar * omega0 / (k_B T) (transition energy in thermal units)

with theta = inf encoding T = 0.  SI values enter and leave only here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInput

__all__ = [
    "CONSTANTS",
    "AtomSpec",
    "Environment",
    "PhysicalConstants",
    "ReducedPoint",
    "energy_unit",
    "to_physical",
    "to_reduced",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 values, SI.  Single source of truth for conversions."""

    hbar: float = 1.054571817e-34       # J s
    c: float = 299792458.0              # m / s
    k_B: float = 1.380649e-23           # J / K
    epsilon_0: float = 8.8541878128e-12  # F / m


CONSTANTS = PhysicalConstants()


def _require_finite(name, value):
    if not math.isfinite(value):
        raise InvalidInput(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class AtomSpec:
    """Two-level atom: transition frequency and per-axis static polarizabilities.

    Parameters
    ----------
    omega0 : float
        Angular transition frequency in rad/s, > 0.
    alpha_x, alpha_y, alpha_z : float
        Static polarizabilities along the wall-parallel (x, y) and
        wall-normal (z) axes, each >= 0 and not all zero.  Units follow the
        source convention for the scalar polarizability; only ratios and the
        overall scale alpha_0 enter the results.
    """

    omega0: float
    alpha_x: float
    alpha_y: float
    alpha_z: float

    def __post_init__(self):
        _require_finite("omega0", self.omega0)
        if self.omega0 <= 0:
            raise InvalidInput(f"omega0 must be > 0, got {self.omega0!r}")
        for name in ("alpha_x", "alpha_y", "alpha_z"):
            value = getattr(self, name)
            _require_finite(name, value)
            if value < 0:
                raise InvalidInput(f"{name} must be >= 0, got {value!r}")
        if self.alpha_0 <= 0:
            raise InvalidInput("polarizabilities must not all be zero")

    @property
    def alpha_0(self) -> float:
        return self.alpha_x + self.alpha_y + self.alpha_z

    @property
    def isotropic(self) -> bool:
        return self.alpha_x == self.alpha_y == self.alpha_z

    @classmethod
    def isotropic_spec(cls, omega0: float, alpha_0: float) -> "AtomSpec":
        """Atom with alpha_0 split equally over the three axes."""
        a = alpha_0 / 3.0
        return cls(omega0, a, a, a)

    def weights(self) -> tuple[float, float, float]:
        """Per-axis fractions (alpha_j / alpha_0); they sum to 1."""
        a0 = self.alpha_0
        return (self.alpha_x / a0, self.alpha_y / a0, self.alpha_z / a0)


@dataclass(frozen=True)
class Environment:
    """Wall geometry and bath temperature: atom at height ``distance`` above
    a conducting plane at z = 0, in thermal equilibrium at ``temperature``."""

    temperature: float  # K, >= 0
    distance: float     # m, > 0

    def __post_init__(self):
        _require_finite("temperature", self.temperature)
        _require_finite("distance", self.distance)
        if self.temperature < 0:
            raise InvalidInput(f"temperature must be >= 0, got {self.temperature!r}")
        if self.distance <= 0:
            raise InvalidInput(f"distance must be > 0, got {self.distance!r}")


@dataclass(frozen=True)
class ReducedPoint:
    """Dimensionless geometry/temperature pair (zeta, theta); theta = inf is T = 0."""

    zeta: float
    theta: float

    def __post_init__(self):
        _require_finite("zeta", self.zeta)
        if self.zeta <= 0:
            raise InvalidInput(f"zeta must be > 0, got {self.zeta!r}")
        if math.isnan(self.theta) or self.theta <= 0:
            raise InvalidInput(f"theta must be > 0 (inf allowed), got {self.theta!r}")

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.theta)


def to_reduced(atom: AtomSpec, env: Environment) -> ReducedPoint:
    """Map (atom, environment) to the reduced pair (zeta, theta)."""
    zeta = atom.omega0 * env.distance / CONSTANTS.c
    if env.temperature == 0.0:
        theta = math.inf
    else:
        theta = CONSTANTS.hbar * atom.omega0 / (CONSTANTS.k_B * env.temperature)
    return ReducedPoint(zeta=zeta, theta=theta)


def to_physical(atom: AtomSpec, point: ReducedPoint) -> Environment:
    """Invert :func:`to_reduced` for the same atom."""
    distance = point.zeta * CONSTANTS.c / atom.omega0
    if point.zero_temperature:
        temperature = 0.0
    else:
        temperature = CONSTANTS.hbar * atom.omega0 / (CONSTANTS.k_B * point.theta)
    return Environment(temperature=temperature, distance=distance)


def energy_unit(atom: AtomSpec) -> float:
    """Energy scale E_unit = 3 hbar omega0^4 alpha_0 / (128 pi eps0 c^3), in joule.

    Reduced shifts are multiples of this scale.  The absolute SI calibration
    inherits the source convention for polarizability units (see README);
    ratios, signs and reduced values do not depend on it.
    """
    k = CONSTANTS
    return 3.0 * k.hbar * atom.omega0**4 * atom.alpha_0 / (128.0 * math.pi * k.epsilon_0 * k.c**3)
