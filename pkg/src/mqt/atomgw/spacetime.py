"""Linearized gravitational-wave spacetime along a single baseline.

The metric is taken in TT gauge with a single "+" polarization aligned with the baseline,

    ds^2 = -c^2 dt^2 + (1 + h sin(omega t + phi0)) dx^2,

so freely falling atoms keep their coordinate trajectories and the whole wave signal enters
through the light travel time between the lasers and the atoms. Light rays are parametrized by
their travel time ``tau`` measured from an exactly known emission time; this keeps the O(h)
part of a vertex time inside a number of size L/c instead of the absolute sequence time.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Callable

import mpmath
import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from mqt.atomgw.errors import ConvergenceError, ValidationError

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

MAX_STRAIN = 1e-3
MAX_GRAVITY = 100.0
MACHINE_RTOL = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 299792458.0
    hbar: float = 1.054571817e-34
    atomic_mass_unit: float = 1.66053906660e-27
    standard_gravity: float = 9.80665


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class NumericBackend:
    """Elementary functions for one number type (binary64 floats or mpmath multiprecision)."""

    name: str
    number: Callable[[Any], Any]
    sin: Callable[[Any], Any]
    cos: Callable[[Any], Any]
    sincpi: Callable[[Any], Any]
    pi: Any


FLOAT = NumericBackend("float", float, np.sin, np.cos, np.sinc, np.pi)
MULTIPRECISION = NumericBackend("mpmath", mpmath.mpf, mpmath.sin, mpmath.cos, mpmath.sincpi, mpmath.pi)


class Laser(str, Enum):
    PRIMARY = "primary"
    SECONDARY = "secondary"

    @property
    def direction(self) -> int:
        """Propagation sign of the pulses this laser emits."""
        return 1 if self is Laser.PRIMARY else -1

    @property
    def other(self) -> Laser:
        return Laser.SECONDARY if self is Laser.PRIMARY else Laser.PRIMARY


@dataclass(frozen=True)
class GravitationalWave:
    h: float = 0.0
    omega: float = 2 * np.pi * 0.01
    phi0: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.h <= MAX_STRAIN:
            msg = f"Strain amplitude h={self.h} must satisfy 0 <= h <= {MAX_STRAIN}."
            raise ValidationError(msg)
        if not self.omega > 0:
            msg = f"Angular frequency omega={self.omega} must be positive."
            raise ValidationError(msg)

    @property
    def frequency(self) -> float:
        return self.omega / (2 * np.pi)

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    def strain(self, t: Any, backend: NumericBackend = FLOAT) -> Any:
        return backend.number(self.h) * backend.sin(backend.number(self.omega) * t + backend.number(self.phi0))

    def require_linear(self) -> None:
        """Light propagation drops O(h^2) terms and is only valid strictly below the strain ceiling."""
        if self.h >= MAX_STRAIN:
            msg = f"Strain amplitude h={self.h} is outside the linearized metric (h < {MAX_STRAIN})."
            raise ValidationError(msg)


@dataclass(frozen=True)
class Environment:
    g: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.g) > MAX_GRAVITY:
            msg = f"Gravitational acceleration g={self.g} exceeds the sanity bound of {MAX_GRAVITY} m/s^2."
            raise ValidationError(msg)


@dataclass(frozen=True)
class DetectorGeometry:
    L: float = 1e6
    x1: float = 0.0
    x2: float = 1e6
    delta_v: float = 0.0

    def __post_init__(self) -> None:
        if not self.L > 0:
            msg = f"Baseline L={self.L} must be positive."
            raise ValidationError(msg)
        for name, value in (("x1", self.x1), ("x2", self.x2)):
            if not 0 <= value <= self.L:
                msg = f"Ensemble coordinate {name}={value} must lie on the baseline [0, {self.L}]."
                raise ValidationError(msg)
        if abs(self.delta_v) / CONSTANTS.c > 1e-6:
            msg = f"Velocity offset delta_v={self.delta_v} is not small compared to c."
            raise ValidationError(msg)

    @property
    def light_time(self) -> float:
        return self.L / CONSTANTS.c

    def nominal_position(self, laser: Laser) -> float:
        return 0.0 if laser is Laser.PRIMARY else self.L


@dataclass(frozen=True)
class LaserPlatform:
    """Laser platform whose position offset is piecewise quadratic in time.

    ``knots`` are the start times of the constant-acceleration intervals; before the first knot
    the platform sits at its nominal position.
    """

    laser: Laser
    nominal_position: float
    knots: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    accelerations: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    _knot_positions: NDArray[np.float64] = field(init=False, repr=False, compare=False)
    _knot_velocities: NDArray[np.float64] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        knots = np.asarray(self.knots, dtype=float)
        accelerations = np.asarray(self.accelerations, dtype=float)
        if knots.shape != accelerations.shape:
            msg = "Every acceleration interval needs exactly one start knot."
            raise ValidationError(msg)
        if np.any(np.diff(knots) < 0):
            msg = "Platform acceleration knots must be sorted in time."
            raise ValidationError(msg)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "accelerations", accelerations)
        # position and velocity offsets at every knot
        durations = np.diff(knots)
        velocities = np.concatenate(([0.0], np.cumsum(accelerations[:-1] * durations)))
        steps = velocities[:-1] * durations + 0.5 * accelerations[:-1] * durations**2
        positions = np.concatenate(([0.0], np.cumsum(steps)))
        object.__setattr__(self, "_knot_velocities", velocities)
        object.__setattr__(self, "_knot_positions", positions)

    @classmethod
    def static(cls, laser: Laser, geometry: DetectorGeometry) -> LaserPlatform:
        return cls(laser=laser, nominal_position=geometry.nominal_position(laser))

    def offset(self, t: float) -> float:
        if self.knots.size == 0 or t <= self.knots[0]:
            return 0.0
        i = int(np.searchsorted(self.knots, t, side="right")) - 1
        dt = t - self.knots[i]
        position = self._knot_positions[i] + self._knot_velocities[i] * dt
        return float(position + 0.5 * self.accelerations[i] * dt**2)

    def position(self, t: float) -> float:
        return self.nominal_position + self.offset(t)


def static_platforms(geometry: DetectorGeometry) -> dict[Laser, LaserPlatform]:
    return {laser: LaserPlatform.static(laser, geometry) for laser in Laser}


def strain_at(gw: GravitationalWave, t: float) -> float:
    return float(gw.strain(t))


def _deviation(strain: float) -> float:
    # 1/sqrt(1+s) - 1 without cancellation
    root = np.sqrt(1.0 + strain)
    return float(-strain / (root * (1.0 + root)))


def series_deviation_integral(gw: GravitationalWave, t_start: Any, tau: Any, backend: NumericBackend = FLOAT) -> Any:
    """Closed form of the integral of 1/sqrt(1+s(t)) - 1 over [t_start, t_start + tau] through O(h^2)."""
    n = backend.number
    h, omega = n(gw.h), n(gw.omega)
    theta_mid = omega * (t_start + tau / 2) + n(gw.phi0)
    first = h * backend.sin(theta_mid) * tau * backend.sincpi(omega * tau / (2 * backend.pi))
    second = h**2 * tau / 2 * (1 - backend.cos(2 * theta_mid) * backend.sincpi(omega * tau / backend.pi))
    return -first / 2 + 3 * second / 8


def deviation_integral(gw: GravitationalWave, t_start: float, tau: float, quadrature: bool = True) -> float:
    """Integral of 1/sqrt(1+s(t)) - 1 over [t_start, t_start + tau].

    Evaluated by adaptive quadrature; falls back to the analytic series when the quadrature
    reports trouble or is switched off.
    """
    if gw.h == 0 or tau == 0:
        return 0.0
    if quadrature:
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            try:
                value, _ = quad(
                    lambda u: _deviation(gw.strain(t_start + u)), 0.0, tau, epsabs=0.0, epsrel=1e-12, limit=200
                )
            except IntegrationWarning:
                logger.debug("Quadrature of the null interval failed at t=%s, using the analytic series.", t_start)
            else:
                return float(value)
    return float(series_deviation_integral(gw, t_start, tau))


def ray_offset(gw: GravitationalWave, t_emit: float, tau: float, quadrature: bool = True) -> float:
    """Coordinate distance covered by a light ray during ``tau`` after emission at ``t_emit``."""
    return CONSTANTS.c * (tau + deviation_integral(gw, t_emit, tau, quadrature))


def solve_tolerance(gw: GravitationalWave, light_time: float) -> float:
    """Absolute travel-time tolerance, four orders below the strain-induced shift."""
    return max(1e-4 * gw.h * light_time, 1e-22)


def light_travel_time(
    gw: GravitationalWave, from_x: float, to_x: float, t_emit: float, quadrature: bool = True
) -> float:
    """Coordinate time a light pulse emitted at ``t_emit`` needs from ``from_x`` to ``to_x``."""
    if from_x == to_x:
        msg = "Light travel time needs distinct end points."
        raise ValidationError(msg)
    gw.require_linear()
    distance = abs(to_x - from_x)
    flat = distance / CONSTANTS.c
    if gw.h == 0:
        return flat
    lower = flat * np.sqrt(1 - gw.h) * (1 - 1e-12)
    upper = flat * np.sqrt(1 + gw.h) * (1 + 1e-12)
    root, result = brentq(
        lambda tau: ray_offset(gw, t_emit, tau, quadrature) - distance,
        lower,
        upper,
        xtol=solve_tolerance(gw, flat),
        rtol=MACHINE_RTOL,
        full_output=True,
        disp=False,
    )
    if not result.converged:
        msg = f"Light travel time from {from_x} to {to_x} did not converge ({result.flag})."
        raise ConvergenceError(msg)
    return float(root)


def atom_worldline_position(x0: float, v: float, g: float, t0: float, t: float) -> float:
    """Free-fall position; the wave does not move free atoms in TT gauge."""
    if t < t0:
        msg = f"Worldline evaluated at t={t} before its segment start t0={t0}."
        raise ValidationError(msg)
    dt = t - t0
    return x0 + v * dt + 0.5 * g * dt**2
