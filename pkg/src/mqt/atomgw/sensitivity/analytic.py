"""Closed-form signal, sensitivity and environmental requirement calculators."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from mqt.atomgw.errors import ResidenceError, ValidationError
from mqt.atomgw.interferometer.atoms import STRONTIUM_ZEEMAN_COEFFICIENT
from mqt.atomgw.spacetime import CONSTANTS

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from mqt.atomgw.interferometer.atoms import AtomSpecies
    from mqt.atomgw.noise import BudgetScenario

logger = logging.getLogger(__name__)

BLACKBODY_REFERENCE_TEMPERATURE = 300.0
CONTRAST_RATIO_AT_TEN_PERCENT = 0.02


def eq1_analytic(N: int, omega_a: float, h: float, x1: float, x2: float, omega: float, T: float, phi0: float) -> float:
    """Differential phase (4 N omega_a h / c)(x1 - x2) sin^2(omega T / 2) sin(phi0 + omega T)."""
    return float(
        4 * N * omega_a * h / CONSTANTS.c * (x1 - x2) * np.sin(omega * T / 2) ** 2 * np.sin(phi0 + omega * T)
    )


def q_bound(atom: AtomSpecies, N: int, L: float, h: float) -> float:
    """Largest phase 4 omega_a (N L / c) h reachable within one excited-state lifetime."""
    residence = N * L / CONSTANTS.c
    if residence > atom.tau:
        msg = f"Excited residence N L / c = {residence} s exceeds the lifetime {atom.tau} s."
        raise ResidenceError(msg)
    return 4 * atom.omega_a * residence * h


@dataclass(frozen=True)
class SensitivityConfig:
    delta_phi: float = 1e-4
    frequencies: NDArray[np.float64] = field(default_factory=lambda: np.logspace(-3, 0, 61))
    N: int = 300
    T: float = 50.0
    L: float = 1e6
    omega_a: float = 2 * np.pi * CONSTANTS.c / 698.4e-9
    optimize_T: bool = False

    def __post_init__(self) -> None:
        frequencies = np.asarray(self.frequencies, dtype=float)
        object.__setattr__(self, "frequencies", frequencies)
        if not self.delta_phi > 0:
            msg = f"Shot-noise phase ASD {self.delta_phi} must be positive."
            raise ValidationError(msg)
        if frequencies.size == 0 or np.any(frequencies <= 0) or np.any(np.diff(frequencies) <= 0):
            msg = "Frequency grid must be positive and strictly increasing."
            raise ValidationError(msg)


def strain_sensitivity_curve(config: SensitivityConfig) -> list[tuple[float, float]]:
    """Minimum detectable strain ASD per frequency; response zeros are reported as ``inf``."""
    scale = 4 * config.N * config.omega_a * config.L / CONSTANTS.c
    curve = []
    for frequency in config.frequencies:
        omega = 2 * np.pi * frequency
        T = np.pi / omega if config.optimize_T else config.T
        envelope = np.sin(omega * T / 2) ** 2
        h_min = config.delta_phi / (scale * envelope) if envelope > 1e-12 else np.inf
        curve.append((float(frequency), float(h_min)))
    return curve


def blackbody_slope(atom: AtomSpecies, temperature: float) -> float:
    """Derivative of the blackbody shift coefficient * (T / 300 K)^4 in Hz/K."""
    if not temperature > 0:
        msg = f"Temperature {temperature} K must be positive."
        raise ValidationError(msg)
    return 4 * atom.blackbody_coefficient * temperature**3 / BLACKBODY_REFERENCE_TEMPERATURE**4


def blackbody_requirement(
    atom: AtomSpecies, temperature: float, target_strain: float, scenario: BudgetScenario
) -> float:
    """Temperature stability (K/sqrt(Hz)) keeping the blackbody phase below the signal of ``target_strain``.

    A shift fluctuation acts during the full excited residence 2NL/c and maps one to one onto the
    differential phase.
    """
    slope = blackbody_slope(atom, temperature)
    if slope == 0:
        return float("inf")
    residence = 2 * scenario.N * scenario.L / CONSTANTS.c
    phase_per_kelvin = residence * 2 * np.pi * abs(slope)
    return float(scenario.signal(target_strain) / phase_per_kelvin)


def zeeman_shift(field_gauss: float, atom: AtomSpecies | None = None) -> float:
    """Second-order Zeeman shift (Hz) of the clock transition; strontium's coefficient unless ``atom`` is given."""
    coefficient = STRONTIUM_ZEEMAN_COEFFICIENT if atom is None else atom.zeeman_coefficient
    return coefficient * field_gauss**2


def plasma_strain_bound(refractivity: float, density_fluctuation: float) -> float:
    """Equivalent strain ASD (n - 1) * dn_p / n_p of refractive-index noise along the baseline."""
    if refractivity < 0 or density_fluctuation < 0:
        msg = "Refractivity and density fluctuation must be non-negative."
        raise ValidationError(msg)
    return refractivity * density_fluctuation


def contrast_requirement(rabi_frequency: float, contrast_loss: float = 0.1) -> float:
    """Maximum laser frequency error (Hz) for a given Rabi frequency (Hz) and contrast-loss budget."""
    if not rabi_frequency > 0:
        msg = f"Rabi frequency {rabi_frequency} Hz must be positive."
        raise ValidationError(msg)
    if not 0 < contrast_loss <= 1:
        msg = f"Contrast loss budget {contrast_loss} must lie in (0, 1]."
        raise ValidationError(msg)
    return CONTRAST_RATIO_AT_TEN_PERCENT * rabi_frequency * contrast_loss / 0.1
