"""Atomic species parameters for single-photon clock-transition interferometry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mqt.atomgw.errors import ValidationError
from mqt.atomgw.spacetime import CONSTANTS

STRONTIUM_87_MASS_U = 86.909
STRONTIUM_CLOCK_WAVELENGTH = 698.4e-9
STRONTIUM_CLOCK_LINEWIDTH = 1e-3
STRONTIUM_ZEEMAN_COEFFICIENT = -0.23


def lifetime_from_linewidth(linewidth: float) -> float:
    """Excited-state lifetime tau = 1/(2 pi linewidth) for a natural linewidth in Hz."""
    if not linewidth > 0:
        msg = f"Linewidth {linewidth} Hz must be positive."
        raise ValidationError(msg)
    return 1 / (2 * np.pi * linewidth)


@dataclass(frozen=True)
class AtomSpecies:
    m: float
    omega_a: float
    tau: float
    blackbody_coefficient: float = 0.0
    zeeman_coefficient: float = 0.0
    name: str = "custom"

    def __post_init__(self) -> None:
        for field_name in ("m", "omega_a", "tau"):
            if not getattr(self, field_name) > 0:
                msg = f"Atom parameter {field_name}={getattr(self, field_name)} must be positive."
                raise ValidationError(msg)

    @classmethod
    def strontium_87(cls) -> AtomSpecies:
        return cls(
            m=STRONTIUM_87_MASS_U * CONSTANTS.atomic_mass_unit,
            omega_a=2 * np.pi * CONSTANTS.c / STRONTIUM_CLOCK_WAVELENGTH,
            tau=lifetime_from_linewidth(STRONTIUM_CLOCK_LINEWIDTH),
            blackbody_coefficient=-2.3,
            zeeman_coefficient=STRONTIUM_ZEEMAN_COEFFICIENT,
            name="Sr87",
        )

    @property
    def resonant_k(self) -> float:
        return self.omega_a / CONSTANTS.c

    def recoil_velocity(self, k: float) -> float:
        return CONSTANTS.hbar * k / self.m


def quality_factor(atom: AtomSpecies) -> float:
    return atom.omega_a * atom.tau


def doppler_splitting(atom: AtomSpecies, N: int, k: float) -> float:
    """Doppler detuning 2 N hbar k^2 / m (rad/s) between the two arms after an LMT beamsplitter."""
    return 2 * N * CONSTANTS.hbar * k**2 / atom.m
