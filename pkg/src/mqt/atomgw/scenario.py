"""Flat ``key = value`` scenario files.

Keys are namespaced by the section they configure (``atom.*``, ``geometry.*``, ``gw.*``, ``env.*``,
``sequence.*``, ``noise.*``, ``analysis.*``). All quantities are SI; phases in rad, spectral densities
per sqrt(Hz). Absent keys take the defaults of the satellite working point (Sr-87, L = 1000 km,
T = 50 s, N = 300, dtau = 10 ms, dv = 1 cm/s, 10 mHz wave).
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import TYPE_CHECKING, Any, Callable

import numpy as np

from mqt.atomgw.errors import ScenarioParseError, ValidationError
from mqt.atomgw.interferometer.atoms import AtomSpecies
from mqt.atomgw.interferometer.engine import Mode
from mqt.atomgw.noise import BudgetScenario, NoiseConfig, NoiseScope
from mqt.atomgw.pulses import PulseSequence, default_dt_pair, make_mach_zehnder
from mqt.atomgw.spacetime import DetectorGeometry, Environment, GravitationalWave, Laser

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SequenceConfig:
    N: int = 300
    T: float = 50.0
    k: float | None = None
    dt_pair: float | None = None
    delta_tau: float = 0.01
    mirror_order: Laser = Laser.PRIMARY

    def __post_init__(self) -> None:
        if self.N < 1:
            msg = f"Number of photon-interaction pairs N={self.N} must be at least 1."
            raise ValidationError(msg)
        if not self.T > 0:
            msg = f"Interrogation time T={self.T} must be positive."
            raise ValidationError(msg)
        if self.k is not None and not self.k > 0:
            msg = f"Wavevector k={self.k} must be positive."
            raise ValidationError(msg)
        if self.dt_pair is not None and not self.dt_pair > 0:
            msg = f"Pair spacing dt_pair={self.dt_pair} must be positive."
            raise ValidationError(msg)
        if self.delta_tau < 0:
            msg = f"Pulse duration delta_tau={self.delta_tau} must be non-negative."
            raise ValidationError(msg)


@dataclass(frozen=True)
class AnalysisConfig:
    mode: Mode = Mode.PERTURBATIVE
    quadrature: bool = True
    trials: int = 100
    bandwidth: float = 1.0
    target_strain: float = 1e-20
    shot_noise: float = 1e-4
    f_min: float = 1e-3
    f_max: float = 1.0
    f_points: int = 61
    optimize_T: bool = False
    temperature: float = 100.0
    rabi_frequency: float = 1e3
    contrast_loss: float = 0.1
    magnetic_field: float = 1.0
    refractivity: float = 1e-21
    density_fluctuation: float = 0.1
    contrast: float = 1.0
    ellipse_samples: int = 200
    readout_noise: float = 0.0
    ellipse_phase: float = 1.0
    sweep_command: str = "differential"
    jobs: int = 1

    def __post_init__(self) -> None:
        for name in ("trials", "f_points", "ellipse_samples", "jobs"):
            if getattr(self, name) < 1:
                msg = f"analysis.{name}={getattr(self, name)} must be at least 1."
                raise ValidationError(msg)
        if not 0 < self.f_min < self.f_max:
            msg = f"Frequency grid needs 0 < f_min < f_max, got {self.f_min} and {self.f_max}."
            raise ValidationError(msg)
        if self.sweep_command not in ("simulate", "differential"):
            msg = f"Sweeps run 'simulate' or 'differential', not {self.sweep_command!r}."
            raise ValidationError(msg)

    @property
    def frequencies(self) -> NDArray[np.float64]:
        return np.logspace(np.log10(self.f_min), np.log10(self.f_max), self.f_points)


def _default_geometry() -> DetectorGeometry:
    return DetectorGeometry(L=1e6, x1=0.0, x2=1e6, delta_v=0.01)


def _default_gw() -> GravitationalWave:
    return GravitationalWave(h=1e-20, omega=2 * np.pi * 0.01, phi0=0.0)


@dataclass(frozen=True)
class Scenario:
    atom: AtomSpecies = field(default_factory=AtomSpecies.strontium_87)
    geometry: DetectorGeometry = field(default_factory=_default_geometry)
    gw: GravitationalWave = field(default_factory=_default_gw)
    env: Environment = field(default_factory=Environment)
    sequence: SequenceConfig = field(default_factory=SequenceConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    @property
    def k(self) -> float:
        return self.sequence.k if self.sequence.k is not None else self.atom.resonant_k

    @property
    def dt_pair(self) -> float:
        if self.sequence.dt_pair is not None:
            return self.sequence.dt_pair
        return default_dt_pair(self.geometry, self.sequence.delta_tau)

    def build_sequence(self) -> PulseSequence:
        return make_mach_zehnder(
            self.geometry,
            self.sequence.N,
            self.k,
            self.sequence.T,
            self.dt_pair,
            self.sequence.delta_tau,
            self.sequence.mirror_order,
        )

    def budget_scenario(self) -> BudgetScenario:
        return BudgetScenario(
            N=self.sequence.N,
            T=self.sequence.T,
            L=self.geometry.L,
            delta_v=self.geometry.delta_v,
            delta_tau=self.sequence.delta_tau,
            atom=self.atom,
            gw_frequency=self.gw.frequency,
        )

    def with_seed(self, seed: int | None) -> Scenario:
        if seed is None:
            return self
        return replace(self, noise=replace(self.noise, seed=seed))


SECTIONS = ("atom", "geometry", "gw", "env", "sequence", "noise", "analysis")
_ENUMS: dict[str, type[Enum]] = {
    "sequence.mirror_order": Laser,
    "noise.timing_scope": NoiseScope,
    "noise.k_scope": NoiseScope,
    "analysis.mode": Mode,
}
_OPTIONAL = {"sequence.k", "sequence.dt_pair", "noise.seed"}
_UNITS = {
    "atom.m": "kg",
    "atom.omega_a": "rad/s",
    "atom.tau": "s",
    "atom.blackbody_coefficient": "Hz at 300 K",
    "atom.zeeman_coefficient": "Hz/G^2",
    "geometry.L": "m",
    "geometry.x1": "m",
    "geometry.x2": "m",
    "geometry.delta_v": "m/s",
    "gw.omega": "rad/s",
    "gw.phi0": "rad",
    "env.g": "m/s^2",
    "sequence.T": "s",
    "sequence.k": "1/m",
    "sequence.dt_pair": "s",
    "sequence.delta_tau": "s",
    "noise.delta_a_asd": "m/s^2/sqrt(Hz)",
    "noise.delta_T_jitter": "s",
    "noise.delta_k_asd": "1/m/sqrt(Hz)",
    "noise.laser_phase_jitter": "rad",
    "analysis.bandwidth": "Hz",
    "analysis.target_strain": "1/sqrt(Hz)",
    "analysis.shot_noise": "rad/sqrt(Hz)",
    "analysis.f_min": "Hz",
    "analysis.f_max": "Hz",
    "analysis.temperature": "K",
    "analysis.rabi_frequency": "Hz",
    "analysis.magnetic_field": "G",
    "analysis.density_fluctuation": "1/sqrt(Hz)",
    "analysis.ellipse_phase": "rad",
}


@dataclass(frozen=True)
class KeySpec:
    key: str
    section: str
    name: str
    parse: Callable[[str], Any]
    unit: str = ""
    optional: bool = False


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    msg = f"Expected a boolean, got {text!r}."
    raise ValueError(msg)


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        value = float(text)
    if not value.is_integer():
        msg = f"Expected an integer, got {text!r}."
        raise ValueError(msg)
    return int(value)


def _converter(key: str, annotation: Any) -> Callable[[str], Any]:
    if key in _ENUMS:
        return _ENUMS[key]
    annotation = str(annotation)
    if annotation.startswith("bool"):
        return _parse_bool
    if annotation.startswith("int"):
        return _parse_int
    if annotation.startswith("float"):
        return float
    return str


def _registry() -> dict[str, KeySpec]:
    defaults = Scenario()
    registry = {}
    for section in SECTIONS:
        for section_field in fields(getattr(defaults, section)):
            if not section_field.init or section_field.name.startswith("_"):
                continue
            key = f"{section}.{section_field.name}"
            registry[key] = KeySpec(
                key=key,
                section=section,
                name=section_field.name,
                parse=_converter(key, section_field.type),
                unit=_UNITS.get(key, ""),
                optional=key in _OPTIONAL,
            )
    return registry


KEYS = _registry()


def format_value(value: Any) -> str:
    """Deterministic text form; floats carry 17 significant digits."""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def build_scenario(values: dict[str, Any]) -> Scenario:
    """Scenario from already converted key values; unknown keys are rejected."""
    unknown = sorted(set(values) - set(KEYS))
    if unknown:
        msg = f"Unknown scenario key(s): {', '.join(unknown)}."
        raise ValidationError(msg)
    defaults = Scenario()
    sections = {}
    for section in SECTIONS:
        overrides = {KEYS[key].name: value for key, value in values.items() if KEYS[key].section == section}
        sections[section] = replace(getattr(defaults, section), **overrides)
    return Scenario(**sections)


def scenario_values(scenario: Scenario) -> dict[str, Any]:
    values = {}
    for key, spec in KEYS.items():
        value = getattr(getattr(scenario, spec.section), spec.name)
        if value is not None:
            values[key] = value
    return values


def parse_scenario(text: str) -> Scenario:
    values: dict[str, Any] = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            msg = f"expected 'key = value', got {raw.strip()!r}."
            raise ScenarioParseError(msg, line_number)
        key, text_value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            msg = f"unknown scenario key {key!r}."
            raise ScenarioParseError(msg, line_number)
        if key in values:
            msg = f"duplicate scenario key {key!r}."
            raise ScenarioParseError(msg, line_number)
        spec = KEYS[key]
        if spec.optional and text_value.lower() == "auto":
            values[key] = None
            continue
        try:
            values[key] = spec.parse(text_value)
        except ValueError as err:
            msg = f"invalid value {text_value!r} for {key}: {err}"
            raise ScenarioParseError(msg, line_number) from err
    scenario = build_scenario(values)
    logger.debug("Parsed scenario with %d explicit key(s).", len(values))
    return scenario


def emit_scenario(scenario: Scenario) -> str:
    lines = []
    for key, value in sorted(scenario_values(scenario).items()):
        unit = KEYS[key].unit
        suffix = f"  # {unit}" if unit else ""
        lines.append(f"{key} = {format_value(value)}{suffix}")
    return "\n".join(lines) + "\n"


def scenario_digest(scenario: Scenario) -> str:
    return hashlib.sha256(emit_scenario(scenario).encode()).hexdigest()


def with_value(scenario: Scenario, key: str, value: Any) -> Scenario:
    if key not in KEYS:
        msg = f"Unknown scenario key {key!r}."
        raise ValidationError(msg)
    values = scenario_values(scenario)
    try:
        values[key] = KEYS[key].parse(format_value(value))
    except ValueError as err:
        msg = f"Value {value!r} does not fit scenario key {key}: {err}"
        raise ValidationError(msg) from err
    return build_scenario(values)


def parse_sweep(text: str) -> tuple[str, NDArray[np.float64]]:
    """``key=start:stop:steps`` into the key and its linearly spaced grid."""
    try:
        key, grid = text.split("=", 1)
        start, stop, steps = grid.split(":")
        values = np.linspace(float(start), float(stop), _parse_int(steps))
    except ValueError as err:
        msg = f"Sweep {text!r} must look like key=start:stop:steps."
        raise ValidationError(msg) from err
    key = key.strip()
    if key not in KEYS:
        msg = f"Unknown sweep key {key!r}."
        raise ValidationError(msg)
    if values.size < 1:
        msg = "Sweep needs at least one step."
        raise ValidationError(msg)
    return key, values

