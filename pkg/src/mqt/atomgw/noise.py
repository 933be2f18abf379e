"""Noise realizations, common-mode cancellation experiments and the dominant-term noise budget."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np
from joblib import Parallel, delayed

from mqt.atomgw.errors import ValidationError
from mqt.atomgw.interferometer.atoms import AtomSpecies
from mqt.atomgw.interferometer.engine import (
    Mode,
    StartState,
    recoil_residence_shift,
    run_differential,
    run_interferometer,
)
from mqt.atomgw.pulses import ARMS, Fragment, PulseSequence
from mqt.atomgw.spacetime import CONSTANTS, DetectorGeometry, Environment, GravitationalWave, Laser, LaserPlatform

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

FREQUENCY_EXPONENTS = {1: 2, 2: 0, 3: 0, 4: 1}
TERM_FORMULAS = {
    1: "N (dv/c) (omega_a/c) T^2 da",
    2: "N (dv/c) omega_a dT",
    3: "N dv dk dtau",
    4: "N^2 (dv/c) (hbar/m) (omega_a/c) T dk",
}
TERM_UNITS = {1: "g/sqrt(Hz)", 2: "s", 3: "Hz/sqrt(Hz)", 4: "Hz/sqrt(Hz)"}


class NoiseScope(str, Enum):
    PULSE = "pulse"
    FRAGMENT = "fragment"
    SHOT = "shot"


@dataclass(frozen=True)
class NoiseConfig:
    delta_a_asd: float = 0.0
    delta_T_jitter: float = 0.0
    delta_k_asd: float = 0.0
    laser_phase_jitter: float = 0.0
    seed: int | None = None
    timing_scope: NoiseScope = NoiseScope.PULSE
    k_scope: NoiseScope = NoiseScope.PULSE

    def __post_init__(self) -> None:
        for name in ("delta_a_asd", "delta_T_jitter", "delta_k_asd", "laser_phase_jitter"):
            if getattr(self, name) < 0:
                msg = f"Noise amplitude {name}={getattr(self, name)} must be non-negative."
                raise ValidationError(msg)

    @property
    def is_silent(self) -> bool:
        return not (self.delta_a_asd or self.delta_T_jitter or self.delta_k_asd or self.laser_phase_jitter)


@dataclass(frozen=True)
class NoiseRealization:
    sequence: PulseSequence
    knots: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    accelerations: dict[Laser, NDArray[np.float64]] = field(default_factory=dict)

    def platforms(self, geometry: DetectorGeometry) -> dict[Laser, LaserPlatform]:
        return {
            laser: LaserPlatform(
                laser=laser,
                nominal_position=geometry.nominal_position(laser),
                knots=self.knots if laser in self.accelerations else np.zeros(0),
                accelerations=self.accelerations.get(laser, np.zeros(0)),
            )
            for laser in Laser
        }

    @property
    def phase_offsets(self) -> NDArray[np.float64]:
        return np.array([pulse.phase_offset for pulse in self.sequence.pulses])

    @property
    def timing_offsets(self) -> NDArray[np.float64]:
        return np.array([pulse.timing_offset for pulse in self.sequence.pulses])

    @property
    def k_offsets(self) -> NDArray[np.float64]:
        return np.array([pulse.k_offset for pulse in self.sequence.pulses])


def _scoped_draws(rng: np.random.Generator, sigma: float, seq: PulseSequence, scope: NoiseScope) -> NDArray[np.float64]:
    if scope is NoiseScope.PULSE:
        return rng.normal(0.0, sigma, len(seq))
    if scope is NoiseScope.SHOT:
        return np.full(len(seq), rng.normal(0.0, sigma))
    values = dict(zip(Fragment, rng.normal(0.0, sigma, len(Fragment))))
    return np.array([values[pulse.fragment] for pulse in seq.pulses])


def realize_noise(
    config: NoiseConfig, seq: PulseSequence, bandwidth: float = 1.0, rng: np.random.Generator | None = None
) -> NoiseRealization:
    """Draw one realization and attach it to the shared pulse list.

    Spectral densities become per-sample standard deviations sigma = ASD * sqrt(bandwidth). Platform
    accelerations are constant between successive pulse emissions.
    """
    if not bandwidth > 0:
        msg = f"Measurement bandwidth {bandwidth} Hz must be positive."
        raise ValidationError(msg)
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    sqrt_bandwidth = np.sqrt(bandwidth)
    phases = rng.normal(0.0, config.laser_phase_jitter, len(seq))
    timings = _scoped_draws(rng, config.delta_T_jitter, seq, config.timing_scope)
    wavevectors = _scoped_draws(rng, config.delta_k_asd * sqrt_bandwidth, seq, config.k_scope)
    knots = np.unique(seq.emission_times)
    sigma_a = config.delta_a_asd * sqrt_bandwidth
    accelerations = {laser: rng.normal(0.0, sigma_a, knots.size) for laser in Laser} if sigma_a > 0 else {}
    pulses = [
        replace(pulse, phase_offset=float(phase), timing_offset=float(timing), k_offset=float(dk))
        for pulse, phase, timing, dk in zip(seq.pulses, phases, timings, wavevectors)
    ]
    return NoiseRealization(
        sequence=seq.with_pulses(pulses), knots=knots if accelerations else np.zeros(0), accelerations=accelerations
    )


def table1_term(
    term: int,
    N: int,
    delta_v: float,
    omega_a: float,
    T: float,
    delta_tau: float,
    m: float,
    amplitude: float,
) -> float:
    """Phase noise (rad/sqrt(Hz)) of one dominant noise term for the given noise amplitude."""
    parameters = {"N": N, "delta_v": delta_v, "omega_a": omega_a, "T": T, "delta_tau": delta_tau, "m": m}
    for name, value in parameters.items():
        if value < 0:
            msg = f"Budget parameter {name}={value} must be non-negative."
            raise ValidationError(msg)
    c = CONSTANTS.c
    if term == 1:
        return N * (delta_v / c) * (omega_a / c) * T**2 * amplitude
    if term == 2:
        return N * (delta_v / c) * omega_a * amplitude
    if term == 3:
        return N * delta_v * amplitude * delta_tau
    if term == 4:
        return N**2 * (delta_v / c) * (CONSTANTS.hbar / m) * (omega_a / c) * T * amplitude
    msg = f"Unknown noise term {term}; expected 1, 2, 3 or 4."
    raise ValidationError(msg)


@dataclass(frozen=True)
class BudgetScenario:
    N: int = 300
    T: float = 50.0
    L: float = 1e6
    delta_v: float = 0.01
    delta_tau: float = 0.01
    atom: AtomSpecies = field(default_factory=AtomSpecies.strontium_87)
    gw_frequency: float = 0.01

    @property
    def corner_frequency(self) -> float:
        """Frequency with omega T = pi."""
        return 1 / (2 * self.T)

    def signal(self, strain: float) -> float:
        """Differential phase amplitude at omega T = pi for |x1 - x2| = L."""
        return 4 * self.N * self.atom.omega_a * strain * self.L / CONSTANTS.c

    def term(self, term: int, amplitude: float) -> float:
        return table1_term(
            term, self.N, abs(self.delta_v), self.atom.omega_a, self.T, self.delta_tau, self.atom.m, amplitude
        )


@dataclass(frozen=True)
class BudgetRow:
    term: int
    formula: str
    phase_noise: float
    requirement: float
    unit: str
    exponent: int

    def __post_init__(self) -> None:
        if self.exponent != FREQUENCY_EXPONENTS[self.term]:
            msg = f"Term {self.term} scales with exponent {FREQUENCY_EXPONENTS[self.term]}, not {self.exponent}."
            raise ValidationError(msg)


def _display_requirement(term: int, amplitude: float) -> float:
    if term == 1:
        return amplitude / CONSTANTS.standard_gravity
    if term in (3, 4):
        return CONSTANTS.c * amplitude / (2 * np.pi)
    return amplitude


def budget_report(
    scenario: BudgetScenario, target_strain: float = 1e-20, noise: NoiseConfig | None = None
) -> list[BudgetRow]:
    """Control requirement of every term so that it alone matches the signal of ``target_strain``.

    Requirements are inverted at the corner frequency and scaled to ``scenario.gw_frequency`` with each
    term's frequency exponent. ``phase_noise`` evaluates the term at the configured noise amplitudes.
    """
    if not target_strain > 0:
        msg = f"Target strain {target_strain} must be positive."
        raise ValidationError(msg)
    signal = scenario.signal(target_strain)
    ratio = scenario.gw_frequency / scenario.corner_frequency
    noise = noise or NoiseConfig()
    configured = {1: noise.delta_a_asd, 2: noise.delta_T_jitter, 3: noise.delta_k_asd, 4: noise.delta_k_asd}
    rows = []
    for term, exponent in FREQUENCY_EXPONENTS.items():
        unit_phase = scenario.term(term, 1.0)
        amplitude = signal / unit_phase * ratio**exponent if unit_phase > 0 else float("inf")
        rows.append(
            BudgetRow(
                term=term,
                formula=TERM_FORMULAS[term],
                phase_noise=scenario.term(term, configured[term]),
                requirement=_display_requirement(term, amplitude),
                unit=TERM_UNITS[term],
                exponent=exponent,
            )
        )
    return rows


@dataclass(frozen=True)
class CancellationStats:
    trials: int
    mean_delta_phi: float
    std_delta_phi: float
    mean_single: float
    std_single: float
    delta_phi: NDArray[np.float64] = field(repr=False)
    single: NDArray[np.float64] = field(repr=False)


def _trial(
    seq: PulseSequence,
    geometry: DetectorGeometry,
    atom: AtomSpecies,
    gw: GravitationalWave,
    env: Environment,
    config: NoiseConfig,
    bandwidth: float,
    mode: Mode,
    seed: np.random.SeedSequence,
) -> tuple[float, float]:
    realization = realize_noise(config, seq, bandwidth, np.random.default_rng(seed))
    result = run_differential(seq, geometry, atom, gw, env, realization, mode)
    return result.delta_phi, result.first.delta_phi_single


def cancellation_experiment(
    seq: PulseSequence,
    geometry: DetectorGeometry,
    atom: AtomSpecies,
    gw: GravitationalWave,
    config: NoiseConfig,
    trials: int,
    env: Environment | None = None,
    bandwidth: float = 1.0,
    mode: Mode = Mode.PERTURBATIVE,
    n_jobs: int = 1,
) -> CancellationStats:
    """Monte Carlo spread of the differential and single-ensemble phases over noise realizations."""
    if trials < 1:
        msg = f"Number of trials {trials} must be at least 1."
        raise ValidationError(msg)
    if config.seed is None:
        msg = "Monte Carlo experiments need an explicit seed."
        raise ValidationError(msg)
    env = env or Environment()
    seeds = np.random.SeedSequence(config.seed).spawn(trials)
    logger.info("Running %d noise trials on %s job(s).", trials, n_jobs)
    outcomes = Parallel(n_jobs=n_jobs, verbose=0)(
        delayed(_trial)(seq, geometry, atom, gw, env, config, bandwidth, mode, seed) for seed in seeds
    )
    delta_phi = np.array([outcome[0] for outcome in outcomes])
    single = np.array([outcome[1] for outcome in outcomes])
    return CancellationStats(
        trials=trials,
        mean_delta_phi=float(np.mean(delta_phi)),
        std_delta_phi=float(np.std(delta_phi)),
        mean_single=float(np.mean(single)),
        std_single=float(np.std(single)),
        delta_phi=delta_phi,
        single=single,
    )


def recoil_channel_phase(
    seq: PulseSequence, geometry: DetectorGeometry, atom: AtomSpecies, delta_v: float | None = None
) -> float:
    """Differential phase that the wavevector offsets of ``seq`` leave through recoil-shifted residence times.

    Both ensembles start at x1, one at rest and one moving with ``delta_v`` (the geometry's by default), so
    only the velocity-dependent part of the residence change survives in the difference.
    """
    delta_v = geometry.delta_v if delta_v is None else delta_v
    flat = seq.without_noise()
    phases = []
    for velocity in (0.0, delta_v):
        result = run_interferometer(
            flat, StartState(geometry.x1, velocity), atom, GravitationalWave(), Environment(), geometry
        )
        ground, excited = (recoil_residence_shift(seq, result.arms[arm], atom) for arm in ARMS)
        phases.append(-atom.omega_a * (ground - excited))
    return phases[0] - phases[1]


def fit_scaling_exponent(x: ArrayLike, y: ArrayLike) -> float:
    """Slope of log(y) against log(x) by least squares."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2 or x.shape != y.shape:
        msg = "Scaling fit needs at least two matching samples."
        raise ValidationError(msg)
    if np.any(x <= 0) or np.any(y <= 0):
        msg = "Scaling fit needs strictly positive samples."
        raise ValidationError(msg)
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)
