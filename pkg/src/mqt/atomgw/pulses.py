"""Single-photon large-momentum-transfer pulse protocols as explicit, timed pulse lists."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from mqt.atomgw.errors import SequenceOverlapError, ValidationError
from mqt.atomgw.spacetime import CONSTANTS, DetectorGeometry, Laser

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from mqt.atomgw.interferometer.atoms import AtomSpecies

logger = logging.getLogger(__name__)

TIME_RTOL = 1e-9
PULSE_FIELDS = (
    "source",
    "emission_time",
    "area",
    "k",
    "direction",
    "target",
    "duration",
    "phase_offset",
    "timing_offset",
    "k_offset",
    "fragment",
)


class Area(str, Enum):
    HALF_PI = "half_pi"
    PI = "pi"


class Target(str, Enum):
    GROUND_ARM = "ground_arm"
    EXCITED_ARM = "excited_arm"
    BOTH = "both"

    def addresses(self, arm: Target) -> bool:
        return self is Target.BOTH or self is arm


ARMS = (Target.GROUND_ARM, Target.EXCITED_ARM)


class Fragment(str, Enum):
    OPENING = "opening"
    MIRROR = "mirror"
    CLOSING = "closing"


class Level(str, Enum):
    GROUND = "ground"
    EXCITED = "excited"


class Transition(int, Enum):
    EMIT = -1
    NONE = 0
    ABSORB = 1


@dataclass(frozen=True)
class PulseSpec:
    source: Laser
    emission_time: float
    area: Area
    k: float
    target: Target
    duration: float = 0.0
    phase_offset: float = 0.0
    timing_offset: float = 0.0
    k_offset: float = 0.0
    fragment: Fragment = Fragment.OPENING

    def __post_init__(self) -> None:
        if not self.k > 0:
            msg = f"Wavevector k={self.k} must be positive."
            raise ValidationError(msg)
        if self.duration < 0:
            msg = f"Pulse duration {self.duration} must be non-negative."
            raise ValidationError(msg)
        if self.area is Area.HALF_PI and self.target is not Target.BOTH:
            msg = f"A half_pi pulse must target both arms, got {self.target.value}."
            raise ValidationError(msg)
        if self.area is Area.HALF_PI and self.fragment is Fragment.MIRROR:
            msg = "The mirror fragment contains pi pulses only."
            raise ValidationError(msg)

    @property
    def direction(self) -> int:
        return self.source.direction

    @property
    def actual_emission_time(self) -> float:
        return self.emission_time + self.timing_offset

    @property
    def actual_k(self) -> float:
        return self.k + self.k_offset

    def transition(self, arm: Target, level: Level) -> Transition:
        """Effect of this pulse on ``arm`` at internal ``level``, projected on the ground output port."""
        if not self.target.addresses(arm):
            return Transition.NONE
        if self.area is Area.HALF_PI:
            if self.fragment is Fragment.OPENING:
                return Transition.ABSORB if arm is Target.EXCITED_ARM else Transition.NONE
            return Transition.EMIT if level is Level.EXCITED else Transition.NONE
        return Transition.ABSORB if level is Level.GROUND else Transition.EMIT


@dataclass(frozen=True)
class PulseSequence:
    pulses: tuple[PulseSpec, ...]
    N: int
    T: float = 0.0
    dt_pair: float = 0.0
    light_time: float = 0.0

    def __post_init__(self) -> None:
        if self.N < 1:
            msg = f"LMT order N={self.N} must be at least 1."
            raise ValidationError(msg)
        if self.light_time < 0:
            msg = f"Light time {self.light_time} must be non-negative."
            raise ValidationError(msg)
        ordered = tuple(sorted(self.pulses, key=lambda pulse: pulse.emission_time))
        object.__setattr__(self, "pulses", ordered)

    def __len__(self) -> int:
        return len(self.pulses)

    def with_pulses(self, pulses: Iterable[PulseSpec]) -> PulseSequence:
        return replace(self, pulses=tuple(pulses))

    def without_noise(self) -> PulseSequence:
        return self.with_pulses(
            replace(pulse, phase_offset=0.0, timing_offset=0.0, k_offset=0.0) for pulse in self.pulses
        )

    def fragment(self, fragment: Fragment) -> tuple[PulseSpec, ...]:
        return tuple(pulse for pulse in self.pulses if pulse.fragment is fragment)

    @property
    def emission_times(self) -> np.ndarray:
        return np.array([pulse.emission_time for pulse in self.pulses])


def default_dt_pair(geometry: DetectorGeometry, delta_tau: float = 0.0) -> float:
    """Default spacing between successive LMT pulse pairs."""
    return 1.1 * max(2 * delta_tau, geometry.light_time)


def _check_order(N: int, dt_pair: float) -> None:
    if N < 1:
        msg = f"LMT order N={N} must be at least 1."
        raise ValidationError(msg)
    if dt_pair < 0:
        msg = f"Pair spacing dt_pair={dt_pair} must be non-negative."
        raise ValidationError(msg)


def _accelerating_ladder(
    arm: Target, anchor: float, N: int, light_time: float, dt_pair: float
) -> list[tuple[Laser, float, Target]]:
    # primary absorbs, secondary emits; every pair adds 2 hbar k along +x
    pulses = []
    for j in range(N):
        start = anchor + j * (light_time + dt_pair)
        pulses += [(Laser.PRIMARY, start, arm), (Laser.SECONDARY, start + light_time, arm)]
    return pulses


def _decelerating_ladder(
    arm: Target, anchor: float, N: int, light_time: float, dt_pair: float
) -> list[tuple[Laser, float, Target]]:
    # secondary absorbs, primary emits; the last pair ends with the primary pulse at anchor + L/c
    pulses = []
    for j in reversed(range(N)):
        start = anchor - j * (light_time + dt_pair)
        pulses += [(Laser.SECONDARY, start, arm), (Laser.PRIMARY, start + light_time, arm)]
    return pulses


def _build(
    raw: Sequence[tuple[Laser, float, Target]], k: float, fragment: Fragment, delta_tau: float, half_pi_at: int | None
) -> list[PulseSpec]:
    pulses = []
    for i, (laser, time, target) in enumerate(raw):
        area = Area.HALF_PI if i == half_pi_at else Area.PI
        pulses.append(
            PulseSpec(
                source=laser,
                emission_time=time,
                area=area,
                k=k,
                target=Target.BOTH if area is Area.HALF_PI else target,
                duration=delta_tau,
                fragment=fragment,
            )
        )
    return pulses


def make_beamsplitter(
    geometry: DetectorGeometry,
    N: int,
    k: float,
    start_time: float,
    dt_pair: float,
    delta_tau: float = 0.0,
    closing: bool = False,
) -> PulseSequence:
    """LMT beamsplitter fragment.

    The opening fragment starts with the primary half_pi pulse at ``start_time`` and accelerates the
    excited arm by 2 N hbar k. The closing fragment is its time reverse: N - 1 deceleration pairs on the
    ground arm, the secondary pi pulse at ``start_time`` and the primary half_pi readout pulse one light
    time later.
    """
    _check_order(N, dt_pair)
    light_time = geometry.light_time
    if closing:
        raw = _decelerating_ladder(Target.GROUND_ARM, start_time, N, light_time, dt_pair)
        pulses = _build(raw, k, Fragment.CLOSING, delta_tau, half_pi_at=len(raw) - 1)
    else:
        raw = _accelerating_ladder(Target.EXCITED_ARM, start_time, N, light_time, dt_pair)
        pulses = _build(raw, k, Fragment.OPENING, delta_tau, half_pi_at=0)
    return PulseSequence(pulses=tuple(pulses), N=N, dt_pair=dt_pair, light_time=light_time)


def make_mirror(
    geometry: DetectorGeometry,
    N: int,
    k: float,
    start_time: float,
    dt_pair: float,
    delta_tau: float = 0.0,
    order: Laser = Laser.PRIMARY,
) -> PulseSequence:
    """LMT mirror fragment exchanging the momenta of the two arms.

    ``start_time`` is the emission time of the first pulse of the three-pulse core, which starts with the
    laser named by ``order``. Deceleration pairs on the fast arm precede the core, acceleration pairs on
    the slow arm follow it, and the middle core pulse is shared by both arms.
    """
    _check_order(N, dt_pair)
    light_time = geometry.light_time
    if order is Laser.PRIMARY:
        slow = _accelerating_ladder(Target.GROUND_ARM, start_time, N, light_time, dt_pair)
        fast = _decelerating_ladder(Target.EXCITED_ARM, start_time + light_time, N, light_time, dt_pair)
        shared = (Laser.SECONDARY, start_time + light_time)
    else:
        fast = _decelerating_ladder(Target.EXCITED_ARM, start_time, N, light_time, dt_pair)
        slow = _accelerating_ladder(Target.GROUND_ARM, start_time + light_time, N, light_time, dt_pair)
        shared = (Laser.PRIMARY, start_time + light_time)
    raw = [entry for entry in fast + slow if (entry[0], entry[1]) != shared]
    raw.append((shared[0], shared[1], Target.BOTH))
    raw.sort(key=lambda entry: entry[1])
    for laser in Laser:
        times = np.array([time for source, time, _ in raw if source is laser])
        gaps = np.diff(times)
        if np.any(gaps <= TIME_RTOL * light_time):
            clash = float(times[1:][gaps.argmin()])
            msg = f"Mirror pulses overlap: {laser.value} fires twice at t={clash}; increase dt_pair={dt_pair}."
            raise SequenceOverlapError(msg)
    pulses = _build(raw, k, Fragment.MIRROR, delta_tau, half_pi_at=None)
    return PulseSequence(pulses=tuple(pulses), N=N, dt_pair=dt_pair, light_time=light_time)


def _fragment_window(seq: PulseSequence, light_time: float) -> tuple[float, float]:
    times = seq.emission_times
    return float(times.min()), float(times.max() + light_time)


def make_mach_zehnder(
    geometry: DetectorGeometry,
    N: int,
    k: float,
    T: float,
    dt_pair: float,
    delta_tau: float = 0.0,
    mirror_order: Laser = Laser.PRIMARY,
) -> PulseSequence:
    """Beamsplitter at t = 0, mirror at t = T and closing beamsplitter at t = 2T + L/c."""
    light_time = geometry.light_time
    if not T > 2 * N * light_time:
        msg = f"Interrogation time T={T} must exceed the excited residence 2NL/c={2 * N * light_time}."
        raise ValidationError(msg)
    fragments = [
        make_beamsplitter(geometry, N, k, 0.0, dt_pair, delta_tau),
        make_mirror(geometry, N, k, T, dt_pair, delta_tau, order=mirror_order),
        make_beamsplitter(geometry, N, k, 2 * T + light_time, dt_pair, delta_tau, closing=True),
    ]
    windows = [_fragment_window(fragment, light_time) for fragment in fragments]
    for (_, end), (start, _), name in zip(windows, windows[1:], ("beamsplitter/mirror", "mirror/beamsplitter")):
        if start < end:
            msg = f"Fragments {name} overlap: next fragment starts at {start} before {end}; increase T."
            raise SequenceOverlapError(msg)
    pulses = tuple(pulse for fragment in fragments for pulse in fragment.pulses)
    logger.debug("Built Mach-Zehnder sequence with %d pulses (N=%d, T=%s).", len(pulses), N, T)
    return PulseSequence(pulses=pulses, N=N, T=T, dt_pair=dt_pair, light_time=light_time)


def arm_momentum_ledger(seq: PulseSequence) -> dict[Target, tuple[int, Level]]:
    """Final momentum (in units of hbar k) and internal level of each arm, from recoils alone."""
    ledger = {}
    for arm in ARMS:
        momentum, level = 0, Level.GROUND
        for pulse in seq.pulses:
            transition = pulse.transition(arm, level)
            if transition is Transition.NONE:
                continue
            momentum += transition.value * pulse.direction
            level = Level.EXCITED if transition is Transition.ABSORB else Level.GROUND
        ledger[arm] = (momentum, level)
    return ledger


def flat_vertex_time(pulse: PulseSpec, position: float, light_time: float) -> float:
    """Vertex time in flat space for an atom at rest at ``position`` on a baseline of ``light_time``."""
    baseline = light_time * CONSTANTS.c
    laser_position = 0.0 if pulse.source is Laser.PRIMARY else baseline
    return pulse.emission_time + abs(position - laser_position) / CONSTANTS.c


@dataclass
class ValidationReport:
    residence: dict[Target, float] = field(default_factory=dict)
    lifetime: float = float("inf")
    final_momenta: dict[Target, int] = field(default_factory=dict)
    doppler_splitting: float | None = None
    rabi_frequency: float | None = None
    ordering_failures: list[str] = field(default_factory=list)
    pairing_failures: list[str] = field(default_factory=list)
    closure_failures: list[str] = field(default_factory=list)
    residence_failures: list[str] = field(default_factory=list)

    @property
    def failures(self) -> list[str]:
        return self.ordering_failures + self.pairing_failures + self.closure_failures + self.residence_failures

    @property
    def passed(self) -> bool:
        return not self.failures


def validate_sequence(seq: PulseSequence, atom: AtomSpecies, rabi_frequency: float | None = None) -> ValidationReport:
    """Check ordering, pairing, closure of the recoil ledger and the excited residence of each arm.

    The residence is evaluated in flat space for an atom at rest at the primary laser; for the default
    construction it equals 2NL/c for every atom position. ``rabi_frequency`` (Hz) enables the Doppler
    selectivity advisory.
    """
    light_time = seq.light_time
    report = ValidationReport(lifetime=atom.tau)

    for laser in Laser:
        times = np.array([pulse.emission_time for pulse in seq.pulses if pulse.source is laser])
        for i in np.nonzero(np.diff(times) <= 0)[0]:
            report.ordering_failures.append(f"{laser.value} emission times not increasing at {times[i + 1]}")

    last_emission: dict[Laser, float] = {}
    for pulse in seq.pulses:
        previous = last_emission.get(pulse.source.other)
        if previous is not None:
            arrival = previous + light_time
            if pulse.emission_time < arrival - TIME_RTOL * max(light_time, abs(arrival)):
                report.pairing_failures.append(
                    f"{pulse.source.value} pulse at {pulse.emission_time} leaves before the "
                    f"{pulse.source.other.value} pulse arrives at {arrival}"
                )
        last_emission[pulse.source] = pulse.emission_time

    ledger = arm_momentum_ledger(seq)
    report.final_momenta = {arm: momentum for arm, (momentum, _) in ledger.items()}
    if len(set(report.final_momenta.values())) != 1:
        report.closure_failures.append(f"arms leave the sequence with momenta {report.final_momenta} hbar k")
    for arm, (_, level) in ledger.items():
        if level is not Level.GROUND:
            report.closure_failures.append(f"{arm.value} ends in the excited state")

    for arm in ARMS:
        level, excited_since, residence = Level.GROUND, 0.0, 0.0
        for pulse in seq.pulses:
            transition = pulse.transition(arm, level)
            if transition is Transition.ABSORB:
                level, excited_since = Level.EXCITED, flat_vertex_time(pulse, 0.0, light_time)
            elif transition is Transition.EMIT:
                level = Level.GROUND
                residence += flat_vertex_time(pulse, 0.0, light_time) - excited_since
        report.residence[arm] = residence
        if residence > atom.tau * (1 + TIME_RTOL):
            report.residence_failures.append(
                f"{arm.value} spends {residence} s excited, longer than the lifetime {atom.tau} s"
            )
        elif residence > 0.5 * atom.tau:
            logger.warning(
                "Excited residence %s s of the %s is close to the lifetime %s s.", residence, arm.value, atom.tau
            )

    if rabi_frequency is not None:
        from mqt.atomgw.interferometer.atoms import doppler_splitting

        report.rabi_frequency = rabi_frequency
        report.doppler_splitting = doppler_splitting(atom, seq.N, seq.pulses[0].k)
        if report.doppler_splitting <= 2 * np.pi * rabi_frequency:
            logger.warning(
                "Doppler splitting %s rad/s does not exceed the Rabi frequency %s Hz; the arms are not selectable.",
                report.doppler_splitting,
                rabi_frequency,
            )
    return report


def dumps_sequence(seq: PulseSequence) -> str:
    """Line-oriented text form, one pulse per line."""
    lines = [
        f"# N={seq.N} T={seq.T!r} dt_pair={seq.dt_pair!r} light_time={seq.light_time!r}",
        "# " + " ".join(PULSE_FIELDS),
    ]
    for pulse in seq.pulses:
        values = [
            pulse.source.value,
            repr(pulse.emission_time),
            pulse.area.value,
            repr(pulse.k),
            str(pulse.direction),
            pulse.target.value,
            repr(pulse.duration),
            repr(pulse.phase_offset),
            repr(pulse.timing_offset),
            repr(pulse.k_offset),
            pulse.fragment.value,
        ]
        lines.append(" ".join(values))
    return "\n".join(lines) + "\n"


def loads_sequence(text: str) -> PulseSequence:
    header: dict[str, str] = {}
    pulses = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            for token in stripped[1:].split():
                if "=" in token:
                    key, value = token.split("=", 1)
                    header[key] = value
            continue
        values = stripped.split()
        if len(values) != len(PULSE_FIELDS):
            msg = f"line {line_number}: expected {len(PULSE_FIELDS)} fields, got {len(values)}."
            raise ValidationError(msg)
        row = dict(zip(PULSE_FIELDS, values))
        source = Laser(row["source"])
        if int(row["direction"]) != source.direction:
            msg = f"line {line_number}: direction {row['direction']} inconsistent with source {source.value}."
            raise ValidationError(msg)
        pulses.append(
            PulseSpec(
                source=source,
                emission_time=float(row["emission_time"]),
                area=Area(row["area"]),
                k=float(row["k"]),
                target=Target(row["target"]),
                duration=float(row["duration"]),
                phase_offset=float(row["phase_offset"]),
                timing_offset=float(row["timing_offset"]),
                k_offset=float(row["k_offset"]),
                fragment=Fragment(row["fragment"]),
            )
        )
    if "N" not in header:
        msg = "Sequence text lacks the N header."
        raise ValidationError(msg)
    return PulseSequence(
        pulses=tuple(pulses),
        N=int(header["N"]),
        T=float(header.get("T", 0.0)),
        dt_pair=float(header.get("dt_pair", 0.0)),
        light_time=float(header.get("light_time", 0.0)),
    )
