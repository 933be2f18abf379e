"""Phase engine: resolves atom-light vertices on the perturbed spacetime and accumulates the interferometer phase.

Two evaluation modes share one tracer:

* ``perturbative`` traces the actual run and a flat, noise-free reference run in binary64 and accumulates
  actual-minus-reference differences of every ledger term, so no O(h^0) term is ever formed;
* ``direct`` traces the actual run alone at 50 significant digits and sums ground-arm and excited-arm
  contributions with opposite signs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Callable

import mpmath
import numpy as np
from scipy.optimize import brentq

from mqt.atomgw.errors import (
    ClosureError,
    ConvergenceError,
    NoIntersectionError,
    ResidenceError,
    SequenceOverlapError,
    ValidationError,
    VertexCollisionError,
)
from mqt.atomgw.pulses import Level, PulseSequence, PulseSpec, Target, Transition, validate_sequence
from mqt.atomgw.spacetime import (
    CONSTANTS,
    FLOAT,
    MACHINE_RTOL,
    MULTIPRECISION,
    DetectorGeometry,
    Environment,
    GravitationalWave,
    Laser,
    LaserPlatform,
    NumericBackend,
    deviation_integral,
    series_deviation_integral,
    solve_tolerance,
    static_platforms,
)

if TYPE_CHECKING:
    from mqt.atomgw.interferometer.atoms import AtomSpecies
    from mqt.atomgw.noise import NoiseRealization

logger = logging.getLogger(__name__)

DIRECT_PRECISION = 50
CLOSURE_POSITION_TOLERANCE = 1e-3
CLOSURE_VELOCITY_RTOL = 1e-3
MAX_BRACKET_EXPANSIONS = 8
LEDGER_FIELDS = ("internal", "kinetic", "laser", "separation", "total")


class Mode(str, Enum):
    DIRECT = "direct"
    PERTURBATIVE = "perturbative"


@dataclass(frozen=True)
class StartState:
    x: float
    v: float = 0.0


@dataclass(frozen=True)
class Event:
    """Coordinate time ``anchor + base + rest``.

    ``anchor`` is a nominal emission time and ``base`` the flat light time from the emitting laser to the
    atom start position. Both are identical in the actual and the reference run, so all perturbations of
    an event live in the small number ``rest``.
    """

    anchor: Any
    base: Any
    rest: Any

    def since(self, other: Event) -> Any:
        return (self.anchor - other.anchor) + (self.base - other.base) + (self.rest - other.rest)

    @property
    def time(self) -> Any:
        return self.anchor + self.base + self.rest


@dataclass(frozen=True)
class Segment:
    start: Event
    displacement: Any
    velocity: Any
    level: Level


@dataclass(frozen=True)
class Vertex:
    pulse_index: int
    event: Event
    displacement: Any
    transition: Transition
    laser_offset: float


@dataclass
class ArmTrajectory:
    """Piecewise-ballistic worldline of one arm; displacements are relative to the atom start position."""

    arm: Target
    segments: list[Segment] = field(default_factory=list)
    vertices: list[Vertex] = field(default_factory=list)

    @property
    def level(self) -> Level:
        return self.segments[-1].level

    def state_at(self, event: Event, g: Any) -> tuple[Any, Any]:
        segment = self.segments[-1]
        elapsed = event.since(segment.start)
        return (
            segment.displacement + segment.velocity * elapsed + g * elapsed**2 / 2,
            segment.velocity + g * elapsed,
        )

    def spans(self, end: Event) -> list[tuple[Segment, Event]]:
        ends = [segment.start for segment in self.segments[1:]] + [end]
        return list(zip(self.segments, ends))


@dataclass(frozen=True)
class TraceContext:
    geometry: DetectorGeometry
    start: StartState
    atom: AtomSpecies
    gw: GravitationalWave
    env: Environment
    platforms: dict[Laser, LaserPlatform]
    backend: NumericBackend = FLOAT
    quadrature: bool = True

    @property
    def collision_tolerance(self) -> float:
        light_time = self.geometry.light_time
        return 1e-9 * light_time + 4 * self.gw.h * light_time


@dataclass(frozen=True)
class PhaseLedger:
    internal: float
    kinetic: float
    laser: float
    separation: float
    total: float

    def as_record(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in LEDGER_FIELDS}


@dataclass(frozen=True)
class ClosureGap:
    position: float
    velocity: float


@dataclass(frozen=True)
class InterferometerResult:
    delta_phi_single: float
    ledger: PhaseLedger
    residence: dict[Target, float]
    closure_gap: ClosureGap
    p_ground: float
    p_excited: float
    mode: Mode
    arms: dict[Target, ArmTrajectory] = field(repr=False, default_factory=dict)


@dataclass(frozen=True)
class DifferentialResult:
    delta_phi: float
    first: InterferometerResult
    second: InterferometerResult


def port_populations(delta_phi: float, contrast: float = 1.0) -> tuple[float, float]:
    if not 0 <= contrast <= 1:
        msg = f"Contrast {contrast} must lie in [0, 1]."
        raise ValidationError(msg)
    p_excited = 0.5 * (1 - contrast * float(np.cos(delta_phi)))
    return 1 - p_excited, p_excited


def _ray_integral(context: TraceContext, t_emit: Any, tau: Any) -> Any:
    if context.backend is FLOAT:
        return deviation_integral(context.gw, t_emit, tau, context.quadrature)
    return series_deviation_integral(context.gw, t_emit, tau, MULTIPRECISION)


def _find_delay(mismatch: Callable[[Any], Any], width: Any, context: TraceContext, tau0: Any) -> Any:
    lower, upper = -width, width
    for _ in range(MAX_BRACKET_EXPANSIONS):
        f_lower, f_upper = mismatch(lower), mismatch(upper)
        if f_lower * f_upper <= 0:
            break
        lower, upper = 10 * lower, 10 * upper
    else:
        msg = f"No intersection of the light ray with the arm within {upper} s of the flat estimate."
        raise NoIntersectionError(msg)
    if f_lower == 0:
        return lower
    if f_upper == 0:
        return upper
    if context.backend is FLOAT:
        xtol = min(solve_tolerance(context.gw, float(tau0)), 1e-12 * width)
        root, result = brentq(mismatch, lower, upper, xtol=xtol, rtol=MACHINE_RTOL, full_output=True, disp=False)
        if not result.converged:
            msg = f"Vertex solve did not converge ({result.flag})."
            raise ConvergenceError(msg)
        return root
    try:
        return mpmath.findroot(mismatch, (lower, upper), solver="anderson", maxsteps=200)
    except (ValueError, ZeroDivisionError) as exc:
        msg = f"Multiprecision vertex solve did not converge: {exc}"
        raise ConvergenceError(msg) from exc


def resolve_vertex(pulse: PulseSpec, arm: ArmTrajectory, context: TraceContext, pulse_index: int = -1) -> Vertex:
    """Intersection of the pulse's light ray with the current segment of ``arm``.

    The ray leaves the emitting platform's actual position at the actual emission time. The travel time
    is split into the flat light time to the atom at emission and a delay solved by bracketed root finding.
    """
    context.gw.require_linear()
    segment = arm.segments[-1]
    transition = pulse.transition(arm.arm, segment.level)
    if transition is Transition.NONE:
        msg = f"Pulse {pulse_index} does not interact with the {arm.arm.value}."
        raise ValidationError(msg)
    n = context.backend.number
    c, g, s = n(CONSTANTS.c), n(context.env.g), pulse.direction
    laser_offset = context.platforms[pulse.source].offset(pulse.actual_emission_time)
    emission = Event(n(pulse.emission_time), n(0), n(pulse.timing_offset))
    t_emit = emission.time if context.backend is MULTIPRECISION else pulse.actual_emission_time

    elapsed = emission.since(segment.start)
    u = segment.velocity + g * elapsed
    displacement = segment.displacement + segment.velocity * elapsed + g * elapsed**2 / 2
    base = s * (n(context.start.x) - n(context.geometry.nominal_position(pulse.source))) / c
    rest_tau = s * (displacement - n(laser_offset)) / c
    tau0 = base + rest_tau
    if tau0 < 0:
        msg = f"Pulse {pulse_index} from the {pulse.source.value} laser propagates away from the {arm.arm.value}."
        raise NoIntersectionError(msg)

    if context.gw.h == 0 and context.env.g == 0:
        delay = s * u * tau0 / (c - s * u)
    else:

        def mismatch(delta: Any) -> Any:
            tau = tau0 + delta
            return c * delta + c * _ray_integral(context, t_emit, tau) - s * (u * tau + g * tau**2 / 2)

        width = 2 * tau0 * (n(context.gw.h) + (abs(u) + abs(g) * tau0) / c) + n(1e-15) * tau0 + n(1e-30)
        delay = _find_delay(mismatch, width, context, tau0)

    event = Event(emission.anchor, base, emission.rest + rest_tau + delay)
    elapsed = event.since(segment.start)
    if elapsed < -context.collision_tolerance:
        msg = f"Pulse {pulse_index} reaches the {arm.arm.value} {float(-elapsed)} s before its previous vertex."
        raise VertexCollisionError(msg)
    logger.debug("Vertex of pulse %d on %s at t=%s.", pulse_index, arm.arm.value, event.time)
    return Vertex(
        pulse_index=pulse_index,
        event=event,
        displacement=segment.displacement + segment.velocity * elapsed + g * elapsed**2 / 2,
        transition=transition,
        laser_offset=laser_offset,
    )


def trace_arm(seq: PulseSequence, arm: Target, context: TraceContext) -> ArmTrajectory:
    n = context.backend.number
    zero, g = n(0), n(context.env.g)
    trajectory = ArmTrajectory(arm=arm)
    trajectory.segments.append(Segment(Event(zero, zero, zero), zero, n(context.start.v), Level.GROUND))
    for index, pulse in enumerate(seq.pulses):
        if pulse.transition(arm, trajectory.level) is Transition.NONE:
            continue
        vertex = resolve_vertex(pulse, trajectory, context, index)
        segment = trajectory.segments[-1]
        recoil = n(CONSTANTS.hbar) * n(pulse.actual_k) / n(context.atom.m)
        kick = vertex.transition.value * pulse.direction * recoil
        velocity = segment.velocity + g * vertex.event.since(segment.start) + kick
        level = Level.EXCITED if vertex.transition is Transition.ABSORB else Level.GROUND
        trajectory.vertices.append(vertex)
        trajectory.segments.append(Segment(vertex.event, vertex.displacement, velocity, level))
    return trajectory


def recoil_residence_shift(seq: PulseSequence, trajectory: ArmTrajectory, atom: AtomSpecies) -> float:
    """First-order change of one arm's excited residence due to the wavevector offsets of ``seq``.

    ``trajectory`` is the arm traced without offsets. Every offset kick hbar dk/m displaces all later
    vertices of the arm, and a vertex displaced by dx moves along its ray by s dx/(c - s v).
    """
    c = CONSTANTS.c
    kicks: list[tuple[Event, float]] = []
    shift = 0.0
    for index, vertex in enumerate(trajectory.vertices):
        pulse = seq.pulses[vertex.pulse_index]
        kick = vertex.transition.value * pulse.direction
        velocity = float(trajectory.segments[index].velocity)
        displacement = sum(rate * float(vertex.event.since(event)) for event, rate in kicks)
        shift -= kick * displacement / (c - pulse.direction * velocity)
        if pulse.k_offset:
            kicks.append((vertex.event, kick * CONSTANTS.hbar * pulse.k_offset / atom.m))
    return shift


def _common_end(trajectories: dict[Target, ArmTrajectory]) -> Target:
    """Arm whose final vertex is the later one; both arms are evaluated up to that event."""
    ground, excited = trajectories[Target.GROUND_ARM], trajectories[Target.EXCITED_ARM]
    if not ground.vertices:
        return Target.EXCITED_ARM
    if not excited.vertices:
        return Target.GROUND_ARM
    return Target.GROUND_ARM if ground.vertices[-1].event.since(excited.vertices[-1].event) >= 0 else Target.EXCITED_ARM


def _end_event(trajectories: dict[Target, ArmTrajectory], last: Target) -> Event:
    trajectory = trajectories[last]
    return trajectory.vertices[-1].event if trajectory.vertices else trajectory.segments[0].start


def _action(velocity: Any, displacement: Any, g: Any, duration: Any) -> Any:
    # integral of v^2/2 + g x over a free-fall segment
    return (
        velocity**2 * duration / 2
        + velocity * g * duration**2
        + g**2 * duration**3 / 3
        + g * displacement * duration
    )


def _imprint(pulse: PulseSpec, laser_offset: float, geometry: DetectorGeometry, n: Callable[[Any], Any]) -> Any:
    k = n(pulse.k) + n(pulse.k_offset)
    position = n(geometry.nominal_position(pulse.source)) + n(laser_offset)
    time = n(pulse.emission_time) + n(pulse.timing_offset)
    return pulse.direction * k * position - k * n(CONSTANTS.c) * time + n(pulse.phase_offset)


def _imprint_shift(pulse: PulseSpec, laser_offset: float, geometry: DetectorGeometry) -> float:
    """Imprinted laser phase minus that of the same pulse without noise."""
    s, k = pulse.direction, pulse.actual_k
    return (
        s * k * laser_offset
        + s * pulse.k_offset * geometry.nominal_position(pulse.source)
        - CONSTANTS.c * (k * pulse.timing_offset + pulse.k_offset * pulse.emission_time)
        + pulse.phase_offset
    )


def _trace_both(seq: PulseSequence, context: TraceContext) -> dict[Target, ArmTrajectory]:
    return {arm: trace_arm(seq, arm, context) for arm in (Target.GROUND_ARM, Target.EXCITED_ARM)}


def _closure(
    trajectories: dict[Target, ArmTrajectory], end: Event, g: Any
) -> tuple[dict[Target, tuple[Any, Any]], ClosureGap]:
    states = {arm: trajectory.state_at(end, g) for arm, trajectory in trajectories.items()}
    ground, excited = states[Target.GROUND_ARM], states[Target.EXCITED_ARM]
    return states, ClosureGap(position=float(ground[0] - excited[0]), velocity=float(ground[1] - excited[1]))


def _residence(trajectory: ArmTrajectory, end: Event) -> float:
    spans = trajectory.spans(end)
    return float(sum(span_end.since(segment.start) for segment, span_end in spans if segment.level is Level.EXCITED))


def _fsum(terms: list[Any]) -> float:
    with mpmath.workdps(DIRECT_PRECISION):
        return float(mpmath.fsum(terms))


def _direct_ledger(
    seq: PulseSequence, context: TraceContext, trajectories: dict[Target, ArmTrajectory]
) -> dict[str, list[Any]]:
    n = context.backend.number
    g = n(context.env.g)
    mass_ratio = n(context.atom.m) / n(CONSTANTS.hbar)
    omega_a = n(context.atom.omega_a)
    end = _end_event(trajectories, _common_end(trajectories))
    terms: dict[str, list[Any]] = {"internal": [], "kinetic": [], "laser": [], "separation": []}
    for arm, sign in ((Target.GROUND_ARM, 1), (Target.EXCITED_ARM, -1)):
        trajectory = trajectories[arm]
        for vertex in trajectory.vertices:
            pulse = seq.pulses[vertex.pulse_index]
            imprint = _imprint(pulse, vertex.laser_offset, context.geometry, n)
            terms["laser"].append(sign * vertex.transition.value * imprint)
        for segment, span_end in trajectory.spans(end):
            duration = span_end.since(segment.start)
            terms["kinetic"].append(sign * mass_ratio * _action(segment.velocity, segment.displacement, g, duration))
            if segment.level is Level.EXCITED:
                terms["internal"].append(-sign * omega_a * duration)
    states, _ = _closure(trajectories, end, g)
    terms["separation"].append(_separation(states, mass_ratio))
    return terms


def _separation(states: dict[Target, tuple[Any, Any]], mass_ratio: Any) -> Any:
    (x_ground, v_ground), (x_excited, v_excited) = states[Target.GROUND_ARM], states[Target.EXCITED_ARM]
    return mass_ratio * (v_ground + v_excited) / 2 * (x_excited - x_ground)


def _perturbative_ledger(
    seq: PulseSequence,
    context: TraceContext,
    trajectories: dict[Target, ArmTrajectory],
    reference: dict[Target, ArmTrajectory],
) -> dict[str, list[Any]]:
    g = context.env.g
    mass_ratio = context.atom.m / CONSTANTS.hbar
    last = _common_end(reference)
    end, reference_end = _end_event(trajectories, last), _end_event(reference, last)
    terms: dict[str, list[Any]] = {"internal": [], "kinetic": [], "laser": [], "separation": []}
    for arm, sign in ((Target.GROUND_ARM, 1), (Target.EXCITED_ARM, -1)):
        actual, flat = trajectories[arm], reference[arm]
        for vertex in actual.vertices:
            pulse = seq.pulses[vertex.pulse_index]
            imprint = _imprint_shift(pulse, vertex.laser_offset, context.geometry)
            terms["laser"].append(sign * vertex.transition.value * imprint)
        for (segment, span_end), (flat_segment, flat_end) in zip(actual.spans(end), flat.spans(reference_end)):
            duration = span_end.since(segment.start)
            shift = (span_end.rest - flat_end.rest) - (segment.start.rest - flat_segment.start.rest)
            v, v_flat = segment.velocity, flat_segment.velocity
            kinetic = (
                (v - v_flat) * (v + v_flat) * duration / 2
                + v_flat**2 * shift / 2
                + g * (v * duration**2 + g * duration**3 / 3 + segment.displacement * duration)
            )
            terms["kinetic"].append(sign * mass_ratio * kinetic)
            if segment.level is Level.EXCITED:
                terms["internal"].append(-sign * context.atom.omega_a * shift)
    states, _ = _closure(trajectories, end, g)
    flat_states, _ = _closure(reference, reference_end, 0.0)
    terms["separation"] += [_separation(states, mass_ratio), -_separation(flat_states, mass_ratio)]
    return terms


def _check_sequence(seq: PulseSequence, atom: AtomSpecies) -> None:
    report = validate_sequence(seq, atom)
    if report.residence_failures:
        raise ResidenceError("; ".join(report.residence_failures))
    if report.ordering_failures or report.pairing_failures:
        raise SequenceOverlapError("; ".join(report.ordering_failures + report.pairing_failures))
    if report.closure_failures:
        raise ClosureError("; ".join(report.closure_failures))


def run_interferometer(
    seq: PulseSequence,
    start: StartState,
    atom: AtomSpecies,
    gw: GravitationalWave,
    env: Environment,
    geometry: DetectorGeometry,
    mode: Mode = Mode.PERTURBATIVE,
    platforms: dict[Laser, LaserPlatform] | None = None,
    quadrature: bool = True,
    contrast: float = 1.0,
) -> InterferometerResult:
    """Evolve both arms of one atom ensemble through every vertex and return the phase ledger."""
    _check_sequence(seq, atom)
    platforms = platforms or static_platforms(geometry)
    mode = Mode(mode)
    if mode is Mode.DIRECT:
        with mpmath.workdps(DIRECT_PRECISION):
            context = TraceContext(geometry, start, atom, gw, env, platforms, MULTIPRECISION, quadrature)
            trajectories = _trace_both(seq, context)
            terms = _direct_ledger(seq, context, trajectories)
            end = _end_event(trajectories, _common_end(trajectories))
            _, gap = _closure(trajectories, end, mpmath.mpf(env.g))
    else:
        context = TraceContext(geometry, start, atom, gw, env, platforms, FLOAT, quadrature)
        flat_gw = GravitationalWave(0.0, gw.omega, gw.phi0)
        flat = TraceContext(geometry, start, atom, flat_gw, Environment(0.0), static_platforms(geometry))
        trajectories = _trace_both(seq, context)
        reference = _trace_both(seq.without_noise(), flat)
        terms = _perturbative_ledger(seq, context, trajectories, reference)
        end = _end_event(trajectories, _common_end(reference))
        _, gap = _closure(trajectories, end, env.g)

    velocity_tolerance = CLOSURE_VELOCITY_RTOL * atom.recoil_velocity(seq.pulses[0].k)
    if abs(gap.position) > CLOSURE_POSITION_TOLERANCE or abs(gap.velocity) > velocity_tolerance:
        msg = f"Arms do not reconverge: position gap {gap.position} m, velocity gap {gap.velocity} m/s."
        raise ClosureError(msg)
    if abs(gap.position) > CLOSURE_POSITION_TOLERANCE / 2 or abs(gap.velocity) > velocity_tolerance / 2:
        logger.warning("Closure gap %s is above half of the tolerance.", gap)

    values = {name: _fsum(parts) for name, parts in terms.items()}
    total = _fsum([part for parts in terms.values() for part in parts])
    ledger = PhaseLedger(total=total, **values)
    p_ground, p_excited = port_populations(total, contrast)
    return InterferometerResult(
        delta_phi_single=total,
        ledger=ledger,
        residence={arm: _residence(trajectory, end) for arm, trajectory in trajectories.items()},
        closure_gap=gap,
        p_ground=p_ground,
        p_excited=p_excited,
        mode=mode,
        arms=trajectories,
    )


def run_differential(
    seq: PulseSequence,
    geometry: DetectorGeometry,
    atom: AtomSpecies,
    gw: GravitationalWave,
    env: Environment,
    noise: NoiseRealization | None = None,
    mode: Mode = Mode.PERTURBATIVE,
    quadrature: bool = True,
) -> DifferentialResult:
    """Differential phase of the ensembles at x1 and x2, driven by one shared pulse list."""
    if geometry.x1 == geometry.x2:
        msg = "Differential measurement needs distinct ensemble positions x1 != x2."
        raise ValidationError(msg)
    platforms = None
    if noise is not None:
        seq, platforms = noise.sequence, noise.platforms(geometry)
    results = [
        run_interferometer(seq, start, atom, gw, env, geometry, mode, platforms, quadrature)
        for start in (StartState(geometry.x1, 0.0), StartState(geometry.x2, geometry.delta_v))
    ]
    return DifferentialResult(
        delta_phi=results[0].delta_phi_single - results[1].delta_phi_single, first=results[0], second=results[1]
    )
