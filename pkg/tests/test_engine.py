from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from mqt.atomgw.errors import ClosureError, NoIntersectionError, ResidenceError, ValidationError
from mqt.atomgw.interferometer.atoms import AtomSpecies
from mqt.atomgw.interferometer.engine import (
    LEDGER_FIELDS,
    ArmTrajectory,
    Event,
    Mode,
    Segment,
    StartState,
    TraceContext,
    port_populations,
    resolve_vertex,
    run_differential,
    run_interferometer,
)
from mqt.atomgw.pulses import (
    Area,
    Level,
    PulseSequence,
    PulseSpec,
    Target,
    default_dt_pair,
    make_beamsplitter,
    make_mach_zehnder,
)
from mqt.atomgw.sensitivity import eq1_analytic
from mqt.atomgw.spacetime import CONSTANTS, DetectorGeometry, Environment, GravitationalWave, Laser, static_platforms

OMEGA = 0.1
STRAIN = 1e-9


@pytest.fixture
def geometry() -> DetectorGeometry:
    return DetectorGeometry(L=1e5, x1=1e4, x2=9e4)


@pytest.fixture
def atom() -> AtomSpecies:
    return AtomSpecies.strontium_87()


def mach_zehnder(
    geometry: DetectorGeometry, atom: AtomSpecies, N: int, T: float, order: Laser = Laser.PRIMARY
) -> PulseSequence:
    return make_mach_zehnder(geometry, N, atom.resonant_k, T, default_dt_pair(geometry), mirror_order=order)


def amplitude(N: int, atom: AtomSpecies, geometry: DetectorGeometry, h: float = STRAIN) -> float:
    return 4 * N * atom.omega_a * h * abs(geometry.x1 - geometry.x2) / CONSTANTS.c


def fresh_arm(arm: Target, v: float = 0.0) -> ArmTrajectory:
    trajectory = ArmTrajectory(arm=arm)
    trajectory.segments.append(Segment(Event(0.0, 0.0, 0.0), 0.0, v, Level.GROUND))
    return trajectory


def context_for(
    geometry: DetectorGeometry, atom: AtomSpecies, start: StartState, gw: GravitationalWave
) -> TraceContext:
    return TraceContext(geometry, start, atom, gw, Environment(), static_platforms(geometry))


@pytest.mark.parametrize(
    ("delta_phi", "contrast", "expected"),
    [(0.0, 1.0, (1.0, 0.0)), (np.pi, 1.0, (0.0, 1.0)), (np.pi / 2, 0.8, (0.5, 0.5))],
)
def test_port_populations(delta_phi: float, contrast: float, expected: tuple[float, float]) -> None:
    assert port_populations(delta_phi, contrast) == pytest.approx(expected, abs=1e-15)


def test_port_populations_rejects_contrast() -> None:
    with pytest.raises(ValidationError, match="Contrast"):
        port_populations(0.0, 1.5)


def test_flat_vertex(geometry: DetectorGeometry, atom: AtomSpecies) -> None:
    x0 = 3e4
    context = context_for(geometry, atom, StartState(x0), GravitationalWave())
    pulse = PulseSpec(Laser.PRIMARY, 2.0, Area.PI, atom.resonant_k, Target.EXCITED_ARM)
    vertex = resolve_vertex(pulse, fresh_arm(Target.EXCITED_ARM), context)
    assert vertex.event.time == pytest.approx(2.0 + x0 / CONSTANTS.c, abs=1e-15)
    assert vertex.displacement == 0.0


def test_static_strain_vertex(atom: AtomSpecies) -> None:
    h, L = 1e-6, 1e6
    geometry = DetectorGeometry(L=L)
    gw = GravitationalWave(h=h, omega=1e-9, phi0=np.pi / 2)
    context = context_for(geometry, atom, StartState(L), gw)
    pulse = PulseSpec(Laser.PRIMARY, 0.0, Area.PI, atom.resonant_k, Target.EXCITED_ARM)
    vertex = resolve_vertex(pulse, fresh_arm(Target.EXCITED_ARM), context)
    assert vertex.event.time == pytest.approx(L / CONSTANTS.c * (1 + h / 2), rel=1e-9)


def test_moving_atom_vertex(geometry: DetectorGeometry, atom: AtomSpecies) -> None:
    x0, v, t_emit = 5e4, -1e-2, 1.5
    context = context_for(geometry, atom, StartState(x0, v), GravitationalWave())
    pulse = PulseSpec(Laser.PRIMARY, t_emit, Area.PI, atom.resonant_k, Target.EXCITED_ARM)
    vertex = resolve_vertex(pulse, fresh_arm(Target.EXCITED_ARM, v), context)
    expected = t_emit + (x0 + v * t_emit) / (CONSTANTS.c - v)
    assert vertex.event.time == pytest.approx(expected, abs=1e-12)
    assert vertex.displacement == pytest.approx(v * expected)


def test_vertex_errors(geometry: DetectorGeometry, atom: AtomSpecies) -> None:
    pulse = PulseSpec(Laser.PRIMARY, 0.0, Area.PI, atom.resonant_k, Target.GROUND_ARM)
    context = context_for(geometry, atom, StartState(1e4), GravitationalWave())
    with pytest.raises(ValidationError, match="does not interact"):
        resolve_vertex(pulse, fresh_arm(Target.EXCITED_ARM), context)
    behind = context_for(geometry, atom, StartState(-10.0), GravitationalWave())
    with pytest.raises(NoIntersectionError, match="propagates away"):
        resolve_vertex(pulse, fresh_arm(Target.GROUND_ARM), behind)


@pytest.mark.parametrize("N", [1, 3])
def test_null_interferometer(geometry: DetectorGeometry, atom: AtomSpecies, N: int) -> None:
    seq = mach_zehnder(geometry, atom, N, 5.0)
    result = run_interferometer(seq, StartState(geometry.x1), atom, GravitationalWave(), Environment(), geometry)
    assert result.delta_phi_single == 0.0
    assert all(value == 0.0 for value in result.ledger.as_record().values())
    assert result.p_ground == pytest.approx(1.0)
    # recoiling arms stretch the light time by up to N v_rec T / c per excited span
    drift = 6 * N**2 * atom.recoil_velocity(atom.resonant_k) * 5.0 / CONSTANTS.c
    for arm in (Target.GROUND_ARM, Target.EXCITED_ARM):
        assert result.residence[arm] == pytest.approx(2 * N * geometry.light_time, abs=drift)
    assert abs(result.closure_gap.position) < 1e-6
    assert result.closure_gap.velocity == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("N", [1, 2])
def test_gravity_phase_order(geometry: DetectorGeometry, atom: AtomSpecies, N: int) -> None:
    g, T = 9.8, 1.0
    seq = mach_zehnder(geometry, atom, N, T)
    result = run_interferometer(seq, StartState(geometry.x1), atom, GravitationalWave(), Environment(g), geometry)
    scale = N * atom.omega_a * g * T**2 / CONSTANTS.c
    assert 0.25 < abs(result.delta_phi_single) / scale < 4


def test_ledger_sums_to_total(geometry: DetectorGeometry, atom: AtomSpecies) -> None:
    seq = mach_zehnder(geometry, atom, 2, 15.0)
    gw = GravitationalWave(h=STRAIN, omega=OMEGA, phi0=0.4)
    result = run_interferometer(seq, StartState(geometry.x1), atom, gw, Environment(), geometry)
    record = result.ledger.as_record()
    assert tuple(record) == LEDGER_FIELDS
    parts = sum(record[name] for name in LEDGER_FIELDS[:-1])
    assert parts == pytest.approx(result.delta_phi_single, rel=1e-9)
    assert result.p_ground + result.p_excited == pytest.approx(1.0)


@pytest.mark.parametrize("N", [1, 2])
def test_direct_and_perturbative_agree(geometry: DetectorGeometry, atom: AtomSpecies, N: int) -> None:
    seq = mach_zehnder(geometry, atom, N, 20.0)
    gw = GravitationalWave(h=STRAIN, omega=OMEGA, phi0=0.3)
    start = StartState(geometry.x1)
    perturbative = run_interferometer(seq, start, atom, gw, Environment(), geometry, Mode.PERTURBATIVE)
    direct = run_interferometer(seq, start, atom, gw, Environment(), geometry, Mode.DIRECT)
    assert direct.mode is Mode.DIRECT
    assert direct.delta_phi_single == pytest.approx(perturbative.delta_phi_single, rel=1e-3)


def test_sequence_checks(geometry: DetectorGeometry, atom: AtomSpecies) -> None:
    opening = make_beamsplitter(geometry, 2, atom.resonant_k, 0.0, default_dt_pair(geometry))
    with pytest.raises(ClosureError):
        run_interferometer(opening, StartState(geometry.x1), atom, GravitationalWave(), Environment(), geometry)
    short_lived = AtomSpecies(m=atom.m, omega_a=atom.omega_a, tau=1e-4)
    seq = mach_zehnder(geometry, atom, 1, 5.0)
    with pytest.raises(ResidenceError):
        run_interferometer(seq, StartState(geometry.x1), short_lived, GravitationalWave(), Environment(), geometry)


def simulated(
    geometry: DetectorGeometry, atom: AtomSpecies, N: int, omega_T: float, phi0: float, h: float = STRAIN
) -> float:
    seq = mach_zehnder(geometry, atom, N, omega_T / OMEGA)
    gw = GravitationalWave(h=h, omega=OMEGA, phi0=phi0)
    return run_differential(seq, geometry, atom, gw, Environment()).delta_phi


def test_differential_null_cases(geometry: DetectorGeometry, atom: AtomSpecies) -> None:
    assert simulated(geometry, atom, 2, np.pi, 0.0, h=0.0) == 0.0
    signal = abs(simulated(geometry, atom, 1, np.pi, np.pi / 2))
    assert signal == pytest.approx(amplitude(1, atom, geometry), rel=1e-2)
    assert abs(simulated(geometry, atom, 1, 2 * np.pi, np.pi / 2)) < 1e-6 * signal
    collapsed = replace(geometry, x2=geometry.x1)
    with pytest.raises(ValidationError, match="distinct ensemble positions"):
        run_differential(mach_zehnder(geometry, atom, 1, 5.0), collapsed, atom, GravitationalWave(), Environment())


@pytest.mark.parametrize("N", [1, 2, 4])
@pytest.mark.parametrize("phi0", [0.0, np.pi / 4, np.pi / 2])
def test_differential_phase_follows_closed_form(
    geometry: DetectorGeometry, atom: AtomSpecies, N: int, phi0: float
) -> None:
    scale = amplitude(N, atom, geometry)
    for omega_T in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, np.pi, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0]:
        expected = eq1_analytic(N, atom.omega_a, STRAIN, geometry.x1, geometry.x2, OMEGA, omega_T / OMEGA, phi0)
        assert simulated(geometry, atom, N, omega_T, phi0) == pytest.approx(expected, rel=1e-2, abs=1e-3 * scale)


def test_differential_phase_is_linear(geometry: DetectorGeometry, atom: AtomSpecies) -> None:
    base = simulated(geometry, atom, 1, 2.0, 0.3)
    assert simulated(geometry, atom, 1, 2.0, 0.3, h=2 * STRAIN) / base == pytest.approx(2.0, rel=1e-3)
    by_order = [simulated(geometry, atom, N, 2.0, 0.3) / base for N in (2, 4, 8)]
    assert by_order == pytest.approx([2.0, 4.0, 8.0], rel=1e-2)
    shorter = replace(geometry, x2=5e4)
    assert simulated(shorter, atom, 1, 2.0, 0.3) / base == pytest.approx(0.5, rel=1e-3)


def test_laser_frequency_independence(geometry: DetectorGeometry, atom: AtomSpecies) -> None:
    gw = GravitationalWave(h=STRAIN, omega=OMEGA, phi0=0.3)
    T = 2.0 / OMEGA
    phases = [
        run_differential(
            make_mach_zehnder(geometry, 2, k, T, default_dt_pair(geometry)), geometry, atom, gw, Environment()
        ).delta_phi
        for k in (atom.resonant_k, atom.resonant_k * (1 + 1e-6))
    ]
    assert phases[1] == pytest.approx(phases[0], rel=1e-6)


def test_secondary_mirror_order(geometry: DetectorGeometry, atom: AtomSpecies) -> None:
    seq = mach_zehnder(geometry, atom, 2, np.pi / OMEGA, order=Laser.SECONDARY)
    gw = GravitationalWave(h=STRAIN, omega=OMEGA, phi0=np.pi / 2)
    delta_phi = run_differential(seq, geometry, atom, gw, Environment()).delta_phi
    expected = eq1_analytic(2, atom.omega_a, STRAIN, geometry.x1, geometry.x2, OMEGA, np.pi / OMEGA, np.pi / 2)
    assert delta_phi / expected == pytest.approx(1.0, rel=1e-2)
