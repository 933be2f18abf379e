from __future__ import annotations

import numpy as np
import pytest

from mqt.atomgw.errors import SequenceOverlapError, ValidationError
from mqt.atomgw.interferometer.atoms import AtomSpecies, doppler_splitting
from mqt.atomgw.pulses import (
    Area,
    Fragment,
    Level,
    PulseSequence,
    PulseSpec,
    Target,
    arm_momentum_ledger,
    default_dt_pair,
    dumps_sequence,
    loads_sequence,
    make_beamsplitter,
    make_mach_zehnder,
    make_mirror,
    validate_sequence,
)
from mqt.atomgw.spacetime import CONSTANTS, DetectorGeometry, Laser


@pytest.fixture
def geometry() -> DetectorGeometry:
    return DetectorGeometry(L=1e5, x1=1e4, x2=9e4)


@pytest.fixture
def atom() -> AtomSpecies:
    return AtomSpecies.strontium_87()


def test_beamsplitter_single_pair() -> None:
    geometry = DetectorGeometry(L=CONSTANTS.c * 1e-3, x2=0.0)
    fragment = make_beamsplitter(geometry, 1, 9e6, 0.5, dt_pair=1.1e-3)
    assert len(fragment) == 2
    first, second = fragment.pulses
    assert (first.source, first.area, first.target) == (Laser.PRIMARY, Area.HALF_PI, Target.BOTH)
    assert first.emission_time == 0.5
    assert (second.source, second.area) == (Laser.SECONDARY, Area.PI)
    assert second.emission_time == pytest.approx(0.5 + 1e-3)


def test_beamsplitter_alternates_lasers(geometry: DetectorGeometry) -> None:
    fragment = make_beamsplitter(geometry, 3, 9e6, 0.0, default_dt_pair(geometry))
    assert len(fragment) == 6
    assert [pulse.source for pulse in fragment.pulses] == [Laser.PRIMARY, Laser.SECONDARY] * 3
    assert all(pulse.area is Area.PI for pulse in fragment.pulses[1:])
    assert all(pulse.target is Target.EXCITED_ARM for pulse in fragment.pulses[1:])


@pytest.mark.parametrize("N", [1, 3])
def test_mirror_pulse_count(geometry: DetectorGeometry, N: int) -> None:
    fragment = make_mirror(geometry, N, 9e6, 10.0, default_dt_pair(geometry))
    assert len(fragment) == 4 * N - 1
    assert all(pulse.area is Area.PI for pulse in fragment.pulses)
    if N == 1:
        assert [pulse.source for pulse in fragment.pulses] == [Laser.PRIMARY, Laser.SECONDARY, Laser.PRIMARY]
        assert fragment.pulses[1].target is Target.BOTH


@pytest.mark.parametrize("order", list(Laser))
def test_mirror_exchanges_momenta(geometry: DetectorGeometry, order: Laser) -> None:
    fragment = make_mirror(geometry, 2, 9e6, 10.0, default_dt_pair(geometry), order=order)
    ledger = arm_momentum_ledger(fragment)
    assert ledger[Target.GROUND_ARM] == (4, Level.GROUND)
    assert ledger[Target.EXCITED_ARM] == (-4, Level.GROUND)


@pytest.mark.parametrize(("N", "spacing"), [(2, 0.0), (3, 0.0), (2, 1.0)])
def test_mirror_rejects_coincident_pulses(geometry: DetectorGeometry, N: int, spacing: float) -> None:
    with pytest.raises(SequenceOverlapError, match="fires twice"):
        make_mirror(geometry, N, 9e6, 10.0, spacing * geometry.light_time)
    assert len(make_mirror(geometry, 1, 9e6, 10.0, 0.0)) == 3
    assert len(make_mirror(geometry, N, 9e6, 10.0, 0.0, order=Laser.SECONDARY)) == 4 * N - 1


def test_mach_zehnder_timing() -> None:
    geometry = DetectorGeometry(L=CONSTANTS.c * 1e-3, x2=0.0)
    seq = make_mach_zehnder(geometry, 1, 9e6, 1.0, dt_pair=1.1e-3)
    expected = [0.0, 1e-3, 1.0, 1.001, 1.002, 2.001, 2.002]
    np.testing.assert_allclose(seq.emission_times, expected, rtol=1e-12)
    closing = seq.fragment(Fragment.CLOSING)
    assert closing[0].emission_time == pytest.approx(2.001)
    assert closing[-1].area is Area.HALF_PI


def test_mach_zehnder_final_fragment_start() -> None:
    geometry = DetectorGeometry()
    seq = make_mach_zehnder(geometry, 1, 9e6, 50.0, default_dt_pair(geometry))
    assert seq.fragment(Fragment.CLOSING)[0].emission_time == pytest.approx(100 + 1e6 / CONSTANTS.c)


@pytest.mark.parametrize("N", [1, 2, 3, 5])
@pytest.mark.parametrize("order", list(Laser))
def test_mach_zehnder_closes(geometry: DetectorGeometry, atom: AtomSpecies, N: int, order: Laser) -> None:
    seq = make_mach_zehnder(geometry, N, atom.resonant_k, 5.0, default_dt_pair(geometry), mirror_order=order)
    assert len(seq) == 8 * N - 1
    assert [len(seq.fragment(fragment)) for fragment in Fragment] == [2 * N, 4 * N - 1, 2 * N]
    ledger = arm_momentum_ledger(seq)
    assert ledger[Target.GROUND_ARM] == ledger[Target.EXCITED_ARM] == (0, Level.GROUND)
    report = validate_sequence(seq, atom)
    assert report.passed, report.failures


def test_mach_zehnder_rejects_short_interrogation(geometry: DetectorGeometry) -> None:
    with pytest.raises(ValidationError, match="must exceed the excited residence"):
        make_mach_zehnder(geometry, 2, 9e6, 3 * geometry.light_time, default_dt_pair(geometry))
    with pytest.raises(SequenceOverlapError, match="overlap"):
        make_mach_zehnder(geometry, 2, 9e6, 4.5 * geometry.light_time, default_dt_pair(geometry))


@pytest.mark.parametrize(("tau", "passed"), [(2.01, True), (1.99, False), (1 / (2 * np.pi * 1e-3), True)])
def test_excited_residence(tau: float, passed: bool) -> None:
    geometry = DetectorGeometry()
    sr = AtomSpecies.strontium_87()
    seq = make_mach_zehnder(geometry, 300, sr.resonant_k, 50.0, default_dt_pair(geometry))
    atom = AtomSpecies(m=sr.m, omega_a=sr.omega_a, tau=tau)
    report = validate_sequence(seq, atom)
    for arm in (Target.GROUND_ARM, Target.EXCITED_ARM):
        assert report.residence[arm] == pytest.approx(2 * 300 * 1e6 / CONSTANTS.c, rel=1e-9)
    assert report.passed is passed
    assert bool(report.residence_failures) is not passed


def test_validation_failures(geometry: DetectorGeometry, atom: AtomSpecies) -> None:
    light_time = geometry.light_time
    repeated = PulseSequence(
        pulses=(
            PulseSpec(Laser.PRIMARY, 0.0, Area.PI, 9e6, Target.EXCITED_ARM),
            PulseSpec(Laser.PRIMARY, 0.0, Area.PI, 9e6, Target.EXCITED_ARM),
        ),
        N=1,
        light_time=light_time,
    )
    assert validate_sequence(repeated, atom).ordering_failures

    early = PulseSequence(
        pulses=(
            PulseSpec(Laser.PRIMARY, 0.0, Area.PI, 9e6, Target.EXCITED_ARM),
            PulseSpec(Laser.SECONDARY, 0.5 * light_time, Area.PI, 9e6, Target.EXCITED_ARM),
        ),
        N=1,
        light_time=light_time,
    )
    assert validate_sequence(early, atom).pairing_failures

    opening = make_beamsplitter(geometry, 2, 9e6, 0.0, default_dt_pair(geometry))
    report = validate_sequence(opening, atom)
    assert report.closure_failures
    assert not report.passed


def test_doppler_advisory(geometry: DetectorGeometry, atom: AtomSpecies) -> None:
    seq = make_mach_zehnder(geometry, 2, atom.resonant_k, 5.0, default_dt_pair(geometry))
    report = validate_sequence(seq, atom, rabi_frequency=1e3)
    assert report.doppler_splitting == pytest.approx(doppler_splitting(atom, 2, atom.resonant_k))
    assert report.doppler_splitting == pytest.approx(4 * CONSTANTS.hbar * atom.resonant_k**2 / atom.m)


def test_pulse_invariants() -> None:
    with pytest.raises(ValidationError, match="must target both arms"):
        PulseSpec(Laser.PRIMARY, 0.0, Area.HALF_PI, 9e6, Target.GROUND_ARM)
    with pytest.raises(ValidationError, match="pi pulses only"):
        PulseSpec(Laser.PRIMARY, 0.0, Area.HALF_PI, 9e6, Target.BOTH, fragment=Fragment.MIRROR)
    with pytest.raises(ValidationError, match="Wavevector"):
        PulseSpec(Laser.PRIMARY, 0.0, Area.PI, 0.0, Target.BOTH)
    with pytest.raises(ValidationError, match="LMT order"):
        PulseSequence(pulses=(), N=0)


def test_sequence_text_form(geometry: DetectorGeometry) -> None:
    seq = make_mach_zehnder(geometry, 2, 9e6, 5.0, default_dt_pair(geometry), delta_tau=1e-4)
    text = dumps_sequence(seq)
    assert text.splitlines()[2].split()[:3] == ["primary", "0.0", "half_pi"]
    assert loads_sequence(text) == seq

    with pytest.raises(ValidationError, match="expected 11 fields"):
        loads_sequence("# N=1\nprimary 0.0 pi\n")
    with pytest.raises(ValidationError, match="inconsistent with source"):
        loads_sequence("# N=1\nprimary 0.0 pi 9e6 -1 both 0.0 0.0 0.0 0.0 opening\n")
