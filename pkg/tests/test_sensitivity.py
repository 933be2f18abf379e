from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from mqt.atomgw.errors import ResidenceError, ValidationError
from mqt.atomgw.interferometer.atoms import AtomSpecies, quality_factor
from mqt.atomgw.noise import BudgetScenario
from mqt.atomgw.sensitivity import (
    SensitivityConfig,
    blackbody_requirement,
    contrast_requirement,
    eq1_analytic,
    plasma_strain_bound,
    q_bound,
    strain_sensitivity_curve,
    zeeman_shift,
)
from mqt.atomgw.sensitivity.analytic import blackbody_slope
from mqt.atomgw.spacetime import CONSTANTS


@pytest.fixture
def sr() -> AtomSpecies:
    return AtomSpecies.strontium_87()


def test_eq1_working_point(sr: AtomSpecies) -> None:
    omega = 2 * np.pi * 0.01
    assert eq1_analytic(300, sr.omega_a, 1e-20, 0.0, 1e6, omega, 50.0, np.pi / 2) == pytest.approx(1.0796e-4, rel=1e-3)
    assert eq1_analytic(300, sr.omega_a, 1e-20, 0.0, 1e6, omega, 100.0, np.pi / 2) == pytest.approx(0.0, abs=1e-18)
    assert eq1_analytic(300, sr.omega_a, 1e-20, 1e6, 0.0, omega, 50.0, np.pi / 2) == pytest.approx(-1.0796e-4, rel=1e-3)


def test_q_bound(sr: AtomSpecies) -> None:
    assert quality_factor(sr) == pytest.approx(4.29e17, rel=1e-2)
    assert quality_factor(sr) > 1e17
    h = 1e-20
    assert q_bound(sr, 300, 1e6, h) == pytest.approx(4 * sr.omega_a * 300 * 1e6 / CONSTANTS.c * h)
    assert q_bound(sr, 300, 1e6, h) < 4 * quality_factor(sr) * h
    with pytest.raises(ResidenceError, match="exceeds the lifetime"):
        q_bound(sr, 100_000, 1e6, h)


def test_sensitivity_curve_at_corner() -> None:
    config = SensitivityConfig(frequencies=np.array([0.001, 0.01, 0.1]), optimize_T=True)
    curve = dict(strain_sensitivity_curve(config))
    assert curve[0.01] == pytest.approx(0.926e-20, rel=1e-2)
    assert curve[0.001] == pytest.approx(curve[0.01])
    doubled = dict(strain_sensitivity_curve(SensitivityConfig(frequencies=np.array([0.01]), N=600, optimize_T=True)))
    assert doubled[0.01] == pytest.approx(curve[0.01] / 2)


def test_sensitivity_curve_fixed_interrogation() -> None:
    config = SensitivityConfig(frequencies=np.array([0.005, 0.01, 0.02]))
    curve = dict(strain_sensitivity_curve(config))
    assert curve[0.02] == np.inf
    assert curve[0.005] == pytest.approx(2 * curve[0.01])
    signal = eq1_analytic(config.N, config.omega_a, curve[0.01], 0.0, config.L, 2 * np.pi * 0.01, config.T, np.pi / 2)
    assert signal == pytest.approx(config.delta_phi)


def test_sensitivity_config_invariants() -> None:
    with pytest.raises(ValidationError, match="strictly increasing"):
        SensitivityConfig(frequencies=np.array([0.1, 0.01]))
    with pytest.raises(ValidationError, match="Shot-noise"):
        SensitivityConfig(delta_phi=0.0)


def test_blackbody_requirement(sr: AtomSpecies) -> None:
    scenario = BudgetScenario()
    cold = blackbody_requirement(sr, 100.0, 1e-20, scenario)
    assert 1e-3 < cold < 9e-3
    assert cold == pytest.approx(7.57e-3, rel=1e-2)
    warm = blackbody_requirement(sr, 300.0, 1e-20, scenario)
    assert cold / warm == pytest.approx(27.0)
    blind = AtomSpecies(m=sr.m, omega_a=sr.omega_a, tau=sr.tau)
    assert blackbody_requirement(blind, 100.0, 1e-20, scenario) == np.inf
    with pytest.raises(ValidationError, match="Temperature"):
        blackbody_slope(sr, 0.0)


def test_zeeman_and_plasma(sr: AtomSpecies) -> None:
    assert zeeman_shift(1.0) == pytest.approx(-0.23)
    assert zeeman_shift(2.0) == pytest.approx(-0.92)
    assert zeeman_shift(0.0) == 0.0
    assert zeeman_shift(2.0, replace(sr, zeeman_coefficient=-0.5)) == pytest.approx(-2.0)
    assert plasma_strain_bound(1e-9, 1e-2) == pytest.approx(1e-11)
    with pytest.raises(ValidationError, match="non-negative"):
        plasma_strain_bound(-1.0, 1e-2)


@pytest.mark.parametrize(
    ("rabi_frequency", "contrast_loss", "expected"), [(1e3, 0.1, 20.0), (1e4, 0.1, 200.0), (1e3, 0.2, 40.0)]
)
def test_contrast_requirement(rabi_frequency: float, contrast_loss: float, expected: float) -> None:
    assert contrast_requirement(rabi_frequency, contrast_loss) == pytest.approx(expected)


def test_contrast_requirement_arguments() -> None:
    with pytest.raises(ValidationError, match="Rabi frequency"):
        contrast_requirement(0.0)
    with pytest.raises(ValidationError, match="Contrast loss"):
        contrast_requirement(1e3, 1.5)
