from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from mqt.atomgw.errors import ScenarioParseError, ValidationError
from mqt.atomgw.interferometer.engine import Mode
from mqt.atomgw.noise import NoiseScope
from mqt.atomgw.scenario import (
    KEYS,
    Scenario,
    emit_scenario,
    format_value,
    parse_scenario,
    parse_sweep,
    scenario_digest,
    with_value,
)
from mqt.atomgw.spacetime import Laser

SMALL = """
# ground test: short baseline
sequence.N = 4
sequence.T = 20          # s
geometry.L = 1e5
geometry.x1 = 1e4
geometry.x2 = 9e4
gw.h = 1e-9
analysis.mode = direct
"""


def test_parse_scenario_with_defaults() -> None:
    scenario = parse_scenario(SMALL)
    assert scenario.sequence.N == 4
    assert scenario.sequence.T == 20.0
    assert scenario.geometry.L == 1e5
    assert scenario.geometry.delta_v == 0.01
    assert scenario.gw.h == 1e-9
    assert scenario.analysis.mode is Mode.DIRECT
    assert scenario.atom.name == "Sr87"
    assert scenario.noise.seed is None
    assert scenario.k == pytest.approx(scenario.atom.resonant_k)


def test_default_scenario_is_the_working_point() -> None:
    scenario = parse_scenario("")
    assert scenario == Scenario()
    assert len(scenario.build_sequence()) == 8 * 300 - 1
    assert scenario.budget_scenario().signal(1e-20) == pytest.approx(1.0796e-4, rel=1e-3)


def test_emitted_scenario_parses_back() -> None:
    scenario = parse_scenario(SMALL)
    scenario = replace(
        scenario,
        sequence=replace(scenario.sequence, mirror_order=Laser.SECONDARY, dt_pair=1e-3),
        noise=replace(scenario.noise, seed=2**40 + 1, timing_scope=NoiseScope.PULSE, laser_phase_jitter=0.1),
    )
    text = emit_scenario(scenario)
    assert "geometry.L = 100000  # m" in text.splitlines()
    assert parse_scenario(text) == scenario
    assert scenario_digest(parse_scenario(text)) == scenario_digest(scenario)
    assert scenario_digest(scenario) != scenario_digest(Scenario())


def test_optional_keys() -> None:
    scenario = parse_scenario("sequence.k = auto\nnoise.seed = 7\n")
    assert scenario.sequence.k is None
    assert scenario.noise.seed == 7
    assert scenario.with_seed(9).noise.seed == 9
    assert scenario.with_seed(None) is scenario
    assert "sequence.k" not in emit_scenario(scenario)


@pytest.mark.parametrize(
    ("text", "line_number", "message"),
    [
        ("sequence.N = 4\nbogus.key = 1\n", 2, "unknown scenario key"),
        ("sequence.N = 4\n\nsequence.N = 5\n", 3, "duplicate scenario key"),
        ("sequence.N 4\n", 1, "expected 'key = value'"),
        ("# N\nsequence.N = four\n", 2, "invalid value"),
        ("sequence.N = 2.5\n", 1, "Expected an integer"),
        ("analysis.quadrature = maybe\n", 1, "Expected a boolean"),
        ("analysis.mode = fast\n", 1, "invalid value"),
    ],
)
def test_parse_errors_carry_line_numbers(text: str, line_number: int, message: str) -> None:
    with pytest.raises(ScenarioParseError, match=message) as info:
        parse_scenario(text)
    assert info.value.line_number == line_number
    assert str(info.value).startswith(f"line {line_number}: ")


@pytest.mark.parametrize(
    "text",
    [
        "sequence.N = 0",
        "geometry.x2 = 2e6",
        "gw.h = 1e-2",
        "analysis.f_min = 2",
        "analysis.sweep_command = sensitivity",
    ],
)
def test_invalid_scenarios(text: str) -> None:
    with pytest.raises(ValidationError):
        parse_scenario(text)


def test_format_value() -> None:
    assert format_value(True) == "true"
    assert format_value(3) == "3"
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(np.float64(2.5)) == "2.5"
    assert format_value(Laser.PRIMARY) == "primary"
    assert float(format_value(1 / 3)) == 1 / 3


def test_with_value() -> None:
    scenario = parse_scenario(SMALL)
    assert with_value(scenario, "sequence.N", 8.0).sequence.N == 8
    assert with_value(scenario, "gw.omega", 0.25).gw.omega == 0.25
    with pytest.raises(ValidationError, match="does not fit"):
        with_value(scenario, "sequence.N", 2.5)
    with pytest.raises(ValidationError, match="Unknown scenario key"):
        with_value(scenario, "gw.amplitude", 1.0)


def test_parse_sweep() -> None:
    key, values = parse_sweep("gw.omega=0.01:0.1:10")
    assert key == "gw.omega"
    assert values.shape == (10,)
    assert values[[0, -1]] == pytest.approx([0.01, 0.1])
    with pytest.raises(ValidationError, match="key=start:stop:steps"):
        parse_sweep("gw.omega=0.01:0.1")
    with pytest.raises(ValidationError, match="Unknown sweep key"):
        parse_sweep("gw.amplitude=0:1:3")


def test_key_registry() -> None:
    assert {"sequence.N", "geometry.delta_v", "noise.seed", "analysis.mode", "atom.tau"} <= set(KEYS)
    assert KEYS["geometry.L"].unit == "m"
    assert KEYS["noise.seed"].optional
    assert KEYS["sequence.mirror_order"].parse("secondary") is Laser.SECONDARY
