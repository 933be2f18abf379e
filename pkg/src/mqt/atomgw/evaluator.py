from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, TypedDict

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from mqt.atomgw.errors import AtomGWError, ValidationError
from mqt.atomgw.interferometer.atoms import quality_factor
from mqt.atomgw.interferometer.engine import StartState, run_differential, run_interferometer
from mqt.atomgw.noise import budget_report, cancellation_experiment, realize_noise
from mqt.atomgw.pulses import Target
from mqt.atomgw.scenario import format_value, scenario_digest, with_value
from mqt.atomgw.sensitivity import (
    SensitivityConfig,
    blackbody_requirement,
    contrast_requirement,
    ellipse_fit,
    eq1_analytic,
    plasma_strain_bound,
    q_bound,
    strain_sensitivity_curve,
    synthesize_ellipse_samples,
    zeeman_shift,
)

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from mqt.atomgw.noise import NoiseRealization
    from mqt.atomgw.pulses import PulseSequence
    from mqt.atomgw.scenario import Scenario

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "differential", "noise-budget", "sensitivity", "ellipse", "sweep", "cancellation")
FORMATS = ("csv", "record")
MANIFEST_NAME = "run.json"
LABEL_COLUMNS = ("term", "quantity")


def tool_version() -> str:
    try:
        return version("mqt.atomgw")
    except PackageNotFoundError:
        return "unknown"


class SimulateResult(TypedDict):
    x: float
    v: float
    delta_phi_single: float
    internal: float
    kinetic: float
    laser: float
    separation: float
    residence_ground_arm: float
    residence_excited_arm: float
    closure_position: float
    closure_velocity: float
    p_ground: float
    p_excited: float


class DifferentialRow(TypedDict):
    delta_phi: float
    eq1: float
    relative_error: float
    prefactor_ratio: float
    mirror_order: str
    phase_first: float
    phase_second: float


class SweepRow(TypedDict):
    key: str
    value: float
    delta_phi: float
    eq1: float


@dataclass(frozen=True)
class RunRecord:
    command: str
    digest: str
    seed: int | None
    version: str
    tables: dict[str, pd.DataFrame] = field(default_factory=dict)


def _require_seed(scenario: Scenario, command: str) -> None:
    if scenario.noise.seed is None:
        msg = f"Command {command!r} is stochastic and needs an explicit seed (noise.seed or --seed)."
        raise ValidationError(msg)


def _noise_realization(scenario: Scenario, seq: PulseSequence, command: str) -> NoiseRealization | None:
    if scenario.noise.is_silent:
        return None
    _require_seed(scenario, command)
    return realize_noise(scenario.noise, seq, scenario.analysis.bandwidth)


def simulate(scenario: Scenario) -> SimulateResult:
    """Single ensemble at x1 with the scenario's noise realization."""
    seq = scenario.build_sequence()
    realization = _noise_realization(scenario, seq, "simulate")
    platforms = None
    if realization is not None:
        seq, platforms = realization.sequence, realization.platforms(scenario.geometry)
    start = StartState(scenario.geometry.x1, 0.0)
    result = run_interferometer(
        seq,
        start,
        scenario.atom,
        scenario.gw,
        scenario.env,
        scenario.geometry,
        scenario.analysis.mode,
        platforms,
        scenario.analysis.quadrature,
        scenario.analysis.contrast,
    )
    return SimulateResult(
        x=start.x,
        v=start.v,
        delta_phi_single=result.delta_phi_single,
        internal=result.ledger.internal,
        kinetic=result.ledger.kinetic,
        laser=result.ledger.laser,
        separation=result.ledger.separation,
        residence_ground_arm=result.residence[Target.GROUND_ARM],
        residence_excited_arm=result.residence[Target.EXCITED_ARM],
        closure_position=result.closure_gap.position,
        closure_velocity=result.closure_gap.velocity,
        p_ground=result.p_ground,
        p_excited=result.p_excited,
    )


def scenario_eq1(scenario: Scenario) -> float:
    return eq1_analytic(
        scenario.sequence.N,
        scenario.atom.omega_a,
        scenario.gw.h,
        scenario.geometry.x1,
        scenario.geometry.x2,
        scenario.gw.omega,
        scenario.sequence.T,
        scenario.gw.phi0,
    )


def differential(scenario: Scenario) -> DifferentialRow:
    """Simulated differential phase next to the closed form."""
    seq = scenario.build_sequence()
    realization = _noise_realization(scenario, seq, "differential")
    result = run_differential(
        seq,
        scenario.geometry,
        scenario.atom,
        scenario.gw,
        scenario.env,
        realization,
        scenario.analysis.mode,
        scenario.analysis.quadrature,
    )
    analytic = scenario_eq1(scenario)
    ratio = result.delta_phi / analytic if analytic != 0 else float("nan")
    return DifferentialRow(
        delta_phi=result.delta_phi,
        eq1=analytic,
        relative_error=abs(ratio - 1) if analytic != 0 else float("nan"),
        prefactor_ratio=ratio,
        mirror_order=scenario.sequence.mirror_order.value,
        phase_first=result.first.delta_phi_single,
        phase_second=result.second.delta_phi_single,
    )


def _budget_tables(scenario: Scenario) -> dict[str, pd.DataFrame]:
    rows = budget_report(scenario.budget_scenario(), scenario.analysis.target_strain, scenario.noise)
    frame = pd.DataFrame(
        [
            {
                "term": f"term{row.term}",
                "formula": row.formula,
                "phase_noise": row.phase_noise,
                "requirement": row.requirement,
                "unit": row.unit,
                "exponent": row.exponent,
            }
            for row in rows
        ]
    )
    return {"budget": frame}


def _sensitivity_tables(scenario: Scenario) -> dict[str, pd.DataFrame]:
    analysis = scenario.analysis
    config = SensitivityConfig(
        delta_phi=analysis.shot_noise,
        frequencies=analysis.frequencies,
        N=scenario.sequence.N,
        T=scenario.sequence.T,
        L=scenario.geometry.L,
        omega_a=scenario.atom.omega_a,
        optimize_T=analysis.optimize_T,
    )
    curve = pd.DataFrame(strain_sensitivity_curve(config), columns=["frequency_hz", "h_asd"])
    requirements = pd.DataFrame(
        [
            {"quantity": "quality_factor", "value": quality_factor(scenario.atom), "unit": ""},
            {
                "quantity": "q_bound",
                "value": q_bound(scenario.atom, scenario.sequence.N, scenario.geometry.L, analysis.target_strain),
                "unit": "rad",
            },
            {
                "quantity": "blackbody_requirement",
                "value": blackbody_requirement(
                    scenario.atom, analysis.temperature, analysis.target_strain, scenario.budget_scenario()
                ),
                "unit": "K/sqrt(Hz)",
            },
            {
                "quantity": "contrast_requirement",
                "value": contrast_requirement(analysis.rabi_frequency, analysis.contrast_loss),
                "unit": "Hz",
            },
            {"quantity": "zeeman_shift", "value": zeeman_shift(analysis.magnetic_field, scenario.atom), "unit": "Hz"},
            {
                "quantity": "plasma_strain_bound",
                "value": plasma_strain_bound(analysis.refractivity, analysis.density_fluctuation),
                "unit": "1/sqrt(Hz)",
            },
        ]
    )
    return {"sensitivity": curve, "requirements": requirements}


def _ellipse_tables(scenario: Scenario) -> dict[str, pd.DataFrame]:
    _require_seed(scenario, "ellipse")
    analysis = scenario.analysis
    samples = synthesize_ellipse_samples(
        analysis.ellipse_phase,
        analysis.ellipse_samples,
        analysis.contrast,
        analysis.readout_noise,
        np.random.default_rng(scenario.noise.seed),
    )
    fit = ellipse_fit(samples)
    summary = pd.DataFrame(
        [
            {
                "injected": analysis.ellipse_phase,
                "delta_phi": fit.delta_phi,
                "residual": fit.residual,
                "center_x": fit.center[0],
                "center_y": fit.center[1],
                "major": fit.axes[0],
                "minor": fit.axes[1],
                "tilt": fit.tilt,
            }
        ]
    )
    points = pd.DataFrame([{"p1": sample.p1, "p2": sample.p2} for sample in samples])
    return {"ellipse": summary, "samples": points}


def _cancellation_tables(scenario: Scenario, n_jobs: int) -> dict[str, pd.DataFrame]:
    _require_seed(scenario, "cancellation")
    stats = cancellation_experiment(
        scenario.build_sequence(),
        scenario.geometry,
        scenario.atom,
        scenario.gw,
        scenario.noise,
        scenario.analysis.trials,
        scenario.env,
        scenario.analysis.bandwidth,
        scenario.analysis.mode,
        n_jobs,
    )
    summary = pd.DataFrame(
        [
            {
                "trials": stats.trials,
                "mean_delta_phi": stats.mean_delta_phi,
                "std_delta_phi": stats.std_delta_phi,
                "mean_single": stats.mean_single,
                "std_single": stats.std_single,
            }
        ]
    )
    trials = pd.DataFrame({"trial": np.arange(stats.trials), "delta_phi": stats.delta_phi, "single": stats.single})
    return {"cancellation": summary, "trials": trials}


def _sweep_point(scenario: Scenario, key: str, value: float) -> dict[str, Any]:
    point = with_value(scenario, key, value)
    if point.analysis.sweep_command == "simulate":
        return {"key": key, "value": value, **simulate(point)}
    row = differential(point)
    return dict(SweepRow(key=key, value=value, delta_phi=row["delta_phi"], eq1=row["eq1"]))


def sweep(scenario: Scenario, key: str, values: NDArray[np.float64], n_jobs: int = 1) -> pd.DataFrame:
    """Run the configured sweep command at every grid value; rows stay in grid order."""
    logger.info("Sweeping %s over %d point(s) with %s.", key, len(values), scenario.analysis.sweep_command)
    rows = Parallel(n_jobs=n_jobs, verbose=0)(delayed(_sweep_point)(scenario, key, float(value)) for value in values)
    return pd.DataFrame(rows)


def run_scenario(
    scenario: Scenario,
    command: str,
    sweep_spec: tuple[str, NDArray[np.float64]] | None = None,
    n_jobs: int | None = None,
) -> RunRecord:
    if command not in COMMANDS:
        msg = f"Unknown command {command!r}; expected one of {', '.join(COMMANDS)}."
        raise ValidationError(msg)
    if (command == "sweep") != (sweep_spec is not None):
        msg = "The sweep command needs exactly one --sweep key=start:stop:steps and other commands take none."
        raise ValidationError(msg)
    jobs = n_jobs if n_jobs is not None else scenario.analysis.jobs
    handlers: dict[str, Callable[[], dict[str, pd.DataFrame]]] = {
        "simulate": lambda: {"simulate": pd.DataFrame([simulate(scenario)])},
        "differential": lambda: {"differential": pd.DataFrame([differential(scenario)])},
        "noise-budget": lambda: _budget_tables(scenario),
        "sensitivity": lambda: _sensitivity_tables(scenario),
        "ellipse": lambda: _ellipse_tables(scenario),
        "cancellation": lambda: _cancellation_tables(scenario, jobs),
    }
    logger.info("Running %s on scenario %s.", command, scenario_digest(scenario)[:12])
    try:
        if sweep_spec is not None:
            tables = {"sweep": sweep(scenario, *sweep_spec, n_jobs=jobs)}
        else:
            tables = handlers[command]()
    except AtomGWError:
        logger.error("Command %s failed for scenario %s.", command, scenario_digest(scenario))
        raise
    return RunRecord(
        command=command,
        digest=scenario_digest(scenario),
        seed=scenario.noise.seed,
        version=tool_version(),
        tables=tables,
    )


def _record_lines(name: str, frame: pd.DataFrame) -> list[str]:
    lines = []
    for index, row in enumerate(frame.to_dict(orient="records")):
        label = next((str(row.pop(column)) for column in LABEL_COLUMNS if column in row), str(index))
        lines.extend(f"{name}.{label}.{column} = {format_value(value)}" for column, value in row.items())
    return lines


def emit_results(record: RunRecord, out_dir: Path, fmt: str = "csv") -> list[Path]:
    """Write every result table and the run manifest; table files never carry the timestamp."""
    if fmt not in FORMATS:
        msg = f"Unknown output format {fmt!r}; expected one of {', '.join(FORMATS)}."
        raise ValidationError(msg)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, frame in record.tables.items():
        if fmt == "csv":
            path = out_dir / f"{name}.csv"
            frame.to_csv(path, index=False, float_format="%.17g")
        else:
            path = out_dir / f"{name}.rec"
            path.write_text("\n".join(_record_lines(name, frame)) + "\n")
        written.append(path)
    manifest = {
        "command": record.command,
        "digest": record.digest,
        "files": [path.name for path in written],
        "format": fmt,
        "seed": record.seed,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "version": record.version,
    }
    manifest_path = out_dir / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info("Wrote %d result file(s) to %s.", len(written), out_dir)
    return [*written, manifest_path]
