"""Run configuration: one JSON file with per-concern sections.

A single versionable file drives every CLI subcommand; flags may
override individual values.  Unknown keys are rejected so that typos
fail loudly instead of silently falling back to defaults.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .cmdp import BatteryConfig, SolverConfig
from .consumption import NodePowerProfile, TopologyParams
from .errors import ConfigError, EhwsnError
from .source import (ShadingMixture, load_source_model,
                     synthetic_day_night)

_PROFILE_KEYS = {
    "tx_current_ma": "tx_current",
    "rx_current_ma": "rx_current",
    "cpu_current_ma": "cpu_current",
    "sleep_current_ma": "sleep_current",
    "wake_window_s": "wake_window",
    "data_airtime_s": "data_airtime",
    "header_decode_time_s": "header_decode_time",
    "cpu_time_per_reading_s": "cpu_time_per_reading",
    "readings_per_packet": "readings_per_packet",
    "trickle_period_s": "trickle_period",
    "vulnerability_window_s": "vulnerability_window",
    "channel_error_prob": "channel_error_prob",
}

_TOPOLOGY_KEYS = {"children", "interferers", "interfering_packets"}

_SOURCE_KEYS = {"kind", "path", "day_mean_current_ma", "day_current_spread_ma",
                "day_hours", "night_hours", "duration_spread_hours",
                "night_current_ma", "bins", "shading_values",
                "shading_weights"}

_BATTERY_KEYS = {"capacity_mah", "threshold_mah", "levels"}

_SOLVER_KEYS = {"discount", "outage_fraction", "cost_bound_s", "controls",
                "eps_cost", "lambda_tol", "eps_value",
                "max_value_iterations", "delta_bins"}

_SIMULATION_KEYS = {"epochs", "seed", "update_delay_s"}

_P1_KEYS = {"with_collisions", "reward_samples"}

_SECTIONS = {"profile", "topology", "source", "battery", "solver",
             "simulation", "p1"}


@dataclass(frozen=True)
class SimulationSettings:
    epochs: int = 10000
    seed: int = 1
    update_delay_s: float = 0.0


@dataclass(frozen=True)
class P1Settings:
    with_collisions: bool = True
    reward_samples: int = 129


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with defaults applied."""

    profile: NodePowerProfile
    topology: TopologyParams
    source_spec: Optional[dict]
    battery: Optional[BatteryConfig]
    solver: Optional[SolverConfig]
    simulation: SimulationSettings
    p1: P1Settings
    base_dir: Path

    def require_battery(self) -> BatteryConfig:
        if self.battery is None:
            raise ConfigError("this command needs a 'battery' section")
        return self.battery

    def require_solver(self) -> SolverConfig:
        if self.solver is None:
            raise ConfigError("this command needs a 'solver' section")
        return self.solver

    def require_source(self):
        if self.source_spec is None:
            raise ConfigError("this command needs a 'source' section")
        return build_source(self.source_spec, self.base_dir)


def _check_keys(section: str, obj: dict, allowed) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {', '.join(unknown)}")


def _require(section: str, obj: dict, key: str):
    if key not in obj:
        raise ConfigError(f"missing required field '{section}.{key}'")
    return obj[key]


def _number(section: str, key: str, value, allow_inf: bool = False) -> float:
    if isinstance(value, str) and allow_inf and value.lower() in ("inf", "infinity"):
        return math.inf
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"'{section}.{key}' must be a number, got {value!r}")
    return float(value)


def parse_config(path) -> RunConfig:
    """Load and validate a run configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    _check_keys("top level", doc, _SECTIONS)

    profile_doc = doc.get("profile")
    if not isinstance(profile_doc, dict):
        raise ConfigError("missing required section 'profile'")
    _check_keys("profile", profile_doc, _PROFILE_KEYS)
    kwargs = {}
    for key, field_name in _PROFILE_KEYS.items():
        value = _require("profile", profile_doc, key)
        kwargs[field_name] = _number("profile", key, value,
                                     allow_inf=(key == "trickle_period_s"))
    try:
        profile = NodePowerProfile(**kwargs)
    except EhwsnError as exc:
        raise ConfigError(f"profile: {exc}") from exc

    topo_doc = doc.get("topology")
    if not isinstance(topo_doc, dict):
        raise ConfigError("missing required section 'topology'")
    _check_keys("topology", topo_doc, _TOPOLOGY_KEYS)
    try:
        topology = TopologyParams(
            children=int(_require("topology", topo_doc, "children")),
            interferers=int(_require("topology", topo_doc, "interferers")),
            interfering_packets=int(
                _require("topology", topo_doc, "interfering_packets")))
    except EhwsnError as exc:
        raise ConfigError(f"topology: {exc}") from exc

    source_spec = doc.get("source")
    if source_spec is not None:
        if not isinstance(source_spec, dict):
            raise ConfigError("'source' must be an object")
        _check_keys("source", source_spec, _SOURCE_KEYS)
        kind = source_spec.get("kind", "synthetic_day_night")
        if kind not in ("synthetic_day_night", "file"):
            raise ConfigError(f"unknown source kind {kind!r}")
        if kind == "file" and "path" not in source_spec:
            raise ConfigError("missing required field 'source.path'")
        has_values = "shading_values" in source_spec
        has_weights = "shading_weights" in source_spec
        if has_values != has_weights:
            raise ConfigError(
                "'source.shading_values' and 'source.shading_weights' "
                "must be given together")

    battery = None
    battery_doc = doc.get("battery")
    if battery_doc is not None:
        _check_keys("battery", battery_doc, _BATTERY_KEYS)
        try:
            battery = BatteryConfig(
                capacity=_number("battery", "capacity_mah",
                                 _require("battery", battery_doc, "capacity_mah")),
                threshold=_number("battery", "threshold_mah",
                                  _require("battery", battery_doc, "threshold_mah")),
                levels=int(battery_doc.get("levels", 200)))
        except EhwsnError as exc:
            raise ConfigError(f"battery: {exc}") from exc

    solver = None
    solver_doc = doc.get("solver")
    if solver_doc is not None:
        _check_keys("solver", solver_doc, _SOLVER_KEYS)
        if "outage_fraction" in solver_doc and "cost_bound_s" in solver_doc:
            raise ConfigError("'solver.outage_fraction' and "
                              "'solver.cost_bound_s' are mutually exclusive")
        if "outage_fraction" not in solver_doc and "cost_bound_s" not in solver_doc:
            raise ConfigError("set one of 'solver.outage_fraction' and "
                              "'solver.cost_bound_s'")
        try:
            solver = SolverConfig(
                discount=_number("solver", "discount",
                                 solver_doc.get("discount", 0.9)),
                outage_fraction=(_number("solver", "outage_fraction",
                                         solver_doc["outage_fraction"])
                                 if "outage_fraction" in solver_doc else None),
                cost_bound=(_number("solver", "cost_bound_s",
                                    solver_doc["cost_bound_s"])
                            if "cost_bound_s" in solver_doc else None),
                controls=int(solver_doc.get("controls", 64)),
                eps_cost=_number("solver", "eps_cost",
                                 solver_doc.get("eps_cost", 1e-4)),
                lambda_tol=_number("solver", "lambda_tol",
                                   solver_doc.get("lambda_tol", 1e-9)),
                eps_value=(None if solver_doc.get("eps_value") is None else
                           _number("solver", "eps_value",
                                   solver_doc["eps_value"])),
                max_value_iterations=int(
                    solver_doc.get("max_value_iterations", 5000)),
                delta_bins=int(solver_doc.get("delta_bins", 512)))
        except EhwsnError as exc:
            raise ConfigError(f"solver: {exc}") from exc

    sim_doc = doc.get("simulation", {})
    _check_keys("simulation", sim_doc, _SIMULATION_KEYS)
    simulation = SimulationSettings(
        epochs=int(sim_doc.get("epochs", 10000)),
        seed=int(sim_doc.get("seed", 1)),
        update_delay_s=_number("simulation", "update_delay_s",
                               sim_doc.get("update_delay_s", 0.0)))
    if simulation.epochs <= 0:
        raise ConfigError("'simulation.epochs' must be positive")

    p1_doc = doc.get("p1", {})
    _check_keys("p1", p1_doc, _P1_KEYS)
    p1 = P1Settings(
        with_collisions=bool(p1_doc.get("with_collisions", True)),
        reward_samples=int(p1_doc.get("reward_samples", 129)))

    return RunConfig(profile=profile, topology=topology,
                     source_spec=source_spec, battery=battery, solver=solver,
                     simulation=simulation, p1=p1, base_dir=path.parent)


def build_source(spec: dict, base_dir: Path):
    """Construct the energy source (or shading mixture) from its spec."""
    kind = spec.get("kind", "synthetic_day_night")
    if kind == "file":
        path = Path(spec["path"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise ConfigError(f"source model file not found: {path}")
        model = load_source_model(path)
    else:
        try:
            model = synthetic_day_night(
                day_mean_current=float(spec.get("day_mean_current_ma", 12.0)),
                day_current_spread=float(spec.get("day_current_spread_ma", 3.0)),
                day_hours=float(spec.get("day_hours", 12.0)),
                night_hours=float(spec.get("night_hours", 12.0)),
                duration_spread_hours=float(
                    spec.get("duration_spread_hours", 1.0)),
                night_current=float(spec.get("night_current_ma", 0.0)),
                bins=int(spec.get("bins", 128)))
        except EhwsnError as exc:
            raise ConfigError(f"source: {exc}") from exc
    if "shading_values" in spec:
        try:
            return ShadingMixture(model,
                                  values=tuple(spec["shading_values"]),
                                  weights=tuple(spec["shading_weights"]))
        except EhwsnError as exc:
            raise ConfigError(f"source shading: {exc}") from exc
    return model
