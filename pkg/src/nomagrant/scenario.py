"""Scenario files: YAML parsing with full validation, sweep expansion, execution.

A scenario mirrors one simulation config plus sweep axes (scheme and density
may be lists) and a replication count.  Replicate r of every sweep cell runs
with seed = base seed + r, so schemes are compared at matched seeds.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from .mac import ConfigError, EventLog, MacEngine, SimConfig, TrafficSpec
from .metrics import Metrics, result_row

_TOP_KEYS = {"scheme", "seed", "replications", "horizon",
             "geometry", "channel", "resources", "traffic", "mac"}
_SECTION_KEYS = {
    "geometry": {"density", "radius", "count"},
    "channel": {"wavelength", "antenna_gain_product", "pathloss_coefficient",
                "composition", "noise_power", "fading_variance", "coherence_slots",
                "subcarriers"},
    "resources": {"rb_total", "rb_contention", "max_cluster_size", "power_min_dbm",
                  "power_max_dbm", "power_levels", "sinr_threshold"},
    "traffic": {"alpha", "beta", "alpha_alarm", "beta_alarm", "alpha_regular",
                "beta_regular", "queue_capacity", "activity_model", "training_slots"},
    "mac": {"frame_length", "backoff_cap", "hold_off_slots", "activity_threshold",
            "requeue_failures", "slot_duration"},
}

_PATHLOSS_NAMES = {"4pi": 4.0 * math.pi, "5pi": 5.0 * math.pi}


@dataclass(frozen=True)
class RunSpec:
    """One resolved run of a sweep."""

    run_index: int
    scheme: str
    density: float
    replicate: int
    seed: int
    config: SimConfig

    @property
    def run_id(self) -> str:
        return f"run{self.run_index:03d}_{self.scheme}"


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: sweep axes plus the shared config template."""

    schemes: tuple[str, ...]
    densities: tuple[float, ...]
    replications: int
    base_seed: int
    template: SimConfig

    def expand(self) -> list[RunSpec]:
        """Cartesian sweep; replicate r of every cell uses seed base_seed + r."""
        specs = []
        cells = itertools.product(self.schemes, self.densities,
                                  range(self.replications))
        for index, (scheme, density, rep) in enumerate(cells):
            config = replace(self.template, scheme=scheme, density=density,
                             seed=self.base_seed + rep)
            specs.append(RunSpec(index, scheme, density, rep,
                                 self.base_seed + rep, config))
        return specs


def _as_list(value) -> list:
    return list(value) if isinstance(value, list) else [value]


def _check_keys(section: str, mapping: dict, allowed: set, errors: list[str]) -> None:
    for key in mapping:
        if key not in allowed:
            errors.append(f"unknown key {section}.{key}" if section else
                          f"unknown key {key}")


def _coerce_pathloss(value, errors: list[str]) -> float:
    if isinstance(value, str):
        if value in _PATHLOSS_NAMES:
            return _PATHLOSS_NAMES[value]
        errors.append(f"channel.pathloss_coefficient: unknown name {value!r} "
                      f"(use 4pi, 5pi, or a number)")
        return 4.0 * math.pi
    return float(value)


def _coerce_traffic(section: dict, errors: list[str]) -> dict:
    out = {}
    for name in ("alpha", "beta", "alpha_alarm", "beta_alarm",
                 "alpha_regular", "beta_regular"):
        if name not in section:
            continue
        value = section[name]
        if isinstance(value, list):
            if len(value) != 2:
                errors.append(f"traffic.{name}: a range needs exactly [low, high]")
                continue
            out[name] = (float(value[0]), float(value[1]))
        else:
            out[name] = float(value)
    return out


def load_scenario(raw: dict) -> ScenarioConfig:
    """Validate a parsed YAML document, reporting every problem at once."""
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["scenario file must contain a mapping at the top level"])
    _check_keys("", raw, _TOP_KEYS, errors)
    sections = {}
    for name, allowed in _SECTION_KEYS.items():
        section = raw.get(name, {})
        if section is None:
            section = {}
        if not isinstance(section, dict):
            errors.append(f"section {name} must be a mapping")
            section = {}
        _check_keys(name, section, allowed, errors)
        sections[name] = section

    schemes = tuple(str(s) for s in _as_list(raw.get("scheme", "fast")))
    densities = tuple(float(d) for d in _as_list(sections["geometry"].get("density", 1e-4)))
    replications = int(raw.get("replications", 1))
    base_seed = int(raw.get("seed", 0))
    if not schemes:
        errors.append("scheme list must not be empty")
    if not densities:
        errors.append("geometry.density list must not be empty")
    if replications < 1:
        errors.append("replications must be at least 1")

    geometry = sections["geometry"]
    channel = sections["channel"]
    resources = sections["resources"]
    traffic_raw = sections["traffic"]
    mac = sections["mac"]

    traffic_kwargs = _coerce_traffic(traffic_raw, errors)
    kwargs = {}
    if "radius" in geometry:
        kwargs["radius"] = float(geometry["radius"])
    if geometry.get("count") is not None:
        kwargs["mtd_count"] = int(geometry["count"])
    for key, target in (("wavelength", "wavelength"),
                        ("antenna_gain_product", "antenna_gain_product"),
                        ("noise_power", "noise_power"),
                        ("fading_variance", "fading_variance")):
        if key in channel:
            kwargs[target] = float(channel[key])
    if "pathloss_coefficient" in channel:
        kwargs["pathloss_coefficient"] = _coerce_pathloss(
            channel["pathloss_coefficient"], errors)
    if "composition" in channel:
        kwargs["channel_composition"] = str(channel["composition"])
    if "coherence_slots" in channel:
        value = channel["coherence_slots"]
        kwargs["coherence_slots"] = None if value is None else int(value)
    if "subcarriers" in channel:
        kwargs["subcarriers"] = int(channel["subcarriers"])
    for key, target in (("rb_total", "w_total"), ("rb_contention", "w_contention"),
                        ("max_cluster_size", "c_max"), ("power_levels", "power_levels")):
        if key in resources:
            kwargs[target] = int(resources[key])
    for key, target in (("power_min_dbm", "power_min_dbm"),
                        ("power_max_dbm", "power_max_dbm"),
                        ("sinr_threshold", "sinr_threshold")):
        if key in resources:
            kwargs[target] = float(resources[key])
    for key, target, conv in (("queue_capacity", "queue_capacity", int),
                              ("activity_model", "activity_model", str),
                              ("training_slots", "training_slots", int)):
        if key in traffic_raw:
            kwargs[target] = conv(traffic_raw[key])
    for key, target, conv in (("frame_length", "frame_length", int),
                              ("backoff_cap", "backoff_cap", int),
                              ("hold_off_slots", "hold_off_slots", int),
                              ("activity_threshold", "activity_threshold", float),
                              ("slot_duration", "slot_duration", float)):
        if key in mac:
            kwargs[target] = conv(mac[key])
    if "requeue_failures" in mac:
        value = mac["requeue_failures"]
        kwargs["requeue_failures"] = None if value is None else int(value)
    if "horizon" in raw:
        kwargs["horizon"] = int(raw["horizon"])

    template = SimConfig(traffic=TrafficSpec(**traffic_kwargs), **kwargs)
    scenario = ScenarioConfig(schemes, densities, replications, base_seed, template)

    # validate every expanded cell; report each distinct violation once
    if not errors:
        seen = set()
        for spec in scenario.expand():
            for problem in spec.config.validate():
                if problem not in seen:
                    seen.add(problem)
                    errors.append(problem)
    if errors:
        raise ConfigError(errors)
    return scenario


def parse_config(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file; raises on missing file or any violation."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"not valid YAML: {exc}"]) from exc
    if raw is None:
        raw = {}
    return load_scenario(raw)


@dataclass
class RunResult:
    spec: RunSpec
    deployed_count: int
    metrics: Metrics
    log: EventLog | None = None

    def row(self) -> dict:
        return result_row(self.spec.scheme, self.spec.density, self.spec.seed,
                          self.spec.replicate, self.deployed_count,
                          self.spec.config.horizon, self.metrics)


@dataclass
class RunFailure:
    spec: RunSpec
    message: str


def _execute(spec: RunSpec, check_invariants: bool,
             collect_log: bool) -> RunResult:
    engine = MacEngine(spec.config)
    metrics, log = engine.run(check_invariants=check_invariants)
    return RunResult(spec, engine.n_mtds, metrics, log if collect_log else None)


def run_sweep(scenario: ScenarioConfig, jobs: int = 1, check_invariants: bool = False,
              collect_logs: bool = False) -> tuple[list[RunResult], list[RunFailure]]:
    """Execute every resolved run; sibling runs survive individual failures.

    Results come back ordered by run index regardless of ``jobs``.
    """
    specs = scenario.expand()
    results: list[RunResult] = []
    failures: list[RunFailure] = []
    if jobs <= 1:
        for spec in specs:
            try:
                results.append(_execute(spec, check_invariants, collect_logs))
            except Exception as exc:  # noqa: BLE001 - per-run isolation is the point
                failures.append(RunFailure(spec, f"{type(exc).__name__}: {exc}"))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [(spec, pool.submit(_execute, spec, check_invariants,
                                          collect_logs))
                       for spec in specs]
            for spec, future in futures:
                try:
                    results.append(future.result())
                except Exception as exc:  # noqa: BLE001
                    failures.append(RunFailure(spec, f"{type(exc).__name__}: {exc}"))
    return results, failures
