"""Run configuration: JSON loading, schema validation and engine objects."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .domain import Device, Infrastructure, Tier, build_application
from .optimizer import InvalidParams, Nsga2Params, parse_strategy
from .scenarios import (
    DEFAULT_RANGES,
    InfraConfig,
    InvalidConfig,
    SweepConfig,
    build_case_study,
    build_infrastructure,
)

DEFAULTS: dict[str, Any] = {
    "application": {"case_study": "mental_health", "instr": 2000.0, "data": 4.0},
    "infrastructure": {"generated": True},
    "optimizer": {},
    "selection": {"strategy": "low_latency"},
    "sweep": {},
    "scalability": {},
    "oracle": {},
}


class ConfigError(ValueError):
    pass


def schema() -> dict:
    text = resources.files("fogplace").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def load_config(path: str | Path | None) -> dict:
    """Parse and validate a config file; ``None`` yields the defaults."""
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return validate_config(raw)


def validate_config(raw: dict) -> dict:
    try:
        jsonschema.validate(raw, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from None
    cfg = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        cfg[key] = copy.deepcopy(value)
    return cfg


@dataclass(frozen=True)
class Scenario:
    """Engine objects resolved from a config plus a seed."""

    app: Any
    infra: Infrastructure
    params: Nsga2Params
    strategy: Any


def infra_config(section: dict, seed: int) -> InfraConfig:
    base = InfraConfig()
    counts = dict(base.counts)
    for name, n in section.get("counts", {}).items():
        counts[Tier(name)] = n
    ranges = dict(base.ranges)
    for name, fields in section.get("ranges", {}).items():
        tier = Tier(name)
        ranges[tier] = replace(ranges.get(tier, DEFAULT_RANGES[tier]), **{k: tuple(v) for k, v in fields.items()})
    lat = section.get("latency", {})
    return InfraConfig(
        counts=tuple(counts.items()),
        ranges=tuple(ranges.items()),
        iot_latency=lat.get("iot", base.iot_latency),
        me_wifi_latency=lat.get("me_wifi", base.me_wifi_latency),
        wifi_isp_latency=lat.get("wifi_isp", base.wifi_isp_latency),
        isp_cdc_latency=lat.get("isp_cdc", base.isp_cdc_latency),
        seed=section.get("seed", seed),
    )


def _matrix(rows) -> list[list[float]]:
    return [[math.inf if v is None else float(v) for v in row] for row in rows]


def build_infra(section: dict, seed: int) -> Infrastructure:
    if section.get("generated"):
        return build_infrastructure(infra_config(section, seed))
    devices = tuple(Device(id=j, **d) for j, d in enumerate(section["devices"]))
    return Infrastructure(
        devices=devices,
        bw=_matrix(section["bw"]),
        latency=_matrix(section["latency"]),
        source_device=section.get("source_device"),
        ingress_latency=section.get("ingress_latency", 0.0),
    )


def build_app(section: dict, seed: int):
    if "case_study" in section:
        return build_case_study(
            section["case_study"],
            instr=section.get("instr", 2000.0),
            data=section.get("data", 4.0),
            seed=section.get("seed", seed),
            components=section.get("components"),
            cpu_req=section.get("cpu_req"),
        )
    return build_application(section)


def nsga_params(section: dict, seed: int) -> Nsga2Params:
    return Nsga2Params(seed=seed, **section)


def resolve(cfg: dict, seed: int) -> Scenario:
    """Turn a validated config into engine objects, mapping failures to ConfigError."""
    try:
        params = nsga_params(cfg["optimizer"], seed)
        params.validate()
        sel = cfg["selection"]
        return Scenario(
            app=build_app(cfg["application"], seed),
            infra=build_infra(cfg["infrastructure"], seed),
            params=params,
            strategy=parse_strategy(sel.get("strategy", "low_latency"), sel.get("weights")),
        )
    except ValueError as exc:  # model, scenario and parameter errors alike
        raise ConfigError(str(exc)) from None


def sweep_config(cfg: dict, seed: int, repetitions: int) -> SweepConfig:
    s = cfg["sweep"]
    try:
        sc = SweepConfig(
            variable=s.get("variable", "data_size"),
            levels=tuple(s["levels"]) if "levels" in s else None,
            repetitions=s.get("repetitions", repetitions),
            methods=tuple(s.get("methods", ("MAPO", "FSPP", "EW"))),
            fixed_instr=s.get("fixed_instr", 2000.0),
            fixed_data=s.get("fixed_data", 4.0),
            seed=seed,
            nsga=nsga_params(cfg["optimizer"], seed),
        )
        sc.validate()
        sc.nsga.validate()
    except (InvalidConfig, InvalidParams) as exc:
        raise ConfigError(str(exc)) from None
    return sc
