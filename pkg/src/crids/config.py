"""Study configuration: one YAML document merged over the packaged defaults."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .aggregate import Node, diagram_from_config
from .geo import BindingMode, FactorBinding, LayerKind
from .model import (
    AdaptationOption,
    CridsError,
    FactorId,
    FactorTransformSpec,
    OptionName,
    Scenario,
    TransformKind,
    default_options,
    factor,
)
from .plan import ExclusionRule


class ConfigError(CridsError):
    pass


def default_config() -> dict:
    text = resources.files("crids").joinpath("data/default_config.yaml").read_text(encoding="utf-8")
    return yaml.safe_load(text)


def merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path: "str | Path | None" = None, overrides: Optional[Mapping] = None) -> dict:
    cfg = default_config()
    if path is not None:
        try:
            doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, Mapping):
            raise ConfigError(f"config {path} must be a mapping at top level")
        base = Path(path).resolve().parent
        inputs = dict(doc.get("inputs") or {})
        for k, v in inputs.items():
            if v is not None and not Path(v).is_absolute():
                inputs[k] = str(base / v)
        if inputs:
            doc = dict(doc, inputs=inputs)
        cfg = merge(cfg, doc)
    if overrides:
        cfg = merge(cfg, overrides)
    return cfg


def config_hash(cfg: Mapping) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def parse_scenario_override(text: str) -> dict:
    """``"slr=1.837,ratio=0.31"`` -> scenario mapping."""
    keys = {
        "slr": "sea_level_rise",
        "sea_level_rise": "sea_level_rise",
        "ratio": "groundwater_response_ratio",
        "groundwater_response_ratio": "groundwater_response_ratio",
        "depth": "drainfield_depth",
        "drainfield_depth": "drainfield_depth",
        "name": "name",
    }
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        k, sep, v = part.partition("=")
        if not sep or k.strip() not in keys:
            raise ConfigError(f"bad scenario override {part!r}")
        key = keys[k.strip()]
        out[key] = v.strip() if key == "name" else float(v)
    return out


def scenario_from(cfg: Mapping) -> Scenario:
    sc = cfg.get("scenario") or {}
    try:
        return Scenario(
            name=str(sc.get("name", "current")),
            sea_level_rise=float(sc.get("sea_level_rise", 0.0)),
            groundwater_response_ratio=float(sc.get("groundwater_response_ratio", 0.345)),
            drainfield_depth=float(sc.get("drainfield_depth", 3.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def transform_specs(cfg: Mapping) -> dict[FactorId, FactorTransformSpec]:
    out = {}
    for name, doc in (cfg.get("transforms") or {}).items():
        try:
            f = factor(name)
            kind = TransformKind(doc["function"])
            f2 = doc.get("f2")
            if f2 is not None and f2 != "median":
                f2 = float(f2)
            out[f] = FactorTransformSpec(
                kind,
                f1=None if doc.get("f1") is None else float(doc["f1"]),
                f2=f2,
                x_min=None if doc.get("x_min") is None else float(doc["x_min"]),
                x_max=None if doc.get("x_max") is None else float(doc["x_max"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"transform for {name!r}: {exc}") from exc
    return out


def bindings_from(cfg: Mapping) -> list[FactorBinding]:
    out = []
    for name, doc in (cfg.get("bindings") or {}).items():
        if doc is None:
            continue
        try:
            out.append(FactorBinding(
                factor(name),
                str(doc["layer"]),
                BindingMode(doc.get("mode", "distance")),
                str(doc.get("attribute", "BFE")),
            ))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"binding for {name!r}: {exc}") from exc
    return out


def layer_kinds(cfg: Mapping) -> dict[str, LayerKind]:
    out = {}
    for name, doc in (cfg.get("layers") or {}).items():
        try:
            out[name] = LayerKind(doc["kind"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"layer {name!r}: {exc}") from exc
    return out


def diagram_from(cfg: Mapping) -> Optional[Node]:
    doc = cfg.get("diagram")
    if doc is None:
        return None
    try:
        return diagram_from_config(doc)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"diagram: {exc}") from exc


def options_from(cfg: Mapping, site_costs: Optional[Mapping[str, Mapping[str, float]]] = None) -> list[AdaptationOption]:
    """Option table with flat costs from config and per-site overrides.

    ``site_costs`` maps option name -> {site id -> cost}.
    """
    docs = cfg.get("options") or {}
    site_costs = site_costs or {}
    out = []
    for opt in default_options():
        doc = docs.get(opt.name.value) or {}
        try:
            flat = float(doc.get("cost", 0.0))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"cost for {opt.name.value}: {exc}") from exc
        if flat < 0:
            raise ConfigError(f"cost for {opt.name.value} must be nonnegative")
        out.append(AdaptationOption(
            opt.id, opt.name, opt.formula, opt.masked_factors, flat,
            dict(site_costs.get(opt.name.value, {})),
        ))
    return out


def exclusions_from(cfg: Mapping) -> list[ExclusionRule]:
    out = []
    for doc in cfg.get("exclusions") or []:
        try:
            out.append(ExclusionRule(OptionName(doc["option"]), str(doc["factor"]), str(doc["op"]), float(doc["value"])))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"exclusion rule {doc!r}: {exc}") from exc
    return out


@dataclass(frozen=True)
class PlannerSettings:
    mode: str = "threshold"
    threshold: float = 0.5
    threshold_column: Optional[str] = None
    budget: float = 0.0
    quantum: float = 1.0
    objective: str = "sum"
    max_budget: Optional[float] = None


def planner_from(cfg: Mapping) -> PlannerSettings:
    doc: dict[str, Any] = dict(cfg.get("planner") or {})
    mode = str(doc.get("mode", "threshold"))
    if mode not in ("threshold", "budget", "frontier"):
        raise ConfigError(f"unknown planner mode {mode!r}")
    objective = str(doc.get("objective", "sum"))
    if objective not in ("sum", "min"):
        raise ConfigError(f"unknown planner objective {objective!r}")
    return PlannerSettings(
        mode=mode,
        threshold=float(doc.get("threshold", 0.5)),
        threshold_column=doc.get("threshold_column"),
        budget=float(doc.get("budget", 0.0)),
        quantum=float(doc.get("quantum", 1.0)),
        objective=objective,
        max_budget=None if doc.get("max_budget") is None else float(doc["max_budget"]),
    )
