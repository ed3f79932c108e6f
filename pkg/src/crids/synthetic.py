"""Synthetic study generator.

Builds a county-like set of sites, GIS layers and elevation samples whose
assessed indices fall below 0.1 and 0.5 in prescribed shares. Each site's
vertical separation is solved so that the default configuration maps it to
a target index; every other input is drawn at random.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import config as cfgmod
from .aggregate import aggregate
from .fuzzify import TransformTable, transform_site
from .geo import ElevationSample, FeatureLayer, LayerKind, Polygon, extract_features
from .io import write_elevations, write_geojson, write_sites
from .model import R3, Site, factor

EXTENT = 60_000.0  # ft

# share of the 10**4 features given to each layer
LAYER_MIX = {
    "wellheads": 0.30,
    "overflows": 0.10,
    "sewer": 0.15,
    "canals": 0.10,
    "drainage": 0.20,
    "wetlands": 0.08,
    "flood_zones": 0.03,
    "wellfield_zones": 0.02,
    "moratorium_basins": 0.02,
}


def _polyline(rng, n_vertices: int, step: float):
    x, y = rng.uniform(0, EXTENT, 2)
    heading = rng.uniform(0, 2 * math.pi)
    pts = [(float(x), float(y))]
    for _ in range(n_vertices - 1):
        heading += rng.normal(0, 0.4)
        x += step * math.cos(heading)
        y += step * math.sin(heading)
        pts.append((float(x), float(y)))
    return tuple(pts)


def _blob(rng, cx: float, cy: float, radius: float, n: int = 8) -> Polygon:
    angles = np.sort(rng.uniform(0, 2 * math.pi, n))
    radii = radius * rng.uniform(0.6, 1.0, n)
    ring = [(float(cx + r * math.cos(a)), float(cy + r * math.sin(a))) for a, r in zip(angles, radii)]
    ring.append(ring[0])
    return Polygon(tuple(ring))


def make_layers(rng, n_features: int = 10_000, site_points=None) -> dict[str, FeatureLayer]:
    counts = {k: int(round(v * n_features)) for k, v in LAYER_MIX.items()}
    counts["wellheads"] += n_features - sum(counts.values())
    layers = {}
    pts = rng.uniform(0, EXTENT, (counts["wellheads"], 2))
    layers["wellheads"] = FeatureLayer("wellheads", LayerKind.POINTS, tuple(map(tuple, pts.tolist())))
    pts = rng.uniform(0, EXTENT, (counts["overflows"], 2))
    layers["overflows"] = FeatureLayer("overflows", LayerKind.POINTS, tuple(map(tuple, pts.tolist())))
    for name, step in (("sewer", 300.0), ("canals", 800.0), ("drainage", 250.0)):
        lines = tuple(_polyline(rng, int(rng.integers(3, 7)), step) for _ in range(counts[name]))
        layers[name] = FeatureLayer(name, LayerKind.POLYLINES, lines)
    wet = tuple(_blob(rng, *rng.uniform(0, EXTENT, 2), rng.uniform(100, 600)) for _ in range(counts["wetlands"]))
    layers["wetlands"] = FeatureLayer("wetlands", LayerKind.POLYGONS, wet)
    flood = tuple(_blob(rng, *rng.uniform(0, EXTENT, 2), rng.uniform(150, 700)) for _ in range(counts["flood_zones"]))
    bfe = tuple({"BFE": float(rng.integers(6, 11)), "ZONE": "AE"} for _ in flood)
    layers["flood_zones"] = FeatureLayer("flood_zones", LayerKind.POLYGONS, flood, bfe)
    for name in ("wellfield_zones", "moratorium_basins"):
        polys = tuple(_blob(rng, *rng.uniform(0, EXTENT, 2), rng.uniform(200, 900)) for _ in range(counts[name]))
        layers[name] = FeatureLayer(name, LayerKind.POLYGONS, polys)
    return layers


def _targets(rng, n: int, below_01: float, below_05: float) -> np.ndarray:
    n1 = int(round(n * below_01))
    n5 = int(round(n * below_05))
    low = rng.uniform(0.01, 0.09, n1)
    mid = rng.uniform(0.12, 0.48, n5 - n1)
    high = rng.uniform(0.52, 0.98, n - n5)
    return np.concatenate([low, mid, high])


def _index_at(s: float, scores: dict) -> float:
    trial = dict(scores)
    trial[R3] = s
    return aggregate(trial).index


def _solve_vsd_score(target: float, scores: dict) -> float:
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _index_at(mid, scores) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def make_study(
    out_dir: "str | Path",
    n_sites: int = 1000,
    n_features: int = 10_000,
    seed: int = 0,
    below_01: float = 0.08,
    below_05: float = 0.32,
    config_overrides: Optional[dict] = None,
) -> dict:
    """Write sites.csv, elevations.csv, layers/*.geojson and config.yaml.

    Returns a dict of the written paths.
    """
    out = Path(out_dir)
    (out / "layers").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    cfg = cfgmod.load_config(overrides=config_overrides)
    scenario = cfgmod.scenario_from(cfg)
    layers = make_layers(rng, n_features)

    xy = rng.uniform(0, EXTENT, (n_sites, 2))
    width = len(str(n_sites))
    sites = []
    for i in range(n_sites):
        raw = {
            factor("capacity_redundancy"): float(rng.uniform(0.8, 1.0)),
            factor("system_age"): float(rng.uniform(0.0, 12.0)),
            factor("median_household_income"): float(rng.uniform(25_000, 160_000)),
            factor("land_use"): float(rng.uniform(0.85, 1.0)),
        }
        sites.append(Site(f"SYN{i:0{width}d}", (float(xy[i, 0]), float(xy[i, 1])), raw, {"source": "synthetic"}))

    bindings = cfgmod.bindings_from(cfg)
    cell = float(cfg.get("grid_cell_size", 500.0))
    extracted = extract_features(sites, layers, {}, scenario, bindings, cell)
    table = TransformTable.resolve(cfgmod.transform_specs(cfg), extracted)

    # ceiling index per site (perfect separation); low targets go to low ceilings
    base_scores = [transform_site(s, table).scores for s in extracted]
    ceilings = np.array([_index_at(1.0, sc) for sc in base_scores])
    targets = np.sort(_targets(rng, n_sites, below_01, below_05))
    order = np.argsort(ceilings, kind="stable")
    assigned = np.empty(n_sites)
    assigned[order] = targets
    if (assigned > ceilings - 1e-3).any():
        raise RuntimeError("synthetic layers leave some sites unable to reach their target index")

    vsd_spec = table.specs[R3]
    f1, f2 = vsd_spec.f1, float(table.resolved_references[R3])
    samples = []
    for s, sc, t in zip(sites, base_scores, assigned):
        m = _solve_vsd_score(float(t), sc)
        vsd = f2 * (m / (1.0 - m)) ** (1.0 / f1)
        gw = float(rng.uniform(0.5, 4.0))
        ground = gw + scenario.groundwater_rise + scenario.drainfield_depth + vsd
        samples.append(ElevationSample(s.id, ground, gw))

    paths = {"sites": out / "sites.csv", "elevations": out / "elevations.csv", "config": out / "config.yaml"}
    write_sites(paths["sites"], sites)
    write_elevations(paths["elevations"], samples)
    for name, layer in layers.items():
        doc = (cfg.get("layers") or {}).get(name) or {"path": f"{name}.geojson"}
        write_geojson(out / "layers" / doc["path"], layer)
    study = {"inputs": {"sites": "sites.csv", "elevations": "elevations.csv"}}
    study.update(config_overrides or {})
    paths["config"].write_text(yaml.safe_dump(study, sort_keys=True), encoding="utf-8")
    paths["layers"] = out / "layers"
    return paths
