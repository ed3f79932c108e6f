"""Planar geometry kernel and per-site feature extraction.

Coordinates are assumed projected (US survey feet); all distances are
Euclidean in that plane.
"""
from __future__ import annotations

import enum
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .model import CridsError, FactorId, Scenario, Site, factor

log = logging.getLogger(__name__)

Point = tuple[float, float]


class EmptyLayerError(CridsError):
    pass


class MissingLayerError(CridsError):
    pass


class LayerKind(enum.Enum):
    POINTS = "Points"
    POLYLINES = "Polylines"
    POLYGONS = "Polygons"


@dataclass(frozen=True)
class Polygon:
    outer: tuple
    holes: tuple = ()

    @property
    def rings(self):
        return (self.outer,) + tuple(self.holes)


@dataclass(frozen=True)
class FeatureLayer:
    """Named collection of one geometry kind.

    Points are ``(x, y)`` pairs, polylines are vertex sequences and polygons
    are :class:`Polygon` instances with closed rings.
    """

    name: str
    kind: LayerKind
    geometries: tuple
    attributes: tuple = ()

    def attribute(self, i: int, key: str, default=None):
        if i < len(self.attributes):
            return self.attributes[i].get(key, default)
        return default

    def __len__(self) -> int:
        return len(self.geometries)


@dataclass(frozen=True)
class ElevationSample:
    site_id: str
    ground_elevation: float
    groundwater_elevation: float

    def __post_init__(self):
        if not (math.isfinite(self.ground_elevation) and math.isfinite(self.groundwater_elevation)):
            raise ValueError(f"non-finite elevation for site {self.site_id}")


# -- primitives ---------------------------------------------------------------


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    px, py = p
    ax, ay = a
    bx, by = b
    dx = bx - ax
    dy = by - ay
    ll = dx * dx + dy * dy
    if ll == 0.0:
        ex = px - ax
        ey = py - ay
        return math.sqrt(ex * ex + ey * ey)
    t = ((px - ax) * dx + (py - ay) * dy) / ll
    t = max(0.0, min(1.0, t))
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    return math.sqrt(ex * ex + ey * ey)


def _segment_distances(px, py, ax, ay, bx, by):
    """Vectorized twin of :func:`point_segment_distance` (same operation order)."""
    dx = bx - ax
    dy = by - ay
    ll = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((px - ax) * dx + (py - ay) * dy) / ll
    t = np.where(ll == 0.0, 0.0, t)
    t = np.maximum(0.0, np.minimum(1.0, t))
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    return np.sqrt(ex * ex + ey * ey)


def _on_segment(p: Point, a: Point, b: Point) -> bool:
    px, py = p
    ax, ay = a
    bx, by = b
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if cross != 0:
        return False
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def _ring_edges(ring):
    n = len(ring)
    for i in range(n - 1):
        yield ring[i], ring[i + 1]
    if n and tuple(ring[0]) != tuple(ring[-1]):
        yield ring[-1], ring[0]


def _ring_contains(ring, p: Point) -> bool:
    px, py = p
    inside = False
    for (ax, ay), (bx, by) in _ring_edges(ring):
        if (ay > py) != (by > py):
            x_cross = ax + (py - ay) * (bx - ax) / (by - ay)
            if px < x_cross:
                inside = not inside
    return inside


def point_in_polygon(p: Point, polygon) -> bool:
    """Even-odd ray casting; points on any ring boundary count as inside.

    ``polygon`` is a :class:`Polygon` or a bare outer ring.
    """
    if not isinstance(polygon, Polygon):
        polygon = Polygon(tuple(polygon))
    for ring in polygon.rings:
        for a, b in _ring_edges(ring):
            if _on_segment(p, a, b):
                return True
    if not _ring_contains(polygon.outer, p):
        return False
    return not any(_ring_contains(h, p) for h in polygon.holes)


def vertical_separation(sample: ElevationSample, scenario: Scenario):
    """Drainfield bottom to wet-season groundwater, after scenario groundwater rise.

    Negative values mean the drainfield sits below the water table.
    """
    rise = scenario.sea_level_rise * scenario.groundwater_response_ratio
    return sample.ground_elevation - scenario.drainfield_depth - (sample.groundwater_elevation + rise)


# -- grid index -----------------------------------------------------------------


def layer_segments(layer: FeatureLayer):
    """Flatten a layer into segment arrays plus the owning feature ordinal.

    Points become zero-length segments; zero-length polyline pieces are
    dropped unless the whole polyline collapses to one vertex.
    """
    ax, ay, bx, by, owner = [], [], [], [], []

    def add(a, b, i):
        ax.append(float(a[0]))
        ay.append(float(a[1]))
        bx.append(float(b[0]))
        by.append(float(b[1]))
        owner.append(i)

    for i, geom in enumerate(layer.geometries):
        if layer.kind is LayerKind.POINTS:
            add(geom, geom, i)
            continue
        if layer.kind is LayerKind.POLYLINES:
            pieces = [(a, b) for a, b in zip(geom[:-1], geom[1:]) if tuple(a) != tuple(b)]
            if not pieces and len(geom):
                add(geom[0], geom[0], i)
        else:
            pieces = [(a, b) for ring in geom.rings for a, b in _ring_edges(ring) if tuple(a) != tuple(b)]
        for a, b in pieces:
            add(a, b, i)
    return (
        np.array(ax, dtype=float),
        np.array(ay, dtype=float),
        np.array(bx, dtype=float),
        np.array(by, dtype=float),
        np.array(owner, dtype=np.int64),
    )


@dataclass
class GridIndex:
    cell_size: float
    bounds: tuple  # (xmin, ymin, xmax, ymax)
    cells: dict
    ax: np.ndarray = field(repr=False)
    ay: np.ndarray = field(repr=False)
    bx: np.ndarray = field(repr=False)
    by: np.ndarray = field(repr=False)
    owner: np.ndarray = field(repr=False)
    layer: FeatureLayer = field(repr=False)
    polygon_boxes: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        xmin, ymin, xmax, ymax = self.bounds
        nx = int(math.floor((xmax - xmin) / self.cell_size)) + 1
        ny = int(math.floor((ymax - ymin) / self.cell_size)) + 1
        return nx, ny

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (
            int(math.floor((x - self.bounds[0]) / self.cell_size)),
            int(math.floor((y - self.bounds[1]) / self.cell_size)),
        )


def build_grid_index(layer: FeatureLayer, cell_size: float = 500.0) -> GridIndex:
    if not cell_size > 0:
        raise ValueError("cell_size must be positive")
    if len(layer) == 0:
        raise EmptyLayerError(f"layer {layer.name!r} has no features")
    ax, ay, bx, by, owner = layer_segments(layer)
    xmin = float(min(ax.min(), bx.min()))
    ymin = float(min(ay.min(), by.min()))
    xmax = float(max(ax.max(), bx.max()))
    ymax = float(max(ay.max(), by.max()))
    cells = defaultdict(list)
    lo_x = np.floor((np.minimum(ax, bx) - xmin) / cell_size).astype(np.int64)
    hi_x = np.floor((np.maximum(ax, bx) - xmin) / cell_size).astype(np.int64)
    lo_y = np.floor((np.minimum(ay, by) - ymin) / cell_size).astype(np.int64)
    hi_y = np.floor((np.maximum(ay, by) - ymin) / cell_size).astype(np.int64)
    for s in range(len(ax)):
        for ix in range(lo_x[s], hi_x[s] + 1):
            for iy in range(lo_y[s], hi_y[s] + 1):
                cells[(ix, iy)].append(s)
    cells = {k: np.array(v, dtype=np.int64) for k, v in cells.items()}
    boxes = None
    if layer.kind is LayerKind.POLYGONS:
        boxes = np.array(
            [
                (
                    min(v[0] for v in g.outer),
                    min(v[1] for v in g.outer),
                    max(v[0] for v in g.outer),
                    max(v[1] for v in g.outer),
                )
                for g in layer.geometries
            ],
            dtype=float,
        )
    return GridIndex(cell_size, (xmin, ymin, xmax, ymax), cells, ax, ay, bx, by, owner, layer, boxes)


def containing_polygons(p: Point, index: GridIndex) -> list[int]:
    if index.polygon_boxes is None:
        return []
    x, y = p
    b = index.polygon_boxes
    hits = np.nonzero((b[:, 0] <= x) & (x <= b[:, 2]) & (b[:, 1] <= y) & (y <= b[:, 3]))[0]
    return [int(i) for i in hits if point_in_polygon(p, index.layer.geometries[i])]


def nearest_feature_distance(p: Point, layer: FeatureLayer, index: Optional[GridIndex] = None):
    """Distance from ``p`` to the closest feature of ``layer`` and that feature's ordinal.

    Polygons count as areas: a point inside one is at distance 0. Equal
    distances resolve to the lowest ordinal.
    """
    if len(layer) == 0:
        raise EmptyLayerError(f"layer {layer.name!r} has no features")
    if index is None:
        index = build_grid_index(layer)
    if layer.kind is LayerKind.POLYGONS:
        inside = containing_polygons(p, index)
        if inside:
            return 0.0, min(inside)

    px, py = float(p[0]), float(p[1])
    cs = index.cell_size
    x0, y0 = index.bounds[0], index.bounds[1]
    cx, cy = index.cell_of(px, py)
    nx, ny = index.shape
    best_d = math.inf
    best_f = -1
    # rings closer than the grid rectangle hold no cells
    r = max(0, -cx, -cy, cx - (nx - 1), cy - (ny - 1))
    slack = 1e-9 * (abs(px) + abs(py) + abs(x0) + abs(y0) + cs)
    while True:
        ids = _ring_members(index.cells, cx, cy, r)
        if ids is not None:
            d = _segment_distances(px, py, index.ax[ids], index.ay[ids], index.bx[ids], index.by[ids])
            dmin = d.min()
            if dmin <= best_d:
                f = int(index.owner[ids[d == dmin]].min())
                if dmin < best_d or f < best_f:
                    best_d, best_f = float(dmin), f
        # clearance from p to the outside of the searched (2r+1)^2 block
        clear = min(
            px - (x0 + (cx - r) * cs),
            (x0 + (cx + r + 1) * cs) - px,
            py - (y0 + (cy - r) * cs),
            (y0 + (cy + r + 1) * cs) - py,
        )
        # strict with slack: cell assignment and block edges round differently,
        # and a feature exactly at the clearance could still win the ordinal tie
        covered = cx - r <= 0 and cy - r <= 0 and cx + r >= nx - 1 and cy + r >= ny - 1
        if best_d < clear - slack or covered:
            return best_d, best_f
        r += 1


def _ring_members(cells: dict, cx: int, cy: int, r: int):
    if r == 0:
        keys = [(cx, cy)]
    else:
        keys = [(cx + i, cy - r) for i in range(-r, r + 1)]
        keys += [(cx + i, cy + r) for i in range(-r, r + 1)]
        keys += [(cx - r, cy + j) for j in range(-r + 1, r)]
        keys += [(cx + r, cy + j) for j in range(-r + 1, r)]
    found = [cells[k] for k in keys if k in cells]
    if not found:
        return None
    return np.unique(np.concatenate(found))


def brute_force_nearest(p: Point, layer: FeatureLayer):
    """Scan every segment of ``layer``; reference for the grid search."""
    ax, ay, bx, by, owner = layer_segments(layer)
    if layer.kind is LayerKind.POLYGONS:
        inside = [i for i, g in enumerate(layer.geometries) if point_in_polygon(p, g)]
        if inside:
            return 0.0, min(inside)
    best_d, best_f = math.inf, -1
    for s in range(len(ax)):
        d = point_segment_distance(p, (ax[s], ay[s]), (bx[s], by[s]))
        if d < best_d or (d == best_d and owner[s] < best_f):
            best_d, best_f = d, int(owner[s])
    return best_d, best_f


# -- feature extraction ---------------------------------------------------------


class BindingMode(enum.Enum):
    DISTANCE = "distance"
    MEMBERSHIP = "membership"
    FLOOD_ELEVATION = "flood_elevation"


@dataclass(frozen=True)
class FactorBinding:
    factor: FactorId
    layer: str
    mode: BindingMode = BindingMode.DISTANCE
    attribute: str = "BFE"


DEFAULT_BINDINGS = (
    FactorBinding(factor("R2"), "flood_zones", BindingMode.FLOOD_ELEVATION, "BFE"),
    FactorBinding(factor("A1"), "wetlands"),
    FactorBinding(factor("A2"), "wellfield_zones", BindingMode.MEMBERSHIP),
    FactorBinding(factor("A3"), "wellheads"),
    FactorBinding(factor("A6"), "canals"),
    FactorBinding(factor("A7"), "drainage"),
    FactorBinding(factor("Re1"), "sewer"),
    FactorBinding(factor("Re3"), "overflows"),
    FactorBinding(factor("Re4"), "moratorium_basins", BindingMode.MEMBERSHIP),
)


def extract_features(
    sites: Sequence[Site],
    layers: Mapping[str, FeatureLayer],
    samples: Mapping[str, ElevationSample],
    scenario: Scenario,
    bindings: Sequence[FactorBinding] = DEFAULT_BINDINGS,
    cell_size: float = 500.0,
) -> list[Site]:
    """Fill each site's raw map from the layers and elevation samples.

    Values already present on a site (age, income, capacity ratio, ...) are
    kept unless a binding overwrites them. Bindings to empty layers leave the
    factor unset; a binding to a layer that was never loaded is an error.
    """
    for b in bindings:
        if b.layer not in layers:
            raise MissingLayerError(f"factor {b.factor.code} is bound to missing layer {b.layer!r}")
    indexes = {}
    for name in {b.layer for b in bindings}:
        if len(layers[name]):
            indexes[name] = build_grid_index(layers[name], cell_size)

    r3 = factor("R3")
    out = []
    no_sample, uncovered = [], []
    for site in sites:
        raw = dict(site.raw)
        covered = False
        for b in bindings:
            idx = indexes.get(b.layer)
            if idx is None:
                continue
            layer = layers[b.layer]
            if b.mode is BindingMode.DISTANCE:
                raw[b.factor], _ = nearest_feature_distance(site.point, layer, idx)
                covered = True
                continue
            hits = containing_polygons(site.point, idx)
            if b.mode is BindingMode.MEMBERSHIP:
                raw[b.factor] = 1.0 if hits else 0.0
            else:
                raw[b.factor] = max((float(layer.attribute(i, b.attribute, 0.0)) for i in hits), default=0.0)
            covered = covered or bool(hits)
        sample = samples.get(site.id)
        if sample is not None:
            raw[r3] = vertical_separation(sample, scenario)
        elif r3 not in raw:
            no_sample.append(site.id)
        if bindings and not covered:
            uncovered.append(site.id)
        out.append(Site(site.id, site.point, raw, dict(site.metadata)))
    if samples and no_sample:
        log.warning("%d site(s) have no elevation sample, e.g. %s", len(no_sample), no_sample[0])
    if uncovered:
        log.warning("%d site(s) lie outside every bound layer, e.g. %s", len(uncovered), uncovered[0])
    return out


def raw_matrix(sites: Sequence[Site], factors: Sequence[FactorId]) -> np.ndarray:
    """Dense n x m matrix of raw values with NaN for unmeasured factors."""
    X = np.full((len(sites), len(factors)), np.nan)
    for i, s in enumerate(sites):
        for j, f in enumerate(factors):
            if f in s.raw:
                X[i, j] = s.raw[f]
    return X
