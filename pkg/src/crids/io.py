"""Readers and writers for sites, elevations, costs and GeoJSON layers."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .geo import ElevationSample, FeatureLayer, LayerKind, Polygon
from .model import CridsError, Site, factor, registry


class InputError(CridsError):
    pass


class DuplicateSiteError(InputError):
    pass


class GeometryKindError(InputError):
    pass


_TRUE = {"true", "yes", "y", "t"}
_FALSE = {"false", "no", "n", "f"}


def _number(text: str) -> float:
    low = text.strip().lower()
    if low in _TRUE:
        return 1.0
    if low in _FALSE:
        return 0.0
    return float(text)


def load_sites(path: "str | Path", column_map: Optional[Mapping[str, str]] = None) -> list[Site]:
    """Read a comma-separated site table.

    Required columns are ``id``, ``x`` and ``y`` (after applying
    ``column_map``). Columns naming a factor become raw values, blank cells
    leave the factor unmeasured, and any other column is kept as metadata.
    """
    column_map = dict(column_map or {})
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open sites file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: missing header row") from None
        names = [column_map.get(h.strip(), h.strip()) for h in header]
        for required in ("id", "x", "y"):
            if required not in names:
                raise InputError(f"{path}: required column {required!r} missing")
        roles = []
        for n in names:
            if n in ("id", "x", "y"):
                roles.append(n)
                continue
            try:
                roles.append(factor(n))
            except KeyError:
                roles.append(None)
        sites, seen = [], {}
        for row in reader:
            line = reader.line_num
            if not any(c.strip() for c in row):
                continue
            if len(row) != len(names):
                raise InputError(f"{path}:{line}: expected {len(names)} fields, got {len(row)}")
            raw, meta = {}, {}
            try:
                for n, role, cell in zip(names, roles, row):
                    if role in ("id", "x", "y"):
                        continue
                    if role is None:
                        meta[n] = cell
                    elif cell.strip():
                        raw[role] = _number(cell)
                sid = row[names.index("id")].strip()
                x = float(row[names.index("x")])
                y = float(row[names.index("y")])
            except ValueError as exc:
                raise InputError(f"{path}:{line}: {exc}") from None
            if not sid:
                raise InputError(f"{path}:{line}: empty site id")
            if sid in seen:
                raise DuplicateSiteError(f"{path}:{line}: duplicate site id {sid!r} (first on line {seen[sid]})")
            seen[sid] = line
            sites.append(Site(sid, (x, y), raw, meta))
    return sites


def write_sites(path: "str | Path", sites: Sequence[Site]) -> None:
    """Write sites with full float precision so that reading back is lossless."""
    factors = [f for f in registry() if any(f in s.raw for s in sites)]
    meta_keys = sorted({k for s in sites for k in s.metadata})
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y"] + [f.name for f in factors] + meta_keys)
        for s in sites:
            w.writerow(
                [s.id, repr(float(s.point[0])), repr(float(s.point[1]))]
                + [repr(float(s.raw[f])) if f in s.raw else "" for f in factors]
                + [s.metadata.get(k, "") for k in meta_keys]
            )


def _read_table(path: "str | Path", required: Sequence[str]) -> Iterable[tuple[int, dict]]:
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise InputError(f"{path}: missing columns {missing}")
        for row in reader:
            yield reader.line_num, row


def load_elevations(path: "str | Path") -> dict[str, ElevationSample]:
    out = {}
    for line, row in _read_table(path, ("site_id", "ground_elevation", "groundwater_elevation")):
        try:
            s = ElevationSample(
                row["site_id"].strip(),
                float(row["ground_elevation"]),
                float(row["groundwater_elevation"]),
            )
        except ValueError as exc:
            raise InputError(f"{path}:{line}: {exc}") from None
        out[s.site_id] = s
    return out


def write_elevations(path: "str | Path", samples: Iterable[ElevationSample]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["site_id", "ground_elevation", "groundwater_elevation"])
        for s in samples:
            w.writerow([s.site_id, repr(float(s.ground_elevation)), repr(float(s.groundwater_elevation))])


def load_costs(path: "str | Path") -> dict[str, dict[str, float]]:
    """Per-site option costs as ``{option name: {site id: cost}}``."""
    out: dict[str, dict[str, float]] = {}
    for line, row in _read_table(path, ("site_id", "option", "cost")):
        try:
            cost = float(row["cost"])
        except ValueError as exc:
            raise InputError(f"{path}:{line}: {exc}") from None
        if cost < 0:
            raise InputError(f"{path}:{line}: negative cost")
        out.setdefault(row["option"].strip(), {})[row["site_id"].strip()] = cost
    return out


# -- GeoJSON --------------------------------------------------------------------

_KIND_OF = {
    "Point": LayerKind.POINTS,
    "MultiPoint": LayerKind.POINTS,
    "LineString": LayerKind.POLYLINES,
    "MultiLineString": LayerKind.POLYLINES,
    "Polygon": LayerKind.POLYGONS,
    "MultiPolygon": LayerKind.POLYGONS,
}


def _pt(c) -> tuple[float, float]:
    return (float(c[0]), float(c[1]))


def _ring(coords) -> tuple:
    ring = tuple(_pt(c) for c in coords)
    if len(ring) < 4 or ring[0] != ring[-1]:
        raise ValueError("polygon ring must be closed with at least 4 positions")
    return ring


def _parts(geom: Mapping):
    gtype = geom["type"]
    coords = geom["coordinates"]
    if gtype == "Point":
        return [_pt(coords)]
    if gtype == "MultiPoint":
        return [_pt(c) for c in coords]
    if gtype == "LineString":
        if len(coords) < 2:
            raise ValueError("linestring needs at least 2 positions")
        return [tuple(_pt(c) for c in coords)]
    if gtype == "MultiLineString":
        return [tuple(_pt(c) for c in line) for line in coords]
    if gtype == "Polygon":
        return [Polygon(_ring(coords[0]), tuple(_ring(h) for h in coords[1:]))]
    if gtype == "MultiPolygon":
        return [Polygon(_ring(p[0]), tuple(_ring(h) for h in p[1:])) for p in coords]
    raise ValueError(f"unsupported geometry type {gtype!r}")


def read_geojson(path: "str | Path", name: str, expected: Optional[LayerKind] = None) -> FeatureLayer:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read layer {name!r} from {path}: {exc}") from exc
    if doc.get("type") == "FeatureCollection":
        features = doc.get("features") or []
    elif doc.get("type") == "Feature":
        features = [doc]
    else:
        raise InputError(f"{path}: expected a FeatureCollection")
    geoms, attrs = [], []
    kind = expected
    for i, feat in enumerate(features):
        geom = (feat or {}).get("geometry")
        try:
            gkind = _KIND_OF[geom["type"]]
            parts = _parts(geom)
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InputError(f"{path}: feature {i}: unparseable geometry ({exc})") from None
        if kind is None:
            kind = gkind
        if gkind is not kind:
            raise GeometryKindError(
                f"layer {name!r} ({path}) feature {i} is {geom['type']}, expected {kind.value}"
            )
        props = dict(feat.get("properties") or {})
        for p in parts:
            geoms.append(p)
            attrs.append(props)
    return FeatureLayer(name, kind or LayerKind.POINTS, tuple(geoms), tuple(attrs))


def load_layers(
    paths: Mapping[str, "str | Path"], kinds: Optional[Mapping[str, LayerKind]] = None
) -> dict[str, FeatureLayer]:
    kinds = kinds or {}
    return {name: read_geojson(p, name, kinds.get(name)) for name, p in paths.items()}


def _geometry_doc(kind: LayerKind, geom) -> dict:
    if kind is LayerKind.POINTS:
        return {"type": "Point", "coordinates": list(geom)}
    if kind is LayerKind.POLYLINES:
        return {"type": "LineString", "coordinates": [list(v) for v in geom]}
    return {
        "type": "Polygon",
        "coordinates": [[list(v) for v in ring] for ring in geom.rings],
    }


def write_geojson(path: "str | Path", layer: FeatureLayer) -> None:
    features = []
    for i, g in enumerate(layer.geometries):
        props = layer.attributes[i] if i < len(layer.attributes) else {}
        features.append({"type": "Feature", "properties": dict(props), "geometry": _geometry_doc(layer.kind, g)})
    doc = {"type": "FeatureCollection", "name": layer.name, "features": features}
    Path(path).write_text(json.dumps(doc), encoding="utf-8")
