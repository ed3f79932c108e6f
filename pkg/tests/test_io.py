import json

import pytest

from crids import config
from crids.geo import ElevationSample, FeatureLayer, LayerKind, Polygon
from crids.io import (
    DuplicateSiteError,
    GeometryKindError,
    InputError,
    load_costs,
    load_elevations,
    load_layers,
    load_sites,
    read_geojson,
    write_elevations,
    write_geojson,
    write_sites,
)
from crids.model import Site, factor

from conftest import PILOT_RAW


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_pilot_columns(pilot_sites_csv):
    sites = load_sites(pilot_sites_csv, config.load_config()["column_map"])
    assert [s.id for s in sites] == list(PILOT_RAW)
    first = sites[0]
    assert first.raw[factor("R3")] == 20.1515
    assert first.raw[factor("A3")] == 867.3902
    assert first.raw[factor("A5")] == 122.2016
    assert first.raw[factor("Re1")] == 413.0418


def test_canonical_names_and_metadata(tmp_path):
    p = write(tmp_path, "s.csv", "id,x,y,sewer_distance,Re4,owner\na,1,2,30,true,county\nb,3,4,,false,\n")
    a, b = load_sites(p)
    assert a.raw == {factor("Re1"): 30.0, factor("Re4"): 1.0}
    assert a.metadata == {"owner": "county"}
    assert b.raw == {factor("Re4"): 0.0}
    assert a.point == (1.0, 2.0)


def test_empty_file_with_header(tmp_path):
    assert load_sites(write(tmp_path, "s.csv", "id,x,y\n")) == []


def test_duplicate_id_named(tmp_path):
    p = write(tmp_path, "s.csv", "APNO,x,y\nAP1,0,0\nAP1,1,1\n")
    with pytest.raises(DuplicateSiteError, match="AP1"):
        load_sites(p, {"APNO": "id"})


def test_parse_error_has_line_number(tmp_path):
    p = write(tmp_path, "s.csv", "id,x,y\na,0,0\nb,zero,0\n")
    with pytest.raises(InputError, match=":3:"):
        load_sites(p)


def test_missing_required_column(tmp_path):
    with pytest.raises(InputError, match="'y'"):
        load_sites(write(tmp_path, "s.csv", "id,x\na,0\n"))


def test_site_round_trip(tmp_path):
    sites = [Site("a", (0.1 + 0.2, 1e-7), {factor("R3"): 1 / 3, factor("A5"): 12.0}, {"k": "v"}),
             Site("b", (5.0, 6.0), {})]
    write_sites(tmp_path / "s.csv", sites)
    back = load_sites(tmp_path / "s.csv")
    assert back[0].point == sites[0].point
    assert back[0].raw == sites[0].raw
    assert back[0].metadata == {"k": "v"}
    assert back[1].raw == {}


def test_elevations_and_costs(tmp_path):
    write_elevations(tmp_path / "e.csv", [ElevationSample("a", 10.0, 3.87)])
    assert load_elevations(tmp_path / "e.csv") == {"a": ElevationSample("a", 10.0, 3.87)}
    p = write(tmp_path, "c.csv", "site_id,option,cost\na,MoundSystem,41000\nb,MoundSystem,39000\n")
    assert load_costs(p) == {"MoundSystem": {"a": 41000.0, "b": 39000.0}}
    with pytest.raises(InputError):
        load_costs(write(tmp_path, "bad.csv", "site_id,option,cost\na,MoundSystem,-1\n"))


def feature(geom, **props):
    return {"type": "Feature", "properties": props, "geometry": geom}


def collection(*features):
    return json.dumps({"type": "FeatureCollection", "features": list(features)})


def test_single_linestring(tmp_path):
    p = write(tmp_path, "sewer.geojson", collection(feature({"type": "LineString", "coordinates": [[0, 0], [10, 0]]})))
    layer = read_geojson(p, "sewer", LayerKind.POLYLINES)
    assert layer.kind is LayerKind.POLYLINES and len(layer) == 1


def test_polygon_with_hole(tmp_path):
    outer = [[0, 0], [10, 0], [10, 10], [0, 10], [0, 0]]
    hole = [[4, 4], [6, 4], [6, 6], [4, 6], [4, 4]]
    p = write(tmp_path, "w.geojson", collection(feature({"type": "Polygon", "coordinates": [outer, hole]}, BFE=9)))
    layer = read_geojson(p, "wetlands")
    assert layer.kind is LayerKind.POLYGONS
    assert len(layer.geometries[0].holes) == 1
    assert layer.attribute(0, "BFE") == 9


def test_kind_mismatch(tmp_path):
    p = write(tmp_path, "p.geojson", collection(feature({"type": "Point", "coordinates": [0, 0]})))
    with pytest.raises(GeometryKindError, match="sewer"):
        load_layers({"sewer": p}, {"sewer": LayerKind.POLYLINES})


def test_unparseable_geometry_reports_index(tmp_path):
    p = write(tmp_path, "p.geojson", collection(
        feature({"type": "Point", "coordinates": [0, 0]}),
        feature({"type": "Polygon", "coordinates": [[[0, 0], [1, 0], [1, 1]]]}),
    ))
    with pytest.raises(InputError, match="feature 1"):
        read_geojson(p, "x")


def test_multipart_geometries_split(tmp_path):
    p = write(tmp_path, "m.geojson", collection(
        feature({"type": "MultiPoint", "coordinates": [[0, 0], [1, 1]]}, name="w")))
    layer = read_geojson(p, "wells")
    assert layer.geometries == ((0.0, 0.0), (1.0, 1.0))
    assert layer.attribute(1, "name") == "w"


def test_geojson_round_trip(tmp_path):
    sq = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 0.0))
    layer = FeatureLayer("z", LayerKind.POLYGONS, (Polygon(sq),), ({"BFE": 7},))
    write_geojson(tmp_path / "z.geojson", layer)
    assert read_geojson(tmp_path / "z.geojson", "z") == layer
