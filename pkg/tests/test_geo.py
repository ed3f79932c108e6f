import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crids.geo import (
    BindingMode,
    ElevationSample,
    EmptyLayerError,
    FactorBinding,
    FeatureLayer,
    LayerKind,
    MissingLayerError,
    Polygon,
    brute_force_nearest,
    build_grid_index,
    extract_features,
    nearest_feature_distance,
    point_in_polygon,
    point_segment_distance,
    raw_matrix,
    vertical_separation,
)
from crids.model import Scenario, Site, factor

coord = st.floats(min_value=-1e4, max_value=1e4, allow_nan=False)
points = st.tuples(coord, coord)


def square(x0, y0, s):
    return ((x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s), (x0, y0))


def test_segment_distance_examples():
    assert point_segment_distance((0, 3), (0, 0), (4, 0)) == 3
    assert point_segment_distance((5, 3), (0, 0), (4, 0)) == pytest.approx(3.16228, abs=1e-5)
    assert point_segment_distance((1, 1), (1, 1), (1, 1)) == 0


@settings(max_examples=300, deadline=None)
@given(points, points, points)
def test_segment_distance_symmetry(p, a, b):
    assert point_segment_distance(p, a, b) == pytest.approx(point_segment_distance(p, b, a), rel=1e-12, abs=1e-9)


def test_point_in_polygon():
    sq = Polygon(square(0, 0, 1))
    assert point_in_polygon((0.5, 0.5), sq)
    assert point_in_polygon((1.0, 0.3), sq)
    assert point_in_polygon((0.0, 0.0), sq)
    assert not point_in_polygon((1.5, 0.5), sq)
    holed = Polygon(square(0, 0, 10), (square(4, 4, 2),))
    assert not point_in_polygon((5, 5), holed)
    assert point_in_polygon((1, 1), holed)
    assert point_in_polygon((4, 5), holed)


def test_nearest_examples():
    pts = FeatureLayer("p", LayerKind.POINTS, ((3.0, 4.0), (6.0, 8.0)))
    assert nearest_feature_distance((0, 0), pts) == (5.0, 0)
    tie = FeatureLayer("t", LayerKind.POINTS, ((0.0, 5.0), (5.0, 0.0), (-5.0, 0.0)))
    assert nearest_feature_distance((0, 0), tie) == (5.0, 0)
    tie2 = FeatureLayer("t", LayerKind.POINTS, ((9.0, 9.0), (5.0, 0.0), (-5.0, 0.0)))
    assert nearest_feature_distance((0, 0), tie2, build_grid_index(tie2, 1.0)) == (5.0, 1)
    line = FeatureLayer("l", LayerKind.POLYLINES, (((0.0, 0.0), (10.0, 0.0), (10.0, 10.0)),))
    assert nearest_feature_distance((10, 4), line) == (0.0, 0)
    single = FeatureLayer("s", LayerKind.POINTS, ((7.0, 7.0),))
    assert nearest_feature_distance((7, 10), single, build_grid_index(single, 500))[0] == 3.0


def test_polygon_distance_is_zero_inside():
    layer = FeatureLayer("w", LayerKind.POLYGONS, (Polygon(square(0, 0, 100), (square(40, 40, 20),)),))
    assert nearest_feature_distance((10, 10), layer)[0] == 0
    assert nearest_feature_distance((50, 50), layer)[0] == 10
    assert nearest_feature_distance((150, 50), layer)[0] == 50


def test_empty_layer():
    empty = FeatureLayer("e", LayerKind.POINTS, ())
    with pytest.raises(EmptyLayerError):
        build_grid_index(empty)
    with pytest.raises(EmptyLayerError):
        nearest_feature_distance((0, 0), empty)


def random_layer(rng, kind, n, extent):
    if kind is LayerKind.POINTS:
        return FeatureLayer("r", kind, tuple(map(tuple, rng.uniform(0, extent, (n, 2)).tolist())))
    if kind is LayerKind.POLYLINES:
        lines = []
        for _ in range(n):
            k = int(rng.integers(2, 5))
            start = rng.uniform(0, extent, 2)
            steps = rng.normal(0, extent / 30, (k - 1, 2))
            pts = np.vstack([start, start + np.cumsum(steps, axis=0)])
            lines.append(tuple(map(tuple, pts.tolist())))
        return FeatureLayer("r", kind, tuple(lines))
    polys = []
    for _ in range(n):
        x, y = rng.uniform(0, extent, 2)
        polys.append(Polygon(square(float(x), float(y), float(rng.uniform(1, extent / 20)))))
    return FeatureLayer("r", kind, tuple(polys))


@pytest.mark.parametrize("kind", list(LayerKind))
@pytest.mark.parametrize("cell", [7.0, 50.0, 500.0, 1e6])
def test_grid_matches_brute_force(kind, cell):
    rng = np.random.default_rng(hash((kind.value, cell)) % 2**32)
    layer = random_layer(rng, kind, 150, 2000.0)
    idx = build_grid_index(layer, cell)
    queries = rng.uniform(-500, 2500, (60, 2))
    for q in map(tuple, queries.tolist()):
        assert nearest_feature_distance(q, layer, idx) == brute_force_nearest(q, layer)


def test_grid_degenerate_layer_in_one_cell():
    layer = FeatureLayer("d", LayerKind.POINTS, ((1.0, 1.0), (1.0, 1.0), (1.5, 1.0)))
    idx = build_grid_index(layer, 500)
    for q in [(0, 0), (1.2, 1.0), (4000, -300), (-1e5, 1e5)]:
        assert nearest_feature_distance(q, layer, idx) == brute_force_nearest(q, layer)


def test_triangle_sanity():
    rng = np.random.default_rng(3)
    layer = random_layer(rng, LayerKind.POLYLINES, 40, 1000.0)
    idx = build_grid_index(layer, 100)
    for q in map(tuple, rng.uniform(0, 1000, (30, 2)).tolist()):
        d, _ = nearest_feature_distance(q, layer, idx)
        for line in layer.geometries:
            for a, b in zip(line[:-1], line[1:]):
                assert d <= point_segment_distance(q, a, b)


def test_vertical_separation_examples():
    assert vertical_separation(ElevationSample("s", 10, 3.87), Scenario()) == pytest.approx(3.13)
    s = Scenario(sea_level_rise=0.7, groundwater_response_ratio=1.0)
    assert vertical_separation(ElevationSample("s", 5, 3), s) == pytest.approx(-1.7)
    assert Scenario(sea_level_rise=1.837, groundwater_response_ratio=0.345).groundwater_rise == pytest.approx(0.634, abs=1e-3)


@settings(max_examples=200, deadline=None)
@given(st.fractions(min_value=0, max_value=10, max_denominator=1000),
       st.fractions(min_value=0, max_value=10, max_denominator=1000),
       st.fractions(min_value=0, max_value=1, max_denominator=1000))
def test_vertical_separation_slope_is_exact(s1, s2, ratio):
    sample = ElevationSample("s", Fraction(12), Fraction(3))
    v1 = vertical_separation(sample, Scenario(sea_level_rise=s1, groundwater_response_ratio=ratio, drainfield_depth=Fraction(3)))
    v2 = vertical_separation(sample, Scenario(sea_level_rise=s2, groundwater_response_ratio=ratio, drainfield_depth=Fraction(3)))
    if s1 != s2:
        assert (v2 - v1) / (s2 - s1) == -ratio


def test_extract_features_examples():
    sewer = FeatureLayer("sewer", LayerKind.POLYLINES, (((0.0, 0.0), (1000.0, 0.0)),))
    flood = FeatureLayer("flood", LayerKind.POLYGONS, (Polygon(square(400, 50, 200)),), ({"BFE": 9},))
    wells = FeatureLayer("wells", LayerKind.POINTS, ())
    bindings = [
        FactorBinding(factor("Re1"), "sewer"),
        FactorBinding(factor("R2"), "flood", BindingMode.FLOOD_ELEVATION, "BFE"),
        FactorBinding(factor("Re4"), "flood", BindingMode.MEMBERSHIP),
        FactorBinding(factor("A3"), "wells"),
    ]
    sites = [Site("a", (500.0, 100.0), {factor("A5"): 12.0}), Site("b", (500.0, -100.0), {})]
    samples = {"a": ElevationSample("a", 10, 3.87)}
    out = extract_features(sites, {"sewer": sewer, "flood": flood, "wells": wells}, samples, Scenario(), bindings)
    a, b = out
    assert a.raw[factor("Re1")] == pytest.approx(100, abs=1e-6)
    assert a.raw[factor("R2")] == 9
    assert a.raw[factor("Re4")] == 1.0
    assert a.raw[factor("A5")] == 12.0
    assert a.raw[factor("R3")] == pytest.approx(3.13)
    assert factor("A3") not in a.raw
    assert b.raw[factor("R2")] == 0.0 and b.raw[factor("Re4")] == 0.0
    assert factor("R3") not in b.raw
    X = raw_matrix(out, [factor("Re1"), factor("R3")])
    assert X.shape == (2, 2) and math.isnan(X[1, 1])


def test_extract_wellhead_at_site():
    sites = [Site(f"s{i}", (float(i * 100), 0.0), {}) for i in range(5)]
    layers = {"wells": FeatureLayer("wells", LayerKind.POINTS, tuple(s.point for s in sites))}
    out = extract_features(sites, layers, {}, Scenario(), [FactorBinding(factor("A3"), "wells")])
    assert all(s.raw[factor("A3")] == 0.0 for s in out)


def test_extract_missing_layer():
    with pytest.raises(MissingLayerError, match="Re1"):
        extract_features([], {}, {}, Scenario(), [FactorBinding(factor("Re1"), "sewer")])
