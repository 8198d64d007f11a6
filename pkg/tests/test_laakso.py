import itertools
from fractions import Fraction as F

import networkx as nx
import numpy as np
import pytest

from geodesy.core import GeodesyError, SpaceMismatch, curves_distinct, verify_geodesic
from geodesy.laakso import (
    LaaksoGraph,
    LevelCapExceeded,
    build,
    count_geodesics,
    enumerate_geodesics,
    laakso_distance,
    overlay_distance,
)
from oracles.derive import laakso_counts


def _nx(g):
    h = nx.Graph()
    for u, v in g.edges:
        h.add_edge(u, v, w=g.edge_length)
    return h


@pytest.mark.parametrize("n", range(4))
def test_sizes_match_oracle(n, frozen):
    g = build(n)
    assert g.num_edges == 6**n == frozen["laakso_edges"][str(n)]
    assert g.num_vertices == frozen["laakso_vertices"][str(n)]
    assert g.edge_length == F(1, 4**n)


def test_level_cap():
    with pytest.raises(LevelCapExceeded):
        build(7)
    with pytest.raises(LevelCapExceeded):
        build(-1)


def test_level1_structure():
    g = build(1)
    assert [tuple(e) for e in g.edges] == [(0, 2), (2, 3), (3, 5), (2, 4), (4, 5), (5, 1)]
    assert g.arc == (0, 1, F(1, 4), F(1, 2), F(1, 2), F(3, 4))
    # the lower midpoint has the smaller id
    assert g.layout[3][1] < g.layout[4][1]


def test_distance_examples(frozen):
    g = build(1)
    assert laakso_distance(g, g.vertex(3), g.vertex(4)) == F(frozen["laakso_level1_midpoints"])
    assert laakso_distance(g, g.vertex(3), g.vertex(3)) == 0
    g3 = build(3)
    assert laakso_distance(g3, g3.start, g3.end) == F(frozen["laakso_endpoint_distance_3"])
    for n in range(5):
        g = build(n)
        assert g.distance(g.start, g.end) == 1


def test_all_vertex_distances_match_networkx():
    g = build(2)
    ref = dict(nx.all_pairs_dijkstra_path_length(_nx(g), weight="w"))
    for u in range(g.num_vertices):
        for v in range(g.num_vertices):
            assert g.vertex_distance(u, v) == ref[u][v]


def test_interior_point_distances_match_split_edge_oracle():
    g = build(2)
    rng = np.random.default_rng(7)

    def pt():
        if rng.integers(3) == 0:
            return g.vertex(int(rng.integers(g.num_vertices)))
        return g.point_on_edge(int(rng.integers(g.num_edges)), g.edge_length * F(int(rng.integers(1, 16)), 16))

    for _ in range(300):
        a, b = pt(), pt()
        assert g.distance(a, b) == overlay_distance(g, a, b)


def test_same_edge_points():
    g = build(1)
    a, b = g.point_on_edge(0, F(1, 16)), g.point_on_edge(0, F(3, 16))
    assert g.distance(a, b) == F(1, 8)


def test_distances_agree_across_levels():
    for n in range(3):
        lo, hi = build(n), build(n + 1)
        for u, v in itertools.combinations(range(lo.num_vertices), 2):
            assert lo.arc[u] == hi.arc[u]
            assert lo.vertex_distance(u, v) == hi.vertex_distance(u, v)


def test_point_validation():
    g = build(1)
    assert g.point_on_edge(0, 0) == g.vertex(0)
    assert g.point_on_edge(0, F(1, 4)) == g.vertex(2)
    with pytest.raises(SpaceMismatch):
        g.point_on_edge(0, F(1, 2))
    with pytest.raises(SpaceMismatch):
        g.vertex(99)


# -- counting and enumeration ----------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
def test_counts_match_frozen_oracle(n, frozen):
    g = build(n)
    assert count_geodesics(g, g.start, g.end) == frozen["laakso_counts"][str(n)]


def test_frozen_counts_reproduce():
    assert laakso_counts(1, True) == 2
    assert laakso_counts(2, True) == 32


def test_recurrence():
    counts = [count_geodesics(build(n), build(n).start, build(n).end) for n in range(4)]
    assert counts[0] == 1
    for n in range(1, 4):
        assert counts[n] == 2 * counts[n - 1] ** 4


@pytest.mark.parametrize("n", [1, 2])
def test_enumeration_matches_networkx_paths(n):
    g = build(n)
    en = enumerate_geodesics(g, g.start, g.end)
    assert en.complete and en.count == len(en.curves)
    ours = {tuple(p.vertex for p in c.points) for c in en.curves}
    theirs = {tuple(p) for p in nx.all_shortest_paths(_nx(g), 0, 1, weight="w")}
    assert ours == theirs


def test_enumerated_curves_verify_and_are_distinct():
    g = build(2)
    curves = enumerate_geodesics(g, g.start, g.end).curves
    assert len(curves) == 32
    for c in curves:
        assert len(c.breakpoints) == 4**2 + 1
        assert verify_geodesic(c, 100).ok
    for a, b in itertools.combinations(curves[:8], 2):
        assert curves_distinct(a, b).distinct


def test_enumeration_order_is_lexicographic_in_branches():
    g = build(1)
    low, high = enumerate_geodesics(g, g.start, g.end).curves
    assert [p.vertex for p in low.points] == [0, 2, 3, 5, 1]
    assert [p.vertex for p in high.points] == [0, 2, 4, 5, 1]


def test_single_edge_counts():
    g = build(1)
    assert count_geodesics(g, g.start, g.vertex(2)) == 1
    assert len(enumerate_geodesics(g, g.start, g.vertex(2)).curves) == 1
    g2 = build(2)
    for u, v in g2.edges:
        assert count_geodesics(g2, g2.vertex(u), g2.vertex(v)) == 1


def test_cap_returns_exact_count():
    g = build(3)
    en = enumerate_geodesics(g, g.start, g.end, cap=5)
    assert len(en.curves) == 5 and en.count == 2097152 and not en.complete


def test_multigeodesic_at_all_coarser_scales():
    n = 3
    g = build(n)
    for k in range(n):
        for u, v in build(k).edges:
            assert count_geodesics(g, g.vertex(u), g.vertex(v)) >= 2


def test_interior_endpoints():
    g = build(1)
    a = g.point_on_edge(0, F(1, 8))
    b = g.point_on_edge(5, F(1, 8))
    en = enumerate_geodesics(g, a, b)
    assert en.count == 2
    assert all(verify_geodesic(c).ok for c in en.curves)


def test_to_json():
    doc = build(1).to_json()
    assert len(doc["edges"]) == 6 and len(doc["vertices"]) == 6
    assert doc["vertices"][2]["arc"] == "1/4"
    assert "x" not in build(1).to_json(layout=False)["vertices"][0]


def test_degenerate_enumeration_rejected():
    g = build(1)
    with pytest.raises(GeodesyError):
        enumerate_geodesics(g, g.start, g.start)
