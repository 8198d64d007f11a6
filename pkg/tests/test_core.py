from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st
from shapely.geometry import LineString, Point

from geodesy.constructions import GluedSpace, cross_geodesic, lift_geodesic
from geodesy.core import (
    DegenerateCurve,
    EndpointMismatch,
    GeodesicCurve,
    GeodesyError,
    ParamGrid,
    ParametricCurve,
    SpaceMismatch,
    curves_disjoint,
    curves_distinct,
    distance,
    first_deviation,
    meet_segments,
    verify_geodesic,
    verify_geodesic_upper,
)
from geodesy.laakso import LaaksoGraph, enumerate_geodesics
from geodesy.normed import PiecewiseFunctionSpace, PNormSpace, StepFunctionSpace, segment_geodesic
from geodesy.scalar import is_exact

from conftest import P


# -- metric axioms on sampled triples -----------------------------------------

def _laakso_sampler(g):
    def sample(rng):
        if rng.integers(2):
            return g.vertex(int(rng.integers(g.num_vertices)))
        e = int(rng.integers(g.num_edges))
        return g.point_on_edge(e, g.edge_length * F(int(rng.integers(1, 8)), 8))
    return sample


def _samplers():
    out = {}
    for name, sp in [("l1", PNormSpace(3, 1)), ("l2", PNormSpace(2, 2)), ("linf", PNormSpace(3, "inf")),
                     ("l3", PNormSpace(2, 3)), ("step", StepFunctionSpace((F(1, 2), F(1, 3), F(1, 6)), 1)),
                     ("pwfun", PiecewiseFunctionSpace(1))]:
        out[name] = (sp, sp.random_point)
    g = LaaksoGraph(2)
    out["laakso"] = (g, _laakso_sampler(g))
    base = PNormSpace(2, 1)
    gs = GluedSpace(base, P(0, 0))
    out["glued"] = (gs, lambda rng: gs.point(int(rng.integers(2)), base.random_point(rng)))
    return out


SAMPLERS = _samplers()


@pytest.mark.parametrize("kind", sorted(SAMPLERS))
def test_metric_axioms_on_1000_triples(kind):
    space, sample = SAMPLERS[kind]
    rng = np.random.default_rng(1234)
    slack = 1e-9
    for _ in range(1000):
        a, b, c = sample(rng), sample(rng), sample(rng)
        dab, dba = space.distance(a, b), space.distance(b, a)
        assert dab == dba
        assert dab >= 0
        assert space.distance(a, a) == 0
        if is_exact(dab):
            assert (dab == 0) == space.same_point(a, b)
        lhs, rhs = space.distance(a, c), dab + space.distance(b, c)
        if is_exact(lhs) and is_exact(rhs):
            assert lhs <= rhs
        else:
            assert lhs <= rhs + slack


# -- distances ------------------------------------------------------------------

def test_distance_examples(l1):
    assert distance(l1, P(0, 0), P(1, 1)) == 2
    assert distance(l1, P(3, 5), P(3, 5)) == 0
    g = LaaksoGraph(1)
    assert distance(g, g.start, g.end) == 1


def test_distance_rejects_foreign_points(l1):
    with pytest.raises(SpaceMismatch):
        distance(l1, P(0, 0, 0), P(1, 1))
    with pytest.raises(SpaceMismatch):
        distance(LaaksoGraph(1), LaaksoGraph(2).vertex(20), LaaksoGraph(1).start)


# -- verification -----------------------------------------------------------------

def test_euclidean_segment_passes(l2):
    v = verify_geodesic(segment_geodesic(l2, P(0, 0), P(1, 1)), 100)
    assert v.ok and v.verdict == "pass"


def test_two_leg_passes_exactly(two_leg):
    v = verify_geodesic(two_leg, 100)
    assert v.ok and v.tolerance == 0.0
    assert verify_geodesic_upper(two_leg, 100).ok


def test_reparametrised_segment_fails_at_frozen_pair(reparam, frozen):
    lhs, rhs = (F(x) for x in frozen["reparam_lhs_rhs"])
    up = verify_geodesic_upper(reparam, 1)
    assert not up.ok
    assert up.witness_pair == (F(4, 5), F(1))
    assert (up.lhs, up.rhs) == (lhs, rhs)
    eq = verify_geodesic(reparam, 1)
    assert not eq.ok and eq.witness_pair == (0, F(4, 5))


def test_parametric_curve_check_at_point_eight(l2):
    u, v = P(0, 0), P(1, 0)
    curve = ParametricCurve(l2, lambda s: (s * s, F(0)))
    up = verify_geodesic_upper(curve, ParamGrid(1, (F(4, 5),)))
    assert not up.ok and up.witness_pair == (F(4, 5), 1)
    assert up.lhs == F(9, 25) and up.rhs == F(1, 5)
    # a finer grid finds an earlier violating pair
    assert not verify_geodesic_upper(curve, 10).ok


def test_degenerate_curve_rejected(l1):
    c = GeodesicCurve(l1, ((0, P(0, 0)), (F(1, 2), P(1, 0)), (1, P(0, 0))))
    with pytest.raises(DegenerateCurve):
        verify_geodesic(c)


@pytest.mark.parametrize("bps", [
    ((F(1, 4), (0, 0)), (1, (1, 1))),
    ((0, (0, 0)), (F(1, 2), (1, 0)), (F(1, 2), (1, 1)), (1, (1, 1))),
    ((0, (0, 0)),),
])
def test_curve_validation(l1, bps):
    with pytest.raises(GeodesyError):
        GeodesicCurve(l1, tuple((s, P(*p)) for s, p in bps))


def test_curve_evaluation_and_restrict(two_leg):
    assert two_leg(F(1, 4)) == P(F(1, 2), 0)
    assert two_leg(F(3, 4)) == P(1, F(1, 2))
    for s, p in two_leg.breakpoints:
        assert two_leg(s) == p
    r = two_leg.restrict(F(1, 4), F(3, 4))
    assert r.start == P(F(1, 2), 0) and r.end == P(1, F(1, 2))
    assert r(F(1, 2)) == P(1, 0)
    assert verify_geodesic(r).ok


def test_grid_independence_for_exact_curves(two_leg, reparam):
    for n in (1, 2, 3, 7, 50):
        assert verify_geodesic(two_leg, n).ok
        assert not verify_geodesic(reparam, n).ok


def test_equality_and_upper_agree_on_corpus(two_leg, reparam, l1):
    g = LaaksoGraph(1)
    corpus = [two_leg, reparam, segment_geodesic(l1, P(0, 0), P(-1, 0))]
    corpus += list(enumerate_geodesics(g, g.start, g.end).curves)
    for c in corpus:
        assert verify_geodesic(c, 20).ok == verify_geodesic_upper(c, 20).ok


def test_param_grid():
    grid = ParamGrid(4, (F(1, 3), F(1, 2)))
    assert grid.params == (0, F(1, 4), F(1, 3), F(1, 2), F(3, 4), 1)
    with pytest.raises(GeodesyError):
        ParamGrid(0)
    with pytest.raises(GeodesyError):
        ParamGrid(2, (F(3, 2),))


def test_float_mode_records_tolerance():
    sp = PNormSpace(2, 2)
    c = GeodesicCurve(sp, ((0.0, (0.0, 0.0)), (1.0, (0.3, 0.4))))
    v = verify_geodesic(c, 10)
    assert v.ok and v.tolerance == 1e-9


# -- distinctness, disjointness, deviation ----------------------------------------

@pytest.fixture
def legs(l1):
    via_x = GeodesicCurve(l1, ((0, P(0, 0)), (F(1, 2), P(1, 0)), (1, P(1, 1))))
    via_y = GeodesicCurve(l1, ((0, P(0, 0)), (F(1, 2), P(0, 1)), (1, P(1, 1))))
    return via_x, via_y


def test_distinct_examples(legs):
    a, b = legs
    assert curves_distinct(a, a).verdict == "indistinguishable"
    d = curves_distinct(a, b, 2)
    assert d.distinct and d.at == F(1, 2)
    g = LaaksoGraph(1)
    low, high = enumerate_geodesics(g, g.start, g.end).curves
    d = curves_distinct(low, high, 2)
    assert d.distinct and d.at == F(1, 2)


def test_numeric_curves_only_indistinguishable_on_grid(l2):
    f = lambda s: (s, F(0))
    a = ParametricCurve(l2, f)
    assert curves_distinct(a, ParametricCurve(l2, f), 5).verdict == "indistinguishable on grid"


def test_disjoint_examples(legs):
    a, b = legs
    assert curves_disjoint(a, b).verdict == "disjoint"
    assert curves_disjoint(a, b).exact
    hit = curves_disjoint(a, a)
    assert not hit.disjoint


def test_cross_geodesics_in_glued_space_intersect(l1):
    gs = GluedSpace(l1, P(0, 0))
    first = [segment_geodesic(l1, P(1, 1), P(0, 0)),
             GeodesicCurve(l1, ((0, P(1, 1)), (F(1, 2), P(1, 0)), (1, P(0, 0))))]
    second = [segment_geodesic(l1, P(0, 0), P(-1, 1)),
              GeodesicCurve(l1, ((0, P(0, 0)), (F(1, 2), P(-1, 0)), (1, P(-1, 1))))]
    curves = [cross_geodesic(gs, f, s) for f in first for s in second]
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            r = curves_disjoint(curves[i], curves[j])
            assert not r.disjoint and r.exact
            assert gs.is_glue(curves[i](F(1, 2))) and gs.is_glue(curves[j](F(1, 2)))
    # with distinct pieces on both sides the only meeting point is the glue
    r = curves_disjoint(curves[0], curves[3])
    assert r.at == (F(1, 2), F(1, 2)) and all(isinstance(x, F) for x in r.at)


def test_endpoint_mismatch(l1, legs):
    other = segment_geodesic(l1, P(0, 0), P(2, 0))
    for fn in (curves_distinct, curves_disjoint, first_deviation):
        with pytest.raises(EndpointMismatch):
            fn(legs[0], other)


def test_first_deviation(legs):
    a, b = legs
    assert first_deviation(a, a) is None
    dev = first_deviation(a, b, 100)
    assert dev.agree == 0 and dev.differ == F(1, 100) and dev.exact


# -- exact segment intersection against shapely -----------------------------------

coord = st.integers(-4, 4)
seg = st.tuples(coord, coord, coord, coord)


@given(seg, seg)
def test_meet_segments_matches_shapely(s1, s2):
    p0, p1 = P(*s1[:2]), P(*s1[2:])
    q0, q1 = P(*s2[:2]), P(*s2[2:])
    meets = meet_segments(p0, p1, q0, q1, 0.0)
    geom = lambda a, b: Point(a) if a == b else LineString([a, b])
    assert bool(meets) == geom(p0, p1).intersects(geom(q0, q1))
    for alpha, beta in meets:
        pa = tuple(x + alpha * (y - x) for x, y in zip(p0, p1))
        pb = tuple(x + beta * (y - x) for x, y in zip(q0, q1))
        assert pa == pb
        assert 0 <= alpha <= 1 and 0 <= beta <= 1


def test_meet_segments_in_higher_dimension():
    assert meet_segments(P(0, 0, 0), P(2, 2, 2), P(0, 2, 0), P(2, 0, 2), 0.0) == [(F(1, 2), F(1, 2))]
    assert meet_segments(P(0, 0, 0), P(2, 2, 2), P(0, 2, 3), P(2, 0, 3), 0.0) == []


# -- integer fast path against direct evaluation ------------------------------------

def _direct_verdict(curve, n):
    grid = ParamGrid(n).with_curves(curve)
    total = curve.space.distance(curve.start, curve.end)
    pts = [curve(s) for s in grid.params]
    for i, s in enumerate(grid.params):
        for j in range(i + 1, len(grid.params)):
            if curve.space.distance(pts[i], pts[j]) != (grid.params[j] - s) * total:
                return False, (s, grid.params[j])
    return True, None


measures = st.sampled_from([(F(1, 4),) * 4, (F(1, 2), F(1, 3), F(1, 6)), (F(3),) * 2, (F(1),)])
pvals = st.sampled_from([1, "inf"])


@given(measures, pvals, st.data())
def test_integer_frame_matches_direct_distances(ms, p, data):
    sp = StepFunctionSpace(ms, p)
    vals = st.fractions(-3, 3, max_denominator=6)
    pts = [tuple(data.draw(vals) for _ in ms) for _ in range(3)]
    if pts[0] == pts[-1]:
        return
    curve = GeodesicCurve(sp, ((0, pts[0]), (F(1, 3), pts[1]), (1, pts[2])))
    v = verify_geodesic(curve, 6)
    assert (v.ok, v.witness_pair) == _direct_verdict(curve, 6)
    if not v.ok:
        s, t = v.witness_pair
        assert v.lhs == sp.distance(curve(s), curve(t))


def _frame_kernels(space, pts):
    frame = space.integer_frame(pts)
    _, ints, kernel, matrix = frame
    loop = np.array([[kernel(a, b) for b in ints] for a in ints], dtype=np.int64)
    return loop, matrix()


@pytest.mark.parametrize("space, pts", [
    (PNormSpace(2, 1), [P(0, 0), P(F(1, 3), 2), P(-1, F(5, 2))]),
    (PNormSpace(3, "inf"), [P(0, 0, 1), P(F(1, 4), 2, 0), P(-1, 1, F(1, 2))]),
    (StepFunctionSpace([F(1, 4), F(3, 4)], 1), [P(0, 1), P(F(2, 3), -1), P(1, 1)]),
])
def test_matrix_kernel_matches_loop_tuple(space, pts):
    loop, mat = _frame_kernels(space, pts)
    assert np.array_equal(loop, mat)


def test_matrix_kernel_matches_loop_laakso_and_glued():
    g = LaaksoGraph(2)
    curve = enumerate_geodesics(g, g.start, g.end, cap=3).curves[2]
    pts = [curve(F(i, 16)) for i in range(17)]
    loop, mat = _frame_kernels(g, pts)
    assert np.array_equal(loop, mat)
    gs = GluedSpace(PNormSpace(2, 1), P(0, 0))
    gpts = [gs.point(0, P(1, 2)), gs.point(1, P(-1, 3)), gs.point(0, P(0, 0)), gs.point(1, P(F(1, 2), 1))]
    loop, mat = _frame_kernels(gs, gpts)
    assert np.array_equal(loop, mat)
