import itertools
from fractions import Fraction as F

import numpy as np
import pytest

from geodesy.constructions import (
    MAX_DEPTH,
    BranchPlan,
    GluedSpace,
    alternative_geodesic,
    branch_truncated,
    candidate_geodesics,
    cross_geodesic,
    distinct_family,
    glued_distance,
    lift_geodesic,
    splice,
)
from geodesy.core import (
    EndpointMismatch,
    GeodesicCurve,
    PreconditionError,
    SpaceMismatch,
    curves_disjoint,
    curves_distinct,
    first_deviation,
    verify_geodesic,
)
from geodesy.laakso import build, enumerate_geodesics
from geodesy.normed import PNormSpace, segment_geodesic, two_leg_geodesic

from conftest import P


@pytest.fixture
def glued(l1):
    return GluedSpace(l1, P(0, 0))


@pytest.fixture
def diag(l1):
    return segment_geodesic(l1, P(0, 0), P(1, 1))


# -- glued space -----------------------------------------------------------------

def test_glued_distance_examples(glued, l1, frozen):
    a, b = glued.point(0, P(1, 0)), glued.point(1, P(0, 1))
    assert glued_distance(glued, a, b) == F(frozen["glued_l1_cross"])
    assert glued_distance(glued, a, glued.point(0, P(0, 1))) == 2
    assert glued_distance(glued, glued.point(0, P(2, 3)), glued.point(0, P(1, 1))) == 3
    assert glued_distance(glued, glued.point(0, P(0, 0)), glued.point(1, P(0, 0))) == 0
    assert glued.point(1, P(0, 0)) == glued.glue_point
    with pytest.raises(SpaceMismatch):
        glued.point(2, P(1, 1))


def test_lift_geodesic(glued, l1, diag):
    assert verify_geodesic(lift_geodesic(glued, diag, 0)).ok
    other = two_leg_geodesic(l1, P(0, 0), P(1, 1), P(1, 0), F(1, 2))
    a, b = lift_geodesic(glued, diag, 1), lift_geodesic(glued, other, 1)
    assert curves_distinct(a, b).distinct
    assert glued.is_glue(a.start)
    bad = GeodesicCurve(l1, ((0, P(0, 0)), (F(1, 2), P(2, 0)), (1, P(1, 1))))
    with pytest.raises(PreconditionError):
        lift_geodesic(glued, bad, 0)


def test_cross_geodesic_examples(glued, l1):
    c = cross_geodesic(glued, segment_geodesic(l1, P(1, 0), P(0, 0)), segment_geodesic(l1, P(0, 0), P(0, 1)))
    assert c.params == (0, F(1, 2), 1)
    assert glued.distance(c.start, c.end) == 2
    assert verify_geodesic(c).ok
    sym = cross_geodesic(glued, segment_geodesic(l1, P(1, 1), P(0, 0)), segment_geodesic(l1, P(0, 0), P(1, 1)))
    for s in (F(1, 10), F(1, 4), F(2, 5)):
        assert sym(s).base == sym(1 - s).base and sym(s).copy != sym(1 - s).copy
    with pytest.raises(EndpointMismatch):
        cross_geodesic(glued, segment_geodesic(l1, P(1, 0), P(0, 1)), segment_geodesic(l1, P(0, 0), P(0, 1)))


def test_glued_metric_axioms(glued, l1):
    rng = np.random.default_rng(3)
    pts = [glued.point(int(rng.integers(2)), l1.random_point(rng)) for _ in range(25)]
    for a, b, c in itertools.product(pts[:10], repeat=3):
        assert glued.distance(a, c) <= glued.distance(a, b) + glued.distance(b, c)


def test_every_cross_geodesic_hits_glue_once(glued):
    x, y = glued.point(0, P(2, 1)), glued.point(1, P(-1, 3))
    curves = candidate_geodesics(glued, x, y)
    assert len(curves) == 4
    for c in curves:
        assert verify_geodesic(c).ok
        hits = [s for s, p in c.breakpoints if glued.is_glue(p)]
        assert hits == [F(3, 7)]
    for a, b in itertools.combinations(curves, 2):
        assert not curves_disjoint(a, b).disjoint


# -- splicing --------------------------------------------------------------------

def test_identity_splice(two_leg):
    s, t = F(1, 5), F(7, 10)
    out = splice(two_leg, s, t, two_leg.restrict(s, t))
    assert not curves_distinct(out, two_leg, 100).distinct


def test_full_splice_gives_two_leg(l1, diag, two_leg):
    out = splice(diag, 0, 1, two_leg)
    assert out.breakpoints == two_leg.breakpoints
    assert verify_geodesic(out).ok


def test_nested_splices(l1, diag):
    inner = alternative_geodesic(l1, diag(F(1, 4)), diag(F(3, 4)), diag.restrict(F(1, 4), F(3, 4)))
    once = splice(diag, F(1, 4), F(3, 4), inner)
    a, b = F(1, 8), F(3, 8)
    twice = splice(once, a, b, alternative_geodesic(l1, once(a), once(b), once.restrict(a, b)))
    assert verify_geodesic(once).ok and verify_geodesic(twice).ok
    assert curves_distinct(once, twice).distinct


def test_splice_preconditions(diag, two_leg):
    with pytest.raises(PreconditionError):
        splice(diag, F(1, 2), F(1, 2), two_leg)
    with pytest.raises(EndpointMismatch):
        splice(diag, F(1, 4), F(1, 2), two_leg)


def test_splice_closure_in_laakso():
    g = build(2)
    base = enumerate_geodesics(g, g.start, g.end).curves[0]
    rng = np.random.default_rng(11)
    for _ in range(20):
        s, t = sorted(F(int(k), 32) for k in rng.choice(33, size=2, replace=False))
        sigma = candidate_geodesics(g, base(s), base(t))[-1]
        assert verify_geodesic(splice(base, s, t, sigma)).ok


# -- branching -----------------------------------------------------------------

def test_branch_plan_defaults_and_errors(diag):
    plan = BranchPlan(diag, F(1, 4), 4)
    assert plan.start == 1 and plan.window(2) == (F(1, 2), F(3, 4))
    assert BranchPlan(diag, F(7, 8), 5).start == 4
    with pytest.raises(PreconditionError):
        BranchPlan(diag, F(1, 4), 1)
    with pytest.raises(PreconditionError):
        BranchPlan(diag, F(1, 4), MAX_DEPTH + 1)
    with pytest.raises(PreconditionError):
        BranchPlan(diag, F(3, 4), 4, start=2)
    with pytest.raises(PreconditionError):
        BranchPlan(diag, 1, 4)
    assert plan.to_json()["M"] == 4


def test_single_splice_base_case(l1, diag):
    plan = BranchPlan(diag, F(1, 4), 2)
    a, b = plan.window(2)
    sigma = alternative_geodesic(l1, diag(a), diag(b), diag.restrict(a, b))
    assert branch_truncated(plan).breakpoints == splice(diag, a, b, sigma).breakpoints


def test_branch_bracket_l1(diag):
    plan = BranchPlan(diag, F(1, 4), 4)
    out = branch_truncated(plan)
    assert verify_geodesic(out).ok
    dev = first_deviation(out, diag)
    assert F(1, 4) + F(1, 16) <= dev.agree and dev.differ <= F(1, 4) + F(1, 8)
    assert dev.agree == F(5, 16)
    # agrees before t + 2^-M and after t + 2^-n, differs in every window
    for s in out.params:
        if s <= F(5, 16) or s >= F(3, 4):
            assert out(s) == diag(s)
    for m in range(2, 5):
        a, b = plan.window(m)
        assert curves_distinct(out.restrict(a, b), diag.restrict(a, b)).distinct


def test_branch_laakso_level3():
    g = build(3)
    gamma = enumerate_geodesics(g, g.start, g.end, cap=1).curves[0]
    plan = BranchPlan(gamma, F(1, 4), 3)
    out = branch_truncated(plan)
    assert verify_geodesic(out, 64).ok
    for m in (2, 3):
        a, b = plan.window(m)
        assert curves_distinct(out.restrict(a, b), gamma.restrict(a, b)).distinct
    assert not curves_distinct(out.restrict(0, F(3, 8)), gamma.restrict(0, F(3, 8))).distinct


def test_distinct_family(l1, diag):
    assert distinct_family(diag, [], 4) == []
    fam = distinct_family(diag, [F(1, 4), F(1, 2), F(3, 4)], 5)
    assert all(verify_geodesic(c).ok for c in fam)
    for a, b in itertools.combinations(fam + [diag], 2):
        assert first_deviation(a, b) is not None
    with pytest.raises(PreconditionError):
        distinct_family(diag, [F(1, 2), F(1, 4)], 4)


def test_twenty_times_give_pairwise_distinct_curves(diag):
    times = [F(k, 21) for k in range(1, 21)]
    fam = distinct_family(diag, times, 7, grid=8)
    assert len(fam) == 20
    for t, c in zip(times, fam):
        dev = first_deviation(c, diag, 8)
        assert dev.agree >= t + F(1, 2**7)
    for a, b in itertools.combinations(fam, 2):
        assert curves_distinct(a, b, 8).distinct
