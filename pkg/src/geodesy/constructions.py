"""Combinators on geodesics: two-copy gluing, splicing and truncated branching."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core import (
    EndpointMismatch,
    GeodesicCurve,
    GeodesyError,
    MetricSpace,
    ParamGrid,
    PreconditionError,
    SpaceMismatch,
    curves_distinct,
    verify_geodesic,
)
from .laakso import LaaksoGraph, enumerate_geodesics
from .normed import NormedSpace, segment_geodesic, witness_geodesics
from .scalar import as_scalar, format_scalar, is_zero, resolve_tol

MAX_DEPTH = 24


# ---------------------------------------------------------------------------
# two copies glued at a point
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GluedPoint:
    copy: int
    base: object


class GluedSpace(MetricSpace):
    """Two copies of ``base`` with ``(glue, 0)`` and ``(glue, 1)`` identified.

    The glue point is stored canonically in copy 0.
    """

    kind = "glued"

    def __init__(self, base: MetricSpace, glue):
        base.check_point(glue)
        self.base = base
        self.glue = glue

    def __repr__(self):
        return f"GluedSpace({self.base!r}, glue={self.glue!r})"

    def __eq__(self, other):
        return (isinstance(other, GluedSpace) and other.base == self.base
                and self.base.same_point(self.glue, other.glue))

    def __hash__(self):
        return hash(("glued", self.base))

    def point(self, copy: int, p) -> GluedPoint:
        if copy not in (0, 1):
            raise SpaceMismatch(f"copy index must be 0 or 1, got {copy}")
        self.base.check_point(p)
        if self.base.same_point(p, self.glue):
            return GluedPoint(0, self.glue)
        return GluedPoint(copy, p)

    @property
    def glue_point(self) -> GluedPoint:
        return GluedPoint(0, self.glue)

    def is_glue(self, p: GluedPoint) -> bool:
        return self.base.same_point(p.base, self.glue)

    def contains(self, p) -> bool:
        return (isinstance(p, GluedPoint) and p.copy in (0, 1) and self.base.contains(p.base)
                and not (p.copy == 1 and self.is_glue(p)))

    def _distance(self, a: GluedPoint, b: GluedPoint):
        d = self.base._distance
        if a.copy == b.copy or self.is_glue(a) or self.is_glue(b):
            return d(a.base, b.base)
        return d(a.base, self.glue) + d(b.base, self.glue)

    def integer_frame(self, points):
        """Integer distances built on the base space's frame, if it has one."""
        frame = getattr(self.base, "integer_frame", None)
        if frame is None:
            return None
        base = frame([p.base for p in points] + [self.glue])
        if base is None:
            return None
        denom, ints, kernel = base[:3]
        g = ints[-1]
        reps = [(p.copy, self.is_glue(p), P) for p, P in zip(points, ints)]

        def glued_kernel(a, b):
            if a[0] == b[0] or a[1] or b[1]:
                return kernel(a[2], b[2])
            return kernel(a[2], g) + kernel(b[2], g)

        def matrix():
            full = base[3]() if len(base) > 3 else None
            if full is None:
                return None
            m, tog = full[:-1, :-1], full[:-1, -1]
            copy = np.array([r[0] for r in reps])
            glue = np.array([r[1] for r in reps], dtype=bool)
            direct = (copy[:, None] == copy[None, :]) | glue[:, None] | glue[None, :]
            return np.where(direct, m, tog[:, None] + tog[None, :])

        return denom, reps, glued_kernel, matrix

    def same_point(self, p, q, tol=None):
        if self.is_glue(p) or self.is_glue(q):
            return self.is_glue(p) and self.is_glue(q)
        return p.copy == q.copy and self.base.same_point(p.base, q.base, tol)

    def _segment_copy(self, p, q) -> int:
        if not self.is_glue(p) and not self.is_glue(q) and p.copy != q.copy:
            raise GeodesyError(f"{p} and {q} are in different copies; no elementary segment joins them")
        return q.copy if self.is_glue(p) else p.copy

    def interpolate(self, p, q, alpha):
        copy = self._segment_copy(p, q)
        return self.point(copy, self.base.interpolate(p.base, q.base, alpha))

    def segment_meet(self, p0, p1, q0, q1, tol=None):
        ca, cb = self._segment_copy(p0, p1), self._segment_copy(q0, q1)
        meets = self.base.segment_meet(p0.base, p1.base, q0.base, q1.base, tol)
        if ca == cb:
            return meets
        # different copies share only the glue point
        return [(a, b) for a, b in meets
                if self.base.same_point(self.base.interpolate(p0.base, p1.base, a), self.glue, tol)]

    def describe(self):
        return {"kind": self.kind, "base": self.base.describe(), "glue": self.base.encode_point(self.glue)}

    def encode_point(self, p):
        return {"copy": p.copy, "point": self.base.encode_point(p.base)}

    def decode_point(self, obj, exact=True):
        try:
            return self.point(int(obj["copy"]), self.base.decode_point(obj["point"], exact))
        except (KeyError, TypeError) as exc:
            raise GeodesyError(f"malformed glued point: {obj!r}") from exc


def glued_distance(gs: GluedSpace, a: GluedPoint, b: GluedPoint):
    return gs.distance(a, b)


def lift_geodesic(gs: GluedSpace, curve: GeodesicCurve, copy: int, grid=None,
                  tol: float | None = None) -> GeodesicCurve:
    """``t -> (curve(t), copy)``, after checking ``curve`` is a geodesic of the base."""
    verdict = verify_geodesic(curve, grid, tol)
    if not verdict.ok:
        raise PreconditionError(f"base curve is not a geodesic: fails at {verdict.witness_pair}")
    return GeodesicCurve(gs, tuple((s, gs.point(copy, p)) for s, p in curve.breakpoints))


def cross_geodesic(gs: GluedSpace, first: GeodesicCurve, second: GeodesicCurve,
                   copies=(0, 1), tol: float | None = None) -> GeodesicCurve:
    """Concatenate ``first`` (x -> glue) in one copy with ``second`` (glue -> y) in the other.

    The glue point is reached at parameter ``d(x, glue) / (d(x, glue) + d(y, glue))``.
    """
    base = gs.base
    if not (base.same_point(first.end, gs.glue, tol) and base.same_point(second.start, gs.glue, tol)):
        raise EndpointMismatch("the two pieces must meet at the glue point")
    d1 = base.distance(first.start, gs.glue)
    d2 = base.distance(second.end, gs.glue)
    if is_zero(d1, 0.0) or is_zero(d2, 0.0):
        raise PreconditionError("cross geodesics need endpoints different from the glue point")
    c = d1 / (d1 + d2)
    i, j = copies
    bps = [(s * c, gs.point(i, p)) for s, p in first.breakpoints[:-1]]
    bps.append((c, gs.glue_point))
    bps += [(c + s * (1 - c), gs.point(j, p)) for s, p in second.breakpoints[1:]]
    return GeodesicCurve(gs, tuple(bps))


# ---------------------------------------------------------------------------
# splicing
# ---------------------------------------------------------------------------

def splice(curve: GeodesicCurve, s, t, sigma: GeodesicCurve, tol: float | None = None) -> GeodesicCurve:
    """Replace ``curve`` on ``[s, t]`` by ``sigma`` rescaled onto that interval."""
    s, t = as_scalar(s), as_scalar(t)
    if not 0 <= s < t <= 1:
        raise PreconditionError(f"need 0 <= s < t <= 1, got s={s}, t={t}")
    space = curve.space
    if not (space.same_point(sigma.start, curve(s), tol) and space.same_point(sigma.end, curve(t), tol)):
        raise EndpointMismatch("sigma must run from curve(s) to curve(t)")
    bps = [(r, p) for r, p in curve.breakpoints if r < s]
    bps += [(s + r * (t - s), p) for r, p in sigma.breakpoints]
    bps += [(r, p) for r, p in curve.breakpoints if r > t]
    return GeodesicCurve(space, tuple(bps))


# ---------------------------------------------------------------------------
# choosing geodesics between two points
# ---------------------------------------------------------------------------

def _glued_pieces(gs: GluedSpace, a: GluedPoint, b: GluedPoint, pick):
    """Geodesics in ``gs`` built from base geodesics chosen by ``pick(p, q)``."""
    if a.copy == b.copy or gs.is_glue(a) or gs.is_glue(b):
        copy = b.copy if gs.is_glue(a) else a.copy
        return [GeodesicCurve(gs, tuple((s, gs.point(copy, p)) for s, p in c.breakpoints))
                for c in pick(a.base, b.base)]
    firsts = pick(a.base, gs.glue)
    seconds = pick(gs.glue, b.base)
    return [cross_geodesic(gs, f, s, (a.copy, b.copy)) for f in firsts for s in seconds]


def candidate_geodesics(space: MetricSpace, a, b, seed: int = 0, tries: int = 16) -> list[GeodesicCurve]:
    """A deterministic list of geodesics from a to b, the default one first.

    ``tries`` bounds the random fallback of the witness search in normed
    spaces without a constructive witness.
    """
    if isinstance(space, NormedSpace):
        pair = witness_geodesics(space, a, b, seed=seed, tries=tries)
        return list(pair) if pair else [segment_geodesic(space, a, b)]
    if isinstance(space, LaaksoGraph):
        return list(enumerate_geodesics(space, a, b, cap=64).curves)
    if isinstance(space, GluedSpace):
        return _glued_pieces(space, a, b, lambda p, q: candidate_geodesics(space.base, p, q, seed, tries))
    raise GeodesyError(f"no geodesic generator for {space!r}")


def some_geodesic(space: MetricSpace, a, b) -> GeodesicCurve:
    return candidate_geodesics(space, a, b)[0]


def alternative_geodesic(space: MetricSpace, a, b, avoid: GeodesicCurve, grid=None,
                         tol: float | None = None) -> GeodesicCurve:
    """First candidate geodesic from a to b that differs from ``avoid`` somewhere.

    Normed spaces draw candidates from a witness two-leg; Laakso graphs from
    the lexicographic enumeration, which amounts to flipping the first
    branch choice that can be flipped.
    """
    for c in candidate_geodesics(space, a, b):
        if curves_distinct(c, avoid, grid, tol).distinct:
            return c
    raise GeodesyError("no alternative geodesic between these points")


# ---------------------------------------------------------------------------
# truncated branching
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BranchPlan:
    """Branch ``base`` at time ``t`` by splicing on windows ``(t + 2^-m, t + 2^-(m-1))``, n < m <= M."""

    base: GeodesicCurve
    t: Fraction
    depth: int
    start: int | None = None
    chooser: Callable | None = None

    def __post_init__(self):
        t = as_scalar(self.t)
        if not 0 < t < 1:
            raise PreconditionError(f"branch time must lie in (0, 1), got {t}")
        object.__setattr__(self, "t", t)
        n = self.start
        if n is None:
            n = 1
            while t + Fraction(1, 2**n) >= 1:
                n += 1
            object.__setattr__(self, "start", n)
        elif t + Fraction(1, 2**n) >= 1:
            raise PreconditionError(f"t + 2^-n must be < 1 (t={t}, n={n})")
        if not n < self.depth <= MAX_DEPTH:
            raise PreconditionError(f"depth M must satisfy n < M <= {MAX_DEPTH} (n={n}, M={self.depth})")

    def window(self, m: int) -> tuple[Fraction, Fraction]:
        return self.t + Fraction(1, 2**m), self.t + Fraction(1, 2 ** (m - 1))

    def to_json(self) -> dict:
        from .serialize import curve_to_json
        return {"base": curve_to_json(self.base), "t": format_scalar(self.t),
                "n": self.start, "M": self.depth}


def branch_truncated(plan: BranchPlan, grid=None, tol: float | None = None) -> GeodesicCurve:
    """Depth-``M`` truncation of the branching construction.

    The result agrees with the base on ``[0, t + 2^-M]`` and on
    ``[t + 2^-n, 1]`` and differs from it inside every window.
    """
    gamma = plan.base
    choose = plan.chooser or alternative_geodesic
    current = gamma
    for m in range(plan.start + 1, plan.depth + 1):
        a, b = plan.window(m)
        original = gamma.restrict(a, b)
        sigma = choose(gamma.space, gamma(a), gamma(b), original, grid, tol)
        if not curves_distinct(sigma, original, grid, tol).distinct:
            raise GeodesyError(f"chooser returned the original piece on window {m}")
        current = splice(current, a, b, sigma, tol)
    return current


def distinct_family(gamma: GeodesicCurve, times: Sequence, depth: int, grid=None,
                    tol: float | None = None, chooser=None) -> list[GeodesicCurve]:
    """One branched geodesic per time, each agreeing with gamma up to ``t + 2^-M``."""
    ts = [as_scalar(t) for t in times]
    if any(not a < b for a, b in zip(ts, ts[1:])):
        raise PreconditionError("branch times must be strictly increasing")
    return [branch_truncated(BranchPlan(gamma, t, depth, chooser=chooser), grid, tol) for t in ts]
