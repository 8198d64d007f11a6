"""Metric spaces, parametrised curves and the geodesic verification engine.

A geodesic from ``u`` to ``v`` is a map ``gamma: [0, 1] -> X`` with
``d(gamma(s), gamma(t)) == |s - t| * d(u, v)`` for every pair of parameters.
The continuum condition is checked on a finite :class:`ParamGrid` that always
contains every breakpoint of the curves under test.  For piecewise curves with
exact scalars this is complete: between consecutive breakpoints both the curve
and the metric restricted to it are affine in the parameter.
"""
from __future__ import annotations

import abc
import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .scalar import Scalar, as_scalar, close, is_exact, is_zero, leq, resolve_tol


class GeodesyError(ValueError):
    """Base class for every error raised by the package."""


class SpaceMismatch(GeodesyError):
    """A point does not belong to the space it was used with."""


class DegenerateCurve(GeodesyError):
    """A curve whose endpoints coincide; geodesics need distinct endpoints."""


class EndpointMismatch(GeodesyError):
    """Two curves (or a curve and a point) were expected to share endpoints."""


class PreconditionError(GeodesyError):
    """A construction was called with data violating its hypotheses."""


class MetricSpace(abc.ABC):
    """A metric space together with the interpolation rule used by curves."""

    kind: str = "abstract"

    @abc.abstractmethod
    def contains(self, p) -> bool: ...

    @abc.abstractmethod
    def _distance(self, p, q) -> Scalar: ...

    @abc.abstractmethod
    def interpolate(self, p, q, alpha):
        """Point at fraction ``alpha`` of the elementary segment from p to q."""

    def distance(self, p, q) -> Scalar:
        self.check_point(p)
        self.check_point(q)
        return self._distance(p, q)

    def check_point(self, p) -> None:
        if not self.contains(p):
            raise SpaceMismatch(f"{p!r} is not a point of {self!r}")

    def same_point(self, p, q, tol: float | None = None) -> bool:
        return is_zero(self._distance(p, q), resolve_tol(tol))

    def segment_meet(self, p0, p1, q0, q1, tol: float | None = None):
        """Parameter pairs ``(alpha, beta)`` where two elementary segments meet.

        Overlapping segments report both ends of the overlap and its midpoint.
        Spaces without an exact intersection routine raise NotImplementedError.
        """
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    def encode_point(self, p):
        raise NotImplementedError

    def decode_point(self, obj, exact: bool = True):
        raise NotImplementedError


def distance(space: MetricSpace, p, q) -> Scalar:
    return space.distance(p, q)


# ---------------------------------------------------------------------------
# exact segment intersection in coordinates
# ---------------------------------------------------------------------------

def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _locate(base, d, pt, tol):
    """``tau`` with ``base + tau * d == pt``, or None if pt is off the line."""
    w = _sub(pt, base)
    dd = sum(c * c for c in d)
    tau = sum(a * b for a, b in zip(w, d)) / dd
    if all(is_zero(w_k - tau * d_k, tol) for w_k, d_k in zip(w, d)):
        return tau
    return None


def _in_unit(x, tol) -> bool:
    return leq(0, x, tol)[0] and leq(x, 1, tol)[0]


def meet_segments(p0, p1, q0, q1, tol: float) -> list[tuple[Scalar, Scalar]]:
    """Intersect segments ``[p0, p1]`` and ``[q0, q1]`` given as coordinate tuples.

    Exact when every coordinate is rational.
    """
    d1, d2, r = _sub(p1, p0), _sub(q1, q0), _sub(q0, p0)
    d1_zero = all(is_zero(c, tol) for c in d1)
    d2_zero = all(is_zero(c, tol) for c in d2)
    if d1_zero and d2_zero:
        return [(0, 0)] if all(is_zero(c, tol) for c in r) else []
    if d1_zero:
        beta = _locate(q0, d2, p0, tol)
        return [(0, beta)] if beta is not None and _in_unit(beta, tol) else []
    if d2_zero:
        alpha = _locate(p0, d1, q0, tol)
        return [(alpha, 0)] if alpha is not None and _in_unit(alpha, tol) else []

    n = len(d1)
    for i in range(n):
        if is_zero(d1[i], tol) and is_zero(d2[i], tol):
            continue
        for j in range(i + 1, n):
            det = d2[i] * d1[j] - d1[i] * d2[j]
            if is_zero(det, tol):
                continue
            alpha = (d2[i] * r[j] - r[i] * d2[j]) / det
            beta = (d1[i] * r[j] - d1[j] * r[i]) / det
            if not all(is_zero(alpha * a - beta * b - c, tol) for a, b, c in zip(d1, d2, r)):
                return []
            if _in_unit(alpha, tol) and _in_unit(beta, tol):
                return [(alpha, beta)]
            return []

    # parallel directions
    a0 = _locate(p0, d1, q0, tol)
    if a0 is None:
        return []
    a1 = _locate(p0, d1, q1, tol)
    lo, hi = max(Fraction(0), min(a0, a1)), min(Fraction(1), max(a0, a1))
    if not leq(lo, hi, tol)[0]:
        return []

    def beta_of(alpha):
        return (alpha - a0) / (a1 - a0)

    if is_zero(hi - lo, tol):
        return [(lo, beta_of(lo))]
    mid = (lo + hi) / 2
    return [(lo, beta_of(lo)), (mid, beta_of(mid)), (hi, beta_of(hi))]


# ---------------------------------------------------------------------------
# curves and grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GeodesicCurve:
    """Piecewise curve ``[0, 1] -> space`` through ``(parameter, point)`` pairs.

    Between consecutive breakpoints the space's own interpolation rule is used
    (affine in vector spaces, along a single edge in graphs).
    """

    space: MetricSpace
    breakpoints: tuple

    def __post_init__(self):
        bps = tuple((as_scalar(s), p) for s, p in self.breakpoints)
        if len(bps) < 2:
            raise GeodesyError("a curve needs at least two breakpoints")
        if bps[0][0] != 0 or bps[-1][0] != 1:
            raise GeodesyError("breakpoint parameters must start at 0 and end at 1")
        for (s0, _), (s1, _) in zip(bps, bps[1:]):
            if not s0 < s1:
                raise GeodesyError("breakpoint parameters must be strictly increasing")
        for _, p in bps:
            self.space.check_point(p)
        object.__setattr__(self, "breakpoints", bps)

    @property
    def params(self) -> tuple:
        return tuple(s for s, _ in self.breakpoints)

    @property
    def points(self) -> tuple:
        return tuple(p for _, p in self.breakpoints)

    @property
    def start(self):
        return self.breakpoints[0][1]

    @property
    def end(self):
        return self.breakpoints[-1][1]

    @property
    def exact(self) -> bool:
        return all(is_exact(s) for s in self.params)

    def segments(self):
        """Yield ``(s0, s1, p0, p1)`` for each elementary piece."""
        for (s0, p0), (s1, p1) in zip(self.breakpoints, self.breakpoints[1:]):
            yield s0, s1, p0, p1

    def __call__(self, s):
        s = as_scalar(s)
        params = self.params
        if s < 0 or s > 1:
            raise GeodesyError(f"parameter {s} outside [0, 1]")
        i = bisect.bisect_left(params, s)
        if i < len(params) and params[i] == s:
            return self.breakpoints[i][1]
        s0, p0 = self.breakpoints[i - 1]
        s1, p1 = self.breakpoints[i]
        return self.space.interpolate(p0, p1, (s - s0) / (s1 - s0))

    def restrict(self, a, b) -> "GeodesicCurve":
        """The portion over ``[a, b]``, reparametrised onto ``[0, 1]``."""
        a, b = as_scalar(a), as_scalar(b)
        if not 0 <= a < b <= 1:
            raise GeodesyError("restriction needs 0 <= a < b <= 1")
        inner = [(s, p) for s, p in self.breakpoints if a < s < b]
        bps = [(a, self(a))] + inner + [(b, self(b))]
        return GeodesicCurve(self.space, tuple(((s - a) / (b - a), p) for s, p in bps))


class ParametricCurve:
    """A curve given by an arbitrary callable; verification on it is grid-only."""

    def __init__(self, space: MetricSpace, func: Callable, knots: Sequence = (0, 1)):
        self.space = space
        self.func = func
        ks = tuple(sorted(set(as_scalar(k) for k in knots) | {Fraction(0), Fraction(1)}))
        self.breakpoints = tuple((k, func(k)) for k in ks)

    params = GeodesicCurve.params
    points = GeodesicCurve.points
    start = GeodesicCurve.start
    end = GeodesicCurve.end
    exact = False

    def __call__(self, s):
        return self.func(as_scalar(s))


@dataclass(frozen=True)
class ParamGrid:
    """``{0, 1/N, ..., 1}`` together with any extra parameters."""

    resolution: int = 100
    extra: tuple = ()
    params: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.resolution < 1:
            raise GeodesyError("grid resolution must be a positive integer")
        n = self.resolution
        values = {Fraction(k, n) for k in range(n + 1)}
        values.update(as_scalar(e) for e in self.extra)
        if any(v < 0 or v > 1 for v in values):
            raise GeodesyError("grid parameters must lie in [0, 1]")
        object.__setattr__(self, "params", tuple(sorted(values)))

    def with_curves(self, *curves) -> "ParamGrid":
        extra = set(self.extra)
        for c in curves:
            extra.update(c.params)
        return ParamGrid(self.resolution, tuple(sorted(extra)))


def _grid_for(grid, *curves) -> ParamGrid:
    if grid is None:
        grid = ParamGrid()
    elif isinstance(grid, int):
        grid = ParamGrid(grid)
    return grid.with_curves(*curves)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    ok: bool
    check: str
    witness_pair: tuple | None = None
    lhs: Scalar | None = None
    rhs: Scalar | None = None
    tolerance: float = 0.0
    pairs_checked: int = 0

    @property
    def verdict(self) -> str:
        return "pass" if self.ok else "fail"

    def __bool__(self) -> bool:
        return self.ok


class InconsistentMetric(AssertionError):
    """Upper-bound verification passed but equality failed: not a metric."""


def _endpoints_distance(curve) -> Scalar:
    space = curve.space
    d = space.distance(curve.start, curve.end)
    if is_zero(d, 0.0):
        raise DegenerateCurve("curve endpoints coincide; a geodesic needs distinct endpoints")
    return d


def _check_pairs(curve, grid, tol, compare, check) -> Verdict:
    tol = resolve_tol(tol)
    total = _endpoints_distance(curve)
    params = _grid_for(grid, curve).params
    space = curve.space
    pts = [curve(s) for s in params]
    frame = getattr(space, "integer_frame", None)
    if frame is not None and is_exact(total) and all(is_exact(s) for s in params):
        scaled = frame(pts)
        if scaled is not None:
            return _check_pairs_integer(params, total, scaled, compare is close, check)
    used = 0.0
    count = 0
    for i, s in enumerate(params):
        p = pts[i]
        for j in range(i + 1, len(params)):
            t = params[j]
            lhs = space._distance(p, pts[j])
            rhs = (t - s) * total
            ok, spent = compare(lhs, rhs, tol)
            used = max(used, spent)
            count += 1
            if not ok:
                return Verdict(False, check, (s, t), lhs, rhs, used, count)
    return Verdict(True, check, None, None, None, used, count)


_INT64_SAFE = 2**62


def _check_pairs_matrix(params, steps, total, denom, kmat, a, b, equality, check) -> Verdict | None:
    """Vectorised form of the integer pair loop; None when int64 could overflow."""
    n = len(steps)
    kmax = int(kmat.max()) if n else 0
    if kmax * a >= _INT64_SAFE or (steps[-1] - steps[0]) * abs(b) >= _INT64_SAFE:
        return None
    st = np.asarray(steps, dtype=np.int64)
    lhs = kmat * a
    rhs = (st[None, :] - st[:, None]) * b
    bad = (lhs != rhs) if equality else (lhs > rhs)
    bad &= np.triu(np.ones((n, n), dtype=bool), k=1)
    hits = np.argwhere(bad)
    if len(hits) == 0:
        return Verdict(True, check, None, None, None, 0.0, n * (n - 1) // 2)
    i, j = (int(v) for v in hits[0])
    count = i * (n - 1) - i * (i - 1) // 2 + (j - i)
    s, t = params[i], params[j]
    return Verdict(False, check, (s, t), Fraction(int(kmat[i, j]), denom), (t - s) * total, 0.0, count)


def _check_pairs_integer(params, total, scaled, equality, check) -> Verdict:
    """Exact pair loop over integers: ``d(p_i, p_j) = kernel(P_i, P_j) / denom``.

    A frame may carry a fourth entry, a callable returning the full int64
    matrix of kernel values (or None), which enables a vectorised check.
    """
    denom, ints, kernel = scaled[:3]
    q = 1
    for s in params:
        q = q * s.denominator // math.gcd(q, s.denominator)
    steps = [int(s * q) for s in params]
    total = Fraction(total)
    a = q * total.denominator
    b = total.numerator * denom
    if len(scaled) > 3:
        kmat = scaled[3]()
        if kmat is not None:
            v = _check_pairs_matrix(params, steps, total, denom, kmat, a, b, equality, check)
            if v is not None:
                return v
    count = 0
    for i, si in enumerate(steps):
        pi = ints[i]
        for j in range(i + 1, len(steps)):
            lhs = kernel(pi, ints[j]) * a
            rhs = (steps[j] - si) * b
            count += 1
            if lhs != rhs if equality else lhs > rhs:
                s, t = params[i], params[j]
                return Verdict(False, check, (s, t), Fraction(kernel(pi, ints[j]), denom),
                               (t - s) * total, 0.0, count)
    return Verdict(True, check, None, None, None, 0.0, count)


def verify_geodesic(curve, grid=None, tol: float | None = None) -> Verdict:
    """Check ``d(gamma(s), gamma(t)) == |s - t| d(u, v)`` on every grid pair.

    The first violating pair in lexicographic order is reported.
    """
    return _check_pairs(curve, grid, tol, close, "equality")


def verify_geodesic_upper(curve, grid=None, tol: float | None = None) -> Verdict:
    """Relaxed check ``d(gamma(s), gamma(t)) <= |s - t| d(u, v)``.

    Passing the relaxed check forces equality through the triangle
    inequality; that consequence is re-checked and a mismatch raises
    :class:`InconsistentMetric`.
    """
    upper = _check_pairs(curve, grid, tol, leq, "upper")
    if upper.ok:
        # d(u,v) <= d(u,g(s)) + d(g(s),g(t)) + d(g(t),v) <= d(u,v) forces equality
        full = _check_pairs(curve, grid, tol, close, "equality")
        if not full.ok:
            raise InconsistentMetric(
                f"upper bound holds but equality fails at {full.witness_pair}; "
                "the distance violates the triangle inequality"
            )
        return Verdict(True, "upper", None, None, None,
                       max(upper.tolerance, full.tolerance), upper.pairs_checked)
    return upper


# ---------------------------------------------------------------------------
# comparing curves
# ---------------------------------------------------------------------------

def _check_same_ends(a, b, tol) -> None:
    if a.space is not b.space and a.space != b.space:
        raise EndpointMismatch("curves live in different spaces")
    space = a.space
    if not (space.same_point(a.start, b.start, tol) and space.same_point(a.end, b.end, tol)):
        raise EndpointMismatch("curves do not share their endpoints")


def _is_piecewise_exact(*curves) -> bool:
    return all(isinstance(c, GeodesicCurve) and c.exact for c in curves)


@dataclass(frozen=True)
class Distinctness:
    distinct: bool
    at: Scalar | None = None
    exact: bool = False

    @property
    def verdict(self) -> str:
        if self.distinct:
            return "distinct"
        return "indistinguishable" if self.exact else "indistinguishable on grid"


def curves_distinct(a, b, grid=None, tol: float | None = None) -> Distinctness:
    """Pointwise comparison of two curves with common endpoints.

    For exact piecewise curves the grid includes every breakpoint of both, so
    agreement everywhere on it means the two functions coincide.
    """
    tol = resolve_tol(tol)
    _check_same_ends(a, b, tol)
    exact = _is_piecewise_exact(a, b)
    for s in _grid_for(grid, a, b).params:
        if not a.space.same_point(a(s), b(s), tol):
            return Distinctness(True, s, exact)
    return Distinctness(False, None, exact)


@dataclass(frozen=True)
class Disjointness:
    disjoint: bool
    at: tuple | None = None
    exact: bool = False

    @property
    def verdict(self) -> str:
        return "disjoint" if self.disjoint else "intersect"


def _meets_exact(a, b, tol):
    space = a.space
    u, v = a.start, a.end
    for s0, s1, p0, p1 in a.segments():
        for t0, t1, q0, q1 in b.segments():
            for alpha, beta in space.segment_meet(p0, p1, q0, q1, tol):
                s = s0 + alpha * (s1 - s0)
                t = t0 + beta * (t1 - t0)
                pt = space.interpolate(p0, p1, alpha)
                if space.same_point(pt, u, tol) or space.same_point(pt, v, tol):
                    continue
                return s, t
    return None


def curves_disjoint(a, b, grid=None, tol: float | None = None) -> Disjointness:
    """Do the images of two curves meet away from the shared endpoints?

    Piecewise curves in spaces with an exact segment routine are decided
    segment pair by segment pair; otherwise interior grid points are compared.
    """
    tol = resolve_tol(tol)
    _check_same_ends(a, b, tol)
    if isinstance(a, GeodesicCurve) and isinstance(b, GeodesicCurve):
        try:
            hit = _meets_exact(a, b, tol)
        except NotImplementedError:
            pass
        else:
            return Disjointness(hit is None, hit, _is_piecewise_exact(a, b))
    params = _grid_for(grid, a, b).params[1:-1]
    space = a.space
    pa = [a(s) for s in params]
    pb = [b(t) for t in params]
    for i, s in enumerate(params):
        for j, t in enumerate(params):
            if space.same_point(pa[i], pb[j], tol):
                return Disjointness(False, (s, t), False)
    return Disjointness(True, None, False)


@dataclass(frozen=True)
class Deviation:
    """Bracket ``(agree, differ]`` around the infimum of deviation times.

    When ``exact`` is set both curves are affine on the bracket and differ on
    all of it, so the infimum equals ``agree``.
    """

    agree: Scalar
    differ: Scalar
    exact: bool = False


def first_deviation(a, b, grid=None, tol: float | None = None) -> Deviation | None:
    tol = resolve_tol(tol)
    _check_same_ends(a, b, tol)
    params = _grid_for(grid, a, b).params
    prev = params[0]
    for s in params[1:]:
        if not a.space.same_point(a(s), b(s), tol):
            return Deviation(prev, s, _is_piecewise_exact(a, b))
        prev = s
    return None


def concatenate(space: MetricSpace, pieces: Iterable[tuple[Scalar, Any]]) -> GeodesicCurve:
    """Curve through the given ``(parameter, point)`` pairs, merging repeats."""
    bps = []
    for s, p in pieces:
        s = as_scalar(s)
        if bps and bps[-1][0] == s:
            continue
        bps.append((s, p))
    return GeodesicCurve(space, tuple(bps))
