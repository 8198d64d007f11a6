"""Normed vector spaces, two-leg geodesics and multigeodesicity witnesses.

Three models are provided:

* :class:`PNormSpace` -- ``R^n`` with an ``l^p`` norm;
* :class:`StepFunctionSpace` -- ``L^p(K)`` restricted to step functions on a
  finite partition of ``K`` into cells of known measure;
* :class:`PiecewiseFunctionSpace` -- continuous functions on ``[0, 1]`` that
  are piecewise polynomials of degree at most two, with the ``L^1`` norm.

Between distinct ``u`` and ``v`` there are several geodesics exactly when some
``C`` in ``(0, 1)`` and ``y != C x`` satisfy ``||y|| = C`` and
``||x - y|| = 1 - C`` for the direction ``x = (v - u) / ||v - u||``.
:func:`find_witness` builds such a pair constructively for each model, or
returns a certified negative answer.
"""
from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    GeodesicCurve,
    GeodesyError,
    MetricSpace,
    PreconditionError,
    SpaceMismatch,
    meet_segments,
)
from .scalar import (
    Scalar,
    all_exact,
    as_scalar,
    close,
    exact_sqrt,
    format_scalar,
    is_exact,
    is_zero,
    parse_scalar,
    resolve_tol,
)


class NotUnitVector(GeodesyError):
    pass


def _normalise_p(p):
    if isinstance(p, str):
        p = parse_scalar(p, exact=True)
    if p == math.inf:
        return math.inf
    if p == 1:
        return 1
    if p == 2:
        return 2
    p = float(p)
    if not p > 1:
        raise GeodesyError(f"p must be 1, inf or a real number > 1, got {p}")
    return p


def _p_json(p):
    return "inf" if p == math.inf else p


def _power_mean(weights, values, p) -> Scalar:
    """``(sum w |v|^p)^(1/p)``, exact for p in {1, inf} and for perfect squares at p=2."""
    if p == 1:
        return sum((w * abs(v) for w, v in zip(weights, values)), Fraction(0))
    if p == math.inf:
        return max((abs(v) for w, v in zip(weights, values) if w != 0), default=Fraction(0))
    if p == 2:
        return exact_sqrt(sum((w * v * v for w, v in zip(weights, values)), Fraction(0)))
    total = sum(float(w) * abs(float(v)) ** p for w, v in zip(weights, values))
    return total ** (1.0 / p)


class NormedSpace(MetricSpace):
    """Real normed vector space; the metric is ``||p - q||``."""

    def norm(self, x) -> Scalar:
        raise NotImplementedError

    def add(self, a, b):
        raise NotImplementedError

    def scale(self, a, alpha):
        raise NotImplementedError

    def sub(self, a, b):
        return self.add(a, self.scale(b, -1))

    def zero(self):
        raise NotImplementedError

    def coordinates(self, points) -> list[tuple]:
        """Coordinate tuples of ``points`` in one common finite frame."""
        raise NotImplementedError

    def random_point(self, rng):
        raise NotImplementedError

    def _distance(self, p, q):
        return self.norm(self.sub(p, q))

    def interpolate(self, p, q, alpha):
        return self.add(p, self.scale(self.sub(q, p), alpha))

    def same_point(self, p, q, tol=None):
        tol = resolve_tol(tol)
        return all(is_zero(c, tol) for c in self.coordinates([self.sub(p, q)])[0])

    def segment_meet(self, p0, p1, q0, q1, tol=None):
        c = self.coordinates([p0, p1, q0, q1])
        return meet_segments(c[0], c[1], c[2], c[3], resolve_tol(tol))


class _TupleSpace(NormedSpace):
    """Shared plumbing for spaces whose points are fixed-length tuples."""

    dim: int

    def contains(self, p) -> bool:
        return isinstance(p, tuple) and len(p) == self.dim

    def add(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def scale(self, a, alpha):
        return tuple(alpha * x for x in a)

    def sub(self, a, b):
        return tuple(x - y for x, y in zip(a, b))

    def zero(self):
        return (Fraction(0),) * self.dim

    def coordinates(self, points):
        return [tuple(p) for p in points]

    def _weights(self):
        return (1,) * self.dim

    def integer_frame(self, points):
        """Common integer rescaling of exact points for polyhedral norms.

        Returns ``(denom, int_points, kernel)`` with
        ``d(p_i, p_j) == kernel(P_i, P_j) / denom``, or None when not applicable.
        """
        if self.p not in (1, math.inf) or not all(all_exact(*p) for p in points):
            return None
        scale = 1
        for p in points:
            for c in p:
                scale = math.lcm(scale, Fraction(c).denominator)
        ints = [tuple(int(c * scale) for c in p) for p in points]
        if self.p == math.inf:
            return (scale, ints, lambda a, b: max(abs(x - y) for x, y in zip(a, b)),
                    lambda: _pair_matrix(ints, None))
        ws = [Fraction(w) for w in self._weights()]
        wscale = 1
        for w in ws:
            wscale = math.lcm(wscale, w.denominator)
        wi = tuple(int(w * wscale) for w in ws)
        mat = lambda: _pair_matrix(ints, wi)
        if len(set(wi)) == 1:
            w0 = wi[0]
            return scale * wscale, ints, lambda a, b: w0 * sum(abs(x - y) for x, y in zip(a, b)), mat
        return scale * wscale, ints, lambda a, b: sum(w * abs(x - y) for w, x, y in zip(wi, a, b)), mat

    def encode_point(self, p):
        return [format_scalar(c) for c in p]

    def decode_point(self, obj, exact=True):
        if not isinstance(obj, list):
            raise GeodesyError(f"expected a coordinate list, got {obj!r}")
        p = tuple(parse_scalar(c, exact) for c in obj)
        self.check_point(p)
        return p


def _pair_matrix(ints, weights):
    """All pairwise weighted l1 (or sup when ``weights`` is None) kernels as int64."""
    if not ints:
        return None
    bound = max(max(abs(c) for c in p) for p in ints)
    wmax = max(weights) if weights else 1
    dim = len(ints[0])
    if 2 * bound * wmax * max(dim, 1) >= 2**40:
        return None
    arr = np.asarray(ints, dtype=np.int64).reshape(len(ints), dim)
    diff = np.abs(arr[:, None, :] - arr[None, :, :])
    if weights is None:
        return diff.max(axis=2) if dim else np.zeros((len(ints), len(ints)), dtype=np.int64)
    return diff @ np.asarray(weights, dtype=np.int64)


@dataclass(frozen=True)
class PNormSpace(_TupleSpace):
    """``(R^n, ||.||_p)``; exact for p in {1, inf}, approximate otherwise."""

    dim: int
    p: object = 1
    kind = "pnorm"

    def __post_init__(self):
        if self.dim < 1:
            raise GeodesyError("dimension must be positive")
        object.__setattr__(self, "p", _normalise_p(self.p))

    @property
    def polyhedral(self) -> bool:
        return self.p in (1, math.inf)

    def norm(self, x):
        return _power_mean((1,) * self.dim, x, self.p)

    def random_point(self, rng):
        return tuple(Fraction(int(k), 1000) for k in rng.integers(-1000, 1001, size=self.dim))

    def describe(self):
        return {"kind": self.kind, "n": self.dim, "p": _p_json(self.p)}


@dataclass(frozen=True)
class StepFunctionSpace(_TupleSpace):
    """Step functions on a partition of ``K`` into cells of measure ``measures``."""

    measures: tuple
    p: object = 1
    kind = "step"

    def __post_init__(self):
        ms = tuple(as_scalar(m) for m in self.measures)
        if not ms or any(m <= 0 for m in ms):
            raise GeodesyError("cell measures must be positive")
        object.__setattr__(self, "measures", ms)
        object.__setattr__(self, "p", _normalise_p(self.p))

    @property
    def dim(self) -> int:
        return len(self.measures)

    @property
    def total_measure(self) -> Scalar:
        return sum(self.measures, Fraction(0))

    @classmethod
    def uniform(cls, cells: int, p=1) -> "StepFunctionSpace":
        return cls(tuple(Fraction(1, cells) for _ in range(cells)), p)

    def indicator(self, cells=None):
        """``chi_E`` for a set of cell indices (default: all of K)."""
        chosen = set(range(self.dim)) if cells is None else set(cells)
        return tuple(Fraction(1 if i in chosen else 0) for i in range(self.dim))

    def norm(self, x):
        return _power_mean(self.measures, x, self.p)

    def _weights(self):
        return self.measures

    def split_cell(self, j: int, x):
        """Refine cell ``j`` into two halves; returns the new space and ``x`` in it."""
        half = self.measures[j] / 2
        ms = self.measures[:j] + (half, half) + self.measures[j + 1:]
        return StepFunctionSpace(ms, self.p), x[:j] + (x[j], x[j]) + x[j + 1:]

    def random_point(self, rng):
        return tuple(Fraction(int(k), 1000) for k in rng.integers(-1000, 1001, size=self.dim))

    def describe(self):
        return {"kind": self.kind, "measures": [format_scalar(m) for m in self.measures],
                "p": _p_json(self.p)}


# ---------------------------------------------------------------------------
# piecewise polynomials on [0, 1]
# ---------------------------------------------------------------------------

def _strip(coeffs):
    c = list(coeffs)
    while c and is_exact(c[-1]) and c[-1] == 0:
        c.pop()
    return tuple(c) if c else (Fraction(0),)


def _pad(coeffs, n):
    return tuple(coeffs) + (Fraction(0),) * (n - len(coeffs))


def _poly_eval(c, x):
    acc = Fraction(0) if is_exact(x) else 0.0
    for a in reversed(c):
        acc = acc * x + a
    return acc


def _antiderivative(c, x):
    return sum((a * x ** (k + 1) / (k + 1) for k, a in enumerate(c)), Fraction(0))


def _roots_inside(c, a, b):
    """Real roots of the polynomial strictly inside ``(a, b)``, sorted."""
    c = _strip(c)
    deg = len(c) - 1
    if deg == 0:
        return []
    if deg == 1:
        roots = [-c[0] / c[1]]
    elif deg == 2:
        c0, c1, c2 = c
        disc = c1 * c1 - 4 * c2 * c0
        if disc < 0:
            return []
        sq = exact_sqrt(disc)
        roots = [(-c1 - sq) / (2 * c2), (-c1 + sq) / (2 * c2)]
    else:
        roots = [float(r.real) for r in np.roots([float(v) for v in reversed(c)])
                 if abs(r.imag) < 1e-12]
    return sorted({r for r in roots if a < r < b})


def _split_integrals(c, a, b):
    """``(integral of f+, integral of f-)`` for a polynomial on ``[a, b]``."""
    cuts = [a, *_roots_inside(c, a, b), b]
    pos = neg = Fraction(0)
    for x0, x1 in zip(cuts, cuts[1:]):
        piece = _antiderivative(c, x1) - _antiderivative(c, x0)
        if piece > 0:
            pos += piece
        else:
            neg -= piece
    return pos, neg


@dataclass(frozen=True, eq=False)
class PiecewiseFunction:
    """Piecewise polynomial on ``[0, 1]``.

    ``breaks`` is ``0 = b_0 < ... < b_k = 1`` and ``pieces[i]`` holds the
    ascending coefficients of the polynomial on ``[b_i, b_{i+1}]``.
    """

    breaks: tuple
    pieces: tuple

    def __post_init__(self):
        br = tuple(as_scalar(b) for b in self.breaks)
        pcs = tuple(_strip(tuple(as_scalar(a) for a in c)) for c in self.pieces)
        if len(br) < 2 or br[0] != 0 or br[-1] != 1:
            raise GeodesyError("breakpoints must run from 0 to 1")
        if any(not x < y for x, y in zip(br, br[1:])):
            raise GeodesyError("breakpoints must be strictly increasing")
        if len(pcs) != len(br) - 1:
            raise GeodesyError("need exactly one polynomial per interval")
        object.__setattr__(self, "breaks", br)
        object.__setattr__(self, "pieces", pcs)

    @classmethod
    def polynomial(cls, *coeffs) -> "PiecewiseFunction":
        return cls((0, 1), (coeffs,))

    @classmethod
    def linear_through(cls, knots: Sequence, values: Sequence) -> "PiecewiseFunction":
        """Continuous piecewise-linear interpolant of ``values`` at ``knots``."""
        ks = [as_scalar(k) for k in knots]
        vs = [as_scalar(v) for v in values]
        pieces = []
        for (x0, y0), (x1, y1) in zip(zip(ks, vs), zip(ks[1:], vs[1:])):
            slope = (y1 - y0) / (x1 - x0)
            pieces.append((y0 - slope * x0, slope))
        return cls(tuple(ks), tuple(pieces))

    @property
    def degree(self) -> int:
        return max(len(c) - 1 for c in self.pieces)

    @property
    def exact(self) -> bool:
        return all_exact(*self.breaks, *itertools.chain.from_iterable(self.pieces))

    def __call__(self, x):
        x = as_scalar(x)
        i = min(max(bisect.bisect_right(self.breaks, x) - 1, 0), len(self.pieces) - 1)
        return _poly_eval(self.pieces[i], x)

    def refine(self, breaks) -> "PiecewiseFunction":
        new = tuple(sorted(set(self.breaks) | {as_scalar(b) for b in breaks}))
        pieces = []
        for x0, x1 in zip(new, new[1:]):
            i = bisect.bisect_right(self.breaks, x0) - 1
            pieces.append(self.pieces[i])
        return PiecewiseFunction(new, tuple(pieces))

    def _combine(self, other, op):
        joint = sorted(set(self.breaks) | set(other.breaks))
        a, b = self.refine(joint), other.refine(joint)
        pieces = []
        for ca, cb in zip(a.pieces, b.pieces):
            n = max(len(ca), len(cb))
            pieces.append(tuple(op(x, y) for x, y in zip(_pad(ca, n), _pad(cb, n))))
        return PiecewiseFunction(tuple(joint), tuple(pieces))

    def __add__(self, other):
        return self._combine(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._combine(other, lambda x, y: x - y)

    def __neg__(self):
        return self * -1

    def __mul__(self, alpha):
        if isinstance(alpha, PiecewiseFunction):
            return NotImplemented
        return PiecewiseFunction(self.breaks, tuple(tuple(alpha * a for a in c) for c in self.pieces))

    __rmul__ = __mul__

    def times_x(self) -> "PiecewiseFunction":
        """``x -> x * f(x)``."""
        return PiecewiseFunction(self.breaks, tuple((Fraction(0),) + c for c in self.pieces))

    def simplify(self) -> "PiecewiseFunction":
        breaks, pieces = [self.breaks[0]], []
        for x1, c in zip(self.breaks[1:], self.pieces):
            if pieces and pieces[-1] == c:
                breaks[-1] = x1
            else:
                pieces.append(c)
                breaks.append(x1)
        return PiecewiseFunction(tuple(breaks), tuple(pieces))

    def is_continuous(self, tol: float | None = None) -> bool:
        tol = resolve_tol(tol)
        for i, x in enumerate(self.breaks[1:-1]):
            left, right = _poly_eval(self.pieces[i], x), _poly_eval(self.pieces[i + 1], x)
            if not close(left, right, tol)[0]:
                return False
        return True

    def parts_integrals(self) -> tuple[Scalar, Scalar]:
        """Integrals of the positive and negative parts over ``[0, 1]``."""
        pos = neg = Fraction(0)
        for (a, b), c in zip(zip(self.breaks, self.breaks[1:]), self.pieces):
            pp, nn = _split_integrals(c, a, b)
            pos += pp
            neg += nn
        return pos, neg

    def integral(self) -> Scalar:
        pos, neg = self.parts_integrals()
        return pos - neg

    def l1_norm(self) -> Scalar:
        pos, neg = self.parts_integrals()
        return pos + neg

    def coefficient_vector(self, breaks) -> tuple:
        ref = self.refine(breaks)
        return tuple(itertools.chain.from_iterable(_pad(c, 3) for c in ref.pieces))

    def __eq__(self, other):
        if not isinstance(other, PiecewiseFunction):
            return NotImplemented
        diff = self - other
        return all(all(is_exact(a) and a == 0 for a in c) for c in diff.pieces)

    def __hash__(self):
        s = self.simplify()
        return hash((s.breaks, s.pieces))

    def __repr__(self):
        return f"PiecewiseFunction(breaks={self.breaks!r}, pieces={self.pieces!r})"


@dataclass(frozen=True)
class PiecewiseFunctionSpace(NormedSpace):
    """Continuous piecewise polynomials of degree <= 2 on ``[0, 1]`` with ``L^1``."""

    p: object = 1
    max_degree: int = 2
    kind = "pwfun"

    def __post_init__(self):
        if _normalise_p(self.p) != 1:
            raise GeodesyError("piecewise function spaces support only p = 1")
        object.__setattr__(self, "p", 1)

    def contains(self, f) -> bool:
        return (isinstance(f, PiecewiseFunction) and f.degree <= self.max_degree
                and f.is_continuous())

    def norm(self, f):
        return f.l1_norm()

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def scale(self, a, alpha):
        return a * alpha

    def zero(self):
        return PiecewiseFunction.polynomial(0)

    def coordinates(self, points):
        joint = sorted(set().union(*(f.breaks for f in points)))
        return [f.coefficient_vector(joint) for f in points]

    def random_point(self, rng):
        k = int(rng.integers(1, 4))
        knots = [Fraction(0)] + sorted({Fraction(int(t), 16) for t in rng.integers(1, 16, size=k)}) + [Fraction(1)]
        values = [Fraction(int(v), 8) for v in rng.integers(-8, 9, size=len(knots))]
        return PiecewiseFunction.linear_through(knots, values)

    def describe(self):
        return {"kind": self.kind}

    def encode_point(self, f):
        return {"breakpoints": [format_scalar(b) for b in f.breaks],
                "pieces": [[format_scalar(a) for a in c] for c in f.pieces]}

    def decode_point(self, obj, exact=True):
        try:
            f = PiecewiseFunction(
                tuple(parse_scalar(b, exact) for b in obj["breakpoints"]),
                tuple(tuple(parse_scalar(a, exact) for a in c) for c in obj["pieces"]),
            )
        except (KeyError, TypeError) as exc:
            raise GeodesyError(f"malformed piecewise function: {obj!r}") from exc
        self.check_point(f)
        return f


def norm(space: NormedSpace, x) -> Scalar:
    space.check_point(x)
    return space.norm(x)


# ---------------------------------------------------------------------------
# geodesic constructors
# ---------------------------------------------------------------------------

def segment_geodesic(space: NormedSpace, u, v) -> GeodesicCurve:
    """The straight segment from ``u`` to ``v``."""
    if space.same_point(u, v):
        raise PreconditionError("segment endpoints must be distinct")
    return GeodesicCurve(space, ((0, u), (1, v)))


def _two_leg_residuals(space, u, v, x, C):
    d = space.norm(space.sub(u, v))
    return space.norm(space.sub(x, u)) - C * d, space.norm(space.sub(v, x)) - (1 - C) * d


def two_leg_geodesic(space: NormedSpace, u, v, x, C, tol: float | None = None) -> GeodesicCurve:
    """Geodesic ``u -> x -> v`` reaching the intermediate point at parameter ``C``.

    Requires ``||x - u|| = C ||u - v||`` and ``||v - x|| = (1 - C) ||u - v||``.
    """
    tol = resolve_tol(tol)
    C = as_scalar(C)
    if not 0 < C < 1:
        raise PreconditionError(f"C must lie in (0, 1), got {C}")
    for p in (u, v, x):
        space.check_point(p)
    if space.same_point(u, v, tol):
        raise PreconditionError("endpoints must be distinct")
    r_start, r_end = _two_leg_residuals(space, u, v, x, C)
    failed = []
    if not close(r_start, 0, tol)[0]:
        failed.append(f"||x - u|| - C||u - v|| = {r_start}")
    if not close(r_end, 0, tol)[0]:
        failed.append(f"||v - x|| - (1 - C)||u - v|| = {r_end}")
    if failed:
        raise PreconditionError("intermediate point off the metric segment: " + "; ".join(failed))
    if space.same_point(x, space.interpolate(u, v, C), tol):
        return segment_geodesic(space, u, v)
    return GeodesicCurve(space, ((0, u), (C, x), (1, v)))


def family_point(space: NormedSpace, x, y, lam):
    """``lam * x + (1 - lam) * y``."""
    return space.add(space.scale(x, lam), space.scale(y, 1 - lam))


def family_geodesic(space: NormedSpace, u, v, x, y, C, lam, tol: float | None = None) -> GeodesicCurve:
    """Member ``lam`` of the convex family of two-leg geodesics spanned by x and y."""
    tol = resolve_tol(tol)
    lam, C = as_scalar(lam), as_scalar(C)
    if not 0 <= lam <= 1:
        raise PreconditionError(f"lambda must lie in [0, 1], got {lam}")
    for label, pt in (("x", x), ("y", y)):
        r1, r2 = _two_leg_residuals(space, u, v, pt, C)
        if not (close(r1, 0, tol)[0] and close(r2, 0, tol)[0]):
            raise PreconditionError(f"{label} is not an intermediate point for C={C}: residuals {r1}, {r2}")
    f = family_point(space, x, y, lam)
    d = space.norm(space.sub(u, v))
    # convexity gives <=; the triangle inequality upgrades both to equalities
    if not close(space.norm(space.sub(f, u)), C * d, tol)[0]:
        raise GeodesyError("triangle equality failed for the interpolated point")
    if not close(space.norm(space.sub(v, f)), (1 - C) * d, tol)[0]:
        raise GeodesyError("triangle equality failed for the interpolated point")
    return two_leg_geodesic(space, u, v, f, C, tol)


# ---------------------------------------------------------------------------
# witnesses
# ---------------------------------------------------------------------------

FOUND = "found"
NONE_CERTIFIED = "none_certified"
NONE_FOUND = "none_found"


@dataclass(frozen=True)
class Witness:
    """Outcome of a witness search for the unit vector ``x``.

    When ``status == "found"``: ``||y|| = C``, ``||x - y|| = 1 - C`` and
    ``y != C x``.  ``space`` is the space holding ``x`` and ``y``; it differs
    from the queried space only when a step-function cell had to be split.
    """

    status: str
    x: object
    space: NormedSpace
    C: Scalar | None = None
    y: object = None
    reason: str = ""
    residuals: tuple = ()

    @property
    def found(self) -> bool:
        return self.status == FOUND

    def to_json(self) -> dict:
        out = {"status": self.status, "reason": self.reason,
               "space": self.space.describe(), "x": self.space.encode_point(self.x)}
        if self.found:
            out["C"] = format_scalar(self.C)
            out["y"] = self.space.encode_point(self.y)
            out["residuals"] = {"norm_y_minus_C": format_scalar(self.residuals[0]),
                                "norm_x_minus_y_minus_1_minus_C": format_scalar(self.residuals[1])}
        return out


def _validated(space, x, C, y, reason, tol) -> Witness:
    r1 = space.norm(y) - C
    r2 = space.norm(space.sub(x, y)) - (1 - C)
    if not (0 < C < 1 and close(r1, 0, tol)[0] and close(r2, 0, tol)[0]):
        raise GeodesyError(f"constructed witness failed validation: C={C}, residuals {r1}, {r2}")
    if space.same_point(y, space.scale(x, C), tol):
        raise GeodesyError("constructed witness coincides with C*x")
    return Witness(FOUND, x, space, C, y, reason, (r1, r2))


def _l1_axis_certificate(x) -> str:
    return ("l1 sphere intersection is a single point: |y_k| + |x_k - y_k| + "
            "2 sum_{i != k} |y_i| = 1 forces y = C x")


def _linf_witness(space, x, weights_positive, tol):
    """Perturb ``x / 2`` along a coordinate where ``|x_j| < 1``."""
    for j, xj in enumerate(x):
        if not weights_positive[j]:
            continue
        if abs(xj) < 1 and not close(abs(xj), 1, tol)[0]:
            C = Fraction(1, 2)
            eps = (1 - abs(xj)) / 2
            y = tuple(C * xi + (eps if i == j else 0) for i, xi in enumerate(x))
            return _validated(space, x, C, y, f"l-inf: x/2 shifted along coordinate {j}", tol)
    return None


def _step_l1_witness(space: StepFunctionSpace, g, tol) -> Witness:
    masses = [m * abs(v) for m, v in zip(space.measures, g)]
    prefix = list(itertools.accumulate(masses))
    half = Fraction(1, 2) if is_exact(prefix[-1]) else 0.5
    k = next(i for i, m in enumerate(prefix) if m >= half or close(m, half, tol)[0])
    one = lambda m: close(m, 1, tol)[0]
    if not one(prefix[k]):
        cells = range(k + 1)
    elif k > 0 and not is_zero(prefix[k - 1], tol):
        cells = range(k)
    else:
        # all the mass sits in cell k: split it so that E takes half of it
        refined, gx = space.split_cell(k, g)
        cells = range(k + 1)
        y = tuple(v if i in cells else 0 * v for i, v in enumerate(gx))
        C = refined.norm(y)
        return _validated(refined, gx, C, y, f"g * chi_E with E = first half of cell {k}", tol)
    y = tuple(v if i in cells else 0 * v for i, v in enumerate(g))
    C = space.norm(y)
    return _validated(space, g, C, y, f"g * chi_E with E = cells 0..{cells[-1]}", tol)


def _random_search(space: NormedSpace, x, seed, tries, tol) -> Witness:
    """Generic fallback: random perturbations of ``C x``; never certifies."""
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        C = Fraction(int(rng.integers(1, 100)), 100)
        y = space.add(space.scale(x, C), space.scale(space.random_point(rng), Fraction(1, 1000)))
        r1 = space.norm(y) - C
        if not close(r1, 0, tol)[0]:
            continue
        r2 = space.norm(space.sub(x, y)) - (1 - C)
        if close(r2, 0, tol)[0] and not space.same_point(y, space.scale(x, C), tol):
            return Witness(FOUND, x, space, C, y, "random search", (r1, r2))
    return Witness(NONE_FOUND, x, space, reason=f"random search exhausted after {tries} tries")


def check_unit(space: NormedSpace, x, tol: float | None = None) -> None:
    tol = resolve_tol(tol)
    try:
        space.check_point(x)
    except SpaceMismatch as exc:
        raise NotUnitVector(str(exc)) from exc
    n = space.norm(x)
    if not close(n, 1, tol)[0]:
        raise NotUnitVector(f"expected a unit vector, ||x|| = {n}")


def find_witness(space: NormedSpace, x, tol: float | None = None, seed: int = 0,
                 tries: int = 200) -> Witness:
    """Constructive search for ``(C, y)`` with ``||y|| = C``, ``||x-y|| = 1-C``, ``y != Cx``."""
    tol = resolve_tol(tol)
    check_unit(space, x, tol)

    if isinstance(space, PNormSpace):
        if space.p == 1:
            support = [i for i, c in enumerate(x) if not is_zero(c, tol)]
            if len(support) < 2:
                return Witness(NONE_CERTIFIED, x, space, reason=_l1_axis_certificate(x))
            k = support[0]
            y = tuple(c if i == k else 0 * c for i, c in enumerate(x))
            return _validated(space, x, abs(x[k]), y, f"keep coordinate {k}", tol)
        if space.p == math.inf:
            w = _linf_witness(space, x, [True] * space.dim, tol)
            if w is not None:
                return w
            return Witness(NONE_CERTIFIED, x, space,
                           reason="l-inf cube vertex maximises the Euclidean norm on the unit ball")
        return Witness(NONE_CERTIFIED, x, space, reason="strict convexity")

    if isinstance(space, StepFunctionSpace):
        if space.p == 1:
            return _step_l1_witness(space, x, tol)
        if space.p == math.inf:
            w = _linf_witness(space, x, [True] * space.dim, tol)
            if w is not None:
                return w
            return Witness(NONE_CERTIFIED, x, space,
                           reason="|x| = 1 on every cell forces y = C x cellwise")
        return Witness(NONE_CERTIFIED, x, space, reason="Holder equality forces constant")

    if isinstance(space, PiecewiseFunctionSpace):
        if x.degree <= space.max_degree - 1:
            h = x.times_x()
            return _validated(space, x, h.l1_norm(), h, "h(t) = t g(t)", tol)
        return _random_search(space, x, seed, tries, tol)

    return _random_search(space, x, seed, tries, tol)


def witness_geodesics(space: NormedSpace, u, v, tol: float | None = None, seed: int = 0,
                      tries: int = 200):
    """Two distinct geodesics ``u -> v`` from a witness for ``(v - u)/||v - u||``.

    Returns ``(segment, two_leg)`` or None when no witness exists.  The
    witness is computed at the origin and carried back by scaling and
    translation, then re-validated by :func:`two_leg_geodesic`.
    """
    tol = resolve_tol(tol)
    d = space.norm(space.sub(v, u))
    x = space.scale(space.sub(v, u), 1 / d)
    w = find_witness(space, x, tol, seed, tries)
    if not w.found or w.space != space:
        return None
    mid = space.add(u, space.scale(w.y, d))
    return segment_geodesic(space, u, v), two_leg_geodesic(space, u, v, mid, w.C, tol)


@dataclass(frozen=True)
class MultigeodesicReport:
    verdict: str
    witnesses: tuple
    offending: object = None

    @property
    def multigeodesic(self) -> bool:
        return self.verdict == "multigeodesic on sample"


def is_multigeodesic(space: NormedSpace, sample: Sequence, tol: float | None = None,
                     seed: int = 0) -> MultigeodesicReport:
    """Run :func:`find_witness` over a sample of unit vectors."""
    if not sample:
        raise GeodesyError("need a nonempty sample of unit vectors")
    witnesses = tuple(find_witness(space, x, tol, seed) for x in sample)
    for w in witnesses:
        if w.status == NONE_CERTIFIED:
            return MultigeodesicReport("not multigeodesic", witnesses, w.x)
    if all(w.found for w in witnesses):
        return MultigeodesicReport("multigeodesic on sample", witnesses)
    return MultigeodesicReport("inconclusive", witnesses)


def _rational_sphere_point(rng, n):
    """Exact point on the Euclidean unit sphere via inverse stereographic projection."""
    t = [Fraction(int(k), 97) for k in rng.integers(-300, 301, size=n - 1)]
    s2 = sum(a * a for a in t)
    return tuple([2 * a / (1 + s2) for a in t] + [(s2 - 1) / (1 + s2)])


def sample_unit_vectors(space: NormedSpace, count: int, seed: int = 0) -> list:
    """Seeded unit vectors, exact whenever the norm allows it."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        if isinstance(space, PNormSpace) and space.p == 2:
            out.append(_rational_sphere_point(rng, space.dim) if space.dim > 1
                       else (Fraction(1 if rng.integers(2) else -1),))
            continue
        p = space.random_point(rng)
        n = space.norm(p)
        if is_zero(n, 0.0):
            continue
        out.append(space.scale(p, 1 / n))
    return out


# ---------------------------------------------------------------------------
# negative certificates
# ---------------------------------------------------------------------------

def euclid_max_point(space: PNormSpace, samples: int = 20000, seed: int = 0) -> tuple:
    """Unit vector maximising the Euclidean norm over the unit ball.

    Polyhedral norms are handled by enumerating the vertices of the ball;
    other norms by dense seeded sampling of the sphere (``samples`` random
    directions plus all axis and diagonal directions).  Ties go to the
    lexicographically largest candidate.
    """
    if not isinstance(space, PNormSpace):
        raise GeodesyError("euclid_max_point needs a finite-dimensional p-norm space")
    n = space.dim
    if space.p in (1, 2):
        return tuple(Fraction(1 if i == 0 else 0) for i in range(n))
    if space.p == math.inf:
        return (Fraction(1),) * n
    rng = np.random.default_rng(seed)
    dirs = [np.eye(n)[i] * s for i in range(n) for s in (1, -1)]
    dirs += [np.array(signs, dtype=float) for signs in itertools.product((1, -1), repeat=n)]
    dirs += list(rng.normal(size=(samples, n)))
    best, best_val = None, -1.0
    for d in dirs:
        d = d / (np.sum(np.abs(d) ** space.p) ** (1 / space.p))
        val = float(np.linalg.norm(d))
        cand = tuple(float(c) for c in d)
        if val > best_val + 1e-12 or (abs(val - best_val) <= 1e-12 and cand > best):
            best, best_val = cand, max(val, best_val)
    return best


def _project_ball(y, radius, p):
    """Euclidean projection of ``y`` onto ``{||z||_p <= radius}`` (radial for general p)."""
    if p == math.inf:
        return np.clip(y, -radius, radius)
    if p == 1:
        a = np.abs(y)
        if a.sum() <= radius:
            return y
        mu = np.sort(a)[::-1]
        cs = np.cumsum(mu)
        ks = np.arange(1, len(y) + 1)
        rho = np.nonzero(mu * ks > (cs - radius))[0][-1]
        theta = (cs[rho] - radius) / (rho + 1)
        return np.sign(y) * np.maximum(a - theta, 0)
    nrm = float(np.sum(np.abs(y) ** p) ** (1 / p))
    return y if nrm <= radius else y * (radius / nrm)


def _pnorm_float(y, p):
    if p == math.inf:
        return float(np.max(np.abs(y)))
    return float(np.sum(np.abs(y) ** p) ** (1 / p))


def _sphere_candidate(x, C, y, p, iters=200):
    """Approximate point of ``B(0, C) cap B(x, 1 - C)`` by alternating projection.

    In the Euclidean case the two spheres meet in a set whose affine hull is
    the radical hyperplane ``<y, x> = C``; projecting onto it first avoids the
    slow convergence of alternating projection between tangent balls.
    """
    if p == 2:
        xx = float(x @ x)
        y = y - ((y @ x) - C * xx) / xx * x
        orth = y - (y @ x) / xx * x
        r2 = C * C - (C * C * xx)
        on = float(np.linalg.norm(orth))
        y = C * x + (orth * (math.sqrt(r2) / on) if r2 > 0 and on > 0 else 0 * orth)
        return y
    for _ in range(iters):
        y = _project_ball(y, C, p)
        y = x + _project_ball(y - x, 1 - C, p)
        if _pnorm_float(y, p) <= C + 1e-15:
            break
    return y


@dataclass(frozen=True)
class ExactSolutionSet:
    """Solutions of ``||y||_1 = C``, ``||x - y||_1 = 1 - C`` in the plane."""

    points: tuple
    segments: tuple

    @property
    def unique(self):
        pts = set(self.points)
        return not self.segments and len(pts) == 1

    @property
    def only_point(self):
        return next(iter(set(self.points))) if self.unique else None


def l1_plane_solutions(x, C) -> ExactSolutionSet:
    """Exact case analysis over the sign patterns of ``y`` and ``x - y``.

    On each closed cell of the arrangement ``{y_i = 0}``, ``{y_i = x_i}`` both
    norms are linear, so the two equations become a 2x2 linear system.
    """
    x = tuple(as_scalar(c) for c in x)
    C = as_scalar(C)
    if len(x) != 2:
        raise GeodesyError("the exact sign-pattern analysis is for the plane")
    per_coord = []
    for xi in x:
        cuts = sorted({Fraction(0), xi})
        bounds = [None, *cuts, None]
        per_coord.append([(bounds[k], bounds[k + 1]) for k in range(len(bounds) - 1)])

    def sample(lo, hi):
        if lo is None:
            return hi - 1
        if hi is None:
            return lo + 1
        return (lo + hi) / 2

    points, segments = [], []
    for cell in itertools.product(*per_coord):
        mids = [sample(lo, hi) for lo, hi in cell]
        sig = [1 if m > 0 else -1 for m in mids]
        tau = [1 if xi - m > 0 else -1 for xi, m in zip(x, mids)]
        # sig.y = C ; -tau.y = 1 - C - tau.x
        a = (sig[0], sig[1])
        b = (-tau[0], -tau[1])
        rhs_a = C
        rhs_b = 1 - C - tau[0] * x[0] - tau[1] * x[1]

        def inside(y):
            return all((lo is None or y[i] >= lo) and (hi is None or y[i] <= hi)
                       for i, (lo, hi) in enumerate(cell))

        det = a[0] * b[1] - a[1] * b[0]
        if det != 0:
            y = ((rhs_a * b[1] - a[1] * rhs_b) / det, (a[0] * rhs_b - rhs_a * b[0]) / det)
            if inside(y):
                points.append(y)
            continue
        k = b[0] * a[0]  # rows are +-1 vectors, so b = k * a
        if rhs_b != k * rhs_a:
            continue
        # line y1 = s, y2 = (C - a0 s) / a1 intersected with the cell
        lo_s, hi_s = cell[0]
        y2lo, y2hi = cell[1]
        bounds_lo, bounds_hi = [lo_s], [hi_s]
        for bound, is_lower in ((y2lo, True), (y2hi, False)):
            if bound is None:
                continue
            # (C - a0 s)/a1 >= bound  (or <=)
            s_star = (C - a[1] * bound) / a[0]
            decreasing = (a[0] * a[1]) > 0
            if is_lower != decreasing:
                bounds_lo.append(s_star)
            else:
                bounds_hi.append(s_star)
        los = [v for v in bounds_lo if v is not None]
        his = [v for v in bounds_hi if v is not None]
        lo = max(los) if los else None
        hi = min(his) if his else None
        if lo is not None and hi is not None and lo > hi:
            continue
        if lo is not None and hi is not None and lo == hi:
            points.append((lo, (C - a[0] * lo) / a[1]))
            continue
        ends = tuple(None if s is None else (s, (C - a[0] * s) / a[1]) for s in (lo, hi))
        segments.append(ends)
    return ExactSolutionSet(tuple(points), tuple(segments))


@dataclass(frozen=True)
class UniquenessVerdict:
    ok: bool
    samples: int
    candidates: int
    max_deviation: float
    point_tol: float
    residual_tol: float
    exact_check: str | None = None
    failure: tuple | None = None
    note: str = ""


def uniqueness_certificate(space: PNormSpace, x, samples: int = 10000, seed: int = 0,
                           tol: float | None = None, exact_samples: int | None = None) -> UniquenessVerdict:
    """Sample the sphere intersection for ``x`` and check it collapses to ``C x``.

    Candidates must satisfy both norm identities to ``tol``.  For polyhedral
    norms they are then required to equal ``C x`` to ``tol``; for curved norms
    the balls are tangent, so a residual ``tol`` only pins ``y`` down to
    ``sqrt(tol)``.  In the l1 plane an exact sign-pattern analysis is run on
    rational rounding of the sampled ``C`` values as well.
    """
    tol = resolve_tol(tol)
    check_unit(space, x, tol)
    p = space.p
    xf = np.array([float(c) for c in x])
    rng = np.random.default_rng(seed)
    point_tol = tol if space.polyhedral else math.sqrt(tol)
    cands, worst, failure = 0, 0.0, None
    Cs = []
    for _ in range(samples):
        C = float(rng.uniform(0.001, 0.999))
        Cs.append(C)
        y0 = C * xf + rng.normal(scale=0.5, size=xf.shape)
        y = _sphere_candidate(xf, C, y0, p)
        r = max(abs(_pnorm_float(y, p) - C), abs(_pnorm_float(xf - y, p) - (1 - C)))
        if r > tol:
            continue
        cands += 1
        dev = float(np.linalg.norm(y - C * xf))
        worst = max(worst, dev)
        if dev > point_tol and failure is None:
            failure = (C, tuple(float(c) for c in y))

    exact_check = None
    if p == 1 and space.dim == 2 and all_exact(*x):
        n_exact = len(Cs) if exact_samples is None else min(exact_samples, len(Cs))
        exact_check = "unique"
        for C in Cs[:n_exact]:
            Cq = Fraction(C).limit_denominator(10**6)
            sol = l1_plane_solutions(x, Cq)
            if not sol.unique or sol.only_point != tuple(Cq * c for c in x):
                exact_check = f"not unique at C={Cq}"
                break
    ok = cands > 0 and failure is None and exact_check in (None, "unique")
    note = "" if cands else "sampler produced no candidate"
    return UniquenessVerdict(ok, samples, cands, worst, point_tol, tol, exact_check, failure, note)


@dataclass(frozen=True)
class HolderVerdict:
    ok: bool
    samples: int
    min_margin: float
    constant_max_error: float
    worst: tuple | None = None


def holder_negative_check(space: StepFunctionSpace, samples: int = 1000, seed: int = 0,
                          margin: float = 1e-12) -> HolderVerdict:
    """``||f||_p + ||chi_K - f||_p > 1`` for nonconstant f, ``= 1`` for constant f in [0, 1]."""
    if not isinstance(space, StepFunctionSpace) or space.p == 1:
        raise GeodesyError("the Holder check needs a step-function space with p > 1")
    if space.total_measure != 1:
        raise GeodesyError("the Holder check assumes mu(K) = 1")
    rng = np.random.default_rng(seed)
    chi = space.indicator()
    min_margin, worst = math.inf, None
    done = 0
    while done < samples:
        f = tuple(float(v) for v in rng.uniform(-1.0, 2.0, size=space.dim))
        if max(f) - min(f) < 1e-6:
            continue
        done += 1
        total = float(space.norm(f)) + float(space.norm(space.sub(chi, f)))
        if total - 1 < min_margin:
            min_margin, worst = total - 1, f
    const_err = 0.0
    for C in [Fraction(1, 2), *(float(c) for c in rng.uniform(0, 1, size=max(1, samples // 10)))]:
        f = space.scale(chi, C)
        total = float(space.norm(f)) + float(space.norm(space.sub(chi, f)))
        const_err = max(const_err, abs(total - 1))
    ok = min_margin > margin and const_err <= margin
    return HolderVerdict(ok, samples, min_margin, const_err, worst)
