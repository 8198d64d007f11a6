"""Finite-level Laakso graphs.

Level 0 is a single edge of length 1.  Each level replaces every edge ``u-v``
of length ``L`` by six edges of length ``L/4``::

            q0
           /  \\
    u --- p    r --- v
           \\  /
            q1

so the two endpoints of the old edge are joined by two geodesics.  Parallel
midpoints are labelled ``q0`` ("lower", branch 0) and ``q1`` ("upper",
branch 1) and receive consecutive vertex ids, which fixes the enumeration
order of geodesics.
"""
from __future__ import annotations

import heapq
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .core import GeodesicCurve, GeodesyError, MetricSpace, SpaceMismatch
from .scalar import as_scalar, format_scalar, parse_scalar

MAX_LEVEL = 6

# child edges of a subdivided edge, as (tail, head) in terms of u, p, q0, q1, r, v
_CHILDREN = (("u", "p"), ("p", "q0"), ("q0", "r"), ("p", "q1"), ("q1", "r"), ("r", "v"))


class LevelCapExceeded(GeodesyError):
    pass


@dataclass(frozen=True)
class LaaksoPoint:
    """A vertex, or a point strictly inside an edge at ``offset`` from its tail."""

    vertex: int | None = None
    edge: int | None = None
    offset: Fraction | None = None

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def __repr__(self):
        if self.is_vertex:
            return f"LaaksoPoint(v{self.vertex})"
        return f"LaaksoPoint(e{self.edge}+{self.offset})"


def dijkstra(source, neighbours):
    """Exact single-source shortest paths; ``neighbours(v)`` yields ``(w, length)``."""
    dist = {source: Fraction(0)}
    done = set()
    tie = itertools.count()
    heap = [(Fraction(0), next(tie), source)]
    while heap:
        d, _, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for w, length in neighbours(v):
            nd = d + length
            if w not in dist or nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, next(tie), w))
    return dist


class LaaksoGraph(MetricSpace):
    kind = "laakso"

    def __init__(self, level: int):
        if not 0 <= level <= MAX_LEVEL:
            raise LevelCapExceeded(f"level must be between 0 and {MAX_LEVEL}, got {level}")
        self.level = level
        self.edge_length = Fraction(1, 4**level)
        arc = [Fraction(0), Fraction(1)]
        layout = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0))]
        edges = [(0, 1)]
        words = [()]
        length = Fraction(1)
        for _ in range(level):
            new_edges, new_words = [], []
            quarter = length / 4
            for (u, v), word in zip(edges, words):
                base = len(arc)
                names = {"u": u, "v": v, "p": base, "q0": base + 1, "q1": base + 2, "r": base + 3}
                a = arc[u]
                arc += [a + quarter, a + 2 * quarter, a + 2 * quarter, a + 3 * quarter]
                (xu, yu), (xv, yv) = layout[u], layout[v]
                lerp = lambda t: (xu + t * (xv - xu), yu + t * (yv - yu))
                mid = lerp(Fraction(1, 2))
                layout += [lerp(Fraction(1, 4)), (mid[0], mid[1] - quarter),
                           (mid[0], mid[1] + quarter), lerp(Fraction(3, 4))]
                for k, (t, h) in enumerate(_CHILDREN):
                    new_edges.append((names[t], names[h]))
                    new_words.append(word + (k,))
            edges, words, length = new_edges, new_words, quarter
        self.arc = tuple(arc)
        self.layout = tuple(layout)
        self.edges = tuple(edges)
        self.words = tuple(words)
        adj = defaultdict(list)
        self._edge_of = {}
        for e, (u, v) in enumerate(edges):
            adj[u].append((v, e))
            adj[v].append((u, e))
            self._edge_of[frozenset((u, v))] = e
        self.adjacency = {v: tuple(sorted(adj[v])) for v in range(len(arc))}
        self._sssp = lru_cache(maxsize=8192)(self._sssp_uncached)

    # -- basic structure ----------------------------------------------------

    def __repr__(self):
        return f"LaaksoGraph(level={self.level})"

    def __eq__(self, other):
        return isinstance(other, LaaksoGraph) and other.level == self.level

    def __hash__(self):
        return hash(("laakso", self.level))

    @property
    def num_vertices(self) -> int:
        return len(self.arc)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def start(self) -> LaaksoPoint:
        return LaaksoPoint(vertex=0)

    @property
    def end(self) -> LaaksoPoint:
        return LaaksoPoint(vertex=1)

    def vertex(self, v: int) -> LaaksoPoint:
        if not 0 <= v < self.num_vertices:
            raise SpaceMismatch(f"no vertex {v} at level {self.level}")
        return LaaksoPoint(vertex=v)

    def point_on_edge(self, e: int, offset) -> LaaksoPoint:
        """Point at ``offset`` from the tail of edge ``e``, normalised to a vertex at the ends."""
        offset = as_scalar(offset)
        if not 0 <= e < self.num_edges or not 0 <= offset <= self.edge_length:
            raise SpaceMismatch(f"invalid edge point ({e}, {offset})")
        if offset == 0:
            return LaaksoPoint(vertex=self.edges[e][0])
        if offset == self.edge_length:
            return LaaksoPoint(vertex=self.edges[e][1])
        return LaaksoPoint(edge=e, offset=offset)

    def contains(self, p) -> bool:
        if not isinstance(p, LaaksoPoint):
            return False
        if p.is_vertex:
            return p.edge is None and 0 <= p.vertex < self.num_vertices
        return (p.edge is not None and 0 <= p.edge < self.num_edges
                and isinstance(p.offset, Fraction) and 0 < p.offset < self.edge_length)

    def edge_between(self, u: int, v: int) -> int | None:
        return self._edge_of.get(frozenset((u, v)))

    # -- distances ------------------------------------------------------------

    def _sssp_uncached(self, v: int):
        L = self.edge_length
        return dijkstra(v, lambda w: ((x, L) for x, _ in self.adjacency[w]))

    def vertex_distance(self, u: int, v: int) -> Fraction:
        return self._sssp(u)[v]

    def integer_frame(self, points):
        """Distances in units of ``edge_length / K`` as plain integers.

        ``K`` clears the denominators of every edge offset among ``points``;
        see :func:`geodesy.core.verify_geodesic` for the contract.
        """
        L = self.edge_length
        k = 1
        for p in points:
            if not p.is_vertex:
                k = k * (p.offset / L).denominator // math.gcd(k, (p.offset / L).denominator)
        hops = {}
        reps = []
        for p in points:
            if p.is_vertex:
                anchors = ((p.vertex, 0),)
                inner = None
            else:
                o = int(p.offset / L * k)
                tail, head = self.edges[p.edge]
                anchors = ((tail, o), (head, k - o))
                inner = (p.edge, o)
            for v, _ in anchors:
                if v not in hops:
                    hops[v] = {w: int(d / L) for w, d in self._sssp(v).items()}
            reps.append((anchors, inner))

        def kernel(a, b):
            if a == b:
                return 0
            best = min(ea + hops[va][vb] * k + eb for va, ea in a[0] for vb, eb in b[0])
            if a[1] is not None and b[1] is not None and a[1][0] == b[1][0]:
                best = min(best, abs(a[1][1] - b[1][1]))
            return best

        def matrix():
            verts = sorted(hops)
            if not reps or len(verts) * k >= 2**40:
                return None
            col = {v: i for i, v in enumerate(verts)}
            H = np.array([[hops[u][v] for v in verts] for u in verts], dtype=np.int64) * k
            av = np.array([[col[a[0][0][0]], col[a[0][-1][0]]] for a in reps])
            ae = np.array([[a[0][0][1], a[0][-1][1]] for a in reps], dtype=np.int64)
            best = None
            for x in (0, 1):
                for y in (0, 1):
                    m = ae[:, x, None] + H[np.ix_(av[:, x], av[:, y])] + ae[None, :, y]
                    best = m if best is None else np.minimum(best, m)
            edge = np.array([-1 if a[1] is None else a[1][0] for a in reps])
            off = np.array([0 if a[1] is None else a[1][1] for a in reps], dtype=np.int64)
            same = (edge[:, None] == edge[None, :]) & (edge[:, None] >= 0)
            best = np.where(same, np.minimum(best, np.abs(off[:, None] - off[None, :])), best)
            np.fill_diagonal(best, 0)
            return best

        return k * 4**self.level, reps, kernel, matrix

    def _anchors(self, p: LaaksoPoint):
        """``(vertex, distance)`` pairs through which every path from p leaves."""
        if p.is_vertex:
            return ((p.vertex, Fraction(0)),)
        tail, head = self.edges[p.edge]
        return ((tail, p.offset), (head, self.edge_length - p.offset))

    def _distance(self, a: LaaksoPoint, b: LaaksoPoint) -> Fraction:
        if a == b:
            return Fraction(0)
        best = min(da + self.vertex_distance(va, vb) + db
                   for va, da in self._anchors(a) for vb, db in self._anchors(b))
        if not a.is_vertex and not b.is_vertex and a.edge == b.edge:
            best = min(best, abs(a.offset - b.offset))
        return best

    def same_point(self, p, q, tol=None) -> bool:
        return p == q

    # -- curves -----------------------------------------------------------------

    def _common_edge(self, p: LaaksoPoint, q: LaaksoPoint) -> int:
        if p.is_vertex and q.is_vertex:
            e = self.edge_between(p.vertex, q.vertex)
        elif p.is_vertex:
            e = q.edge if p.vertex in self.edges[q.edge] else None
        elif q.is_vertex:
            e = p.edge if q.vertex in self.edges[p.edge] else None
        else:
            e = p.edge if p.edge == q.edge else None
        if e is None:
            raise GeodesyError(f"{p} and {q} do not lie on a common edge")
        return e

    def offset_on(self, p: LaaksoPoint, e: int) -> Fraction:
        if not p.is_vertex:
            return p.offset
        return Fraction(0) if self.edges[e][0] == p.vertex else self.edge_length

    def interpolate(self, p, q, alpha):
        if p == q:
            return p
        e = self._common_edge(p, q)
        a, b = self.offset_on(p, e), self.offset_on(q, e)
        return self.point_on_edge(e, a + alpha * (b - a))

    def _as_interval(self, p, q):
        if p == q:
            return None
        e = self._common_edge(p, q)
        return e, self.offset_on(p, e), self.offset_on(q, e)

    def _locate(self, pt: LaaksoPoint, seg):
        """Fraction along ``seg = (e, a, b)`` at which ``pt`` sits, or None."""
        e, a, b = seg
        if pt.is_vertex:
            if pt.vertex not in self.edges[e]:
                return None
            off = self.offset_on(pt, e)
        elif pt.edge == e:
            off = pt.offset
        else:
            return None
        t = (off - a) / (b - a)
        return t if 0 <= t <= 1 else None

    def segment_meet(self, p0, p1, q0, q1, tol=None):
        sa, sb = self._as_interval(p0, p1), self._as_interval(q0, q1)
        if sa is None and sb is None:
            return [(0, 0)] if p0 == q0 else []
        if sa is None:
            beta = self._locate(p0, sb)
            return [] if beta is None else [(0, beta)]
        if sb is None:
            alpha = self._locate(q0, sa)
            return [] if alpha is None else [(alpha, 0)]
        (ea, a0, a1), (eb, b0, b1) = sa, sb
        if ea == eb:
            lo, hi = max(min(a0, a1), min(b0, b1)), min(max(a0, a1), max(b0, b1))
            if lo > hi:
                return []
            offs = [lo] if lo == hi else [lo, (lo + hi) / 2, hi]
            return [((o - a0) / (a1 - a0), (o - b0) / (b1 - b0)) for o in offs]
        out = []
        for w in set(self.edges[ea]) & set(self.edges[eb]):
            alpha = self._locate(LaaksoPoint(vertex=w), sa)
            beta = self._locate(LaaksoPoint(vertex=w), sb)
            if alpha is not None and beta is not None:
                out.append((alpha, beta))
        return sorted(out)

    # -- serialisation --------------------------------------------------------

    def describe(self):
        return {"kind": self.kind, "level": self.level}

    def encode_point(self, p):
        if p.is_vertex:
            return {"vertex": p.vertex}
        return {"edge": p.edge, "offset": format_scalar(p.offset)}

    def decode_point(self, obj, exact=True):
        if not isinstance(obj, dict):
            raise GeodesyError(f"malformed Laakso point: {obj!r}")
        if "vertex" in obj:
            return self.vertex(int(obj["vertex"]))
        try:
            return self.point_on_edge(int(obj["edge"]), parse_scalar(obj["offset"], exact=True))
        except KeyError as exc:
            raise GeodesyError(f"malformed Laakso point: {obj!r}") from exc

    def to_json(self, layout: bool = True) -> dict:
        out = {
            "level": self.level,
            "edge_length": format_scalar(self.edge_length),
            "vertices": [{"id": v, "arc": format_scalar(self.arc[v])} for v in range(self.num_vertices)],
            "edges": [{"id": e, "tail": u, "head": v, "address": "".join(map(str, self.words[e]))}
                      for e, (u, v) in enumerate(self.edges)],
        }
        if layout:
            for v, (x, y) in enumerate(self.layout):
                out["vertices"][v]["x"] = format_scalar(x)
                out["vertices"][v]["y"] = format_scalar(y)
        return out


def build(n: int) -> LaaksoGraph:
    return LaaksoGraph(n)


# ---------------------------------------------------------------------------
# shortest-path DAG between arbitrary points
# ---------------------------------------------------------------------------

class _Overlay:
    """The graph with edges split at given interior points (virtual nodes < 0)."""

    def __init__(self, g: LaaksoGraph, points):
        self.g = g
        self.node = {}
        self.point = {}
        chains = defaultdict(list)
        for pt in points:
            if pt in self.node:
                continue
            if pt.is_vertex:
                self.node[pt] = pt.vertex
                self.point[pt.vertex] = pt
            else:
                vid = -1 - len([k for k in self.point if k < 0])
                self.node[pt] = vid
                self.point[vid] = pt
                chains[pt.edge].append((pt.offset, vid))
        self.split = {}
        self.virtual = defaultdict(list)
        for e, items in chains.items():
            tail, head = g.edges[e]
            seq = [(Fraction(0), tail), *sorted(items), (g.edge_length, head)]
            for (o0, a), (o1, b) in zip(seq, seq[1:]):
                self.virtual[a].append((b, o1 - o0))
                self.virtual[b].append((a, o1 - o0))
            self.split[e] = (seq[1][1], seq[-2][1])

    def __call__(self, v):
        if v < 0:
            return sorted(self.virtual[v])
        out = []
        for w, e in self.g.adjacency[v]:
            if e in self.split:
                continue
            out.append((w, self.g.edge_length))
        out.extend(self.virtual.get(v, ()))
        return sorted(out)

    def to_point(self, v) -> LaaksoPoint:
        return self.point[v] if v in self.point else LaaksoPoint(vertex=v)


def overlay_distance(g: LaaksoGraph, a: LaaksoPoint, b: LaaksoPoint) -> Fraction:
    """Distance by Dijkstra on the graph with ``a`` and ``b``'s edges split."""
    g.check_point(a)
    g.check_point(b)
    ov = _Overlay(g, [a, b])
    return dijkstra(ov.node[a], ov)[ov.node[b]]


def laakso_distance(g: LaaksoGraph, a: LaaksoPoint, b: LaaksoPoint) -> Fraction:
    return g.distance(a, b)


class _DAG:
    def __init__(self, g, a, b):
        if a == b:
            raise GeodesyError("geodesics need distinct endpoints")
        g.check_point(a)
        g.check_point(b)
        ov = _Overlay(g, [a, b])
        self.ov = ov
        self.src, self.dst = ov.node[a], ov.node[b]
        da = dijkstra(self.src, ov)
        db = dijkstra(self.dst, ov)
        self.length = da[self.dst]
        self.succ = {}
        for v, dv in da.items():
            if dv + db[v] != self.length:
                continue
            self.succ[v] = [w for w, l in ov(v) if da.get(w) == dv + l and dv + l + db[w] == self.length]
        self.order = sorted(self.succ, key=lambda v: da[v])

    def count(self) -> int:
        ways = defaultdict(int)
        ways[self.src] = 1
        for v in self.order:
            for w in self.succ[v]:
                ways[w] += ways[v]
        return ways[self.dst]

    def paths(self):
        stack = [(self.src, [self.src])]
        while stack:
            v, path = stack.pop()
            if v == self.dst:
                yield path
                continue
            for w in reversed(self.succ[v]):
                stack.append((w, path + [w]))


def path_curve(g: LaaksoGraph, points) -> GeodesicCurve:
    """Constant-speed curve along consecutive points sharing an edge."""
    lengths = [g.distance(p, q) for p, q in zip(points, points[1:])]
    total = sum(lengths, Fraction(0))
    acc = Fraction(0)
    bps = [(Fraction(0), points[0])]
    for pt, l in zip(points[1:], lengths):
        acc += l
        bps.append((acc / total, pt))
    return GeodesicCurve(g, tuple(bps))


@dataclass(frozen=True)
class GeodesicEnumeration:
    curves: tuple
    count: int

    @property
    def complete(self) -> bool:
        return len(self.curves) == self.count


def count_geodesics(g: LaaksoGraph, a: LaaksoPoint, b: LaaksoPoint) -> int:
    """Number of geodesics from a to b, by dynamic programming on the shortest-path DAG."""
    return _DAG(g, a, b).count()


def enumerate_geodesics(g: LaaksoGraph, a: LaaksoPoint, b: LaaksoPoint, cap: int = 1000) -> GeodesicEnumeration:
    """Geodesics from a to b in lexicographic branch order, at most ``cap`` of them."""
    dag = _DAG(g, a, b)
    curves = []
    for path in dag.paths():
        if len(curves) >= cap:
            break
        curves.append(path_curve(g, [dag.ov.to_point(v) for v in path]))
    count = len(curves) if len(curves) < cap else dag.count()
    return GeodesicEnumeration(tuple(curves), count)
