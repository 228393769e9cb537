"""Exact planar primitives, the MWT instance model, and PSLG face extraction.

Input coordinates are rationals.  An :class:`Instance` rescales them by the
common denominator so that every incidence predicate runs on integers (numpy
``int64`` when magnitudes allow it, Python ints otherwise).  Lengths and costs
are floats since they are irrational in general.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, cmp_to_key
from typing import Iterable, Sequence

import numpy as np

# Above this magnitude the int64 cross products could overflow.
_INT64_SAFE = 1 << 30


class InstanceError(ValueError):
    """Raised for malformed or degenerate input point sets."""


class GeometryError(ValueError):
    """Raised when a geometric precondition (non-crossing, simplicity) fails."""


@dataclass(frozen=True)
class Point:
    id: int
    x: Fraction
    y: Fraction


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    length: float
    is_boundary: bool

    @property
    def key(self) -> tuple[int, int]:
        return (self.u, self.v)

    @property
    def cost(self) -> float:
        return self.length if self.is_boundary else self.length / 2


@dataclass(frozen=True)
class EmptyTriangle:
    id: int
    vertices: tuple[int, int, int]  # counterclockwise
    edges: tuple[tuple[int, int], tuple[int, int], tuple[int, int]]
    cost: float

    @property
    def key(self) -> tuple[int, int, int]:
        return tuple(sorted(self.vertices))


@dataclass(frozen=True)
class Face:
    boundary: tuple[int, ...]  # counterclockwise walk
    is_convex: bool
    is_empty: bool
    is_simple: bool = True


def edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def _xy(p):
    if isinstance(p, Point):
        return p.x, p.y
    return p[0], p[1]


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def cross(a, b, c):
    """Twice the signed area of triangle abc (exact for exact inputs)."""
    ax, ay = _xy(a)
    bx, by = _xy(b)
    cx, cy = _xy(c)
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def orientation(a, b, c) -> int:
    """Sign of (b - a) x (c - a): +1 counterclockwise, -1 clockwise, 0 collinear."""
    return _sign(cross(a, b, c))


def _strictly_between(a, b, p) -> bool:
    # p is assumed collinear with a and b
    ax, ay = _xy(a)
    bx, by = _xy(b)
    px, py = _xy(p)
    return (px - ax) * (bx - ax) + (py - ay) * (by - ay) > 0 and (px - bx) * (ax - bx) + (py - by) * (ay - by) > 0


def segments_cross(e1, e2) -> bool:
    """True iff the open interiors of two segments intersect.

    Segments are pairs of points.  Touching at an endpoint (including a
    T-junction) is not a crossing; collinear overlap of interiors is.
    """
    a, b = e1
    c, d = e2
    o1, o2 = orientation(a, b, c), orientation(a, b, d)
    o3, o4 = orientation(c, d, a), orientation(c, d, b)
    if o1 == o2 == o3 == o4 == 0:
        ax, ay = _xy(a)
        bx, by = _xy(b)
        dx, dy = bx - ax, by - ay

        def t(p):
            px, py = _xy(p)
            return (px - ax) * dx + (py - ay) * dy

        lo1, hi1 = sorted((t(a), t(b)))
        lo2, hi2 = sorted((t(c), t(d)))
        return max(lo1, lo2) < min(hi1, hi2)
    return o1 * o2 < 0 and o3 * o4 < 0


def parse_coordinate(text: str) -> Fraction:
    return Fraction(text.strip())


def _convex_hull(keys: list[tuple[int, int]], order: list[int]) -> list[int]:
    """Monotone chain keeping collinear boundary points; returns CCW ids."""
    pts = sorted(order, key=lambda i: keys[i])

    def cr(o, a, b):
        return cross(keys[o], keys[a], keys[b])

    lower: list[int] = []
    for i in pts:
        while len(lower) >= 2 and cr(lower[-2], lower[-1], i) < 0:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in reversed(pts):
        while len(upper) >= 2 and cr(upper[-2], upper[-1], i) < 0:
            upper.pop()
        upper.append(i)
    return lower[:-1] + upper[:-1]


class Instance:
    """A planar point set with its convex hull and lazily built catalogs."""

    def __init__(self, coords: Sequence[tuple]):
        pts = [(Fraction(x), Fraction(y)) for x, y in coords]
        if len(pts) < 3:
            raise InstanceError(f"need at least 3 points, got {len(pts)}")
        seen: dict[tuple[Fraction, Fraction], int] = {}
        for i, p in enumerate(pts):
            if p in seen:
                raise InstanceError(f"duplicate point {p[0]} {p[1]} (ids {seen[p]} and {i})")
            seen[p] = i
        if all(cross(pts[0], pts[1], p) == 0 for p in pts[2:]):
            raise InstanceError("all points are collinear")

        self.points = [Point(i, x, y) for i, (x, y) in enumerate(pts)]
        self.n = len(pts)
        denom = 1
        for x, y in pts:
            denom = math.lcm(denom, x.denominator, y.denominator)
        self.scale = denom
        ints = [(int(x * denom), int(y * denom)) for x, y in pts]
        self.int_coords = ints
        big = max(max(abs(x), abs(y)) for x, y in ints)
        dtype = np.int64 if big < _INT64_SAFE else object
        self.X = np.array([x for x, _ in ints], dtype=dtype)
        self.Y = np.array([y for _, y in ints], dtype=dtype)
        self.xy = np.array([[float(x), float(y)] for x, y in pts])
        self.hull = _convex_hull(ints, list(range(self.n)))
        h = len(self.hull)
        self.boundary_keys = frozenset(edge_key(self.hull[i], self.hull[(i + 1) % h]) for i in range(h))

    @classmethod
    def from_file(cls, path) -> "Instance":
        with open(path) as fh:
            return cls.from_text(fh.read())

    @classmethod
    def from_text(cls, text: str) -> "Instance":
        coords = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InstanceError(f"line {lineno}: expected 'x y', got {raw!r}")
            try:
                coords.append((parse_coordinate(parts[0]), parse_coordinate(parts[1])))
            except (ValueError, ZeroDivisionError) as exc:
                raise InstanceError(f"line {lineno}: bad coordinate in {raw!r} ({exc})") from None
        return cls(coords)

    def to_text(self) -> str:
        return "".join(f"{p.x} {p.y}\n" for p in self.points)

    # -- exact integer predicates -------------------------------------------

    def orient(self, a: int, b: int, c: int) -> int:
        ic = self.int_coords
        return _sign(cross(ic[a], ic[b], ic[c]))

    def orient_many(self, a: int, b: int, cs=None) -> np.ndarray:
        """Signs of orient(a, b, c) for every c (or every c in ``cs``)."""
        X, Y = self.X, self.Y
        if cs is None:
            xs, ys = X, Y
        else:
            xs, ys = X[cs], Y[cs]
        v = (X[b] - X[a]) * (ys - Y[a]) - (Y[b] - Y[a]) * (xs - X[a])
        return np.sign(v).astype(np.int8)

    def sq_dist(self, a: int, b: int) -> int:
        (ax, ay), (bx, by) = self.int_coords[a], self.int_coords[b]
        return (ax - bx) ** 2 + (ay - by) ** 2

    def length(self, a: int, b: int) -> float:
        (ax, ay), (bx, by) = self.int_coords[a], self.int_coords[b]
        return math.hypot(ax - bx, ay - by) / self.scale

    def crosses(self, e1: tuple[int, int], e2: tuple[int, int]) -> bool:
        ic = self.int_coords
        return segments_cross((ic[e1[0]], ic[e1[1]]), (ic[e2[0]], ic[e2[1]]))

    def is_boundary(self, u: int, v: int) -> bool:
        return edge_key(u, v) in self.boundary_keys

    def edge_cost(self, u: int, v: int) -> float:
        length = self.length(u, v)
        return length if self.is_boundary(u, v) else length / 2

    def triangle_cost(self, a: int, b: int, c: int) -> float:
        return self.edge_cost(a, b) + self.edge_cost(b, c) + self.edge_cost(c, a)

    def ccw(self, a: int, b: int, c: int) -> tuple[int, int, int]:
        return (a, b, c) if self.orient(a, b, c) > 0 else (a, c, b)

    def hull_area2(self) -> int:
        """Twice the hull area, in scaled integer units."""
        ic = self.int_coords
        h = self.hull
        return sum(cross(ic[h[0]], ic[h[i]], ic[h[i + 1]]) for i in range(1, len(h) - 1))

    # -- catalogs --------------------------------------------------------------

    @cached_property
    def potential_mask(self) -> np.ndarray:
        return _potential_mask(self)

    @cached_property
    def edges(self) -> dict[tuple[int, int], Edge]:
        return {e.key: e for e in enumerate_potential_edges(self)}

    def edge(self, u: int, v: int) -> Edge:
        return self.edges[edge_key(u, v)]

    @cached_property
    def triangles(self) -> list[EmptyTriangle]:
        return enumerate_empty_triangles(self)

    @cached_property
    def triangle_index(self) -> dict[tuple[int, int, int], EmptyTriangle]:
        return {t.key: t for t in self.triangles}

    def find_triangle(self, a: int, b: int, c: int) -> EmptyTriangle:
        return self.triangle_index[tuple(sorted((a, b, c)))]


def _potential_mask(inst: Instance) -> np.ndarray:
    n = inst.n
    X, Y = inst.X, inst.Y
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n - 1):
        js = np.arange(i + 1, n)
        dx = (X[js] - X[i])[:, None]
        dy = (Y[js] - Y[i])[:, None]
        kx = (X - X[i])[None, :]
        ky = (Y - Y[i])[None, :]
        col = dx * ky - dy * kx == 0
        ahead = dx * kx + dy * ky > 0
        behind = dx * (kx - dx) + dy * (ky - dy) < 0
        blocked = np.any(col & ahead & behind, axis=1)
        ok = ~blocked.astype(bool)
        mask[i, js] = ok
        mask[js, i] = ok
    return mask


def enumerate_potential_edges(inst: Instance) -> list[Edge]:
    """All point pairs whose open segment avoids every other point."""
    mask = inst.potential_mask
    out = []
    for i in range(inst.n):
        for j in np.nonzero(mask[i, i + 1:])[0] + i + 1:
            j = int(j)
            out.append(Edge(i, j, inst.length(i, j), edge_key(i, j) in inst.boundary_keys))
    return out


def _angular_ranks(inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    """R[v, w]: rank of the direction v->w in counterclockwise order around v
    (equal directions share a rank); G[v]: number of distinct directions."""
    n = inst.n
    R = np.zeros((n, n), dtype=np.int64)
    G = np.ones(n, dtype=np.int64)
    ic = inst.int_coords
    for v in range(n):
        prev, g = None, 0
        for w in sort_by_angle(inst, v, [w for w in range(n) if w != v]):
            d = (ic[w][0] - ic[v][0], ic[w][1] - ic[v][1])
            if prev is not None and _angle_cmp(prev, d) != 0:
                g += 1
            R[v, w] = g
            prev = d
        G[v] = g + 1
    return R, G


def _empty_apexes(inst: Instance, a: int, b: int, ranks) -> np.ndarray:
    """Points c left of ab with the closed triangle abc free of other points.

    For p left of ab, p lies in abc iff its angle at a (from ab) and its angle
    at b (from ba) are both at most those of c, so the empty apexes are the
    minimal elements of that exact rank order."""
    R, G = ranks
    L = np.nonzero(inst.orient_many(a, b) > 0)[0]
    if len(L) == 0:
        return L
    ra = (R[a, L] - R[a, b]) % G[a]
    rb = (R[b, a] - R[b, L]) % G[b]
    order = np.lexsort((rb, ra))
    rbs = rb[order]
    dominated = np.zeros(len(L), dtype=bool)
    dominated[order[1:]] = np.minimum.accumulate(rbs)[:-1] <= rbs[1:]
    return L[~dominated]


def enumerate_empty_triangles(inst: Instance, allowed: Iterable[tuple[int, int]] | None = None) -> list[EmptyTriangle]:
    """Empty triangles of the instance, optionally restricted to those whose
    three edges all lie in ``allowed``.  Ordered by sorted vertex triple."""
    n = inst.n
    if allowed is None:
        adj = inst.potential_mask.copy()
    else:
        adj = np.zeros((n, n), dtype=bool)
        for u, v in allowed:
            adj[u, v] = adj[v, u] = True
    ranks = _angular_ranks(inst)
    out: list[EmptyTriangle] = []
    for i in range(n):
        for j in np.nonzero(adj[i, i + 1:])[0] + i + 1:
            j = int(j)
            cand = adj[i] & adj[j]
            cand[: j + 1] = False
            if not cand.any():
                continue
            for a, b in ((i, j), (j, i)):
                apex = _empty_apexes(inst, a, b, ranks)
                for k in apex[cand[apex]]:
                    k = int(k)
                    verts = (a, b, k)
                    edges = (edge_key(a, b), edge_key(b, k), edge_key(k, a))
                    out.append(EmptyTriangle(-1, verts, edges, inst.triangle_cost(a, b, k)))
    out.sort(key=lambda t: t.key)
    return [EmptyTriangle(idx, t.vertices, t.edges, t.cost) for idx, t in enumerate(out)]


# -- faces ---------------------------------------------------------------------


def _angle_cmp(d1, d2) -> int:
    def half(d):
        x, y = d
        return 0 if (y > 0 or (y == 0 and x > 0)) else 1

    h1, h2 = half(d1), half(d2)
    if h1 != h2:
        return h1 - h2
    c = d1[0] * d2[1] - d1[1] * d2[0]
    return -1 if c > 0 else (1 if c < 0 else 0)


def sort_by_angle(inst: Instance, v: int, nbrs: Iterable[int]) -> list[int]:
    """Neighbours of ``v`` in counterclockwise angular order starting at +x."""
    vx, vy = inst.int_coords[v]
    dirs = {w: (inst.int_coords[w][0] - vx, inst.int_coords[w][1] - vy) for w in nbrs}
    return sorted(dirs, key=cmp_to_key(lambda a, b: _angle_cmp(dirs[a], dirs[b]) or (a - b)))


def polygon_area2(inst: Instance, boundary: Sequence[int]) -> int:
    ic = inst.int_coords
    s = 0
    m = len(boundary)
    for i in range(m):
        (x1, y1), (x2, y2) = ic[boundary[i]], ic[boundary[(i + 1) % m]]
        s += x1 * y2 - x2 * y1
    return s


def points_strictly_inside(inst: Instance, boundary: Sequence[int]) -> list[int]:
    """Instance points with nonzero winding number w.r.t. the closed walk,
    excluding points on the walk itself."""
    X, Y = inst.X, inst.Y
    wind = np.zeros(inst.n, dtype=np.int64)
    m = len(boundary)
    for i in range(m):
        a, b = boundary[i], boundary[(i + 1) % m]
        o = (X[b] - X[a]) * (Y - Y[a]) - (Y[b] - Y[a]) * (X - X[a])
        up = (Y[a] <= Y) & (Y[b] > Y) & (o > 0)
        down = (Y[a] > Y) & (Y[b] <= Y) & (o < 0)
        wind += up.astype(np.int64) - down.astype(np.int64)
    wind[list(boundary)] = 0
    return [int(i) for i in np.nonzero(wind)[0]]


def is_strictly_convex(inst: Instance, boundary: Sequence[int]) -> bool:
    m = len(boundary)
    if m < 3 or len(set(boundary)) != m:
        return False
    return all(inst.orient(boundary[i], boundary[(i + 1) % m], boundary[(i + 2) % m]) > 0 for i in range(m))


def canonical_cycle(boundary: Sequence[int]) -> tuple[int, ...]:
    """Rotate a cyclic walk to start at its smallest id (first occurrence)."""
    i = boundary.index(min(boundary))
    return tuple(boundary[i:]) + tuple(boundary[:i])


def make_face(inst: Instance, boundary: Sequence[int]) -> Face:
    boundary = canonical_cycle(list(boundary))
    simple = len(set(boundary)) == len(boundary)
    return Face(
        boundary=boundary,
        is_convex=is_strictly_convex(inst, boundary),
        is_empty=not points_strictly_inside(inst, boundary),
        is_simple=simple,
    )


def find_crossing_pair(inst: Instance, edges: Sequence[tuple[int, int]]):
    """First pair of properly crossing edges, or None."""
    edges = list(edges)
    if len(edges) < 2:
        return None
    X, Y = inst.X, inst.Y
    U = np.array([e[0] for e in edges])
    V = np.array([e[1] for e in edges])
    for idx, (a, b) in enumerate(edges):
        o1 = np.sign((X[b] - X[a]) * (Y[U] - Y[a]) - (Y[b] - Y[a]) * (X[U] - X[a]))
        o2 = np.sign((X[b] - X[a]) * (Y[V] - Y[a]) - (Y[b] - Y[a]) * (X[V] - X[a]))
        o3 = np.sign((X[V] - X[U]) * (Y[a] - Y[U]) - (Y[V] - Y[U]) * (X[a] - X[U]))
        o4 = np.sign((X[V] - X[U]) * (Y[b] - Y[U]) - (Y[V] - Y[U]) * (X[b] - X[U]))
        hit = (o1 * o2 < 0) & (o3 * o4 < 0)
        hit[: idx + 1] = False
        js = np.nonzero(hit.astype(bool))[0]
        if len(js):
            return edges[idx], edges[int(js[0])]
    return None


def extract_faces(inst: Instance, edge_subset: Iterable[tuple[int, int]]) -> list[Face]:
    """Bounded faces of the PSLG (V, edge_subset).

    Faces are reported by their outer boundary walk (counterclockwise).  A face
    that contains another component or an isolated vertex is marked non-empty.
    """
    edges = sorted({edge_key(u, v) for u, v in edge_subset})
    clash = find_crossing_pair(inst, edges)
    if clash is not None:
        raise GeometryError(f"edges {clash[0]} and {clash[1]} cross")
    nbrs: dict[int, list[int]] = {}
    for u, v in edges:
        nbrs.setdefault(u, []).append(v)
        nbrs.setdefault(v, []).append(u)
    order = {v: sort_by_angle(inst, v, ws) for v, ws in nbrs.items()}
    pos = {v: {w: i for i, w in enumerate(ws)} for v, ws in order.items()}

    def nxt(u: int, v: int) -> tuple[int, int]:
        ring = order[v]
        w = ring[(pos[v][u] - 1) % len(ring)]
        return v, w

    seen: set[tuple[int, int]] = set()
    faces = []
    for u, v in edges:
        for start in ((u, v), (v, u)):
            if start in seen:
                continue
            walk = []
            he = start
            while he not in seen:
                seen.add(he)
                walk.append(he[0])
                he = nxt(*he)
            if polygon_area2(inst, walk) > 0:
                faces.append(make_face(inst, walk))
    faces.sort(key=lambda f: f.boundary)
    return faces


def face_edges(face: Face) -> list[tuple[int, int]]:
    b = face.boundary
    return [edge_key(b[i], b[(i + 1) % len(b)]) for i in range(len(b))]
