"""Blanket decomposition and transposal rounding of a fractional triangulation
over a convex partition.

For each convex face f the triangles of X that cross f are peeled into
blankets (uniform single-layer covers of f).  Every blanket is pushed onto
f's own vertices by sliding chord endpoints to face corners, triangulated, and
the results recombined into a fractional triangulation X^f of f.  A cost
ledger compares sum_f c(X^f) with 3 ||P|| + 12 sigma c(X).

All incidence decisions (clipping, crossing, containment) use exact rational
arithmetic on the instance's scaled integer coordinates.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .geometry import (
    EmptyTriangle,
    Face,
    GeometryError,
    Instance,
    edge_key,
    extract_faces,
    face_edges,
    find_crossing_pair,
    is_strictly_convex,
    make_face,
    polygon_area2,
)
from .heuristics import HeuristicConfig, run_closure, skeleton_faces
from .lp import FractionalTriangulation, validate_triangulation
from .polygon_dp import mwt_polygon
from .triangulate import greedy_completion, skeleton_triangulation, triangles_from_edges

log = logging.getLogger(__name__)

ZERO_WEIGHT = 1e-10
STRATEGIES = ("hm", "fan")


class RoundingError(RuntimeError):
    """A structural identity that must hold exactly was violated."""


# -- exact helpers ---------------------------------------------------------------


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _clip_polygon(poly: list, face_pts: list) -> list:
    """Sutherland-Hodgman clip of a convex polygon by a CCW convex polygon."""
    out = list(poly)
    m = len(face_pts)
    for i in range(m):
        a, b = face_pts[i], face_pts[(i + 1) % m]
        src, out = out, []
        if not src:
            break
        for j in range(len(src)):
            p, q = src[j], src[(j + 1) % len(src)]
            sp, sq = _cross(a, b, p), _cross(a, b, q)
            if sp >= 0:
                out.append(p)
            if (sp > 0 and sq < 0) or (sp < 0 and sq > 0):
                t = Fraction(sp, sp - sq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _area2(pts: list):
    s = 0
    for i in range(len(pts)):
        (x1, y1), (x2, y2) = pts[i], pts[(i + 1) % len(pts)]
        s += x1 * y2 - x2 * y1
    return s


def _clip_segment(p, q, face_pts: list):
    """Parameter interval [t0, t1] of segment pq inside the closed convex face,
    or None when they do not meet."""
    t0, t1 = Fraction(0), Fraction(1)
    m = len(face_pts)
    for i in range(m):
        a, b = face_pts[i], face_pts[(i + 1) % m]
        sp, sq = _cross(a, b, p), _cross(a, b, q)
        if sp < 0 and sq < 0:
            return None
        if sp >= 0 and sq >= 0:
            continue
        t = Fraction(sp, sp - sq)
        if sp < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return None
    return t0, t1


def _face_pts(inst: Instance, face: Face) -> list:
    return [inst.int_coords[v] for v in face.boundary]


# -- convex partitions -------------------------------------------------------------


@dataclass
class ConvexPartition:
    instance: Instance
    edges: list[tuple[int, int]]
    faces: list[Face]
    strategy: str = ""

    @property
    def total_length(self) -> float:
        return sum(self.instance.length(*e) for e in self.edges)

    @property
    def interior_edges(self) -> list[tuple[int, int]]:
        return [e for e in self.edges if e not in self.instance.boundary_keys]


def validate_partition(part: ConvexPartition) -> None:
    inst = part.instance
    clash = find_crossing_pair(inst, part.edges)
    if clash is not None:
        raise GeometryError(f"partition edges {clash[0]} and {clash[1]} cross")
    if not inst.boundary_keys <= set(part.edges):
        raise GeometryError("partition misses a hull edge")
    area = 0
    for f in part.faces:
        if not is_strictly_convex(inst, f.boundary):
            raise GeometryError(f"face {f.boundary} is not strictly convex")
        if not f.is_empty:
            raise GeometryError(f"face {f.boundary} contains a point")
        area += polygon_area2(inst, f.boundary)
    if area != inst.hull_area2():
        raise GeometryError("faces do not tile the hull")


def _base_triangulation(inst: Instance, strategy: str) -> set[tuple[int, int]]:
    if strategy == "fan":
        root = min(range(inst.n), key=lambda i: inst.int_coords[i])
        spokes = [edge_key(root, v) for v in range(inst.n) if v != root and inst.potential_mask[root, v]]
        return greedy_completion(inst, spokes)
    ledger = run_closure(inst, HeuristicConfig())
    _, solvable = skeleton_faces(ledger)
    if solvable:
        tris, _ = skeleton_triangulation(inst, ledger.forced_in())
        return {e for t in tris for e in t.edges}
    allowed = [k for k in inst.edges if not ledger.is_out(k)]
    edges = greedy_completion(inst, ledger.forced_in(), allowed)
    if len(triangles_from_edges(inst, edges)) != 2 * inst.n - len(inst.hull) - 2:
        edges = greedy_completion(inst, ledger.forced_in())
    return edges


def build_convex_partition(inst: Instance, strategy: str = "hm") -> ConvexPartition:
    """``hm``: heuristic skeleton completed face by face with the polygon DP
    (greedy completion when the skeleton is not solvable), then interior edges
    removed longest first whenever the merged face stays strictly convex.
    ``fan``: spokes from the leftmost (then lowest) point, completed greedily, no
    merging."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown partition strategy {strategy!r}; expected one of {STRATEGIES}")
    edges = _base_triangulation(inst, strategy)
    if strategy == "hm":
        edges = _merge_convex(inst, edges)
    faces = extract_faces(inst, edges)
    part = ConvexPartition(inst, sorted(edges), faces, strategy)
    validate_partition(part)
    return part


def _merge_convex(inst: Instance, edges: set[tuple[int, int]]) -> set[tuple[int, int]]:
    faces = {f.boundary: list(f.boundary) for f in extract_faces(inst, edges)}
    owner: dict[tuple[int, int], tuple[int, ...]] = {}  # directed edge -> face id

    def register(fid):
        b = faces[fid]
        for i in range(len(b)):
            owner[b[i], b[(i + 1) % len(b)]] = fid

    for fid in faces:
        register(fid)
    kept = set(edges)
    interior = sorted((e for e in edges if e not in inst.boundary_keys), key=lambda e: (-inst.sq_dist(*e), e))
    for u, v in interior:
        f1, f2 = owner[u, v], owner[v, u]
        a, b = faces[f1], faces[f2]
        # splice: walk a from v around to u, then b from u around to v
        i = a.index(v)
        walk_a = a[i:] + a[:i]  # starts at v, ends at u
        j = b.index(u)
        walk_b = b[j:] + b[:j]  # starts at u, ends at v
        merged = walk_a + walk_b[1:-1]
        if not is_strictly_convex(inst, merged):
            continue
        kept.discard((u, v))
        del owner[u, v], owner[v, u]
        del faces[f1], faces[f2]
        fid = tuple(merged)
        faces[fid] = merged
        register(fid)
    return kept


def measure_sensitivity(part: ConvexPartition, inst: Instance | None = None) -> float:
    """Smallest sigma making every partition edge sigma-sensitive."""
    inst = inst or part.instance
    X, Y = inst.X, inst.Y
    keys = sorted(inst.edges)
    U = np.array([k[0] for k in keys])
    V = np.array([k[1] for k in keys])
    xy = inst.xy
    worst = 0.0
    for a, b in part.interior_edges:
        o1 = np.sign((X[b] - X[a]) * (Y[U] - Y[a]) - (Y[b] - Y[a]) * (X[U] - X[a]))
        o2 = np.sign((X[b] - X[a]) * (Y[V] - Y[a]) - (Y[b] - Y[a]) * (X[V] - X[a]))
        o3 = np.sign((X[V] - X[U]) * (Y[a] - Y[U]) - (Y[V] - Y[U]) * (X[a] - X[U]))
        o4 = np.sign((X[V] - X[U]) * (Y[b] - Y[U]) - (Y[V] - Y[U]) * (X[b] - X[U]))
        hit = np.nonzero(((o1 * o2 < 0) & (o3 * o4 < 0)).astype(bool))[0]
        for idx in hit:
            p, q = keys[idx]
            lp = math.dist(xy[p], xy[q])
            for x in (p, q):
                d = min(math.dist(xy[x], xy[a]), math.dist(xy[x], xy[b]))
                worst = max(worst, d / lp)
    return worst


# -- blankets ----------------------------------------------------------------------


@dataclass
class Blanket:
    triangles: list[EmptyTriangle]
    weight: float
    face: Face


def triangle_crosses_face(inst: Instance, t: EmptyTriangle, face: Face) -> bool:
    tri = [inst.int_coords[v] for v in t.vertices]
    return _area2(_clip_polygon(tri, _face_pts(inst, face))) > 0


def edge_crosses_interior(inst: Instance, e, face: Face) -> bool:
    """Does the open segment e pass through the interior of the face?"""
    e = edge_key(*e)
    if e in set(face_edges(face)):
        return False
    ic = inst.int_coords
    iv = _clip_segment(ic[e[0]], ic[e[1]], _face_pts(inst, face))
    return iv is not None and iv[0] < iv[1]


def decompose_into_blankets(x: FractionalTriangulation, face: Face) -> list[Blanket]:
    """Peel X (restricted to triangles crossing the face) into blankets."""
    inst = x.instance
    resid = {k: w for k, w in x.weights.items() if w > ZERO_WEIGHT and triangle_crosses_face(inst, x.triangles[k], face)}
    by_dir: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    for k in resid:
        a, b, c = x.triangles[k].vertices
        for d in ((a, b), (b, c), (c, a)):
            by_dir.setdefault(d, []).append(k)
    for lst in by_dir.values():
        lst.sort()
    crossing_cache: dict[tuple[int, int], bool] = {}

    def crosses(e):
        if e not in crossing_cache:
            crossing_cache[e] = edge_crosses_interior(inst, e, face)
        return crossing_cache[e]

    blankets: list[Blanket] = []
    cap = len(resid) + 1
    while any(w > ZERO_WEIGHT for w in resid.values()):
        if len(blankets) >= cap:
            raise RoundingError(f"blanket extraction exceeded {cap} iterations")
        start = min(k for k, w in resid.items() if w > ZERO_WEIGHT)
        members = [start]
        dirs = set()
        a, b, c = x.triangles[start].vertices
        dirs.update(((a, b), (b, c), (c, a)))
        frontier = sorted(dirs)
        while frontier:
            d = frontier.pop(0)
            if (d[1], d[0]) in dirs or not crosses(edge_key(*d)):
                continue
            opp = [k for k in by_dir.get((d[1], d[0]), ()) if resid[k] > ZERO_WEIGHT]
            if not opp:
                raise RoundingError(
                    f"no positive triangle across {d} inside face {face.boundary}: X violates the edge constraints"
                )
            k = opp[0]
            if k in members:
                raise RoundingError(f"blanket growth revisited triangle {k}")
            members.append(k)
            a, b, c = x.triangles[k].vertices
            new = [(a, b), (b, c), (c, a)]
            dirs.update(new)
            frontier.extend(nd for nd in new if (nd[1], nd[0]) not in dirs)
            frontier.sort()
        eps = min(resid[k] for k in members)
        for k in members:
            resid[k] -= eps
        blanket = Blanket(sorted((x.triangles[k] for k in members), key=lambda t: t.key), eps, face)
        validate_blanket(inst, blanket)
        blankets.append(blanket)
    return blankets


def validate_blanket(inst: Instance, b: Blanket) -> None:
    """Exact check: pieces t ∩ f are pairwise interior-disjoint and their areas
    add up to the face area."""
    fp = _face_pts(inst, b.face)
    pieces = [_clip_polygon([inst.int_coords[v] for v in t.vertices], fp) for t in b.triangles]
    total = sum(_area2(p) for p in pieces)
    if total != polygon_area2(inst, b.face.boundary):
        raise RoundingError(f"blanket over {b.face.boundary} does not cover the face exactly")
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            if _overlap(pieces[i], pieces[j]):
                raise RoundingError(f"blanket triangles {b.triangles[i].key} and {b.triangles[j].key} overlap in the face")


def _overlap(p: list, q: list) -> bool:
    """Interiors of two convex CCW polygons intersect (separating-axis test)."""
    if len(p) < 3 or len(q) < 3 or _area2(p) == 0 or _area2(q) == 0:
        return False
    for poly, other in ((p, q), (q, p)):
        for i in range(len(poly)):
            a, b = poly[i], poly[(i + 1) % len(poly)]
            if a == b:
                continue
            if all(_cross(a, b, r) <= 0 for r in other):
                return False
    return True


# -- transposals -------------------------------------------------------------------


@dataclass
class TransposalRecord:
    source: tuple  # edge key or triangle key
    face: Face
    image: tuple[int, ...]  # diagonal endpoints, or CCW polygon vertices
    positive_area: bool = False
    kind: str = "edge"

    @property
    def vertex_count(self) -> int:
        return len(set(self.image))


def _destinations(inst: Instance, face: Face, point) -> tuple[int, ...]:
    """Face vertices a chord endpoint may slide to."""
    ic = inst.int_coords
    b = face.boundary
    for v in b:
        if ic[v] == point:
            return (v,)
    m = len(b)
    for i in range(m):
        u, w = b[i], b[(i + 1) % m]
        if _cross(ic[u], ic[w], point) == 0:
            return (u, w)
    raise RoundingError(f"chord endpoint {point} is not on the boundary of face {face.boundary}")


def transpose_edge(e, face: Face, inst: Instance) -> TransposalRecord:
    """Clip e to the face, then slide each chord endpoint to the face vertex
    giving the shortest diagonal.  Ties go to the pair whose sorted vertex
    coordinates are lexicographically smallest."""
    e = edge_key(*e)
    ic = inst.int_coords
    p, q = ic[e[0]], ic[e[1]]
    fp = _face_pts(inst, face)
    iv = _clip_segment(p, q, fp)
    if iv is None:
        raise GeometryError(f"edge {e} does not meet face {face.boundary}")
    t0, t1 = iv

    def at(t):
        return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))

    c1, c2 = _destinations(inst, face, at(t0)), _destinations(inst, face, at(t1))
    best = None
    for d1 in c1:
        for d2 in c2:
            key = (inst.sq_dist(d1, d2), sorted((ic[d1], ic[d2])))
            if best is None or key < best[0]:
                best = (key, (d1, d2))
    d1, d2 = best[1]
    image = (d1, d1) if d1 == d2 else edge_key(d1, d2)
    return TransposalRecord(e, face, image, False, "edge")


def _touches(inst: Instance, e, face: Face) -> bool:
    ic = inst.int_coords
    iv = _clip_segment(ic[e[0]], ic[e[1]], _face_pts(inst, face))
    return iv is not None and iv[0] < iv[1]


def transpose_triangle(t: EmptyTriangle, face: Face, inst: Instance) -> TransposalRecord:
    """Image of t in the face: the convex polygon spanned by the destinations of
    t's edges that run through the face and the face corners inside t."""
    ic = inst.int_coords
    verts = set()
    for e in t.edges:
        if _touches(inst, e, face):
            rec = transpose_edge(e, face, inst)
            verts.update(rec.image)
    a, b, c = (ic[v] for v in t.vertices)
    for v in face.boundary:
        p = ic[v]
        if _cross(a, b, p) >= 0 and _cross(b, c, p) >= 0 and _cross(c, a, p) >= 0:
            verts.add(v)
    image = tuple(v for v in face.boundary if v in verts)  # face order is CCW convex
    positive = len(image) >= 3 and polygon_area2(inst, image) > 0
    return TransposalRecord(t.key, face, image, positive, "triangle")


def transpose_blanket(b: Blanket, inst: Instance) -> list[TransposalRecord]:
    """Transposals of a blanket's triangles; validated as a convex partition of
    the face (area, edge use and non-crossing, all exact)."""
    recs = [transpose_triangle(t, b.face, inst) for t in b.triangles]
    validate_transposed_blanket(inst, b.face, recs)
    return recs


def validate_transposed_blanket(inst: Instance, face: Face, recs: Sequence[TransposalRecord]) -> None:
    regions = [r.image for r in recs if r.positive_area]
    total = sum(polygon_area2(inst, r) for r in regions)
    if total != polygon_area2(inst, face.boundary):
        raise RoundingError(f"transposed blanket does not tile face {face.boundary}")
    used: dict[tuple[int, int], int] = {}
    for r in regions:
        for i in range(len(r)):
            k = edge_key(r[i], r[(i + 1) % len(r)])
            used[k] = used.get(k, 0) + 1
    outer = set(face_edges(face))
    for k, cnt in used.items():
        if cnt != (1 if k in outer else 2):
            raise RoundingError(f"edge {k} used {cnt} times in transposed blanket over {face.boundary}")
    clash = find_crossing_pair(inst, sorted(used))
    if clash is not None:
        raise RoundingError(f"transposed edges {clash[0]} and {clash[1]} cross")


def triangulated_transposal(record: TransposalRecord, inst: Instance) -> list[EmptyTriangle]:
    if record.kind != "triangle":
        raise ValueError("triangulated transposal needs a triangle record")
    if not record.positive_area:
        return []
    return mwt_polygon(make_face(inst, record.image), inst).triangles


def polygon_cost(inst: Instance, poly: Sequence[int]) -> float:
    """Cost of a polygon's boundary under the instance edge-cost rule."""
    return sum(inst.edge_cost(poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly)))


# -- whole solution ----------------------------------------------------------------


@dataclass
class CostLedger:
    sum_transposed: float
    partition_length: float
    sigma: float
    fractional_cost: float
    rounded_cost: float
    face_costs: list[float] = field(default_factory=list)

    @property
    def bound(self) -> float:
        return 3 * self.partition_length + 12 * self.sigma * self.fractional_cost

    @property
    def holds(self) -> bool:
        return self.sum_transposed <= self.bound + 1e-6

    def to_dict(self) -> dict:
        return {
            "sum_transposed": self.sum_transposed,
            "partition_length": self.partition_length,
            "sigma": self.sigma,
            "fractional_cost": self.fractional_cost,
            "bound": self.bound,
            "rounded_cost": self.rounded_cost,
            "holds": self.holds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


@dataclass
class FaceTransposal:
    face: Face
    blankets: list[Blanket]
    records: dict[tuple[int, int, int], TransposalRecord]  # by source triangle
    triangulated: dict[tuple[int, int, int], list[EmptyTriangle]]
    xf: FractionalTriangulation
    xf_transfer: dict[tuple[int, int, int], float]  # same weights via weight transfer
    optimum: list[EmptyTriangle]
    optimum_cost: float


@dataclass
class RoundingResult:
    partition: ConvexPartition
    faces: list[FaceTransposal]
    ledger: CostLedger
    triangles: list[EmptyTriangle]

    @property
    def rounded_cost(self) -> float:
        return self.ledger.rounded_cost


def transpose_face(x: FractionalTriangulation, face: Face) -> FaceTransposal:
    inst = x.instance
    blankets = decompose_into_blankets(x, face)
    records: dict[tuple[int, int, int], TransposalRecord] = {}
    tri_of: dict[tuple[int, int, int], list[EmptyTriangle]] = {}
    xf: dict[tuple[int, int, int], float] = {}
    catalog: dict[tuple[int, int, int], EmptyTriangle] = {}
    for b in blankets:
        for r in transpose_blanket(b, inst):
            records.setdefault(r.source, r)
        for t in b.triangles:
            if t.key not in tri_of:
                tri_of[t.key] = triangulated_transposal(records[t.key], inst)
            for s in tri_of[t.key]:
                xf[s.key] = xf.get(s.key, 0.0) + b.weight
                catalog[s.key] = s
    # weight transfer: every crossing triangle hands X_t to its triangulated image
    transfer: dict[tuple[int, int, int], float] = {}
    for k, w in x.weights.items():
        if w <= ZERO_WEIGHT or not triangle_crosses_face(inst, x.triangles[k], face):
            continue
        if k not in tri_of:
            rec = transpose_triangle(x.triangles[k], face, inst)
            records[k] = rec
            tri_of[k] = triangulated_transposal(rec, inst)
        for s in tri_of[k]:
            transfer[s.key] = transfer.get(s.key, 0.0) + w
    objective = sum(catalog[k].cost * w for k, w in xf.items())
    fx = FractionalTriangulation(inst, dict(sorted(xf.items())), objective, catalog)
    best = mwt_polygon(face, inst)
    return FaceTransposal(face, blankets, records, tri_of, fx, transfer, best.triangles, best.total_cost)


def transpose_solution(x: FractionalTriangulation, part: ConvexPartition) -> RoundingResult:
    """Per-face transposals X^f, the cost ledger, and the rounded triangulation
    (cheapest triangulation of every face)."""
    inst = x.instance
    sigma = measure_sensitivity(part)
    faces = [transpose_face(x, f) for f in part.faces]
    tris = sorted((t for ft in faces for t in ft.optimum), key=lambda t: t.key)
    validate_triangulation(inst, tris)
    ledger = CostLedger(
        sum_transposed=sum(ft.xf.objective for ft in faces),
        partition_length=part.total_length,
        sigma=sigma,
        fractional_cost=x.objective,
        rounded_cost=sum(t.cost for t in tris),
        face_costs=[ft.xf.objective for ft in faces],
    )
    return RoundingResult(part, faces, ledger, tris)


# -- rendering ---------------------------------------------------------------------


def blanket_svg(inst: Instance, blanket: Blanket, size: int = 240) -> str:
    """Three panels: the blanket over its face, the chords it induces, and its
    transposal."""
    xy = inst.xy
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = max(hi - lo) or 1.0
    pad = 10

    def pt(p, panel):
        x = pad + (p[0] - lo[0]) / span * (size - 2 * pad) + panel * size
        y = size - pad - (p[1] - lo[1]) / span * (size - 2 * pad)
        return f"{x:.2f},{y:.2f}"

    def poly(vs, panel, style):
        return f'<polygon points="{" ".join(pt(xy[v], panel) for v in vs)}" style="{style}"/>'

    face = blanket.face
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{3 * size}" height="{size}">']
    for panel in range(3):
        out.append(poly(face.boundary, panel, "fill:#ddd;stroke:#000;stroke-width:1"))
    for t in blanket.triangles:
        out.append(poly(t.vertices, 0, "fill:none;stroke:#36c;stroke-width:1"))
    fp = _face_pts(inst, face)
    for t in blanket.triangles:
        for u, v in t.edges:
            iv = _clip_segment(inst.int_coords[u], inst.int_coords[v], fp)
            if iv is None or iv[0] >= iv[1]:
                continue
            p, q = xy[u], xy[v]
            a = p + float(iv[0]) * (q - p)
            b = p + float(iv[1]) * (q - p)
            out.append(f'<polyline points="{pt(a, 1)} {pt(b, 1)}" style="stroke:#c33;stroke-width:1.5"/>')
    for r in transpose_blanket(blanket, inst):
        if r.positive_area:
            out.append(poly(r.image, 2, "fill:#fc9;stroke:#c60;stroke-width:1.5"))
    for p in xy:
        for panel in range(3):
            x, y = pt(p, panel).split(",")
            out.append(f'<circle cx="{x}" cy="{y}" r="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
