"""Minimum-weight triangulation of an empty simple polygon (cubic interval DP)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .geometry import (
    EmptyTriangle,
    Face,
    GeometryError,
    Instance,
    edge_key,
    make_face,
    orientation,
    points_strictly_inside,
    polygon_area2,
    segments_cross,
)

TIE_TOL = 1e-9


@dataclass
class PolygonTriangulation:
    face: Face
    triangles: list[EmptyTriangle]
    total_cost: float
    diagonals: list[tuple[int, int]] = field(default_factory=list)


def lookup_triangle(inst: Instance, a: int, b: int, c: int) -> EmptyTriangle:
    """Catalog entry for triangle abc when the catalog exists, else a detached one."""
    if "triangles" in inst.__dict__:
        return inst.find_triangle(a, b, c)
    a, b, c = inst.ccw(a, b, c)
    return EmptyTriangle(-1, (a, b, c), (edge_key(a, b), edge_key(b, c), edge_key(c, a)), inst.triangle_cost(a, b, c))


def _in_cone(inst: Instance, prev: int, v: int, nxt: int, w: int) -> bool:
    # interior angle at v runs counterclockwise from direction (nxt - v) to (prev - v)
    turn = inst.orient(prev, v, nxt)
    if turn > 0:
        return inst.orient(v, nxt, w) > 0 and inst.orient(v, w, prev) > 0
    if turn == 0:
        return inst.orient(v, nxt, w) > 0
    return not (inst.orient(v, prev, w) >= 0 and inst.orient(v, w, nxt) >= 0)


def chord_table(inst: Instance, boundary: Sequence[int]) -> list[list[bool]]:
    """valid[i][j]: boundary vertices i and j can be joined inside the polygon
    (adjacent pairs count as valid)."""
    m = len(boundary)
    ic = inst.int_coords
    pts = [ic[v] for v in boundary]
    sides = [(pts[i], pts[(i + 1) % m]) for i in range(m)]
    valid = [[False] * m for _ in range(m)]
    for i in range(m):
        valid[i][(i + 1) % m] = valid[(i + 1) % m][i] = True
    for i in range(m):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue
            a, b = pts[i], pts[j]
            ok = _in_cone(inst, boundary[i - 1], boundary[i], boundary[(i + 1) % m], boundary[j])
            if ok:
                for k in range(m):
                    if k in (i, j):
                        continue
                    p = pts[k]
                    if orientation(a, b, p) == 0 and (
                        (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1]) > 0
                        and (p[0] - b[0]) * (a[0] - b[0]) + (p[1] - b[1]) * (a[1] - b[1]) > 0
                    ):
                        ok = False
                        break
            if ok:
                ok = not any(segments_cross((a, b), s) for s in sides)
            valid[i][j] = valid[j][i] = ok
    return valid


def _check_simple(inst: Instance, boundary: Sequence[int]) -> None:
    m = len(boundary)
    if m < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    if len(set(boundary)) != m:
        raise GeometryError("polygon boundary repeats a vertex")
    ic = inst.int_coords
    sides = [(ic[boundary[i]], ic[boundary[(i + 1) % m]]) for i in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            if segments_cross(sides[i], sides[j]):
                raise GeometryError(f"polygon sides {i} and {j} cross")
    for k in range(m):
        p = ic[boundary[k]]
        for i, (a, b) in enumerate(sides):
            if k in (i, (i + 1) % m):
                continue
            if orientation(a, b, p) == 0 and min(a, b) <= p <= max(a, b):
                raise GeometryError(f"polygon vertex {boundary[k]} touches side {i}")


def mwt_polygon(face: Face | Sequence[int], inst: Instance) -> PolygonTriangulation:
    """Minimum-cost triangulation of an empty simple polygon.

    Ties within 1e-9 go to the lexicographically smallest sorted diagonal list.
    """
    if not isinstance(face, Face):
        face = make_face(inst, face)
    boundary = list(face.boundary)
    _check_simple(inst, boundary)
    if polygon_area2(inst, boundary) <= 0:
        raise GeometryError("polygon boundary must be counterclockwise")
    if points_strictly_inside(inst, boundary):
        raise GeometryError("polygon is not empty")
    m = len(boundary)
    valid = chord_table(inst, boundary)
    cost = {}

    def ecost(i, j):
        return inst.edge_cost(boundary[i], boundary[j])

    for i in range(m):
        for j in range(i + 1, m):
            cost[i, j] = ecost(i, j)

    # best[i, k] = (sum of c(t) inside the sub-polygon i..k, its sorted diagonals)
    best: dict[tuple[int, int], tuple[float, tuple] | None] = {}
    for i in range(m - 1):
        best[i, i + 1] = (0.0, ())
    for span in range(2, m):
        for i in range(0, m - span):
            k = i + span
            if not valid[i][k]:
                best[i, k] = None
                continue
            cand = None
            for j in range(i + 1, k):
                left, right = best[i, j], best[j, k]
                if left is None or right is None:
                    continue
                if inst.orient(boundary[i], boundary[j], boundary[k]) <= 0:
                    continue
                c = left[0] + right[0] + cost[i, j] + cost[j, k] + cost[i, k]
                diags = list(left[1]) + list(right[1])
                for a, b in ((i, j), (j, k), (i, k)):
                    if b - a != 1 and not (a == 0 and b == m - 1):
                        diags.append(edge_key(boundary[a], boundary[b]))
                dk = tuple(sorted(set(diags) - {edge_key(boundary[i], boundary[k])}))
                if cand is None or c < cand[0] - TIE_TOL or (abs(c - cand[0]) <= TIE_TOL and dk < cand[1]):
                    cand = (c, dk)
            if cand is None:
                best[i, k] = None
            else:
                best[i, k] = cand
    top = best[0, m - 1]
    if top is None:
        raise GeometryError("polygon admits no triangulation (invalid boundary)")
    total = top[0]
    diagonals = sorted(top[1])
    triangles = _recover(inst, boundary, diagonals)
    return PolygonTriangulation(face, triangles, total, diagonals)


def _recover(inst: Instance, boundary: list[int], diagonals: list[tuple[int, int]]) -> list[EmptyTriangle]:
    m = len(boundary)
    adj: dict[int, set[int]] = {v: set() for v in boundary}
    for i in range(m):
        a, b = boundary[i], boundary[(i + 1) % m]
        adj[a].add(b)
        adj[b].add(a)
    for a, b in diagonals:
        adj[a].add(b)
        adj[b].add(a)
    tris = set()
    for a in boundary:
        for b in adj[a]:
            for c in adj[a] & adj[b]:
                key = tuple(sorted((a, b, c)))
                if key in tris:
                    continue
                if not points_strictly_inside(inst, inst.ccw(*key)) and _inside_polygon(inst, boundary, key):
                    tris.add(key)
    out = [lookup_triangle(inst, *k) for k in sorted(tris)]
    if len(out) != m - 2:
        raise GeometryError(f"recovered {len(out)} triangles, expected {m - 2}")
    return out


def _inside_polygon(inst: Instance, boundary: list[int], tri: tuple[int, int, int]) -> bool:
    # centroid test in scaled integer coordinates (times 3 to stay integral)
    ic = inst.int_coords
    cx = sum(ic[v][0] for v in tri)
    cy = sum(ic[v][1] for v in tri)
    m = len(boundary)
    wind = 0
    for i in range(m):
        (ax, ay), (bx, by) = ic[boundary[i]], ic[boundary[(i + 1) % m]]
        ax, ay, bx, by = 3 * ax, 3 * ay, 3 * bx, 3 * by
        o = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if ay <= cy < by and o > 0:
            wind += 1
        elif by <= cy < ay and o < 0:
            wind -= 1
    return wind != 0
