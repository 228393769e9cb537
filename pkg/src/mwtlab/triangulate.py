"""Whole-instance triangulations built from pieces: greedy completion of a
non-crossing edge set, and face-by-face DP over a heuristic skeleton."""

from __future__ import annotations

import numpy as np

from .geometry import EmptyTriangle, GeometryError, Instance, edge_key, extract_faces, points_strictly_inside
from .polygon_dp import lookup_triangle, mwt_polygon


def _crosses_any(inst: Instance, e, U: np.ndarray, V: np.ndarray) -> bool:
    if len(U) == 0:
        return False
    X, Y = inst.X, inst.Y
    a, b = e
    o1 = np.sign((X[b] - X[a]) * (Y[U] - Y[a]) - (Y[b] - Y[a]) * (X[U] - X[a]))
    o2 = np.sign((X[b] - X[a]) * (Y[V] - Y[a]) - (Y[b] - Y[a]) * (X[V] - X[a]))
    o3 = np.sign((X[V] - X[U]) * (Y[a] - Y[U]) - (Y[V] - Y[U]) * (X[a] - X[U]))
    o4 = np.sign((X[V] - X[U]) * (Y[b] - Y[U]) - (Y[V] - Y[U]) * (X[b] - X[U]))
    return bool(np.any((o1 * o2 < 0) & (o3 * o4 < 0)))


def greedy_completion(inst: Instance, base=(), allowed=None) -> set[tuple[int, int]]:
    """Add candidate edges shortest first (ties by key) whenever they cross
    nothing already chosen.  ``base`` must be non-crossing; the hull is always
    included.  With every potential edge allowed the result is a triangulation."""
    chosen = set(inst.boundary_keys) | {edge_key(*e) for e in base}
    cand = sorted(allowed if allowed is not None else inst.edges, key=lambda k: (inst.sq_dist(*k), k))
    U = np.array([e[0] for e in chosen], dtype=np.int64)
    V = np.array([e[1] for e in chosen], dtype=np.int64)
    us, vs = list(U), list(V)
    for k in cand:
        k = edge_key(*k)
        if k in chosen:
            continue
        if _crosses_any(inst, k, U, V):
            continue
        chosen.add(k)
        us.append(k[0])
        vs.append(k[1])
        U, V = np.array(us), np.array(vs)
    return chosen


def triangles_from_edges(inst: Instance, edges) -> list[EmptyTriangle]:
    """Empty 3-cycles of a non-crossing edge set: the triangular faces when the
    set is a triangulation."""
    adj: dict[int, set[int]] = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    out = []
    for a in sorted(adj):
        for b in adj[a]:
            if b <= a:
                continue
            for c in adj[a] & adj[b]:
                if c <= b or inst.orient(a, b, c) == 0:
                    continue
                if not points_strictly_inside(inst, inst.ccw(a, b, c)) and not _on_sides(inst, (a, b, c)):
                    out.append(lookup_triangle(inst, a, b, c))
    return sorted(out, key=lambda t: t.key)


def _on_sides(inst: Instance, tri) -> bool:
    # a point on a side makes the triangle non-empty; with potential edges this
    # cannot happen, but edge sets passed in by callers are not trusted
    for i in range(3):
        u, v = tri[i], tri[(i + 1) % 3]
        if not inst.potential_mask[u, v]:
            return True
    return False


def skeleton_triangulation(inst: Instance, forced_in) -> tuple[list[EmptyTriangle], float]:
    """Minimum-weight completion of a skeleton whose faces are all empty and
    simple, by running the polygon DP on each face."""
    faces = extract_faces(inst, forced_in)
    tris: list[EmptyTriangle] = []
    for f in faces:
        if not (f.is_empty and f.is_simple):
            raise GeometryError(f"skeleton face {f.boundary} is not an empty simple polygon")
        tris.extend(mwt_polygon(f, inst).triangles)
    tris.sort(key=lambda t: t.key)
    return tris, sum(t.cost for t in tris)
