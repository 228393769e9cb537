"""Exhaustive ground truth at desk scale.

Triangulations are enumerated by repeatedly closing the lexicographically
smallest open directed edge with every compatible empty triangle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import EmptyTriangle, Instance, edge_key, sort_by_angle

MAX_ORACLE_POINTS = 13
OPTIMA_TOL = 1e-9


class OracleSizeError(ValueError):
    pass


@dataclass
class TriangulationSet:
    all: list[list[EmptyTriangle]]
    costs: list[float]
    optima: list[list[EmptyTriangle]] = field(default_factory=list)

    @property
    def min_cost(self) -> float:
        return min(self.costs)


@dataclass
class Star:
    center: int
    edges: list[tuple[int, int]]
    cost: float


def _guard(inst: Instance, limit: int) -> None:
    if inst.n > limit:
        raise OracleSizeError(f"oracle limited to {limit} points, instance has {inst.n}")


def iter_triangulations(inst: Instance, limit: int = MAX_ORACLE_POINTS, prune=None):
    """Yield each triangulation as a sorted tuple of triangle ids.

    ``prune(partial_cost)`` may return True to cut a branch (used for
    branch-and-bound on instances slightly above the guard).
    """
    _guard(inst, limit)
    tris = inst.triangles
    left_of: dict[tuple[int, int], list[EmptyTriangle]] = {}
    for t in tris:
        a, b, c = t.vertices
        for d in ((a, b), (b, c), (c, a)):
            left_of.setdefault(d, []).append(t)
    crossing: dict[tuple[int, int], set[tuple[int, int]]] = {k: set() for k in inst.edges}
    keys = sorted(inst.edges)
    for i, e in enumerate(keys):
        for f in keys[i + 1:]:
            if inst.crosses(e, f):
                crossing[e].add(f)
                crossing[f].add(e)

    h = inst.hull
    open_edges = {(h[i], h[(i + 1) % len(h)]) for i in range(len(h))}
    filled: set[tuple[int, int]] = set()
    present: set[tuple[int, int]] = {edge_key(*d) for d in open_edges}
    chosen: list[int] = []

    def rec(cost: float):
        if not open_edges:
            yield tuple(sorted(chosen))
            return
        if prune is not None and prune(cost):
            return
        a, b = min(open_edges)
        for t in left_of.get((a, b), ()):
            i = t.vertices.index(a)
            c = t.vertices[(i + 2) % 3]
            new = [(b, c), (c, a)]
            if any(d in filled for d in new):
                continue
            added = [edge_key(*d) for d in new if edge_key(*d) not in present]
            if any(crossing[k] & present for k in added):
                continue
            # apply
            filled.update(((a, b), (b, c), (c, a)))
            open_edges.discard((a, b))
            reopened = []
            closed = []
            for d in new:
                if d in open_edges:
                    open_edges.discard(d)
                    closed.append(d)
                else:
                    r = (d[1], d[0])
                    open_edges.add(r)
                    reopened.append(r)
            present.update(added)
            chosen.append(t.id)
            yield from rec(cost + t.cost)
            chosen.pop()
            present.difference_update(added)
            for r in reopened:
                open_edges.discard(r)
            open_edges.update(closed)
            open_edges.add((a, b))
            filled.difference_update(((a, b), (b, c), (c, a)))

    yield from rec(0.0)


def enumerate_triangulations(inst: Instance, limit: int = MAX_ORACLE_POINTS) -> TriangulationSet:
    tris = inst.triangles
    seen = set()
    all_t, costs = [], []
    for key in iter_triangulations(inst, limit):
        if key in seen:
            continue
        seen.add(key)
        members = [tris[i] for i in key]
        all_t.append(members)
        costs.append(sum(t.cost for t in members))
    best = min(costs)
    optima = [t for t, c in zip(all_t, costs) if c <= best + OPTIMA_TOL]
    return TriangulationSet(all_t, costs, optima)


def brute_force_mwt(inst: Instance, limit: int = MAX_ORACLE_POINTS) -> tuple[float, list[list[EmptyTriangle]]]:
    ts = enumerate_triangulations(inst, limit)
    return ts.min_cost, ts.optima


def branch_and_bound_mwt(inst: Instance, upper: float, limit: int) -> tuple[float, list[list[EmptyTriangle]]]:
    """Exact minimum over all triangulations with pruning against ``upper``
    (which must be the cost of some triangulation, or larger)."""
    tris = inst.triangles
    best = [upper + OPTIMA_TOL]
    optima: dict[tuple, float] = {}

    def prune(partial: float) -> bool:
        return partial > best[0] + OPTIMA_TOL

    for key in iter_triangulations(inst, limit, prune=prune):
        cost = sum(tris[i].cost for i in key)
        if cost <= best[0] + OPTIMA_TOL:
            optima[key] = cost
            best[0] = min(best[0], cost)
    if not optima:
        raise ValueError("no triangulation found under the given upper bound")
    lo = min(optima.values())
    keep = [[tris[i] for i in k] for k, c in sorted(optima.items()) if c <= lo + OPTIMA_TOL]
    return lo, keep


# -- stars ---------------------------------------------------------------------


def incident_edges_by_angle(inst: Instance, v: int) -> list[int]:
    nbrs = [u for u in range(inst.n) if u != v and inst.potential_mask[v, u]]
    return sort_by_angle(inst, v, nbrs)


def min_cost_star(v: int, inst: Instance) -> Star:
    """Cheapest star at ``v``.

    On the hull the only star is the two hull edges.  Inside, a star is a set
    of incident edges with every angular gap strictly below 180 degrees.
    """
    h = inst.hull
    if v in h:
        i = h.index(v)
        a, b = h[i - 1], h[(i + 1) % len(h)]
        edges = sorted({edge_key(v, a), edge_key(v, b)})
        return Star(v, edges, sum(inst.length(*e) for e in edges))
    ring = incident_edges_by_angle(inst, v)
    k = len(ring)
    vx, vy = inst.int_coords[v]
    dirs = [(inst.int_coords[w][0] - vx, inst.int_coords[w][1] - vy) for w in ring]
    lens = [inst.length(v, w) for w in ring]

    def gap_ok(i: int, j: int) -> bool:
        (x1, y1), (x2, y2) = dirs[i], dirs[j]
        return x1 * y2 - y1 * x2 > 0

    best_cost, best_set = float("inf"), None
    for s in range(k):
        # chain over positions s, s+1, ..., s+k-1 (mod k); dp over offset
        dp = [float("inf")] * k
        prev = [-1] * k
        dp[0] = lens[s]
        for off in range(1, k):
            j = (s + off) % k
            for poff in range(off):
                i = (s + poff) % k
                if dp[poff] < float("inf") and gap_ok(i, j):
                    c = dp[poff] + lens[j]
                    if c < dp[off]:
                        dp[off], prev[off] = c, poff
        for off in range(1, k):
            j = (s + off) % k
            if dp[off] < best_cost and gap_ok(j, s):
                chain = []
                o = off
                while o != -1:
                    chain.append(ring[(s + o) % k])
                    o = prev[o]
                best_cost, best_set = dp[off], chain
    if best_set is None:
        raise ValueError(f"vertex {v} has no star (all incident edges in a half-plane)")
    return Star(v, sorted(edge_key(v, w) for w in best_set), best_cost)
