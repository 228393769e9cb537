"""The triangle LP in edge-constraint form, its solution, and its classification.

One variable per empty triangle.  For every potential edge e the triangles on
the two sides of e must balance; on a hull edge the interior side sums to 1.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .geometry import EmptyTriangle, Instance, edge_key, enumerate_empty_triangles, find_crossing_pair, polygon_area2
from .polygon_dp import chord_table
from .simplex import SimplexError, Stalled, simplex
from .triangulate import greedy_completion, triangles_from_edges

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
INT_TOL = 1e-7


class LPBuildError(ValueError):
    pass


class TilingError(RuntimeError):
    pass


@dataclass
class Row:
    name: str
    edge: tuple[int, int]
    coeffs: dict[int, int]  # column -> +1 / -1
    rhs: float
    forcing: bool = False


@dataclass
class TriangulationLP:
    instance: Instance
    triangles: list[EmptyTriangle]
    rows: list[Row]
    cost: np.ndarray
    removed: int = 0  # triangles dropped by a ledger

    @property
    def column_of(self) -> dict[tuple[int, int, int], int]:
        return {t.key: j for j, t in enumerate(self.triangles)}

    def matrix(self, nonempty_only: bool = True) -> tuple[np.ndarray, np.ndarray, list[Row]]:
        rows = [r for r in self.rows if r.coeffs or not nonempty_only]
        A = np.zeros((len(rows), len(self.triangles)))
        b = np.zeros(len(rows))
        for i, r in enumerate(rows):
            for j, v in r.coeffs.items():
                A[i, j] = v
            b[i] = r.rhs
        return A, b, rows

    def residual(self, x: np.ndarray) -> float:
        worst = 0.0
        for r in self.rows:
            s = sum(v * x[j] for j, v in r.coeffs.items())
            worst = max(worst, abs(s - r.rhs))
        return worst


@dataclass
class FractionalTriangulation:
    instance: Instance
    weights: dict[tuple[int, int, int], float]  # positive weights only, keyed by sorted triple
    objective: float
    triangles: dict[tuple[int, int, int], EmptyTriangle] = field(default_factory=dict)
    basis: list[tuple[int, int, int]] = field(default_factory=list)
    iterations: int = 0

    @property
    def edge_weights(self) -> dict[tuple[int, int], float]:
        inst = self.instance
        out: dict[tuple[int, int], float] = {}
        for key, w in self.weights.items():
            for e in self.triangles[key].edges:
                out[e] = out.get(e, 0.0) + w
        return {e: (w if e in inst.boundary_keys else w / 2) for e, w in out.items()}

    def coverage(self, x: float, y: float) -> float:
        """Total weight of triangles containing the (float) point (x, y)."""
        xy = self.instance.xy
        total = 0.0
        for key, w in self.weights.items():
            a, b, c = self.triangles[key].vertices
            if _in_tri_float(xy[a], xy[b], xy[c], x, y):
                total += w
        return total


def _in_tri_float(a, b, c, x, y) -> bool:
    def o(p, q):
        return (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0])

    return o(a, b) >= 0 and o(b, c) >= 0 and o(c, a) >= 0


def _side_sets(inst: Instance, triangles: list[EmptyTriangle]):
    sides: dict[tuple[int, int], tuple[list[int], list[int]]] = {}
    for j, t in enumerate(triangles):
        for e in t.edges:
            u, v = e
            w = next(z for z in t.vertices if z not in e)
            left, right = sides.setdefault(e, ([], []))
            (left if inst.orient(u, v, w) > 0 else right).append(j)
    return sides


def build_lp(inst: Instance, ledger=None, triangles: list[EmptyTriangle] | None = None) -> TriangulationLP:
    """Edge-form LP; with a ledger, columns touching excluded edges are removed
    and every proven interior edge gets a forcing row (left side = 1)."""
    removed = 0
    if triangles is None:
        if ledger is None:
            triangles = inst.triangles
        elif "triangles" in inst.__dict__:
            out = ledger.forced_out()
            triangles = [t for t in inst.triangles if not any(e in out for e in t.edges)]
            removed = len(inst.triangles) - len(triangles)
        else:
            allowed = [k for k in inst.edges if not ledger.is_out(k)]
            triangles = enumerate_empty_triangles(inst, allowed)
    triangles = list(triangles)
    sides = _side_sets(inst, triangles)
    rows: list[Row] = []
    for key in sorted(inst.edges):
        left, right = sides.get(key, ([], []))
        u, v = key
        if key in inst.boundary_keys:
            cols = left + right
            if not cols:
                raise LPBuildError(f"hull edge {key} lies in no available triangle")
            rows.append(Row(f"e_{u}_{v}", key, {j: 1 for j in cols}, 1.0))
        else:
            coeffs = {j: 1 for j in left}
            coeffs.update({j: -1 for j in right})
            rows.append(Row(f"e_{u}_{v}", key, coeffs, 0.0))
    if ledger is not None:
        for key in sorted(ledger.forced_in()):
            if key in inst.boundary_keys:
                continue
            left, _ = sides.get(key, ([], []))
            if not left:
                raise LPBuildError(f"proven edge {key} lies in no available triangle")
            rows.append(Row(f"f_{key[0]}_{key[1]}", key, {j: 1 for j in left}, 1.0, forcing=True))
    cost = np.array([t.cost for t in triangles])
    return TriangulationLP(inst, triangles, rows, cost, removed)


def build_polygon_lp(inst: Instance, boundary) -> TriangulationLP:
    """The same LP for an empty simple polygon (counterclockwise ``boundary``)
    instead of the hull: triangles are those whose sides are polygon sides or
    interior chords, and the polygon sides play the role of hull edges."""
    boundary = list(boundary)
    m = len(boundary)
    valid = chord_table(inst, boundary)
    sides = {edge_key(boundary[i], boundary[(i + 1) % m]) for i in range(m)}

    def ecost(u, v):
        return inst.length(u, v) if edge_key(u, v) in sides else inst.length(u, v) / 2

    triangles = []
    for i in range(m):
        for j in range(i + 1, m):
            if not valid[i][j]:
                continue
            for k in range(j + 1, m):
                if valid[i][k] and valid[j][k]:
                    a, b, c = inst.ccw(boundary[i], boundary[j], boundary[k])
                    if inst.orient(a, b, c) == 0:
                        continue
                    edges = (edge_key(a, b), edge_key(b, c), edge_key(c, a))
                    triangles.append(EmptyTriangle(len(triangles), (a, b, c), edges, ecost(a, b) + ecost(b, c) + ecost(c, a)))
    triangles.sort(key=lambda t: t.key)
    side_sets = _side_sets(inst, triangles)
    rows: list[Row] = []
    for key in sorted(side_sets):
        left, right = side_sets[key]
        u, v = key
        if key in sides:
            rows.append(Row(f"e_{u}_{v}", key, {j: 1 for j in left + right}, 1.0))
        else:
            coeffs = {j: 1 for j in left}
            coeffs.update({j: -1 for j in right})
            rows.append(Row(f"e_{u}_{v}", key, coeffs, 0.0))
    return TriangulationLP(inst, triangles, rows, np.array([t.cost for t in triangles]))


def _greedy_start(lp: TriangulationLP) -> list[tuple[int, int, int]] | None:
    inst = lp.instance
    if any(r.rhs == 1 and r.edge not in inst.boundary_keys and not r.forcing for r in lp.rows):
        return None  # polygon LP: the hull is not the region
    allowed = {e for t in lp.triangles for e in t.edges}
    forced = [r.edge for r in lp.rows if r.forcing]
    tris = triangles_from_edges(inst, greedy_completion(inst, forced, allowed))
    if len(tris) != 2 * inst.n - len(inst.hull) - 2:
        return None
    return [t.key for t in tris]


def solve_to_extreme_point(
    lp: TriangulationLP, start: Iterable[tuple[int, int, int]] | None = None, tol: float = FEAS_TOL
) -> FractionalTriangulation:
    """Optimal vertex of the LP.  ``start`` (triangle keys of a triangulation
    feasible for ``lp``) seeds the crash basis; without one a greedy
    triangulation over the LP's own edges is tried before falling back to
    phase 1.  ``tol`` bounds the constraint residual of the answer."""
    A, b, _ = lp.matrix()
    x0 = None
    if start is None:
        start = _greedy_start(lp)
    if start is not None:
        col = lp.column_of
        x0 = np.zeros(len(lp.triangles))
        keys = list(start)
        if all(k in col for k in keys):
            x0[[col[k] for k in keys]] = 1.0
        else:
            x0 = None
    try:
        res = simplex(A, b, lp.cost, x0=x0)
    except Stalled:
        # lexicographic-style perturbation, then re-optimise with true costs
        log.warning("simplex stalled; retrying with a perturbed objective")
        eps = 1e-9 * (np.arange(len(lp.cost)) + 1) / max(len(lp.cost), 1)
        first = simplex(A, b, lp.cost + eps, x0=x0, bland=True)
        res = simplex(A, b, lp.cost, x0=(first.x > 0.5).astype(float) if _is_01(first.x) else None, bland=True)
        res.perturbed = True
    if lp.residual(res.x) > tol:
        raise SimplexError(f"solution violates constraints by {lp.residual(res.x):.3g}")
    weights = {lp.triangles[j].key: float(res.x[j]) for j in np.nonzero(res.x)[0]}
    tri_map = {t.key: t for t in lp.triangles}
    basis = [lp.triangles[j].key for j in res.basis if j < len(lp.triangles)]
    return FractionalTriangulation(lp.instance, weights, res.objective, tri_map, sorted(basis), res.iterations)


def _is_01(x: np.ndarray) -> bool:
    return bool(np.all(np.minimum(np.abs(x), np.abs(x - 1)) <= INT_TOL))


@dataclass
class Classification:
    integral: bool
    triangles: list[EmptyTriangle]  # the triangulation when integral
    fractional: list[tuple[EmptyTriangle, float]]  # strictly fractional support otherwise


def validate_triangulation(inst: Instance, triangles: list[EmptyTriangle], boundary=None) -> None:
    """Raise TilingError unless the triangles tile the convex hull (or the
    simple polygon with counterclockwise ``boundary``)."""
    if boundary is None:
        region_area, outer = inst.hull_area2(), inst.boundary_keys
    else:
        m = len(boundary)
        region_area = polygon_area2(inst, boundary)
        outer = frozenset(edge_key(boundary[i], boundary[(i + 1) % m]) for i in range(m))
    area = 0
    uses: dict[tuple[int, int], list[int]] = {}
    for t in triangles:
        a, b, c = t.vertices
        o = inst.orient(a, b, c)
        if o <= 0:
            raise TilingError(f"triangle {t.vertices} is not counterclockwise")
        ic = inst.int_coords
        area += (ic[b][0] - ic[a][0]) * (ic[c][1] - ic[a][1]) - (ic[b][1] - ic[a][1]) * (ic[c][0] - ic[a][0])
        for e in t.edges:
            w = next(z for z in t.vertices if z not in e)
            uses.setdefault(e, []).append(inst.orient(e[0], e[1], w))
    if area != region_area:
        raise TilingError("triangle areas do not sum to the region area")
    for e, s in uses.items():
        if e in outer:
            if len(s) != 1:
                raise TilingError(f"hull edge {e} used {len(s)} times")
        elif sorted(s) != [-1, 1]:
            raise TilingError(f"interior edge {e} not shared by one triangle per side")
    for e in outer:
        if e not in uses:
            raise TilingError(f"hull edge {e} uncovered")
    clash = find_crossing_pair(inst, sorted(uses))
    if clash is not None:
        raise TilingError(f"edges {clash[0]} and {clash[1]} cross")


def classify_solution(x: FractionalTriangulation, tol: float = INT_TOL, boundary=None) -> Classification:
    near_one = [k for k, w in x.weights.items() if abs(w - 1) <= tol]
    frac = [(x.triangles[k], w) for k, w in sorted(x.weights.items()) if tol < w < 1 - tol]
    if frac:
        return Classification(False, [], frac)
    tris = [x.triangles[k] for k in sorted(near_one)]
    try:
        validate_triangulation(x.instance, tris, boundary)
    except TilingError as exc:
        raise TilingError(f"integral LP solution is not a triangulation: {exc}") from None
    return Classification(True, tris, [])


# -- interchange formats -------------------------------------------------------


def _var(t: EmptyTriangle) -> str:
    a, b, c = t.key
    return f"t_{a}_{b}_{c}"


def write_lp_file(lp: TriangulationLP, path) -> None:
    """CPLEX-style LP text (Minimize / Subject To / Bounds / End)."""
    lines = [f"\\ triangle LP: {lp.instance.n} points, {len(lp.triangles)} triangles", "Minimize"]
    terms = [f"{'+ ' if j else ''}{float(c)!r} {_var(t)}" for j, (t, c) in enumerate(zip(lp.triangles, lp.cost))]
    lines += _wrap(" obj:", terms)
    lines.append("Subject To")
    for r in lp.rows:
        if not r.coeffs:
            continue
        terms = [f"{'+' if v > 0 else '-'} {_var(lp.triangles[j])}" for j, v in sorted(r.coeffs.items())]
        body = _wrap(f" {r.name}:", terms)
        body[-1] += f" = {r.rhs:g}"
        lines += body
    lines.append("Bounds")
    lines += [f" {_var(t)} >= 0" for t in lp.triangles]
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _wrap(head: str, terms: list[str], per_line: int = 6) -> list[str]:
    out = []
    for i in range(0, len(terms), per_line):
        chunk = " ".join(terms[i:i + per_line])
        out.append(f"{head} {chunk}" if i == 0 else f"   {chunk}")
    return out or [head]


def write_solution(x: FractionalTriangulation, path) -> None:
    with open(path, "w") as fh:
        for key in sorted(x.weights):
            fh.write(f"t_{key[0]}_{key[1]}_{key[2]} {x.weights[key]!r}\n")


_VAR_RE = re.compile(r"^t_(\d+)_(\d+)_(\d+)$")


def read_solution(path, lp: TriangulationLP) -> FractionalTriangulation:
    """Read a two-column ``var value`` file against the columns of ``lp``."""
    col = lp.column_of
    x = np.zeros(len(lp.triangles))
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'var value'")
            m = _VAR_RE.match(parts[0])
            if not m:
                raise ValueError(f"line {lineno}: unknown variable {parts[0]!r}")
            key = tuple(sorted(int(g) for g in m.groups()))
            if key not in col:
                raise ValueError(f"line {lineno}: {parts[0]} is not a column of this LP")
            x[col[key]] = float(parts[1])
    weights = {lp.triangles[j].key: float(x[j]) for j in np.nonzero(x)[0]}
    return FractionalTriangulation(lp.instance, weights, float(lp.cost @ x), {t.key: t for t in lp.triangles})
