"""Inclusion/exclusion rules for MWT edges and their logical closure.

Seed rules (boundary, beta-skeleton, YXY, diamond) fire once; the closure
rules (maximality, independence, LMT) are then applied in synchronous rounds
until nothing changes.  Because every rule is monotone in the set of known
statuses, the fixed point does not depend on processing order.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import (
    EmptyTriangle,
    Face,
    Instance,
    edge_key,
    enumerate_empty_triangles,
    extract_faces,
    find_crossing_pair,
    segments_cross,
)

log = logging.getLogger(__name__)

ANGLE_MARGIN = 1e-9
# smallest beta for which a skeleton edge is known to lie in every MWT
MIN_SOUND_BETA = 1.0 / math.sin(math.pi / 3.1)
ALL_RULES = ("beta_skeleton", "yxy", "diamond", "maximality", "independence", "lmt")


class Status(str, Enum):
    UNKNOWN = "Unknown"
    IN = "ForcedIn"
    OUT = "ForcedOut"


class ClosureContradiction(RuntimeError):
    """An edge was forced both in and out; always a bug, never an answer."""


@dataclass(frozen=True)
class HeuristicConfig:
    beta: float = MIN_SOUND_BETA
    diamond_angle: float = math.pi / 4.6
    rules_enabled: frozenset = frozenset(ALL_RULES)

    def __post_init__(self):
        if self.beta < MIN_SOUND_BETA - 1e-12:
            raise ValueError(f"beta must be at least 1/sin(pi/3.1) = {MIN_SOUND_BETA:.6f}, got {self.beta}")
        if not 0 < self.diamond_angle < math.pi / 2:
            raise ValueError("diamond angle must lie strictly between 0 and pi/2")
        unknown = set(self.rules_enabled) - set(ALL_RULES)
        if unknown:
            raise ValueError(f"unknown rules: {sorted(unknown)}")

    @classmethod
    def from_rules(cls, text: str | None) -> "HeuristicConfig":
        """Parse ``a,b,-c``: bare names select rules, ``-name`` removes one from
        the full set.  ``None``/``"all"`` enables everything, ``"none"`` nothing."""
        if text is None or text.strip() in ("", "all"):
            return cls()
        if text.strip() == "none":
            return cls(rules_enabled=frozenset())
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if all(p.startswith("-") for p in parts):
            rules = set(ALL_RULES) - {p[1:] for p in parts}
        else:
            rules = {p for p in parts if not p.startswith("-")}
        return cls(rules_enabled=frozenset(rules))


@dataclass
class EdgeStatusLedger:
    instance: Instance
    status: dict[tuple[int, int], Status]
    provenance: dict[tuple[int, int], tuple[str, int]] = field(default_factory=dict)
    rounds: int = 0

    def forced_in(self) -> set[tuple[int, int]]:
        return {k for k, s in self.status.items() if s is Status.IN}

    def forced_out(self) -> set[tuple[int, int]]:
        return {k for k, s in self.status.items() if s is Status.OUT}

    def unknown(self) -> set[tuple[int, int]]:
        return {k for k, s in self.status.items() if s is Status.UNKNOWN}

    def is_out(self, key) -> bool:
        return self.status.get(edge_key(*key)) is Status.OUT

    def is_in(self, key) -> bool:
        return self.status.get(edge_key(*key)) is Status.IN

    def counts(self) -> dict[str, int]:
        out = {s.value: 0 for s in Status}
        for s in self.status.values():
            out[s.value] += 1
        return out

    def rule_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for rule, _ in self.provenance.values():
            out[rule] = out.get(rule, 0) + 1
        return dict(sorted(out.items()))

    def to_records(self) -> list[dict]:
        recs = []
        for (u, v) in sorted(self.status):
            rule, it = self.provenance.get((u, v), (None, None))
            recs.append({"u": u, "v": v, "status": self.status[u, v].value, "rule": rule, "iter": it})
        return recs

    def to_json(self) -> str:
        return json.dumps(self.to_records(), indent=1)


# -- individual tests ------------------------------------------------------------


def _edge_frame(inst: Instance, u: int, v: int):
    """Float coordinates of every point in the frame of edge uv: position along
    the edge from u and signed distance to the left of it."""
    xy = inst.xy
    d = xy[v] - xy[u]
    L = math.hypot(*d)
    t = d / L
    rel = xy - xy[u]
    along = rel @ t
    left = rel[:, 0] * (-t[1]) + rel[:, 1] * t[0]
    return along, left, L


def beta_skeleton_test(e, inst: Instance, beta: float = HeuristicConfig.beta) -> bool:
    """True when every other point sees e under an angle below arcsin(1/beta)
    by the safety margin, i.e. both open disks of diameter beta|e| are empty."""
    u, v = edge_key(*e)
    theta = math.asin(1.0 / beta)
    xy = inst.xy
    a = xy[u] - xy
    b = xy[v] - xy
    na = np.hypot(a[:, 0], a[:, 1])
    nb = np.hypot(b[:, 0], b[:, 1])
    mask = np.ones(inst.n, dtype=bool)
    mask[[u, v]] = False
    cosang = np.einsum("ij,ij->i", a[mask], b[mask]) / (na[mask] * nb[mask])
    ang = np.arccos(np.clip(cosang, -1.0, 1.0))
    return bool(np.all(ang < theta - ANGLE_MARGIN))


def yxy_test(e, inst: Instance) -> bool:
    """True when no potential edge crossing e has an endpoint closer than |e|
    to an endpoint of e (exact arithmetic)."""
    x, y = edge_key(*e)
    X, Y = inst.X, inst.Y
    L2 = inst.sq_dist(x, y)
    dx = (X - X[x]) ** 2 + (Y - Y[x]) ** 2
    dy = (X - X[y]) ** 2 + (Y - Y[y]) ** 2
    near = (dx < L2) | (dy < L2)
    near[[x, y]] = False
    ps = np.nonzero(near.astype(bool))[0]
    if len(ps) == 0:
        return True
    side = inst.orient_many(x, y)
    for p in ps:
        sp = int(side[p])
        if sp == 0:
            continue  # on the line of e but outside it: no segment from p crosses e
        qs = np.nonzero((side == -sp) & inst.potential_mask[p])[0]
        if len(qs) == 0:
            continue
        ox = np.sign((X[qs] - X[p]) * (Y[x] - Y[p]) - (Y[qs] - Y[p]) * (X[x] - X[p]))
        oy = np.sign((X[qs] - X[p]) * (Y[y] - Y[p]) - (Y[qs] - Y[p]) * (X[y] - X[p]))
        if np.any(ox * oy < 0):
            return False
    return True


def diamond_test(e, inst: Instance, angle: float = HeuristicConfig.diamond_angle) -> bool:
    """True (exclude e) when both isosceles triangles on e with the given base
    angle hold a point strictly inside, by a margin of 1e-9 |e|."""
    u, v = edge_key(*e)
    if inst.is_boundary(u, v):
        return False
    along, left, L = _edge_frame(inst, u, v)
    return _diamond_blocked(along, left, L, angle, (u, v))


def _diamond_blocked(along, left, L, angle, ends) -> bool:
    tn = math.tan(angle)
    cs = math.cos(angle)
    margin = ANGLE_MARGIN * L
    h = np.abs(left)
    inside = (h > margin) & ((along * tn - h) * cs > margin) & (((L - along) * tn - h) * cs > margin)
    inside[list(ends)] = False
    return bool(np.any(inside & (left > 0))) and bool(np.any(inside & (left < 0)))


def _sides(inst: Instance, e, triangles) -> tuple[list[EmptyTriangle], list[EmptyTriangle]]:
    u, v = e
    left, right = [], []
    for t in triangles:
        if e not in t.edges:
            continue
        w = next(z for z in t.vertices if z not in e)
        (left if inst.orient(u, v, w) > 0 else right).append(t)
    return left, right


def _apex(t: EmptyTriangle, e) -> int:
    return next(z for z in t.vertices if z not in e)


def _locally_minimal(inst: Instance, e, c: int, d: int) -> bool:
    ic = inst.int_coords
    if not segments_cross((ic[c], ic[d]), (ic[e[0]], ic[e[1]])):
        return True  # quadrilateral is not strictly convex
    return inst.sq_dist(*e) <= inst.sq_dist(c, d)


def locally_minimal_pairs(e, inst: Instance, triangles=None) -> list[tuple[EmptyTriangle, EmptyTriangle]]:
    """Pairs of empty triangles meeting exactly in e for which e is locally
    minimal (quad non-convex, or e no longer than the other diagonal)."""
    e = edge_key(*e)
    if inst.is_boundary(*e):
        return []
    if triangles is None:
        triangles = inst.triangles
    left, right = _sides(inst, e, triangles)
    out = []
    for t in left:
        for s in right:
            if _locally_minimal(inst, e, _apex(t, e), _apex(s, e)):
                out.append((t, s))
    return out


# -- closure ---------------------------------------------------------------------


def _crossing_lists(inst: Instance, keys: list[tuple[int, int]]) -> list[np.ndarray]:
    """For each edge in ``keys``, indices of the other edges it properly crosses."""
    X, Y = inst.X, inst.Y
    if not keys:
        return []
    U = np.array([k[0] for k in keys])
    V = np.array([k[1] for k in keys])
    out = []
    for a, b in keys:
        o1 = np.sign((X[b] - X[a]) * (Y[U] - Y[a]) - (Y[b] - Y[a]) * (X[U] - X[a]))
        o2 = np.sign((X[b] - X[a]) * (Y[V] - Y[a]) - (Y[b] - Y[a]) * (X[V] - X[a]))
        o3 = np.sign((X[V] - X[U]) * (Y[a] - Y[U]) - (Y[V] - Y[U]) * (X[a] - X[U]))
        o4 = np.sign((X[V] - X[U]) * (Y[b] - Y[U]) - (Y[V] - Y[U]) * (X[b] - X[U]))
        out.append(np.nonzero(((o1 * o2 < 0) & (o3 * o4 < 0)).astype(bool))[0])
    return out


def _diamond_all(inst: Instance, keys: list[tuple[int, int]], angle: float) -> np.ndarray:
    res = np.zeros(len(keys), dtype=bool)
    for i, (u, v) in enumerate(keys):
        if inst.is_boundary(u, v):
            continue
        along, left, L = _edge_frame(inst, u, v)
        res[i] = _diamond_blocked(along, left, L, angle, (u, v))
    return res


def run_closure(inst: Instance, config: HeuristicConfig | None = None) -> EdgeStatusLedger:
    """Fixed point of the seed and closure rules, with per-edge provenance
    ``(rule, round)``; seeds are round 0."""
    config = config or HeuristicConfig()
    rules = config.rules_enabled
    keys = sorted(inst.edges)
    status = {k: Status.UNKNOWN for k in keys}
    prov: dict[tuple[int, int], tuple[str, int]] = {}

    def settle(changes: dict, rnd: int) -> None:
        for k, (s, rule) in changes.items():
            old = status[k]
            if old is not Status.UNKNOWN and old is not s:
                raise ClosureContradiction(f"edge {k} forced {s.value} by {rule} but already {old.value} by {prov[k][0]}")
            if old is Status.UNKNOWN:
                status[k] = s
                prov[k] = (rule, rnd)

    # round 0: seeds.  The diamond test runs first so the (costlier) inclusion
    # tests only look at edges it leaves alive; a sound rule set never forces an
    # excluded edge back in.
    seeds: dict = {}
    for k in keys:
        if k in inst.boundary_keys:
            seeds[k] = (Status.IN, "boundary")
    if "diamond" in rules:
        blocked = _diamond_all(inst, keys, config.diamond_angle)
        for k, b in zip(keys, blocked):
            if b:
                seeds[k] = (Status.OUT, "diamond")
    for k in keys:
        if k in seeds:
            continue
        if "beta_skeleton" in rules and beta_skeleton_test(k, inst, config.beta):
            seeds[k] = (Status.IN, "beta_skeleton")
        elif "yxy" in rules and yxy_test(k, inst):
            seeds[k] = (Status.IN, "yxy")
    settle(seeds, 0)

    # crossing structure and triangles among edges still alive after the seeds
    alive = [k for k in keys if status[k] is not Status.OUT]
    idx = {k: i for i, k in enumerate(alive)}
    crossers = _crossing_lists(inst, alive) if {"maximality", "independence"} & rules else None
    if "lmt" in rules:
        if "triangles" in inst.__dict__:
            tris = [t for t in inst.triangles if all(status[e] is not Status.OUT for e in t.edges)]
        else:
            tris = enumerate_empty_triangles(inst, alive)
        by_edge: dict[tuple[int, int], tuple[list, list]] = {k: ([], []) for k in alive}
        for t in tris:
            for e in t.edges:
                w = _apex(t, e)
                by_edge[e][0 if inst.orient(e[0], e[1], w) > 0 else 1].append(t)

    rnd = 0
    while True:
        rnd += 1
        changes: dict = {}
        for k in alive:
            if status[k] is not Status.UNKNOWN:
                continue
            if crossers is not None:
                cs = [alive[j] for j in crossers[idx[k]]]
                if "independence" in rules and any(status[c] is Status.IN for c in cs):
                    changes[k] = (Status.OUT, "independence")
                    continue
                if "maximality" in rules and all(status[c] is Status.OUT for c in cs):
                    changes[k] = (Status.IN, "maximality")
                    continue
            if "lmt" in rules and k not in inst.boundary_keys and not _lmt_survives(inst, k, by_edge[k], status):
                changes[k] = (Status.OUT, "lmt")
        # an edge pushed both ways in one round would be caught by settle()
        if not changes:
            break
        settle(changes, rnd)
        log.debug("closure round %d: %d edges decided", rnd, len(changes))
    ledger = EdgeStatusLedger(inst, status, prov, rnd - 1)
    _check_ledger(ledger)
    return ledger


def _lmt_survives(inst: Instance, e, sides, status) -> bool:
    left, right = sides
    for t in left:
        if any(status[f] is Status.OUT for f in t.edges):
            continue
        for s in right:
            if any(status[f] is Status.OUT for f in s.edges):
                continue
            if _locally_minimal(inst, e, _apex(t, e), _apex(s, e)):
                return True
    return False


def _check_ledger(ledger: EdgeStatusLedger) -> None:
    inst = ledger.instance
    for k in inst.boundary_keys:
        if ledger.status[k] is not Status.IN:
            raise ClosureContradiction(f"hull edge {k} is not ForcedIn")
    clash = find_crossing_pair(inst, sorted(ledger.forced_in()))
    if clash is not None:
        raise ClosureContradiction(f"ForcedIn edges {clash[0]} and {clash[1]} cross")


def skeleton_faces(ledger: EdgeStatusLedger, inst: Instance | None = None) -> tuple[list[Face], bool]:
    """Faces of the ForcedIn graph; solvable when each is empty and simple, so
    the polygon DP can finish the job face by face."""
    inst = inst or ledger.instance
    faces = extract_faces(inst, ledger.forced_in())
    solvable = all(f.is_empty and f.is_simple for f in faces)
    return faces, solvable
