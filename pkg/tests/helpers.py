"""Shared instance generators for the test suite."""

from __future__ import annotations

import math
import random
from fractions import Fraction

from mwtlab.geometry import GeometryError, Instance, polygon_area2, segments_cross
from mwtlab.polygon_dp import _check_simple

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]
TRI_CENTER = [(0, 0), (4, 0), (2, 3), (2, 1)]


def random_points(seed: int, n: int, box: int = 100) -> list[tuple[int, int]]:
    rng = random.Random(seed)
    pts: set[tuple[int, int]] = set()
    while len(pts) < n:
        pts.add((rng.randint(0, box), rng.randint(0, box)))
    return sorted(pts)


def corpus_instance(seed: int) -> Instance:
    """The seeded random corpus: 5 <= n <= 11, integer coordinates in [0, 100]^2."""
    rng = random.Random(seed)
    n = rng.randint(5, 11)
    pts: set[tuple[int, int]] = set()
    while len(pts) < n:
        pts.add((rng.randint(0, 100), rng.randint(0, 100)))
    return Instance(sorted(pts))


def regular_polygon(m: int, center: bool = False, digits: int = 9) -> Instance:
    """Regular m-gon of radius 1 with coordinates rounded to ``digits`` decimals."""
    q = 10**digits
    pts = [
        (Fraction(round(math.cos(2 * math.pi * k / m) * q), q), Fraction(round(math.sin(2 * math.pi * k / m) * q), q))
        for k in range(m)
    ]
    if center:
        pts.append((0, 0))
    return Instance(pts)


def convex_polygon(m: int, radius: int = 1000) -> Instance:
    """Integer m-gon in strictly convex position (rounded circle points)."""
    pts = [(round(radius * math.cos(2 * math.pi * k / m)), round(radius * math.sin(2 * math.pi * k / m))) for k in range(m)]
    return Instance(pts)


def random_simple_polygon(seed: int, n: int, box: int = 1000) -> tuple[Instance, list[int]]:
    """Random simple polygon by 2-opt untangling of a random tour; returns the
    instance (vertices only) and its counterclockwise boundary."""
    rng = random.Random(seed)
    while True:
        pts = random_points(rng.randrange(10**9), n, box)
        try:
            inst = Instance(pts)
        except ValueError:
            continue
        ic = inst.int_coords
        order = list(range(n))
        rng.shuffle(order)
        changed = True
        while changed:
            changed = False
            for i in range(n):
                for j in range(i + 2, n):
                    if i == 0 and j == n - 1:
                        continue
                    a, b = ic[order[i]], ic[order[i + 1]]
                    c, d = ic[order[j]], ic[order[(j + 1) % n]]
                    if segments_cross((a, b), (c, d)):
                        order[i + 1 : j + 1] = reversed(order[i + 1 : j + 1])
                        changed = True
        if polygon_area2(inst, order) < 0:
            order.reverse()
        try:
            _check_simple(inst, order)
        except GeometryError:
            continue
        return inst, order


# one "CRITERION k: PASS|FAIL ..." line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def report(number: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
