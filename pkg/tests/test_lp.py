import math

import numpy as np
import pytest

from helpers import SQUARE, TRI_CENTER, convex_polygon, corpus_instance, random_points, regular_polygon
from mwtlab.geometry import Instance
from mwtlab.heuristics import run_closure
from mwtlab.lp import (
    LPBuildError,
    build_lp,
    build_polygon_lp,
    classify_solution,
    read_solution,
    solve_to_extreme_point,
    write_lp_file,
    write_solution,
)
from mwtlab.oracle import brute_force_mwt

highspy = pytest.importorskip("highspy")


def highs_objective(path):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(str(path))
    h.run()
    return h.getInfo().objective_function_value


class TestBuild:
    def test_square_shape(self):
        lp = build_lp(Instance(SQUARE))
        A, b, rows = lp.matrix()
        assert A.shape == (6, 4)
        diag = {r.edge: r for r in rows if r.edge in {(0, 2), (1, 3)}}
        for r in diag.values():
            assert sorted(r.coeffs.values()) == [-1, 1] and r.rhs == 0

    def test_tri_center_pins_each_triangle(self):
        lp = build_lp(Instance(TRI_CENTER))
        assert len(lp.triangles) == 3
        hull_rows = [r for r in lp.rows if r.rhs == 1]
        assert len(hull_rows) == 3 and all(len(r.coeffs) == 1 for r in hull_rows)

    @pytest.mark.parametrize("seed", range(5))
    def test_matrix_structure(self, seed):
        inst = Instance(random_points(seed, 10))
        lp = build_lp(inst)
        A, _, _ = lp.matrix(nonempty_only=False)
        assert set(np.unique(A)) <= {-1.0, 0.0, 1.0}
        assert np.all(np.abs(A).sum(axis=0) == 3)
        assert A.shape == (len(inst.edges), len(inst.triangles))

    @pytest.mark.parametrize("seed", range(5))
    def test_ledger_removes_exactly_triangles_on_excluded_edges(self, seed):
        inst = Instance(random_points(seed, 10))
        ledger = run_closure(inst)
        out = ledger.forced_out()
        expect = [t.key for t in inst.triangles if not any(e in out for e in t.edges)]
        lp = build_lp(inst, ledger)
        assert [t.key for t in lp.triangles] == expect
        assert lp.removed == len(inst.triangles) - len(expect)
        forcing = [r for r in lp.rows if r.forcing]
        assert {r.edge for r in forcing} == ledger.forced_in() - inst.boundary_keys

    def test_ledger_enumeration_path_matches_filtered_path(self):
        pts = random_points(4, 11)
        a, b = Instance(pts), Instance(pts)
        a.triangles  # populate the catalog so the filtered path is used
        la, lb = build_lp(a, run_closure(a)), build_lp(b, run_closure(b))
        assert [t.key for t in la.triangles] == [t.key for t in lb.triangles]

    def test_missing_hull_triangle_detected(self):
        inst = Instance(SQUARE)
        with pytest.raises(LPBuildError):
            build_lp(inst, triangles=[t for t in inst.triangles if 0 not in t.vertices])


class TestSolve:
    def test_square(self):
        x = solve_to_extreme_point(build_lp(Instance(SQUARE)))
        assert x.objective == pytest.approx(4 + math.sqrt(2))
        c = classify_solution(x)
        assert c.integral and len(c.triangles) == 2

    def test_tri_center(self):
        x = solve_to_extreme_point(build_lp(Instance(TRI_CENTER)))
        assert sorted(x.weights.values()) == pytest.approx([1, 1, 1])
        assert x.objective == pytest.approx(4 + 2 * math.sqrt(13) + 2 * math.sqrt(5) + 2)
        assert classify_solution(x).integral

    @pytest.mark.parametrize("m", [5, 6, 7, 8])
    def test_convex_position_is_integral(self, m):
        inst = convex_polygon(m)
        x = solve_to_extreme_point(build_lp(inst))
        assert classify_solution(x).integral
        assert x.objective == pytest.approx(brute_force_mwt(inst)[0], abs=1e-6)

    def test_thirteen_gon_with_center_is_fractional(self):
        inst = regular_polygon(13, center=True)
        x = solve_to_extreme_point(build_lp(inst))
        c = classify_solution(x)
        assert not c.integral
        assert all(abs(w - 0.5) < 1e-7 for _, w in c.fractional)

    @pytest.mark.parametrize("seed", range(6))
    def test_edge_weights_and_coverage(self, seed):
        inst = corpus_instance(seed)
        x = solve_to_extreme_point(build_lp(inst))
        ew = x.edge_weights
        for e in inst.boundary_keys:
            assert ew[e] == pytest.approx(1.0)
        for e, w in ew.items():
            assert -1e-9 <= w <= 1 + 1e-9
        rng = np.random.default_rng(seed)
        for t in inst.triangles[:20]:
            w = rng.dirichlet(np.ones(3))
            px, py = w @ inst.xy[list(t.vertices)]
            assert x.coverage(px, py) == pytest.approx(1.0, abs=1e-7)

    @pytest.mark.parametrize("seed", range(4))
    def test_warm_start_agrees_with_cold(self, seed):
        inst = corpus_instance(seed)
        lp = build_lp(inst)
        cold = solve_to_extreme_point(lp)
        _, optima = brute_force_mwt(inst)
        warm = solve_to_extreme_point(lp, [t.key for t in optima[0]])
        assert warm.objective == pytest.approx(cold.objective, abs=1e-9)


class TestPolygonLP:
    def test_reflex_quad(self):
        inst = Instance([(0, 0), (4, 0), (1, 1), (0, 4)])
        lp = build_polygon_lp(inst, [0, 1, 2, 3])
        assert len(lp.triangles) == 2
        x = solve_to_extreme_point(lp)
        c = classify_solution(x, boundary=[0, 1, 2, 3])
        assert c.integral


class TestInterchange:
    def test_square_export_cross_solves(self, tmp_path):
        lp = build_lp(Instance(SQUARE))
        path = tmp_path / "square.lp"
        write_lp_file(lp, path)
        assert highs_objective(path) == pytest.approx(4 + math.sqrt(2), abs=1e-9)

    @pytest.mark.parametrize("seed", range(3))
    def test_random_export_cross_solves(self, tmp_path, seed):
        inst = corpus_instance(seed)
        lp = build_lp(inst, run_closure(inst))
        path = tmp_path / "inst.lp"
        write_lp_file(lp, path)
        assert highs_objective(path) == pytest.approx(solve_to_extreme_point(lp).objective, abs=1e-7)

    def test_solution_round_trip(self, tmp_path):
        inst = regular_polygon(13, center=True)
        lp = build_lp(inst)
        x = solve_to_extreme_point(lp)
        write_solution(x, tmp_path / "x.sol")
        y = read_solution(tmp_path / "x.sol", lp)
        assert y.weights == pytest.approx(x.weights)
        assert y.objective == pytest.approx(x.objective)
