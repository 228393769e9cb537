import numpy as np
import pytest
from scipy.optimize import linprog

from mwtlab.simplex import Infeasible, simplex


def random_lp(seed, m=6, n=14):
    rng = np.random.default_rng(seed)
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    x_feas = rng.random(n) * (rng.random(n) < 0.6)
    b = A @ x_feas
    c = rng.random(n) + 0.1
    return A, b, c, x_feas


@pytest.mark.parametrize("seed", range(20))
def test_matches_scipy_optimum(seed):
    A, b, c, _ = random_lp(seed)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    res = simplex(A, b, c)
    assert res.objective == pytest.approx(ref.fun, abs=1e-7)
    assert np.max(np.abs(A @ res.x - b)) < 1e-8
    assert np.all(res.x >= 0)


@pytest.mark.parametrize("seed", range(20))
def test_returns_a_vertex(seed):
    A, b, c, _ = random_lp(seed)
    res = simplex(A, b, c)
    support = np.nonzero(res.x > 1e-9)[0]
    assert np.linalg.matrix_rank(A[:, support]) == len(support)


def test_redundant_rows_are_tolerated():
    A = np.array([[1.0, 1, 0], [1, 1, 0], [0, 1, 1]])
    b = np.array([1.0, 1, 1])
    res = simplex(A, b, np.array([1.0, 2, 1]))
    assert res.objective == pytest.approx(2.0)


def test_warm_start_from_feasible_point():
    A, _, c, _ = random_lp(3)
    # a 0/1 feasible point supported on an appended identity block
    A2 = np.hstack([A, np.eye(A.shape[0])])
    c2 = np.concatenate([c, np.full(A.shape[0], 100.0)])
    x0 = np.concatenate([np.zeros(A.shape[1]), np.ones(A.shape[0])])
    b2 = A2 @ x0
    warm = simplex(A2, b2, c2, x0=x0)
    ref = linprog(c2, A_eq=A2, b_eq=b2, bounds=(0, None), method="highs")
    assert warm.objective == pytest.approx(ref.fun, abs=1e-7)


def test_degenerate_cycling_example_terminates():
    # Beale's classic cycling LP in equality form (slacks added)
    A = np.array(
        [
            [0.25, -60, -0.04, 9, 1, 0, 0],
            [0.5, -90, -0.02, 3, 0, 1, 0],
            [0, 0, 1, 0, 0, 0, 1],
        ]
    )
    b = np.array([0.0, 0, 1])
    c = np.array([-0.75, 150, -0.02, 6, 0, 0, 0])
    res = simplex(A, b, c)
    assert res.objective == pytest.approx(-0.05)


def test_infeasible():
    # x1 + x2 = -1 has no nonnegative solution
    with pytest.raises(Infeasible):
        simplex(np.array([[1.0, 1.0]]), np.array([-1.0]), np.array([1.0, 1.0]))
