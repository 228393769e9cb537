"""Dense-tableau primal simplex for ``min c.x  s.t.  A x = b, x >= 0``.

Returns basic (vertex) solutions.  The start is either a crash basis built
around a known feasible 0/1 point, or a classical phase 1 on artificials.
Pivoting is Dantzig's rule, switching to Bland's rule once the objective
stalls for ``2 * rows`` iterations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import blas

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-9
REFACTOR_EVERY = 200


class SimplexError(RuntimeError):
    pass


class Infeasible(SimplexError):
    pass


class Stalled(SimplexError):
    pass


@dataclass
class SimplexResult:
    x: np.ndarray
    objective: float
    basis: list[int]
    iterations: int
    used_bland: bool
    perturbed: bool = False


class _Tableau:
    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int]):
        self.A = A  # rows x cols, includes artificial columns
        self.b = b
        self.basis = list(basis)
        self.refactor()

    def refactor(self) -> None:
        B = self.A[:, self.basis]
        try:
            lu = scipy.linalg.lu_factor(B)
        except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover
            raise SimplexError(f"basis factorization failed: {exc}") from None
        self.T = np.ascontiguousarray(scipy.linalg.lu_solve(lu, self.A))
        self.beta = scipy.linalg.lu_solve(lu, self.b)
        self.T[np.abs(self.T) < 1e-13] = 0.0
        self.beta[np.abs(self.beta) < 1e-13] = 0.0

    def pivot(self, r: int, q: int) -> None:
        T, beta = self.T, self.beta
        piv = T[r, q]
        T[r] /= piv
        beta[r] /= piv
        col = T[:, q].copy()
        col[r] = 0.0
        nz = np.nonzero(col)[0]
        if 4 * len(nz) > len(col):
            # dense update in place: T^T is Fortran-ordered, so BLAS can write it directly
            blas.dger(-1.0, T[r].copy(), col, a=T.T, overwrite_a=1)
            beta -= col * beta[r]
        elif len(nz):
            T[nz] -= np.outer(col[nz], T[r])
            beta[nz] -= col[nz] * beta[r]
        self.basis[r] = q

    def drop_rows(self, positions: list[int]) -> None:
        """Remove basis positions holding artificials together with the
        (redundant) constraints those artificials belong to."""
        if not positions:
            return
        cons = [int(np.argmax(np.abs(self.A[:, self.basis[r]]))) for r in positions]
        keep_a = np.ones(self.A.shape[0], dtype=bool)
        keep_a[cons] = False
        keep_t = np.ones(len(self.basis), dtype=bool)
        keep_t[positions] = False
        self.A = self.A[keep_a]
        self.b = self.b[keep_a]
        self.basis = [j for j, k in zip(self.basis, keep_t) if k]
        self.T = self.T[keep_t]
        self.beta = self.beta[keep_t]


def _run(tab: _Tableau, c: np.ndarray, allowed: np.ndarray, max_iter: int, bland: bool = False):
    """Primal simplex iterations on ``tab`` for cost ``c``.  ``allowed`` masks
    columns that may enter the basis."""
    m = len(tab.basis)
    stall_limit = max(2 * m, 10)
    best_obj = np.inf
    since_improve = 0
    it = 0
    since_refactor = 0
    while True:
        if since_refactor >= REFACTOR_EVERY:
            tab.refactor()
            since_refactor = 0
        cb = c[tab.basis]
        d = c - cb @ tab.T
        d[tab.basis] = 0.0
        cand = np.nonzero((d < -COST_TOL) & allowed)[0]
        if len(cand) == 0:
            tab.refactor()
            cb = c[tab.basis]
            d = c - cb @ tab.T
            d[tab.basis] = 0.0
            cand = np.nonzero((d < -COST_TOL) & allowed)[0]
            if len(cand) == 0:
                return it, bland
        q = int(cand[0]) if bland else int(cand[np.argmin(d[cand])])
        col = tab.T[:, q]
        rows = np.nonzero(col > PIVOT_TOL)[0]
        if len(rows) == 0:
            raise SimplexError("LP is unbounded")
        ratios = np.maximum(tab.beta[rows], 0.0) / col[rows]
        rmin = ratios.min()
        ties = rows[ratios <= rmin + 1e-12]
        if bland:
            r = int(min(ties, key=lambda i: tab.basis[i]))
        else:
            r = int(max(ties, key=lambda i: (col[i], -tab.basis[i])))
        tab.pivot(r, q)
        it += 1
        since_refactor += 1
        obj = float(c[tab.basis] @ tab.beta)
        if obj < best_obj - 1e-12:
            best_obj = obj
            since_improve = 0
        else:
            since_improve += 1
            if not bland and since_improve > stall_limit:
                log.debug("simplex stalled after %d iterations; switching to Bland's rule", it)
                bland = True
        if it > max_iter:
            raise Stalled(f"no convergence after {it} iterations")


def _crash_basis(A: np.ndarray, x0: np.ndarray) -> list[int] | None:
    """Basis made of the support of ``x0`` plus artificial columns (indexed
    from ``A.shape[1]``) on the rows the support does not pivot on."""
    m, n = A.shape
    support = np.nonzero(x0 > 0.5)[0]
    if len(support) == 0 or len(support) > m:
        return None
    S = A[:, support]
    p, l, u = scipy.linalg.lu(S)
    if np.min(np.abs(np.diag(u))) < 1e-9:
        return None
    perm = np.argmax(p, axis=0)  # row of A at each position of P^T S
    pivot_rows = set(int(r) for r in perm[: len(support)])
    basis = [-1] * m
    # assign support columns to their pivot rows, artificials elsewhere
    for k, col in enumerate(support):
        basis[int(perm[k])] = int(col)
    for r in range(m):
        if r not in pivot_rows:
            basis[r] = n + r
    return basis


def simplex(A, b, c, x0=None, max_iter: int | None = None, bland: bool = False) -> SimplexResult:
    """Optimal basic solution of the equality-form LP, or raise."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m0, n = A.shape
    nonzero = np.any(A != 0, axis=1)
    if np.any(~nonzero & (np.abs(b) > FEAS_TOL)):
        raise Infeasible("a constraint with no variables has nonzero right-hand side")
    A = A[nonzero]
    b = b[nonzero]
    m = A.shape[0]
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    Afull = np.hstack([A, np.eye(m)])
    basis = None
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if np.max(np.abs(A @ x0 - b), initial=0.0) <= FEAS_TOL and np.all(x0 >= 0):
            basis = _crash_basis(A, x0)
    tab = _Tableau(Afull, b, basis if basis is not None else list(range(n, n + m)))
    iters = 0
    if basis is None or np.any(tab.beta < -FEAS_TOL):
        if basis is not None:
            tab = _Tableau(Afull, b, list(range(n, n + m)))
        c1 = np.concatenate([np.zeros(n), np.ones(m)])
        it, bland = _run(tab, c1, np.ones(n + m, dtype=bool), max_iter, bland)
        iters += it
        if float(c1[tab.basis] @ tab.beta) > 1e-7:
            raise Infeasible("phase 1 ended with positive artificial weight")
    # drive zero-valued artificials out of the basis; rows where that is
    # impossible are redundant (pivots elsewhere leave them untouched)
    redundant = []
    for r in range(len(tab.basis)):
        if tab.basis[r] < n:
            continue
        row = tab.T[r, :n].copy()
        row[[j for j in tab.basis if j < n]] = 0.0
        js = np.nonzero(np.abs(row) > 1e-7)[0]
        if len(js):
            tab.pivot(r, int(js[np.argmax(np.abs(row[js]))]))
        else:
            redundant.append(r)
    tab.drop_rows(redundant)
    tab.refactor()
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(tab.A.shape[1] - n, dtype=bool)])
    cfull = np.concatenate([c, np.zeros(tab.A.shape[1] - n)])
    it, bland = _run(tab, cfull, allowed, max_iter, bland)
    iters += it
    x = np.zeros(n)
    tab.refactor()
    x[tab.basis] = tab.beta
    x[np.abs(x) < 1e-12] = 0.0
    if np.any(x < -FEAS_TOL):
        raise SimplexError("final basis is primal infeasible")
    x = np.maximum(x, 0.0)
    return SimplexResult(x, float(c @ x), list(tab.basis), iters, bland)
