"""Dense two-phase primal simplex for small linear programs in equality form.

Solves  min c.x  subject to  A x = b, x >= 0.  Dantzig pricing is used until a
run of degenerate pivots appears, after which Bland's rule takes over so that
cycling cannot occur.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import LPNumericFailure, TooLarge

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-8
MAX_TABLEAU = 30_000_000  # entries; about 240 MB of float64


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    objective: float
    iterations: int
    reduced: np.ndarray  # reduced costs c_j - y.A_j at the optimum


class _Tableau:
    def __init__(self, T: np.ndarray, basis: np.ndarray):
        self.T = T  # rows 0..m-1 constraints, last row reduced costs; last column rhs
        self.basis = basis
        self.iterations = 0

    @property
    def m(self) -> int:
        return self.T.shape[0] - 1

    def pivot(self, r: int, c: int) -> None:
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        rows = np.nonzero(col)[0]
        T[rows] -= np.outer(col[rows], T[r])
        T[:, c] = 0.0
        T[r, c] = 1.0
        self.basis[r] = c
        self.iterations += 1

    def run(self, allowed: np.ndarray, max_iter: int) -> None:
        """Pivot until no allowed column has a negative reduced cost."""
        T = self.T
        bland = False
        stall = 0
        last_obj = -T[-1, -1]
        while True:
            if self.iterations >= max_iter:
                raise LPNumericFailure("simplex iteration limit reached", iterations=self.iterations)
            red = np.where(allowed, T[-1, :-1], 0.0)
            cand = np.nonzero(red < -PIVOT_TOL)[0]
            if cand.size == 0:
                return
            c = int(cand[0]) if bland else int(cand[np.argmin(red[cand])])
            col = T[:-1, c]
            pos = col > PIVOT_TOL
            if not pos.any():
                raise LPNumericFailure("linear program is unbounded", column=c)
            ratios = np.full(self.m, np.inf)
            ratios[pos] = T[:-1, -1][pos] / col[pos]
            best = ratios.min()
            ties = np.nonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))[0]
            # among ties take the largest pivot for stability, or the lowest basic index under Bland
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(col[ties])])
            self.pivot(r, c)
            obj = -T[-1, -1]
            if obj < last_obj - 1e-12:
                stall = 0
                last_obj = obj
            else:
                stall += 1
                if stall > 50:
                    bland = True


def simplex(c, A, b, max_iter: int | None = None) -> LPResult:
    """Minimize c.x over A x = b, x >= 0.

    Columns of A that are unit vectors with a nonnegative right-hand side seed
    the starting basis; remaining rows get artificial variables for phase one.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    A = A.copy()
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    basis = np.full(m, -1, dtype=np.int64)
    nz = (A != 0).sum(axis=0)
    for j in np.nonzero(nz == 1)[0]:
        i = int(np.nonzero(A[:, j])[0][0])
        if basis[i] < 0 and A[i, j] > 0:
            basis[i] = j
            b[i] /= A[i, j]
            A[i] /= A[i, j]
    need = np.nonzero(basis < 0)[0]
    n_art = len(need)
    width = n + n_art + 1
    if (m + 1) * width > MAX_TABLEAU:
        raise TooLarge(f"simplex tableau {m + 1}x{width} exceeds the size cap", rows=m + 1, cols=width)
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    T = np.zeros((m + 1, width))
    T[:m, :n] = A
    T[:m, -1] = b
    for k, i in enumerate(need):
        T[i, n + k] = 1.0
        basis[i] = n + k
    tab = _Tableau(T, basis)

    if n_art:
        # phase one: minimize the sum of artificials
        T[-1, :] = 0.0
        T[-1, n : n + n_art] = 1.0
        for i in need:
            T[-1] -= T[i]
        tab.run(np.ones(width - 1, dtype=bool), max_iter)
        if -T[-1, -1] > FEAS_TOL * max(1.0, np.abs(b).max()):
            raise LPNumericFailure("linear program is infeasible", residual=float(-T[-1, -1]))
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = np.ones(m + 1, dtype=bool)
        for r in range(m):
            if tab.basis[r] >= n:
                row = T[r, :n]
                j = np.nonzero(np.abs(row) > 1e-9)[0]
                if j.size:
                    tab.pivot(r, int(j[np.argmax(np.abs(row[j]))]))
                else:
                    keep[r] = False
        T = np.delete(T, np.s_[n : n + n_art], axis=1)[keep]
        tab = _Tableau(T, tab.basis[keep[:-1]])
        tab.iterations = 0

    T = tab.T
    T[-1, :] = 0.0
    T[-1, :n] = c
    for r, j in enumerate(tab.basis):
        if c[j]:
            T[-1] -= c[j] * T[r]
    tab.run(np.ones(n, dtype=bool), max_iter)

    x = np.zeros(n)
    x[tab.basis] = T[:-1, -1]
    if (x < -FEAS_TOL).any():
        raise LPNumericFailure("simplex lost primal feasibility", worst=float(x.min()))
    x = np.maximum(x, 0.0)
    return LPResult(x=x, objective=float(c @ x), iterations=tab.iterations, reduced=T[-1, :n].copy())
