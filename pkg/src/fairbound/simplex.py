"""Dense tableau simplex for small LPs of the form max c.x, A x <= b, x >= 0, b >= 0.

Bland's rule for both entering and leaving choices, so it cannot cycle.
The slack basis is feasible because ``b >= 0``; no phase one is needed
for the fairness LPs built in :mod:`fairbound.oracle`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FairboundError


class SimplexError(FairboundError):
    pass


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    value: float
    iterations: int


def simplex_max(c, a_ub, b_ub, tol: float = 1e-10, max_iter: int = 10_000) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    a = np.atleast_2d(np.asarray(a_ub, dtype=float))
    b = np.asarray(b_ub, dtype=float)
    m, n = a.shape
    if c.shape != (n,) or b.shape != (m,):
        raise SimplexError(f"shape mismatch: c {c.shape}, A {a.shape}, b {b.shape}")
    if not (np.isfinite(a).all() and np.isfinite(b).all() and np.isfinite(c).all()):
        raise SimplexError("non-finite LP coefficients")
    if (b < -tol).any():
        raise SimplexError("negative right-hand side: slack basis infeasible")

    # tableau rows: constraints; last row: reduced costs (c_j - z_j); last column: rhs
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = a
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = np.maximum(b, 0.0)
    tab[m, :n] = c
    basis = list(range(n, n + m))

    for it in range(max_iter):
        reduced = tab[m, :-1]
        candidates = np.flatnonzero(reduced > tol)
        if candidates.size == 0:
            x = np.zeros(n + m)
            x[basis] = tab[:m, -1]
            return SimplexResult(x[:n].copy(), float(-tab[m, -1]), it)
        col = int(candidates[0])
        column = tab[:m, col]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            raise SimplexError("LP is unbounded")
        ratios = tab[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + tol]
        row = int(min(tied, key=lambda r: basis[r]))

        tab[row] /= tab[row, col]
        for r in range(m + 1):
            if r != row and tab[r, col] != 0.0:
                tab[r] -= tab[r, col] * tab[row]
        basis[row] = col

    raise SimplexError(f"simplex did not converge in {max_iter} iterations")
