"""Phase-1 simplex for ``A x = b, x >= 0`` feasibility.

Dense tableau, Bland's rule for both entering and leaving choices, so the
method terminates on degenerate problems. Meant for small instances (a few
thousand columns at most).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class PhaseOneResult:
    feasible: bool
    x: np.ndarray | None
    #: Farkas vector ``y`` with ``A^T y <= 0`` and ``b^T y > 0`` when infeasible
    y: np.ndarray
    objective: float
    iterations: int


def phase_one(A, b, tol: float = 1e-9, max_iter: int = 100_000) -> PhaseOneResult:
    """Minimize the sum of artificial variables over ``[A | I] [x; a] = b``.

    The final simplex multipliers ``y = c_B B^-1`` form the certificate: they
    satisfy ``A^T y <= 0`` componentwise, and ``b^T y`` equals the phase-1
    optimum, which is positive exactly when the system is infeasible.
    """
    A = np.array(A, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    m, n = A.shape
    if b.shape != (m,):
        raise ValueError("b must have one entry per row of A")
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b *= sign

    T = np.zeros((m, n + m + 1))
    T[:, :n] = A
    T[:, n:n + m] = np.eye(m)
    T[:, -1] = b
    basis = list(range(n, n + m))
    cost = np.zeros(n + m)
    cost[n:] = 1.0
    # reduced costs r = c - c_B B^-1 [A | I]; B = I initially
    r = cost - T[:, :-1].sum(axis=0)

    it = 0
    while it < max_iter:
        candidates = np.flatnonzero(r < -tol)
        if candidates.size == 0:
            break
        e = int(candidates[0])
        col = T[:, e]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            # cannot happen for a phase-1 objective bounded below by zero
            raise RuntimeError("phase-1 problem reported unbounded")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        leave = int(min(ties, key=lambda i: basis[i]))
        piv = T[leave, e]
        T[leave] /= piv
        factor = T[:, e].copy()
        factor[leave] = 0.0
        T -= np.outer(factor, T[leave])
        r = r - r[e] * T[leave, :-1]
        basis[leave] = e
        it += 1
    else:
        raise RuntimeError(f"phase-1 simplex did not converge in {max_iter} iterations")

    c_b = cost[basis]
    y = (c_b @ T[:, n:n + m]) * sign
    objective = float(c_b @ T[:, -1])
    feasible = objective <= tol
    x = None
    if feasible:
        x = np.zeros(n)
        for i, j in enumerate(basis):
            if j < n:
                x[j] = T[i, -1]
        x = np.clip(x, 0.0, None)
    return PhaseOneResult(feasible, x, y, objective, it)
