"""Quasi-probability tables and the marginal system they solve.

For a unit state ``|S>`` and measurement bases ``A, B`` the table

    W(a, b) = Re <S|a><a|b><b|S>

reproduces both Born marginals while possibly taking negative values. With
``N`` bases the real part is replaced by the average over every ordering of
the chain ``<S|a><a|b>...<c|S>``; reversing a chain conjugates it, so the
average is real.

Whether a *nonnegative* joint table with prescribed marginals exists is an
LP feasibility question, answered by :func:`feasible_nonnegative_joint` with
either a witness table or a Farkas certificate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateError, ShapeMismatchError
from .simplex import phase_one

IMAG_TOL = 1e-12
FEAS_TOL = 1e-9
MAX_CELLS = 1 << 16


@dataclass(frozen=True, eq=False)
class FiniteState:
    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.complex128).reshape(-1)
        norm = np.vdot(v, v).real
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state must be unit-normalized, got <S|S> = {norm!r}")
        object.__setattr__(self, "vector", v)

    @property
    def dim(self) -> int:
        return self.vector.shape[0]

    @classmethod
    def normalized(cls, vec) -> "FiniteState":
        v = np.asarray(vec, dtype=np.complex128).reshape(-1)
        return cls(v / np.linalg.norm(v))

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> "FiniteState":
        return cls.normalized(rng.normal(size=dim) + 1j * rng.normal(size=dim))


_PAULI = {
    "z": np.array([[1, 0], [0, 1]], dtype=np.complex128),
    "x": np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2),
    "y": np.array([[1, 1], [1j, -1j]], dtype=np.complex128) / math.sqrt(2),
}


@dataclass(frozen=True, eq=False)
class MeasBasis:
    """Columns are the basis vectors ``|a_i>`` in the reference basis."""

    matrix: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.matrix, dtype=np.complex128)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ShapeMismatchError(f"basis matrix must be square, got {u.shape}")
        err = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
        if err > 1e-10:
            raise ValueError(f"basis is not unitary (max deviation {err:.3g})")
        object.__setattr__(self, "matrix", u)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pauli(cls, axis: str) -> "MeasBasis":
        """Spin-1/2 eigenbasis along ``x``, ``y`` or ``z``; column 0 is the
        ``+`` eigenvector."""
        try:
            return cls(_PAULI[axis])
        except KeyError:
            raise ValueError(f"unknown Pauli axis {axis!r}") from None

    @classmethod
    def fourier(cls, dim: int) -> "MeasBasis":
        j = np.arange(dim)
        return cls(np.exp(2j * np.pi * np.outer(j, j) / dim) / math.sqrt(dim))

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> "MeasBasis":
        z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        q, r = np.linalg.qr(z)
        return cls(q * (np.diag(r) / np.abs(np.diag(r))))

    def amplitudes(self, state: FiniteState) -> np.ndarray:
        """``<a_i|S>`` for every basis vector."""
        return self.matrix.conj().T @ state.vector

    def born(self, state: FiniteState) -> np.ndarray:
        return np.abs(self.amplitudes(state)) ** 2


@dataclass(frozen=True, eq=False)
class QuasiProbTable:
    values: np.ndarray
    #: largest imaginary part seen before the real part was kept
    imag_residue: float = 0.0

    def __post_init__(self):
        total = float(np.sum(self.values))
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"quasi-probability table sums to {total!r}, not 1")

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True, eq=False)
class MarginalSystem:
    """Target marginals for a joint table over ``len(arities)`` variables.

    Each marginal is ``(variables, table)`` with ``table.shape`` equal to the
    arities of ``variables`` in order.
    """

    arities: tuple[int, ...]
    marginals: tuple[tuple[tuple[int, ...], np.ndarray], ...]

    def __init__(self, arities: Sequence[int], marginals):
        arities = tuple(int(a) for a in arities)
        if not arities or any(a < 1 for a in arities):
            raise ValueError(f"invalid arities {arities}")
        cleaned = []
        for variables, table in marginals:
            variables = tuple(int(v) for v in variables)
            if not variables or len(set(variables)) != len(variables):
                raise ValueError(f"invalid marginal variables {variables}")
            if any(not 0 <= v < len(arities) for v in variables):
                raise IndexError(f"marginal variables {variables} out of range")
            table = np.asarray(table, dtype=np.float64)
            want = tuple(arities[v] for v in variables)
            if table.shape != want:
                raise ShapeMismatchError(f"marginal on {variables} has shape {table.shape}, want {want}")
            if np.any(table < -FEAS_TOL):
                raise ValueError(f"marginal on {variables} has negative entries")
            cleaned.append((variables, table))
        object.__setattr__(self, "arities", arities)
        object.__setattr__(self, "marginals", tuple(cleaned))

    @property
    def n_cells(self) -> int:
        return math.prod(self.arities)


def _check_dims(state: FiniteState, bases: Sequence[MeasBasis]):
    for b in bases:
        if b.dim != state.dim:
            raise ShapeMismatchError(f"basis dimension {b.dim} != state dimension {state.dim}")


def _realify(table: np.ndarray) -> tuple[np.ndarray, float]:
    residue = float(np.abs(table.imag).max()) if table.size else 0.0
    if residue > IMAG_TOL * max(1.0, float(np.abs(table).max())):
        raise ArithmeticError(f"imaginary parts did not cancel (max {residue:.3g})")
    return np.ascontiguousarray(table.real), residue


def wigner_pair(state: FiniteState, A: MeasBasis, B: MeasBasis) -> QuasiProbTable:
    """``W(a_i, b_j) = (<S|a_i><a_i|b_j><b_j|S> + c.c.) / 2``."""
    _check_dims(state, (A, B))
    sa = A.amplitudes(state)
    sb = B.amplitudes(state)
    overlap = A.matrix.conj().T @ B.matrix
    chain = sa.conj()[:, None] * overlap * sb[None, :]
    values, residue = _realify(0.5 * (chain + chain.conj()))
    return QuasiProbTable(values, residue)


def _chain_tensor(state: FiniteState, bases: Sequence[MeasBasis], order: Sequence[int]) -> np.ndarray:
    """``<S|x_o1><x_o1|x_o2>...<x_oN|S>`` with axis ``k`` indexing basis ``k``."""
    n = len(bases)
    d = state.dim

    def along(vec_or_mat, axes):
        shape = [1] * n
        for ax in axes:
            shape[ax] = d
        if len(axes) == 2 and axes[0] > axes[1]:
            vec_or_mat = vec_or_mat.T
        return vec_or_mat.reshape(shape)

    first, last = order[0], order[-1]
    out = along(bases[first].amplitudes(state).conj(), [first])
    for u, v in zip(order, order[1:]):
        ov = bases[u].matrix.conj().T @ bases[v].matrix
        out = out * along(ov, [u, v])
    out = out * along(bases[last].amplitudes(state), [last])
    return np.broadcast_to(out, (d,) * n)


def symmetrized_quasiprob(state: FiniteState, bases: Sequence[MeasBasis]) -> QuasiProbTable:
    """Average of the chain product over all ``N!`` orderings of ``bases``.

    Axis ``k`` of the result indexes the outcomes of ``bases[k]``.
    """
    bases = list(bases)
    if len(bases) < 2:
        raise ValueError("need at least two bases")
    _check_dims(state, bases)
    n = len(bases)
    acc = np.zeros((state.dim,) * n, dtype=np.complex128)
    count = 0
    for order in itertools.permutations(range(n)):
        acc += _chain_tensor(state, bases, order)
        count += 1
    values, residue = _realify(acc / count)
    return QuasiProbTable(values, residue)


def _sum_to(values: np.ndarray, variables: Sequence[int]) -> np.ndarray:
    others = tuple(ax for ax in range(values.ndim) if ax not in variables)
    reduced = values.sum(axis=others) if others else values
    kept = sorted(variables)
    return np.transpose(reduced, [kept.index(v) for v in variables])


def verify_marginals(W: QuasiProbTable | np.ndarray, targets: MarginalSystem) -> float:
    """Largest deviation between any summed-out marginal of ``W`` and its
    target."""
    values = W.values if isinstance(W, QuasiProbTable) else np.asarray(W, dtype=np.float64)
    if values.shape != targets.arities:
        raise ShapeMismatchError(f"table shape {values.shape} != arities {targets.arities}")
    worst = 0.0
    for variables, table in targets.marginals:
        worst = max(worst, float(np.abs(_sum_to(values, variables) - table).max()))
    return worst


def born_marginal_system(state: FiniteState, bases: Sequence[MeasBasis]) -> MarginalSystem:
    """One single-variable Born marginal per basis."""
    return MarginalSystem([b.dim for b in bases], [((k,), b.born(state)) for k, b in enumerate(bases)])


def min_entry(W: QuasiProbTable | np.ndarray) -> tuple[float, tuple[int, ...]]:
    """Smallest entry and its index; ties go to the lowest index in
    lexicographic order."""
    values = W.values if isinstance(W, QuasiProbTable) else np.asarray(W)
    flat = int(np.argmin(values))
    idx = tuple(int(i) for i in np.unravel_index(flat, values.shape))
    return float(values[idx]), idx


# -- nonnegative joint feasibility ------------------------------------------

def marginal_constraints(system: MarginalSystem) -> tuple[np.ndarray, np.ndarray]:
    """Equality constraints ``A p = b`` on the flattened joint table ``p``:
    one row per marginal cell plus the normalization row."""
    shape = system.arities
    cells = system.n_cells
    if cells > MAX_CELLS:
        raise ValueError(f"joint table of {cells} cells exceeds the limit of {MAX_CELLS}")
    coords = np.array(np.unravel_index(np.arange(cells), shape))
    rows, rhs = [], []
    for variables, table in system.marginals:
        for sub in np.ndindex(*table.shape):
            mask = np.ones(cells, dtype=bool)
            for v, val in zip(variables, sub):
                mask &= coords[v] == val
            rows.append(mask.astype(np.float64))
            rhs.append(table[sub])
    rows.append(np.ones(cells))
    rhs.append(1.0)
    return np.array(rows), np.array(rhs)


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    feasible: bool
    #: nonnegative joint table (shape = arities) when feasible
    witness: np.ndarray | None
    #: y with A^T y <= 0 and b^T y > 0 when infeasible (rows of marginal_constraints)
    certificate: np.ndarray | None
    phase1_objective: float
    iterations: int

    def certificate_valid(self, system: MarginalSystem, tol: float = FEAS_TOL) -> bool:
        if self.certificate is None:
            return False
        A, b = marginal_constraints(system)
        y = self.certificate
        return bool(np.all(A.T @ y <= tol) and b @ y > tol)


def feasible_nonnegative_joint(system: MarginalSystem) -> FeasibilityResult:
    """Decide whether a nonnegative joint table reproduces every marginal."""
    for variables, table in system.marginals:
        total = float(table.sum())
        if abs(total - 1.0) > FEAS_TOL:
            raise ValueError(f"marginal on {variables} sums to {total!r}, not 1")
    A, b = marginal_constraints(system)
    res = phase_one(A, b, tol=FEAS_TOL)
    if res.feasible:
        witness = res.x.reshape(system.arities)
        return FeasibilityResult(True, witness, None, res.objective, res.iterations)
    return FeasibilityResult(False, None, res.y, res.objective, res.iterations)


def pairwise_spin_system(correlation: float, n: int = 3) -> MarginalSystem:
    """``n`` binary +-1 variables, every pair with ``P(s, s') = (1 + s s' c)/4``.

    Index 0 on each axis means ``+1``.
    """
    s = np.array([1.0, -1.0])
    table = (1.0 + np.outer(s, s) * correlation) / 4.0
    pairs = itertools.combinations(range(n), 2)
    return MarginalSystem([2] * n, [(pair, table) for pair in pairs])


# -- observability of the extended joint distribution ------------------------

def eqm_observability_residual(z) -> tuple[np.ndarray, np.ndarray]:
    """Coherent minus incoherent marginals of an amplitude matrix ``z_ij``.

    ``residual_A[i] = |sum_j z_ij|^2 / N_A - sum_j |z_ij|^2 / N`` and the
    analogue over columns; each side is normalized to unit total.
    """
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim != 2:
        raise ShapeMismatchError("amplitude matrix must be 2-D")
    weights = np.abs(z) ** 2
    total = weights.sum()
    if total == 0:
        raise DegenerateError("amplitude matrix is zero")
    coh_a = np.abs(z.sum(axis=1)) ** 2
    coh_b = np.abs(z.sum(axis=0)) ** 2
    if coh_a.sum() == 0 or coh_b.sum() == 0:
        raise DegenerateError("coherent marginal vanishes identically")
    res_a = coh_a / coh_a.sum() - weights.sum(axis=1) / total
    res_b = coh_b / coh_b.sum() - weights.sum(axis=0) / total
    return res_a, res_b
