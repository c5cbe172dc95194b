"""Slow, independent reference computations used as test oracles.

Nothing here imports the code under test except plain data types.
"""
import itertools
import math

import numpy as np


# -- quaternions via 2x2 complex matrices: I -> -i sx, J -> -i sy, K -> -i sz

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_E = np.eye(2, dtype=complex)


def quat_to_matrix(q):
    w, x, y, z = q
    return w * _E - 1j * (x * _SX + y * _SY + z * _SZ)


def matrix_to_quat(m):
    w = (m[0, 0] + m[1, 1]).real / 2
    z = -(m[0, 0] - m[1, 1]).imag / 2
    x = -(m[0, 1] + m[1, 0]).imag / 2
    y = (m[1, 0] - m[0, 1]).real / 2
    return (w, x, y, z)


def matrix_quat_mul(a, b):
    return matrix_to_quat(quat_to_matrix(a) @ quat_to_matrix(b))


# -- spin enumeration -----------------------------------------------------------

def brute_amplitude(config, vectors):
    x = y = z = 0.0
    for s, v in zip(config, vectors):
        x += s * v[0]
        y += s * v[1]
        z += s * v[2]
    return (0.0, x, y, z)


def brute_state(vectors, axis=None, sign=1):
    """dict config -> quaternion tuple, every config of len(vectors) spins."""
    out = {}
    for cfg in itertools.product((1, -1), repeat=len(vectors)):
        if axis is not None and cfg[axis] != sign:
            out[cfg] = (0.0, 0.0, 0.0, 0.0)
        else:
            out[cfg] = brute_amplitude(cfg, vectors)
    return out


def brute_marginal(state, subset):
    out = {}
    for cfg, q in state.items():
        key = tuple(cfg[j] for j in subset)
        acc = out.get(key, (0.0, 0.0, 0.0, 0.0))
        out[key] = tuple(a + b for a, b in zip(acc, q))
    return out


def brute_born(marginal):
    w = {k: sum(c * c for c in q) for k, q in marginal.items()}
    total = sum(w.values())
    return {k: v / total for k, v in w.items()}


# -- linear programming: vertex enumeration --------------------------------------

def vertex_enumeration_feasible(A, b, tol=1e-9):
    """Feasibility of {x >= 0, A x = b} by checking every basic solution.

    A nonempty polyhedron in the nonnegative orthant has a vertex, and every
    vertex is a basic feasible solution on some set of rank(A) independent
    columns.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    rank = np.linalg.matrix_rank(A)
    for cols in itertools.combinations(range(n), rank):
        sub = A[:, cols]
        if np.linalg.matrix_rank(sub) < rank:
            continue
        xs, *_ = np.linalg.lstsq(sub, b, rcond=None)
        if np.abs(sub @ xs - b).max() > tol:
            continue
        if xs.min() >= -tol:
            return True
    return False


def three_pairwise_constraints(c):
    """A, b for 3 binary +-1 variables with all pairwise P = (1 + s s' c)/4."""
    cells = list(itertools.product((1, -1), repeat=3))
    rows, rhs = [], []
    for i, j in itertools.combinations(range(3), 2):
        for si in (1, -1):
            for sj in (1, -1):
                rows.append([1.0 if (cell[i] == si and cell[j] == sj) else 0.0 for cell in cells])
                rhs.append((1 + si * sj * c) / 4)
    return np.array(rows), np.array(rhs)


# -- quasi-probability chains -------------------------------------------------------

def chain_quasiprob(state, bases):
    """(1/N!) sum over orderings of <S|x1><x1|x2>...<xN|S>, plain loops.

    ``bases`` are lists of basis vectors (each a list of complex numbers).
    Returns (real table as dict, max imaginary part).
    """
    def inner(u, v):
        return sum(a.conjugate() * b for a, b in zip(u, v))

    n = len(bases)
    d = len(state)
    table = {}
    for outcome in itertools.product(range(d), repeat=n):
        acc = 0j
        for order in itertools.permutations(range(n)):
            vecs = [bases[k][outcome[k]] for k in order]
            term = inner(state, vecs[0])
            for u, v in zip(vecs, vecs[1:]):
                term *= inner(u, v)
            term *= inner(vecs[-1], state)
            acc += term
        table[outcome] = acc / math.factorial(n)
    return {k: v.real for k, v in table.items()}, max(abs(v.imag) for v in table.values())
