import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqm_lab.errors import DegenerateError, ShapeMismatchError
from eqm_lab.quasiprob import (
    FiniteState,
    MarginalSystem,
    MeasBasis,
    QuasiProbTable,
    born_marginal_system,
    eqm_observability_residual,
    feasible_nonnegative_joint,
    marginal_constraints,
    min_entry,
    pairwise_spin_system,
    symmetrized_quasiprob,
    verify_marginals,
    wigner_pair,
)
from eqm_lab.simplex import phase_one

from oracles import chain_quasiprob, three_pairwise_constraints, vertex_enumeration_feasible

R = 1 / math.sqrt(2)
PLUS_Z = FiniteState([1, 0])
PLUS_Y = FiniteState([R, 1j * R])


def columns(basis):
    return [list(basis.matrix[:, i]) for i in range(basis.dim)]


@pytest.mark.parametrize("d", [2, 3, 4, 8])
def test_pair_marginal_identity(d, rng):
    for _ in range(100):
        s = FiniteState.random(d, rng)
        A, B = MeasBasis.random(d, rng), MeasBasis.random(d, rng)
        W = wigner_pair(s, A, B)
        assert verify_marginals(W, born_marginal_system(s, [A, B])) < 1e-10
        assert W.imag_residue < 1e-12
        assert abs(W.values.sum() - 1) < 1e-10


def test_pair_same_basis_is_diagonal(rng):
    s = FiniteState.random(4, rng)
    A = MeasBasis.random(4, rng)
    W = wigner_pair(s, A, A)
    assert np.allclose(W.values, np.diag(A.born(s)), atol=1e-14)
    assert min_entry(W)[0] >= -1e-15


def test_pair_plus_z():
    W = wigner_pair(PLUS_Z, MeasBasis.pauli("z"), MeasBasis.pauli("x"))
    assert np.allclose(W.values, [[0.5, 0.5], [0, 0]], atol=1e-15)


def test_pair_plus_y_matches_chain_oracle():
    bases = [MeasBasis.pauli("z"), MeasBasis.pauli("x")]
    W = wigner_pair(PLUS_Y, *bases)
    oracle, _ = chain_quasiprob(list(PLUS_Y.vector), [columns(b) for b in bases])
    for key, val in oracle.items():
        assert abs(W.values[key] - val) < 1e-15
    # every entry is 1/4; the table is non-negative here
    assert np.allclose(W.values, 0.25, atol=1e-15)


def test_pair_negativity_exists():
    # Bloch vector -(x + z)/sqrt(2) reaches the qubit minimum (1 - sqrt 2)/4 at (+, +)
    theta = 3 * math.pi / 4
    s = FiniteState([math.cos(theta / 2), -math.sin(theta / 2)])
    W = wigner_pair(s, MeasBasis.pauli("z"), MeasBasis.pauli("x"))
    value, idx = min_entry(W)
    assert idx == (0, 0)
    assert abs(value - (1 - math.sqrt(2)) / 4) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_qubit_lower_bound(seed):
    rng = np.random.default_rng(seed)
    W = wigner_pair(FiniteState.random(2, rng), MeasBasis.pauli("z"), MeasBasis.pauli("x"))
    assert W.values.min() >= (1 - math.sqrt(2)) / 4 - 1e-12


@pytest.mark.parametrize("d", [2, 3, 5])
def test_symmetrized_reduces_to_pair(d, rng):
    for _ in range(10):
        s = FiniteState.random(d, rng)
        A, B = MeasBasis.random(d, rng), MeasBasis.random(d, rng)
        assert np.abs(symmetrized_quasiprob(s, [A, B]).values - wigner_pair(s, A, B).values).max() < 1e-12


def test_symmetrized_three_pauli_oracle():
    bases = [MeasBasis.pauli(a) for a in "zxy"]
    W = symmetrized_quasiprob(PLUS_Z, bases)
    oracle, imag = chain_quasiprob([1, 0], [columns(b) for b in bases])
    assert imag < 1e-15
    for key, val in oracle.items():
        assert abs(W.values[key] - val) < 1e-15
    assert np.allclose(W.values[0], 0.25) and np.allclose(W.values[1], 0.0)
    assert abs(W.values.sum() - 1) < 1e-10
    assert W.imag_residue < 1e-12


@pytest.mark.parametrize("d, n", [(2, 3), (3, 3), (2, 4)])
def test_symmetrized_matches_oracle_random(d, n, rng):
    s = FiniteState.random(d, rng)
    bases = [MeasBasis.random(d, rng) for _ in range(n)]
    W = symmetrized_quasiprob(s, bases)
    oracle, imag = chain_quasiprob(list(s.vector), [columns(b) for b in bases])
    assert imag < 1e-12 and W.imag_residue < 1e-12
    for key, val in oracle.items():
        assert abs(W.values[key] - val) < 1e-12
    assert verify_marginals(W, born_marginal_system(s, bases)) < 1e-10


def test_symmetrized_permutation_invariant(rng):
    s = FiniteState.random(3, rng)
    bases = [MeasBasis.random(3, rng) for _ in range(3)]
    W = symmetrized_quasiprob(s, bases).values
    for perm in itertools.permutations(range(3)):
        Wp = symmetrized_quasiprob(s, [bases[k] for k in perm]).values
        assert np.abs(Wp - np.transpose(W, perm)).max() < 1e-12


def test_symmetrized_identical_bases_diagonal(rng):
    s = FiniteState.random(3, rng)
    A = MeasBasis.random(3, rng)
    W = symmetrized_quasiprob(s, [A, A, A]).values
    expected = np.zeros((3, 3, 3))
    for i, p in enumerate(A.born(s)):
        expected[i, i, i] = p
    assert np.abs(W - expected).max() < 1e-14


def test_verify_marginals_cases():
    uniform = np.full((2, 3), 1 / 6)
    system = MarginalSystem([2, 3], [((0,), [0.5, 0.5]), ((1,), [1 / 3] * 3)])
    assert verify_marginals(uniform, system) < 1e-16
    bad = uniform.copy()
    bad[1, 2] += 1e-3
    assert abs(verify_marginals(bad, system) - 1e-3) < 1e-12
    with pytest.raises(ShapeMismatchError):
        verify_marginals(np.full((3, 2), 1 / 6), system)


def test_min_entry_ties_and_uniform():
    assert min_entry(np.full((2, 2, 2), 1 / 8)) == (1 / 8, (0, 0, 0))
    assert min_entry(np.array([[0.3, -0.1], [-0.1, 0.9]]))[1] == (0, 1)


def test_table_must_sum_to_one():
    with pytest.raises(ValueError):
        QuasiProbTable(np.full((2, 2), 0.3))


def test_errors(rng):
    with pytest.raises(ValueError):
        FiniteState([1, 1])
    with pytest.raises(ValueError):
        MeasBasis(np.array([[1, 1], [0, 1]]))
    with pytest.raises(ShapeMismatchError):
        wigner_pair(PLUS_Z, MeasBasis.pauli("z"), MeasBasis.fourier(3))
    with pytest.raises(ValueError):
        symmetrized_quasiprob(PLUS_Z, [MeasBasis.pauli("z")])
    with pytest.raises(ValueError):
        MeasBasis.pauli("w")


# -- LP feasibility ----------------------------------------------------------

SWEEP = [round(-1 + 0.05 * k, 10) for k in range(41)]


@pytest.mark.parametrize("c", SWEEP)
def test_pairwise_sweep_matches_vertex_oracle(c):
    system = pairwise_spin_system(c)
    res = feasible_nonnegative_joint(system)
    A, b = three_pairwise_constraints(c)
    assert res.feasible == vertex_enumeration_feasible(A, b)
    assert res.feasible == (c >= -1 / 3)
    if res.feasible:
        assert res.witness.min() >= 0
        assert verify_marginals(res.witness, system) < 1e-9
    else:
        assert res.certificate_valid(system)


def test_threshold_between_grid_points():
    assert not feasible_nonnegative_joint(pairwise_spin_system(-0.34)).feasible
    assert feasible_nonnegative_joint(pairwise_spin_system(-0.33)).feasible
    assert feasible_nonnegative_joint(pairwise_spin_system(-1 / 3)).feasible


def test_singlet_inference_instance_infeasible():
    system = pairwise_spin_system(-0.5)
    res = feasible_nonnegative_joint(system)
    assert not res.feasible
    A, b = marginal_constraints(system)
    y = res.certificate
    assert np.all(A.T @ y <= 1e-9) and b @ y > 1e-9
    assert res.phase1_objective > 0


def test_uniform_witness_at_zero_correlation():
    res = feasible_nonnegative_joint(pairwise_spin_system(0.0))
    assert res.feasible
    assert verify_marginals(res.witness, pairwise_spin_system(0.0)) < 1e-12


def test_single_variable_marginals_always_feasible(rng):
    for _ in range(10):
        p = rng.dirichlet(np.ones(3))
        q = rng.dirichlet(np.ones(4))
        system = MarginalSystem([3, 4], [((0,), p), ((1,), q)])
        res = feasible_nonnegative_joint(system)
        assert res.feasible
        assert verify_marginals(res.witness, system) < 1e-9
        assert verify_marginals(np.outer(p, q), system) < 1e-15


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_three_bit_systems_match_oracle(seed):
    rng = np.random.default_rng(seed)
    pairs = [(0, 1), (1, 2), (0, 2)]
    if rng.random() < 0.5:
        # consistent by construction: marginals of a random joint
        joint = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
        tables = [joint.sum(axis=({0, 1, 2} - set(p)).pop()) for p in pairs]
    else:
        tables = []
        for _ in pairs:
            c = rng.uniform(-1, 1)
            tables.append((1 + np.outer([1, -1], [1, -1]) * c) / 4)
    system = MarginalSystem([2, 2, 2], list(zip(pairs, tables)))
    res = feasible_nonnegative_joint(system)
    A, b = marginal_constraints(system)
    assert res.feasible == vertex_enumeration_feasible(A, b)
    if not res.feasible:
        assert res.certificate_valid(system)


def test_inconsistent_normalization_rejected():
    system = MarginalSystem([2, 2], [((0,), [0.5, 0.6])])
    with pytest.raises(ValueError):
        feasible_nonnegative_joint(system)


def test_marginal_system_validation():
    with pytest.raises(ShapeMismatchError):
        MarginalSystem([2, 2], [((0, 1), np.ones(4) / 4)])
    with pytest.raises(IndexError):
        MarginalSystem([2], [((1,), [0.5, 0.5])])
    with pytest.raises(ValueError):
        MarginalSystem([2], [((0,), [1.5, -0.5])])
    with pytest.raises(ValueError):
        marginal_constraints(MarginalSystem([2] * 17, []))


def test_phase_one_small_cases():
    res = phase_one([[1, 1]], [1])
    assert res.feasible and abs(res.x.sum() - 1) < 1e-12
    res = phase_one([[1, 1]], [-1])
    assert not res.feasible
    assert res.y @ np.array([-1.0]) > 0 and np.all(np.array([[1, 1]]).T @ res.y <= 1e-12)
    # degenerate: redundant rows
    res = phase_one([[1, 0], [1, 0], [0, 1]], [0.5, 0.5, 0.5])
    assert res.feasible and np.allclose(res.x, [0.5, 0.5])
    with pytest.raises(ValueError):
        phase_one([[1, 1]], [1, 2])


# -- observability residuals -------------------------------------------------

def test_observability_interference_free(rng):
    u, v = rng.uniform(0.1, 1, 3), rng.uniform(0.1, 1, 4)
    for z in (np.outer(u, v), np.eye(3)):
        ra, rb = eqm_observability_residual(z)
        assert np.abs(ra).max() < 1e-12 and np.abs(rb).max() < 1e-12


def test_observability_destructive_row():
    ra, rb = eqm_observability_residual([[1, -1], [1, 1]])
    assert abs(ra[0] + 0.5) < 1e-12 and abs(ra[1] - 0.5) < 1e-12
    assert np.abs(rb).max() > 1e-3


def test_observability_errors():
    with pytest.raises(DegenerateError):
        eqm_observability_residual(np.zeros((2, 2)))
    with pytest.raises(ShapeMismatchError):
        eqm_observability_residual([1, 2])
