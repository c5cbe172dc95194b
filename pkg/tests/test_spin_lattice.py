import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqm_lab import _kernels
from eqm_lab.errors import DegenerateError, ShapeMismatchError
from eqm_lab.quaternion import K, Direction, Quaternion
from eqm_lab.spin_lattice import (
    DirectionFrame,
    ExtendedSpinState,
    all_configs,
    born_probabilities,
    build_eigenstate,
    build_isotropic,
    classical_mixture_probabilities,
    config_to_index,
    elementary_amplitude,
    index_to_config,
    interference_residual_3,
    marginal_consistency_residual,
    marginal_probabilities,
    marginalize_table,
    project_marginal,
)

from conftest import random_unit_vectors
from oracles import brute_born, brute_marginal, brute_state

Z = (0.0, 0.0, 1.0)
X = (1.0, 0.0, 0.0)
Y = (0.0, 1.0, 0.0)


def frame_with_z(rng, n):
    return DirectionFrame([Z] + list(random_unit_vectors(rng, n - 1)))


@pytest.fixture(params=["default", "numpy"])
def backend(request, monkeypatch):
    if request.param == "numpy":
        for name in ("elementary_amplitudes", "project_amplitudes"):
            monkeypatch.setattr(_kernels, name, getattr(_kernels.pure, name))
    return request.param


def test_index_round_trip():
    for n in (1, 3, 6):
        for idx, cfg in enumerate(all_configs(n)):
            assert config_to_index(cfg) == idx
            assert index_to_config(idx, n) == cfg
    with pytest.raises(ValueError):
        config_to_index((1, 0))


def test_elementary_amplitude_small_case():
    frame = DirectionFrame([Z, X])
    assert elementary_amplitude((1, -1), frame) == Quaternion(0, -1, 0, 1)


@pytest.mark.parametrize("n", range(2, 13))
def test_plus_z_projection_exact(n, rng, backend):
    state = build_eigenstate(frame_with_z(rng, n), 0, 1)
    table = project_marginal(state, [0])
    assert table.amplitude((1,)) == K * float(2 ** (n - 1))
    assert table.amplitude((-1,)) == Quaternion()
    probs = born_probabilities(table)
    assert probs[(1,)] == 1.0 and probs[(-1,)] == 0.0


@pytest.mark.parametrize("n", [2, 4, 7])
def test_minus_z_projection_exact(n, rng):
    state = build_eigenstate(frame_with_z(rng, n), 0, -1)
    table = project_marginal(state, [0])
    assert table.amplitude((-1,)) == -K * float(2 ** (n - 1))
    assert marginal_probabilities(state, [0])[(-1,)] == 1.0


@pytest.mark.parametrize("n", [1, 2, 3, 6, 10])
def test_eigenstate_matches_enumeration(n, rng, backend):
    vecs = random_unit_vectors(rng, n)
    frame = DirectionFrame(vecs)
    state = build_eigenstate(frame, n // 2, -1)
    ref = brute_state(frame.vectors, n // 2, -1)
    for cfg, q in ref.items():
        assert np.allclose(state.amplitude(cfg), q, atol=1e-13)


@pytest.mark.parametrize("theta_deg", range(0, 181, 15))
@pytest.mark.parametrize("n", [2, 3, 6, 12])
def test_malus_law(theta_deg, n, rng, backend):
    th = math.radians(theta_deg)
    rest = list(random_unit_vectors(rng, n - 2))
    frame = DirectionFrame([Z, Direction.from_angles(th, rng.uniform(0, 2 * np.pi))] + rest)
    probs = marginal_probabilities(build_eigenstate(frame, 0, 1), [1])
    for s in (1, -1):
        assert abs(probs[(s,)] - (1 + s * math.cos(th)) / 2) < 1e-12


@pytest.mark.parametrize("n", [2, 5, 12])
def test_isotropic_single_direction_is_fair(n, rng, backend):
    state = build_isotropic(DirectionFrame(random_unit_vectors(rng, n)))
    for j in range(n):
        p = marginal_probabilities(state, [j])
        assert abs(p[(1,)] - 0.5) < 1e-12 and abs(p[(-1,)] - 0.5) < 1e-12


@pytest.mark.parametrize("n", [3, 6, 9])
def test_isotropic_pair_law(n, rng):
    frame = DirectionFrame(random_unit_vectors(rng, n))
    state = build_isotropic(frame)
    for i, j in [(0, 1), (n - 1, 0), (1, 2)]:
        c = frame[i].dot(frame[j])
        p = marginal_probabilities(state, [i, j])
        for si in (1, -1):
            for sj in (1, -1):
                assert abs(p[(si, sj)] - (1 + si * sj * c) / 4) < 1e-12


@pytest.mark.parametrize("subset", [(0,), (3,), (2, 0), (1, 4, 3), (4, 3, 2, 1, 0)])
def test_projection_matches_enumeration(subset, rng, backend):
    frame = DirectionFrame(random_unit_vectors(rng, 5))
    state = build_eigenstate(frame, 2, 1)
    ref = brute_marginal(brute_state(frame.vectors, 2, 1), subset)
    table = project_marginal(state, subset)
    for key, q in ref.items():
        assert np.allclose(table.amplitude(key), q, atol=1e-12)
    probs = born_probabilities(table)
    for key, p in brute_born(ref).items():
        assert abs(probs[key] - p) < 1e-12


def test_projection_composes(rng):
    state = build_isotropic(DirectionFrame(random_unit_vectors(rng, 7)))
    wide = project_marginal(state, [5, 1, 3, 0])
    narrow = marginalize_table(wide, [3, 5])
    direct = project_marginal(state, [3, 5])
    assert np.allclose(narrow.amplitudes, direct.amplitudes, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2 ** 32 - 1))
def test_sign_flip_symmetry(n, seed):
    rng = np.random.default_rng(seed)
    vecs = random_unit_vectors(rng, n)
    flipped = vecs.copy()
    flipped[0] *= -1
    a = marginal_probabilities(build_isotropic(DirectionFrame(vecs)), range(n))
    b = marginal_probabilities(build_isotropic(DirectionFrame(flipped)), range(n))
    pa = a.probabilities.reshape(2, -1)
    pb = b.probabilities.reshape(2, -1)
    assert np.allclose(pa, pb[::-1], atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2 ** 32 - 1))
def test_probabilities_normalized(n, seed):
    rng = np.random.default_rng(seed)
    state = build_isotropic(DirectionFrame(random_unit_vectors(rng, n)))
    k = int(rng.integers(1, n + 1))
    subset = rng.permutation(n)[:k]
    p = marginal_probabilities(state, subset).probabilities
    assert abs(p.sum() - 1) < 1e-12 and p.min() >= 0


@pytest.mark.parametrize("n", [2, 4, 8])
def test_two_direction_marginals_consistent(n, rng):
    state = build_isotropic(DirectionFrame(random_unit_vectors(rng, n)))
    for i in range(n):
        for j in range(n):
            if i != j:
                assert marginal_consistency_residual(state, i, j) < 1e-12


@pytest.mark.parametrize("n", [3, 4, 7])
def test_three_direction_interference(n, rng):
    frame = DirectionFrame(random_unit_vectors(rng, n))
    state = build_isotropic(frame)
    for i, j, k in [(0, 1, 2), (2, 0, 1), (n - 1, 1, 0)]:
        got = interference_residual_3(state, i, j, k)
        ref3 = brute_born(brute_marginal(brute_state(frame.vectors), (i, j, k)))
        ref2 = brute_born(brute_marginal(brute_state(frame.vectors), (i, j)))
        c = frame[i].dot(frame[j])
        for a, si in enumerate((1, -1)):
            for b, sj in enumerate((1, -1)):
                oracle = ref3[(si, sj, 1)] + ref3[(si, sj, -1)] - ref2[(si, sj)]
                assert abs(got[a, b] - oracle) < 1e-12
                assert abs(got[a, b] + si * sj * c / 12) < 1e-12
        assert np.abs(got).max() > 1e-3


def test_interference_vanishes_for_orthogonal_pair():
    state = build_isotropic(DirectionFrame([Z, X, Y]))
    assert np.abs(interference_residual_3(state, 0, 1, 2)).max() < 1e-15


def test_classical_mixture_differs(rng):
    frame = DirectionFrame([Z] + list(random_unit_vectors(rng, 3)))
    state = build_eigenstate(frame, 0, 1)
    c = frame[0].dot(frame[1])
    mix = classical_mixture_probabilities(state, [1])
    quantum = marginal_probabilities(state, [1])
    assert abs(quantum[(1,)] - (1 + c) / 2) < 1e-12
    assert abs(mix[(1,)] - quantum[(1,)]) > 1e-3
    assert abs(mix.probabilities.sum() - 1) < 1e-12


def test_errors(rng):
    frame = DirectionFrame([Z, X, Y])
    state = build_isotropic(frame)
    with pytest.raises(IndexError):
        project_marginal(state, [3])
    with pytest.raises(ValueError):
        project_marginal(state, [0, 0])
    with pytest.raises(ValueError):
        project_marginal(state, [])
    with pytest.raises(IndexError):
        build_eigenstate(frame, 5)
    with pytest.raises(ValueError):
        build_eigenstate(frame, 0, 0)
    with pytest.raises(ValueError):
        DirectionFrame([])
    with pytest.raises(ValueError):
        DirectionFrame([Z] * 21)
    with pytest.raises(ShapeMismatchError):
        ExtendedSpinState(frame, np.zeros((4, 4)))
    with pytest.raises(ShapeMismatchError):
        state.amplitude((1, 1))
    with pytest.raises(ValueError):
        marginal_consistency_residual(state, 1, 1)
    with pytest.raises(ValueError):
        interference_residual_3(state, 0, 1, 1)
    zero = ExtendedSpinState(frame, np.zeros((8, 4)))
    assert zero.is_zero()
    with pytest.raises(DegenerateError):
        marginal_probabilities(zero, [0])


def test_antipodal_directions_cancel():
    frame = DirectionFrame([Z, (0.0, 0.0, -1.0)])
    state = build_isotropic(frame)
    # amplitudes for equal spins on opposite axes vanish, so P(s, s) = 0
    p = marginal_probabilities(state, [0, 1])
    assert p[(1, 1)] == 0.0 and p[(-1, -1)] == 0.0
    assert p[(1, -1)] == 0.5


def test_state_is_read_only(rng):
    state = build_isotropic(DirectionFrame(random_unit_vectors(rng, 3)))
    with pytest.raises(ValueError):
        state.amplitudes[0, 0] = 1.0
