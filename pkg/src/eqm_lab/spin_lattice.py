"""Extended spin states over a finite frame of directions.

A configuration assigns a spin ``s_j = +-1`` to each of the ``N`` frame
directions and carries the quaternion amplitude ``sum_j s_j N_j``. States are
dense tables of ``2**N`` quaternions; standard spin distributions come from
summing amplitudes over the discarded directions and then taking normalized
quaternion norms.

Layout: configuration index bit ``N - 1 - j`` holds direction ``j``, a clear
bit meaning ``+1``. Amplitude arrays have shape ``(2**N, 4)`` with components
``(w, x, y, z)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import DegenerateError, ShapeMismatchError
from .quaternion import Direction, Quaternion, unit_quat_from_direction

MAX_DIRECTIONS = 20


def config_to_index(config: Sequence[int]) -> int:
    idx = 0
    for s in config:
        if s not in (1, -1):
            raise ValueError(f"spin values must be +1 or -1, got {s!r}")
        idx = (idx << 1) | (1 if s < 0 else 0)
    return idx


def index_to_config(idx: int, n: int) -> tuple[int, ...]:
    return tuple(-1 if (idx >> (n - 1 - j)) & 1 else 1 for j in range(n))


def all_configs(n: int) -> Iterable[tuple[int, ...]]:
    """Every configuration in index order."""
    return itertools.product((1, -1), repeat=n)


class DirectionFrame:
    """Ordered, fixed list of unit directions."""

    def __init__(self, directions: Iterable[Direction | Sequence[float]]):
        dirs = tuple(d if isinstance(d, Direction) else Direction.from_vector(d)
                     for d in directions)
        if not dirs:
            raise ValueError("a frame needs at least one direction")
        if len(dirs) > MAX_DIRECTIONS:
            raise ValueError(f"frame size {len(dirs)} exceeds the cap of {MAX_DIRECTIONS}")
        self.directions = dirs
        self.vectors = np.array([d.vector for d in dirs], dtype=np.float64)
        self.vectors.setflags(write=False)

    def __len__(self):
        return len(self.directions)

    def __getitem__(self, j):
        return self.directions[j]

    def __eq__(self, other):
        return isinstance(other, DirectionFrame) and self.directions == other.directions

    def __hash__(self):
        return hash(self.directions)

    def __repr__(self):
        return f"DirectionFrame({list(self.directions)!r})"

    def check_index(self, j: int) -> int:
        if not isinstance(j, (int, np.integer)) or not 0 <= j < len(self):
            raise IndexError(f"direction index {j!r} out of range for a frame of {len(self)}")
        return int(j)


@dataclass(frozen=True, eq=False)
class ExtendedSpinState:
    frame: DirectionFrame
    amplitudes: np.ndarray

    def __post_init__(self):
        n = len(self.frame)
        amps = np.array(self.amplitudes, dtype=np.float64)
        if amps.shape != (1 << n, 4):
            raise ShapeMismatchError(
                f"expected amplitudes of shape {(1 << n, 4)}, got {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n(self) -> int:
        return len(self.frame)

    def amplitude(self, config: Sequence[int]) -> Quaternion:
        if len(config) != self.n:
            raise ShapeMismatchError(f"config has {len(config)} entries, frame has {self.n}")
        return Quaternion.from_array(self.amplitudes[config_to_index(config)])

    def is_zero(self) -> bool:
        return not self.amplitudes.any()


@dataclass(frozen=True, eq=False)
class MarginalAmplitudeTable:
    """Quaternion amplitudes over ``(+-1)**k`` for the directions in ``subset``."""

    subset: tuple[int, ...]
    amplitudes: np.ndarray

    def amplitude(self, config: Sequence[int]) -> Quaternion:
        if len(config) != len(self.subset):
            raise ShapeMismatchError("config length does not match the table")
        return Quaternion.from_array(self.amplitudes[config_to_index(config)])

    def as_dict(self) -> dict[tuple[int, ...], Quaternion]:
        k = len(self.subset)
        return {index_to_config(t, k): Quaternion.from_array(self.amplitudes[t])
                for t in range(1 << k)}


@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    subset: tuple[int, ...]
    probabilities: np.ndarray

    def __getitem__(self, config: Sequence[int]) -> float:
        if isinstance(config, (int, np.integer)):
            config = (int(config),)
        if len(config) != len(self.subset):
            raise ShapeMismatchError("config length does not match the table")
        return float(self.probabilities[config_to_index(config)])

    def as_dict(self) -> dict[tuple[int, ...], float]:
        k = len(self.subset)
        return {index_to_config(t, k): float(self.probabilities[t]) for t in range(1 << k)}


def elementary_amplitude(config: Sequence[int], frame: DirectionFrame) -> Quaternion:
    """``sum_j s_j N_j`` for one configuration."""
    if len(config) != len(frame):
        raise ShapeMismatchError(f"config has {len(config)} entries, frame has {len(frame)}")
    total = Quaternion()
    for s, d in zip(config, frame.directions):
        if s not in (1, -1):
            raise ValueError(f"spin values must be +1 or -1, got {s!r}")
        total = total + unit_quat_from_direction(d) * float(s)
    return total


def build_eigenstate(frame: DirectionFrame, axis: int, sign: int = 1) -> ExtendedSpinState:
    """Spin ``sign`` along ``frame[axis]``: every configuration with that
    value keeps its elementary amplitude, the rest are zero."""
    axis = frame.check_index(axis)
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    amps = _kernels.elementary_amplitudes(frame.vectors, axis, sign)
    return ExtendedSpinState(frame, amps)


def build_isotropic(frame: DirectionFrame) -> ExtendedSpinState:
    """Every configuration carries its elementary amplitude."""
    return ExtendedSpinState(frame, _kernels.elementary_amplitudes(frame.vectors))


def _check_subset(subset: Sequence[int], n: int) -> tuple[int, ...]:
    sub = tuple(int(j) for j in subset)
    if not sub:
        raise ValueError("projection subset must be non-empty")
    if len(set(sub)) != len(sub):
        raise ValueError(f"projection subset has duplicate indices: {sub}")
    for j in sub:
        if not 0 <= j < n:
            raise IndexError(f"direction index {j} out of range for {n} directions")
    return sub


def project_marginal(state: ExtendedSpinState, subset: Sequence[int]) -> MarginalAmplitudeTable:
    """Sum quaternion amplitudes over every direction outside ``subset``.

    The output keeps the order of ``subset``: ``subset[0]`` is the most
    significant spin of the table index.
    """
    sub = _check_subset(subset, state.n)
    amps = _kernels.project_amplitudes(state.amplitudes, state.n, np.array(sub, dtype=np.intp))
    amps.setflags(write=False)
    return MarginalAmplitudeTable(sub, amps)


def marginalize_table(table: MarginalAmplitudeTable,
                      subset: Sequence[int]) -> MarginalAmplitudeTable:
    """Sum an existing marginal table down to ``subset`` (frame indices,
    all present in ``table.subset``)."""
    sub = tuple(int(j) for j in subset)
    if not sub or len(set(sub)) != len(sub):
        raise ValueError(f"invalid subset {sub}")
    try:
        positions = [table.subset.index(j) for j in sub]
    except ValueError:
        raise ValueError(f"subset {sub} is not contained in {table.subset}") from None
    amps = _kernels.project_amplitudes(table.amplitudes, len(table.subset),
                                       np.array(positions, dtype=np.intp))
    amps.setflags(write=False)
    return MarginalAmplitudeTable(sub, amps)


def born_probabilities(table: MarginalAmplitudeTable) -> ProbabilityTable:
    """Normalized squared quaternion norms of a marginal table."""
    weights = np.einsum("ij,ij->i", table.amplitudes, table.amplitudes)
    total = weights.sum()
    if not total > 0.0:
        raise DegenerateError(f"all amplitudes vanish on subset {table.subset}")
    probs = weights / total
    probs.setflags(write=False)
    return ProbabilityTable(table.subset, probs)


def marginal_probabilities(state: ExtendedSpinState, subset: Sequence[int]) -> ProbabilityTable:
    """Project, then apply the Born rule."""
    return born_probabilities(project_marginal(state, subset))


def marginal_consistency_residual(state: ExtendedSpinState, i: int, j: int) -> float:
    """``max_{s_i} |P(s_i) - sum_{s_j} P(s_i, s_j)|``."""
    i, j = state.frame.check_index(i), state.frame.check_index(j)
    if i == j:
        raise ValueError("consistency residual needs two distinct directions")
    single = marginal_probabilities(state, [i]).probabilities
    pair = marginal_probabilities(state, [i, j]).probabilities.reshape(2, 2)
    return float(np.max(np.abs(single - pair.sum(axis=1))))


def interference_residual_3(state: ExtendedSpinState, i: int, j: int, k: int) -> np.ndarray:
    """``sum_{s_k} P(s_i, s_j, s_k) - P(s_i, s_j)`` as a ``(2, 2)`` array
    indexed ``[s_i, s_j]`` with index 0 meaning ``+1``."""
    idx = [state.frame.check_index(x) for x in (i, j, k)]
    if len(set(idx)) != 3:
        raise ValueError("interference residual needs three distinct directions")
    triple = marginal_probabilities(state, idx).probabilities.reshape(2, 2, 2)
    pair = marginal_probabilities(state, idx[:2]).probabilities.reshape(2, 2)
    return triple.sum(axis=2) - pair


def classical_mixture_probabilities(state: ExtendedSpinState,
                                    subset: Sequence[int]) -> ProbabilityTable:
    """Born rule applied before summing, i.e. no interference between the
    discarded components. Contrast pipeline only."""
    sub = _check_subset(subset, state.n)
    weights = np.einsum("ij,ij->i", state.amplitudes, state.amplitudes)
    cube = weights.reshape((2,) * state.n)
    dropped = tuple(x for x in range(state.n) if x not in sub)
    if dropped:
        cube = cube.sum(axis=dropped)
    kept = sorted(sub)
    cube = np.transpose(cube, [kept.index(x) for x in sub]).reshape(-1)
    total = cube.sum()
    if not total > 0.0:
        raise DegenerateError("all amplitudes vanish")
    return ProbabilityTable(sub, cube / total)
