"""Singlet-state models and the bilinear-interaction phase evolution.

Two representations of the same ensemble are provided:

* :class:`SingletEntangled` stores the anti-diagonal of the pair state,
  ``Z(c)`` on ``|c>_alpha (x) |-c>_beta``. Off-diagonal amplitudes are zero by
  construction and are never stored.
* :class:`SingletFactorized` holds the isotropic state for each particle plus
  the hidden-value constraint ``s_alpha_j + s_beta_j = 0``. An outcome for
  ``beta`` along ``j`` is read as the negated hidden value of ``alpha``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DegenerateError
from .quaternion import Quaternion
from .spin_lattice import (
    DirectionFrame,
    ExtendedSpinState,
    build_isotropic,
    config_to_index,
    marginal_probabilities,
)


@dataclass(frozen=True, eq=False)
class SingletEntangled:
    frame: DirectionFrame
    amplitudes: np.ndarray  # (2**N, 4): entry c pairs alpha=c with beta=-c

    @property
    def n(self) -> int:
        return len(self.frame)

    def amplitude(self, config_alpha: Sequence[int], config_beta: Sequence[int]) -> Quaternion:
        if any(a != -b for a, b in zip(config_alpha, config_beta)):
            return Quaternion()
        return Quaternion.from_array(self.amplitudes[config_to_index(config_alpha)])

    def joint_amplitudes(self, i: int, j: int) -> np.ndarray:
        """Quaternion marginal over ``(s_i^alpha, s_j^beta)``, shape ``(2, 2, 4)``.

        Sums the stored anti-diagonal directly; the beta label of entry ``c``
        is the bitwise complement of ``c``.
        """
        n = self.n
        c = np.arange(1 << n)
        beta = c ^ ((1 << n) - 1)
        bit_a = (c >> (n - 1 - i)) & 1
        bit_b = (beta >> (n - 1 - j)) & 1
        key = 2 * bit_a + bit_b
        out = np.empty((4, 4))
        for comp in range(4):
            out[:, comp] = np.bincount(key, weights=self.amplitudes[:, comp], minlength=4)
        return out.reshape(2, 2, 4)


@dataclass(frozen=True, eq=False)
class SingletFactorized:
    state_alpha: ExtendedSpinState
    state_beta: ExtendedSpinState
    # hidden values obey s_alpha_j + s_beta_j = 0
    anticorrelated: bool = field(default=True)

    @property
    def frame(self) -> DirectionFrame:
        return self.state_alpha.frame


SingletModel = Union[SingletEntangled, SingletFactorized]


def build_singlet_entangled(frame: DirectionFrame) -> SingletEntangled:
    amps = build_isotropic(frame).amplitudes
    return SingletEntangled(frame, amps)


def build_singlet_factorized(frame: DirectionFrame) -> SingletFactorized:
    return SingletFactorized(build_isotropic(frame), build_isotropic(frame))


def _check_spin(s: int) -> int:
    if s not in (1, -1):
        raise ValueError(f"spin values must be +1 or -1, got {s!r}")
    return s


def joint_outcome_probability(model: SingletModel, i: int, j: int,
                              s_alpha: int, s_beta: int) -> float:
    """Probability that alpha gives ``s_alpha`` along ``n_i`` and beta gives
    ``s_beta`` along ``n_j``."""
    frame = model.frame
    i, j = frame.check_index(i), frame.check_index(j)
    _check_spin(s_alpha)
    _check_spin(s_beta)
    if isinstance(model, SingletEntangled):
        joint = model.joint_amplitudes(i, j)
        weights = np.einsum("abk,abk->ab", joint, joint)
        total = weights.sum()
        if not total > 0.0:
            raise DegenerateError("singlet amplitudes vanish")
        return float(weights[0 if s_alpha > 0 else 1, 0 if s_beta > 0 else 1] / total)
    if isinstance(model, SingletFactorized):
        hidden = -s_beta  # beta's outcome infers alpha's hidden value
        if i == j:
            if hidden != s_alpha:
                return 0.0
            return marginal_probabilities(model.state_alpha, [i])[(s_alpha,)]
        return marginal_probabilities(model.state_alpha, [i, j])[(s_alpha, hidden)]
    raise TypeError(f"unsupported singlet model {type(model).__name__}")


def correlation(model: SingletModel, i: int, j: int) -> float:
    """``E(i, j) = sum s s' P(s, s')``."""
    return float(sum(s * t * joint_outcome_probability(model, i, j, s, t)
                     for s in (1, -1) for t in (1, -1)))


def correlation_table(model: SingletModel) -> np.ndarray:
    n = len(model.frame)
    return np.array([[correlation(model, i, j) for j in range(n)] for i in range(n)])


def chsh_value(model: SingletModel, a: int, a2: int, b: int, b2: int) -> float:
    """``E(a,b) - E(a,b') + E(a',b) + E(a',b')``."""
    return (correlation(model, a, b) - correlation(model, a, b2)
            + correlation(model, a2, b) + correlation(model, a2, b2))


def models_agree(frame: DirectionFrame, trials: int | None = None,
                 rng: np.random.Generator | None = None) -> float:
    """Max ``|P_entangled - P_factorized|`` over outcome queries.

    ``trials=None`` scans every ``(i, j, s, s')``; otherwise draws that many
    random queries.
    """
    ent = build_singlet_entangled(frame)
    fac = build_singlet_factorized(frame)
    n = len(frame)
    if trials is None:
        queries = itertools.product(range(n), range(n), (1, -1), (1, -1))
    else:
        rng = rng if rng is not None else np.random.default_rng()
        queries = ((int(rng.integers(n)), int(rng.integers(n)),
                    int(rng.choice((1, -1))), int(rng.choice((1, -1))))
                   for _ in range(trials))
    worst = 0.0
    for i, j, s, t in queries:
        d = abs(joint_outcome_probability(ent, i, j, s, t)
                - joint_outcome_probability(fac, i, j, s, t))
        worst = max(worst, d)
    return worst


@dataclass(frozen=True)
class BilinearInteraction:
    """``H = kappa A D`` acting on ``|a> (x) sum_j z_j |d_j>``."""

    a: float
    z: np.ndarray
    d: np.ndarray
    kappa: float
    hbar: float = 1.0

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.complex128)
        d = np.asarray(self.d, dtype=np.float64)
        if z.shape != d.shape or z.ndim != 1:
            raise ValueError("coefficients and eigenvalues must be 1-D and equally long")
        if self.hbar <= 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        norm = float(np.sum(np.abs(z) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"coefficients must be normalized, sum |z|^2 = {norm!r}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "d", d)


def evolve_bilinear_interaction(params: BilinearInteraction, t: float) -> np.ndarray:
    """``z_j exp(-i kappa a d_j t / hbar)``."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    phase = -params.kappa * params.a * params.d * t / params.hbar
    return params.z * np.exp(1j * phase)
