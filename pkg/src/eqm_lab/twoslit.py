"""Two-slit path amplitudes and statistical decoherence.

Each slit amplitude ``Lambda_s(q)`` sums pure-phase two-segment paths
``source -> aperture point x -> screen point q`` with phase ``k * length``;
the aperture integral uses Gauss-Legendre nodes, refined until doubling the
node count changes the result by less than :data:`CONVERGENCE_TOL`.

Decoherence multiplies ``Lambda_R`` by ``exp(i phi)`` with one random ``phi``
per run; each run contributes a single screen position drawn from
``|Lambda_L + exp(i phi) Lambda_R|^2``. Run ``r`` of an ensemble seeded with
``seed`` always uses ``numpy.random.default_rng(seed ^ r)``, so the sample
sequence does not depend on how runs are split across threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, NamedTuple

import numpy as np
from scipy import special

from . import _kernels
from .errors import DegenerateError

CONVERGENCE_TOL = 1e-8
MAX_APERTURE_POINTS = 1 << 14


@dataclass(frozen=True, eq=False)
class SlitGeometry:
    """Lengths in one consistent unit; ``k`` in inverse length.

    ``width_right`` defaults to ``width`` (set it for asymmetric slits).
    """

    x_left: float
    x_right: float
    width: float
    d1: float
    d2: float
    k: float
    screen: np.ndarray
    source_x: float = 0.0
    width_right: float | None = None

    def __post_init__(self):
        screen = np.asarray(self.screen, dtype=np.float64)
        if screen.ndim != 1 or screen.size < 3:
            raise ValueError("screen must be a 1-D grid with at least 3 points")
        steps = np.diff(screen)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * abs(steps[0]) * screen.size:
            raise ValueError("screen grid must be uniform and increasing")
        wr = self.width if self.width_right is None else self.width_right
        if not (self.width > 0 and wr > 0):
            raise ValueError("slit widths must be positive")
        if not (self.d1 > 0 and self.d2 > 0 and self.k > 0):
            raise ValueError("distances and wavenumber must be positive")
        if self.x_left == self.x_right:
            raise ValueError("slit centers must differ")
        object.__setattr__(self, "screen", screen)
        object.__setattr__(self, "width_right", float(wr))

    @classmethod
    def standard(cls, points: int = 601, half_width: float = 150.0) -> "SlitGeometry":
        """lambda = 1, separation 10, width 2, d1 = d2 = 1000."""
        return cls(-5.0, 5.0, 2.0, 1000.0, 1000.0, 2 * math.pi,
                   np.linspace(-half_width, half_width, points))

    @property
    def separation(self) -> float:
        return abs(self.x_right - self.x_left)

    @property
    def fringe_spacing(self) -> float:
        """Far-field estimate ``lambda d2 / separation``."""
        return 2 * math.pi * self.d2 / (self.k * self.separation)

    @property
    def dq(self) -> float:
        return float(self.screen[1] - self.screen[0])


@dataclass(frozen=True, eq=False)
class SlitAmplitude:
    geometry: SlitGeometry
    left: np.ndarray
    right: np.ndarray
    aperture_points: int = 0

    @property
    def q(self) -> np.ndarray:
        return self.geometry.screen


def _slit_sum(geom: SlitGeometry, center: float, width: float, m: int) -> np.ndarray:
    nodes, weights = np.polynomial.legendre.leggauss(m)
    x = center + 0.5 * width * nodes
    w = 0.5 * width * weights
    r1 = np.hypot(geom.d1, x - geom.source_x)
    r2 = np.hypot(geom.d2, geom.screen[:, None] - x[None, :])
    return np.exp(1j * geom.k * (r1[None, :] + r2)) @ w


def _converged_slit(geom: SlitGeometry, center: float, width: float) -> tuple[np.ndarray, int]:
    m = 16
    prev = _slit_sum(geom, center, width, m)
    while m < MAX_APERTURE_POINTS:
        m *= 2
        cur = _slit_sum(geom, center, width, m)
        scale = np.abs(cur).max()
        if scale > 0 and np.abs(cur - prev).max() <= CONVERGENCE_TOL * scale:
            return cur, m
        prev = cur
    raise RuntimeError("aperture sum failed to converge; check the geometry")


def path_amplitude(geom: SlitGeometry, aperture_points: int | None = None) -> SlitAmplitude:
    """``Lambda_s(q)`` for both slits.

    With ``aperture_points`` given, exactly that many nodes per slit are used
    and no convergence check is made (``1`` gives the single-path limit).
    """
    if aperture_points is not None:
        if aperture_points < 1:
            raise ValueError("aperture_points must be positive")
        left = _slit_sum(geom, geom.x_left, geom.width, aperture_points)
        right = _slit_sum(geom, geom.x_right, geom.width_right, aperture_points)
        return SlitAmplitude(geom, left, right, aperture_points)
    left, ml = _converged_slit(geom, geom.x_left, geom.width)
    right, mr = _converged_slit(geom, geom.x_right, geom.width_right)
    return SlitAmplitude(geom, left, right, max(ml, mr))


def _normalized(values: np.ndarray) -> np.ndarray:
    total = values.sum()
    if not total > 0:
        raise DegenerateError("intensity vanishes on the whole screen")
    return values / total


def phase_intensity(amp: SlitAmplitude, phi: float) -> np.ndarray:
    """``|Lambda_L + exp(i phi) Lambda_R|^2`` normalized to unit sum."""
    return _normalized(np.abs(amp.left + np.exp(1j * phi) * amp.right) ** 2)


def coherent_intensity(amp: SlitAmplitude) -> np.ndarray:
    return _normalized(np.abs(amp.left + amp.right) ** 2)


def incoherent_intensity(amp: SlitAmplitude) -> np.ndarray:
    """Phase-averaged pattern: the cross term drops out."""
    return _normalized(np.abs(amp.left) ** 2 + np.abs(amp.right) ** 2)


def slit_probabilities(amp: SlitAmplitude) -> tuple[float, float]:
    nl = float(np.sum(np.abs(amp.left) ** 2))
    nr = float(np.sum(np.abs(amp.right) ** 2))
    if nl + nr == 0:
        raise DegenerateError("both slit amplitudes vanish")
    return nl / (nl + nr), nr / (nl + nr)


class NegativeDetection(NamedTuple):
    intensity: np.ndarray
    survival: float
    projected: SlitAmplitude


def negative_detection_condition(amp: SlitAmplitude,
                                 blocked: Literal["L", "R"]) -> NegativeDetection:
    """Condition on *not* detecting the particle at ``blocked``.

    Returns the renormalized single-slit intensity of the open slit, the
    survival probability and the projected amplitude (blocked component set
    to zero) so projections can be composed.
    """
    if blocked not in ("L", "R"):
        raise ValueError(f"slit label must be 'L' or 'R', got {blocked!r}")
    p_left, p_right = slit_probabilities(amp)
    if blocked == "R":
        other, survive = amp.left, p_left
        projected = SlitAmplitude(amp.geometry, amp.left, np.zeros_like(amp.right), amp.aperture_points)
    else:
        other, survive = amp.right, p_right
        projected = SlitAmplitude(amp.geometry, np.zeros_like(amp.left), amp.right, amp.aperture_points)
    weights = np.abs(other) ** 2
    if not weights.sum() > 0:
        raise DegenerateError(f"no amplitude remains once slit {blocked} is blocked")
    return NegativeDetection(weights / weights.sum(), survive, projected)


@dataclass(frozen=True)
class DecoherenceModel:
    """Relative phase on the right-slit component, drawn once per run.

    ``kind``: ``none`` (phi = 0), ``fixed`` (phi = ``mu``), ``uniform`` on
    ``[0, 2 pi)``, or ``vonmises`` with location ``mu`` and concentration
    ``kappa``.
    """

    kind: Literal["none", "fixed", "uniform", "vonmises"] = "none"
    mu: float = 0.0
    kappa: float = 0.0
    seed: int = field(default=0)

    def __post_init__(self):
        if self.kind not in ("none", "fixed", "uniform", "vonmises"):
            raise ValueError(f"unknown decoherence model {self.kind!r}")
        if self.kappa < 0:
            raise ValueError("von Mises concentration must be non-negative")

    def draw_phase(self, rng: np.random.Generator) -> float:
        if self.kind == "none":
            return 0.0
        if self.kind == "fixed":
            return float(self.mu)
        if self.kind == "uniform":
            return float(rng.uniform(0.0, 2 * math.pi))
        return float(rng.vonmises(self.mu, self.kappa))

    def mean_phasor(self) -> complex:
        """``E[exp(i phi)]``."""
        if self.kind == "none":
            return 1.0 + 0j
        if self.kind == "fixed":
            return complex(np.exp(1j * self.mu))
        if self.kind == "uniform":
            return 0j
        rho = float(special.i1e(self.kappa) / special.i0e(self.kappa))
        return rho * complex(np.exp(1j * self.mu))


def expected_distribution(amp: SlitAmplitude, model: DecoherenceModel) -> np.ndarray:
    """Phase average of the per-run screen distribution."""
    cross = np.conj(amp.left) * amp.right * model.mean_phasor()
    base = np.abs(amp.left) ** 2 + np.abs(amp.right) ** 2
    return _normalized(base + 2 * cross.real)


def _cdf_terms(amp: SlitAmplitude):
    cross = np.conj(amp.left) * amp.right
    cum_a = np.cumsum(np.abs(amp.left) ** 2 + np.abs(amp.right) ** 2)
    return cum_a, np.cumsum(cross.real), np.cumsum(-cross.imag)


def _draws(model: DecoherenceModel, rng: np.random.Generator) -> tuple[float, float]:
    phi = model.draw_phase(rng)
    return phi, float(rng.random())


def decohered_run(amp: SlitAmplitude, model: DecoherenceModel,
                  rng: np.random.Generator) -> float:
    """One run: draw ``phi``, then one screen position from ``I_phi``."""
    phi, u = _draws(model, rng)
    idx = _kernels.sample_inverse_cdf(*_cdf_terms(amp), np.array([math.cos(phi)]),
                                      np.array([math.sin(phi)]), np.array([u]))
    return float(amp.q[int(idx[0])])


def ensemble_indices(amp: SlitAmplitude, model: DecoherenceModel, runs: int,
                     seed: int, threads: int = 1, chunk: int = 8192,
                     kernels=None) -> np.ndarray:
    """Screen-grid index of every run, in run order."""
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if threads < 1:
        raise ValueError("threads must be at least 1")
    kern = kernels if kernels is not None else _kernels
    terms = _cdf_terms(amp)
    bounds = [(lo, min(lo + chunk, runs)) for lo in range(0, runs, chunk)]

    def work(span):
        lo, hi = span
        phi = np.empty(hi - lo)
        u = np.empty(hi - lo)
        for r in range(lo, hi):
            phi[r - lo], u[r - lo] = _draws(model, np.random.default_rng(seed ^ r))
        return kern.sample_inverse_cdf(*terms, np.cos(phi), np.sin(phi), u)

    if threads == 1:
        parts = [work(span) for span in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    return np.concatenate(parts)


def central_slice(size: int) -> slice:
    return slice(size // 3, size - size // 3)


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    window = max(1, int(window))
    return np.convolve(values, np.ones(window) / window, mode="same")


def visibility(curve: np.ndarray, smooth_window: int = 1) -> float:
    """``(I_max - I_min) / (I_max + I_min)`` over the central third, after an
    optional moving average of ``smooth_window`` samples."""
    values = moving_average(np.asarray(curve, dtype=np.float64), smooth_window)
    core = values[central_slice(values.size)]
    hi, lo = core.max(), core.min()
    if hi + lo == 0:
        raise DegenerateError("curve vanishes on the central region")
    return float((hi - lo) / (hi + lo))


def smoothing_window(geom: SlitGeometry) -> int:
    """A quarter fringe, in screen samples."""
    return max(1, int(round(0.25 * geom.fringe_spacing / geom.dq)))


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    counts: np.ndarray
    visibility: float
    runs: int
    seed: int


def ensemble_histogram(amp: SlitAmplitude, model: DecoherenceModel, runs: int,
                       seed: int | None = None, threads: int = 1) -> EnsembleResult:
    """Counts per screen grid point plus the smoothed central visibility.

    ``seed`` defaults to ``model.seed``.
    """
    seed = model.seed if seed is None else seed
    idx = ensemble_indices(amp, model, runs, seed, threads)
    counts = np.bincount(idx, minlength=amp.q.size)
    vis = visibility(counts.astype(np.float64), smoothing_window(amp.geometry))
    return EnsembleResult(counts, vis, runs, seed)
