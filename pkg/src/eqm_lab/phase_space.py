"""Extended wavefunctions on a periodic (q, p) grid.

Position and momentum act on ``Lambda(q, p)`` as

    Q_alpha = alpha q + i hbar d/dp,     P_beta = beta p - i hbar d/dq,

with ``alpha + beta = 1``; their commutator is ``i hbar``. Derivatives are
spectral (FFT along one axis), so they are exact for band-limited data and
act column by column: a state supported on one ``q`` column stays there
under ``Q_alpha``.

Test states are manufactured with :func:`lift`, which multiplies a position
wavefunction, a momentum window and the phase ``exp(-i alpha q p / hbar)``.
The projections use the adjoint of that factor as their kernel, so
``project_to_position(lift(psi, chi), chi) == psi`` whenever ``chi`` is
unit-normalized.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError

_MAGIC = b"EQMG"
_VERSION = 1
_HEADER = struct.Struct("<4sIII5d")


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform periodic grid; the upper extents are excluded (``q_max`` is
    identified with ``q_min``)."""

    n_q: int
    n_p: int
    q_min: float
    q_max: float
    p_min: float
    p_max: float
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("n_q", "n_p"):
            v = getattr(self, name)
            if not _is_pow2(v) or v < 16:
                raise ValueError(f"{name} must be a power of two >= 16, got {v}")
        if not self.q_max > self.q_min or not self.p_max > self.p_min:
            raise ValueError("grid extents must be increasing")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")

    @classmethod
    def symmetric(cls, n: int, half_width: float, hbar: float = 1.0) -> "PhaseGrid":
        return cls(n, n, -half_width, half_width, -half_width, half_width, hbar)

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / self.n_q

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.n_p

    @property
    def q(self) -> np.ndarray:
        return self.q_min + self.dq * np.arange(self.n_q)

    @property
    def p(self) -> np.ndarray:
        return self.p_min + self.dp * np.arange(self.n_p)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_q, self.n_p)


@dataclass(frozen=True)
class AlphaSplit:
    alpha: float
    beta: float

    def __post_init__(self):
        if abs(self.alpha + self.beta - 1.0) > 1e-12:
            raise ValueError(f"alpha + beta must equal 1, got {self.alpha} + {self.beta}")

    @classmethod
    def from_alpha(cls, alpha: float) -> "AlphaSplit":
        return cls(alpha, 1.0 - alpha)


@dataclass(frozen=True, eq=False)
class ExtendedWavefunction:
    grid: PhaseGrid
    values: np.ndarray  # shape (n_q, n_p), q-major

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ShapeMismatchError(f"values shape {vals.shape} != grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("wavefunction values must be finite")
        object.__setattr__(self, "values", vals)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.dq * self.grid.dp))

    def __add__(self, other):
        _same_grid(self, other)
        return ExtendedWavefunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return ExtendedWavefunction(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return ExtendedWavefunction(self.grid, self.values * scalar)

    __rmul__ = __mul__


def _same_grid(a: ExtendedWavefunction, b: ExtendedWavefunction):
    if a.grid != b.grid:
        raise ShapeMismatchError("wavefunctions live on different grids")


def wavenumbers(n: int, spacing: float) -> np.ndarray:
    """Angular wavenumbers of a length-``n`` FFT; the Nyquist mode is zeroed
    so the derivative of real data stays real."""
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=spacing)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return k


def spectral_derivative(values: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    """First derivative along ``axis`` of periodic samples."""
    n = values.shape[axis]
    shape = [1] * values.ndim
    shape[axis] = n
    k = wavenumbers(n, spacing).reshape(shape)
    return np.fft.ifft(1j * k * np.fft.fft(values, axis=axis), axis=axis)


def apply_Q_alpha(lam: ExtendedWavefunction, split: AlphaSplit) -> ExtendedWavefunction:
    """``alpha q Lambda + i hbar dLambda/dp``."""
    g = lam.grid
    out = split.alpha * g.q[:, None] * lam.values
    out = out + 1j * g.hbar * spectral_derivative(lam.values, g.dp, axis=1)
    return ExtendedWavefunction(g, out)


def apply_P_beta(lam: ExtendedWavefunction, split: AlphaSplit) -> ExtendedWavefunction:
    """``beta p Lambda - i hbar dLambda/dq``."""
    g = lam.grid
    out = split.beta * g.p[None, :] * lam.values
    out = out - 1j * g.hbar * spectral_derivative(lam.values, g.dq, axis=0)
    return ExtendedWavefunction(g, out)


def gaussian_test_state(grid: PhaseGrid, sigma_q: float | None = None,
                        sigma_p: float | None = None, q0: float | None = None,
                        p0: float | None = None) -> ExtendedWavefunction:
    """Gaussian product centered on the grid. Default widths are 1/20 of
    each extent, which keeps the state inside the central third and decayed
    far below 1e-12 at the edges."""
    sq = sigma_q if sigma_q is not None else (grid.q_max - grid.q_min) / 20
    sp = sigma_p if sigma_p is not None else (grid.p_max - grid.p_min) / 20
    cq = q0 if q0 is not None else 0.5 * (grid.q_min + grid.q_max)
    cp = p0 if p0 is not None else 0.5 * (grid.p_min + grid.p_max)
    gq = np.exp(-((grid.q - cq) ** 2) / (2 * sq**2))
    gp = np.exp(-((grid.p - cp) ** 2) / (2 * sp**2))
    return ExtendedWavefunction(grid, np.outer(gq, gp).astype(np.complex128))


def edge_magnitude(lam: ExtendedWavefunction) -> float:
    """Largest ``|Lambda|`` on the grid boundary relative to the peak."""
    v = np.abs(lam.values)
    peak = v.max()
    if peak == 0:
        return 0.0
    edge = max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max())
    return float(edge / peak)


def commutator_residual(lam: ExtendedWavefunction, split: AlphaSplit) -> float:
    """``max |[Q_alpha, P_beta] Lambda - i hbar Lambda| / (hbar max |Lambda|)``.

    Only meaningful for smooth states that vanish at the boundary; a test
    state above 1e-12 of its peak on the edge is rejected.
    """
    if edge_magnitude(lam) > 1e-12:
        raise ValueError("test state touches the grid boundary")
    qp = apply_Q_alpha(apply_P_beta(lam, split), split)
    pq = apply_P_beta(apply_Q_alpha(lam, split), split)
    diff = qp.values - pq.values - 1j * lam.grid.hbar * lam.values
    scale = lam.grid.hbar * np.abs(lam.values).max()
    return float(np.abs(diff).max() / scale)


@dataclass(frozen=True)
class QInvarianceReport:
    support_preserved: bool
    nontrivial: bool

    def __bool__(self):
        return self.support_preserved and self.nontrivial


def q_invariant_subspace_check(lam: ExtendedWavefunction, column: int,
                               split: AlphaSplit, tol: float = 1e-10) -> QInvarianceReport:
    """Check ``Q_alpha`` maps the column-``q0`` subspace into itself and does
    not act on ``lam`` as a scalar.

    ``nontrivial`` is false when the output is (numerically) parallel to the
    input, including the zero state.
    """
    vals = lam.values
    if not 0 <= column < lam.grid.n_q:
        raise IndexError(f"column {column} out of range")
    off = np.delete(vals, column, axis=0)
    if np.any(off != 0):
        raise ValueError(f"input is not supported on column {column}")
    out = apply_Q_alpha(lam, split).values
    support = not np.any(np.delete(out, column, axis=0) != 0)
    u, v = vals[column], out[column]
    nu, nv = np.vdot(u, u).real, np.vdot(v, v).real
    if nu == 0 or nv == 0:
        return QInvarianceReport(support, False)
    overlap = abs(np.vdot(u, v)) ** 2 / (nu * nv)
    return QInvarianceReport(support, bool(1.0 - overlap > tol))


def _unit_window(window: np.ndarray, spacing: float, label: str) -> np.ndarray:
    w = np.asarray(window, dtype=np.complex128)
    norm = float(np.sum(np.abs(w) ** 2) * spacing)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"{label} window must be unit-normalized, got norm^2 = {norm!r}")
    return w


def normalize(values: np.ndarray, spacing: float) -> np.ndarray:
    v = np.asarray(values, dtype=np.complex128)
    return v / np.sqrt(np.sum(np.abs(v) ** 2) * spacing)


def _phase(grid: PhaseGrid, split: AlphaSplit) -> np.ndarray:
    return np.exp(-1j * split.alpha * np.outer(grid.q, grid.p) / grid.hbar)


def lift(grid: PhaseGrid, psi: np.ndarray, chi: np.ndarray,
         split: AlphaSplit) -> ExtendedWavefunction:
    """``Lambda(q, p) = psi(q) chi(p) exp(-i alpha q p / hbar)``.

    ``chi`` must satisfy ``sum |chi|^2 dp = 1``. The same construction with a
    unit position window as ``psi`` lifts a momentum wavefunction ``chi``.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    chi = np.asarray(chi, dtype=np.complex128)
    if psi.shape != (grid.n_q,) or chi.shape != (grid.n_p,):
        raise ShapeMismatchError("psi/chi lengths do not match the grid")
    _unit_window(chi, grid.dp, "momentum")
    return ExtendedWavefunction(grid, np.outer(psi, chi) * _phase(grid, split))


def project_to_position(lam: ExtendedWavefunction, window: np.ndarray,
                        split: AlphaSplit) -> np.ndarray:
    """``psi(q) = dp sum_p K(q, p) Lambda(q, p)`` with
    ``K = exp(+i alpha q p / hbar) conj(window(p))``."""
    g = lam.grid
    w = _unit_window(window, g.dp, "momentum")
    if w.shape != (g.n_p,):
        raise ShapeMismatchError("window length does not match the p axis")
    kernel = np.conj(_phase(g, split)) * np.conj(w)[None, :]
    return g.dp * np.sum(kernel * lam.values, axis=1)


def project_to_momentum(lam: ExtendedWavefunction, window: np.ndarray,
                        split: AlphaSplit) -> np.ndarray:
    """``xi(p) = dq sum_q K(q, p) Lambda(q, p)`` with
    ``K = exp(+i alpha q p / hbar) conj(window(q))``."""
    g = lam.grid
    w = _unit_window(window, g.dq, "position")
    if w.shape != (g.n_q,):
        raise ShapeMismatchError("window length does not match the q axis")
    kernel = np.conj(_phase(g, split)) * np.conj(w)[:, None]
    return g.dq * np.sum(kernel * lam.values, axis=0)


# -- serialization ----------------------------------------------------------

def to_bytes(lam: ExtendedWavefunction) -> bytes:
    """Header (magic, version, dims, extents, hbar) followed by interleaved
    little-endian real/imag doubles, row-major with q as the slow axis."""
    g = lam.grid
    header = _HEADER.pack(_MAGIC, _VERSION, g.n_q, g.n_p,
                          g.q_min, g.q_max, g.p_min, g.p_max, g.hbar)
    payload = np.ascontiguousarray(lam.values, dtype="<c16").tobytes()
    return header + payload


def from_bytes(data: bytes) -> ExtendedWavefunction:
    if len(data) < _HEADER.size:
        raise ValueError("truncated grid header")
    magic, version, n_q, n_p, q0, q1, p0, p1, hbar = _HEADER.unpack_from(data)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError("not an eqm grid file")
    grid = PhaseGrid(n_q, n_p, q0, q1, p0, p1, hbar)
    payload = data[_HEADER.size:]
    if len(payload) != n_q * n_p * 16:
        raise ValueError("payload size does not match the header")
    values = np.frombuffer(payload, dtype="<c16").reshape(n_q, n_p)
    return ExtendedWavefunction(grid, values.astype(np.complex128))


def to_csv(lam: ExtendedWavefunction) -> str:
    g = lam.grid
    buf = io.StringIO()
    buf.write("q,p,re,im\n")
    for m, q in enumerate(g.q):
        for n, p in enumerate(g.p):
            v = lam.values[m, n]
            buf.write(f"{q:.17g},{p:.17g},{v.real:.17g},{v.imag:.17g}\n")
    return buf.getvalue()
