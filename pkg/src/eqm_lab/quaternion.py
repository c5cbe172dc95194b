"""Quaternion arithmetic and the direction -> unit quaternion embedding.

Spin amplitudes are sums of pure-imaginary unit quaternions, so only the
operations they need are provided here: Hamilton product, Euclidean inner
product, norms and the embedding of unit 3-vectors.

>>> I * J == K
True
>>> (I + J) * (I - J)
Quaternion(w=0.0, x=0.0, y=0.0, z=-2.0)
"""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

#: tolerance on |n| - 1 before a direction is rejected
UNIT_TOL = 1e-9


class Quaternion(NamedTuple):
    """``w + x I + y J + z K`` with double-precision components."""

    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, arr) -> "Quaternion":
        w, x, y, z = (float(c) for c in arr)
        return cls(w, x, y, z)

    def to_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)

    def __add__(self, other):  # type: ignore[override]
        if not isinstance(other, Quaternion):
            return NotImplemented
        return Quaternion(self.w + other.w, self.x + other.x,
                          self.y + other.y, self.z + other.z)

    def __sub__(self, other):
        if not isinstance(other, Quaternion):
            return NotImplemented
        return Quaternion(self.w - other.w, self.x - other.x,
                          self.y - other.y, self.z - other.z)

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other):  # type: ignore[override]
        if isinstance(other, Quaternion):
            return quat_mul(self, other)
        if isinstance(other, (int, float)):
            r = float(other)
            return Quaternion(self.w * r, self.x * r, self.y * r, self.z * r)
        return NotImplemented

    def __rmul__(self, other):  # type: ignore[override]
        if isinstance(other, (int, float)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return self * (1.0 / float(other))
        return NotImplemented

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm_sq(self) -> float:
        return norm_sq(self)

    def is_pure(self) -> bool:
        return self.w == 0.0


ONE = Quaternion(1.0, 0.0, 0.0, 0.0)
I = Quaternion(0.0, 1.0, 0.0, 0.0)
J = Quaternion(0.0, 0.0, 1.0, 0.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)
ZERO = Quaternion()


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product with ``I J = K``, ``J K = I``, ``K I = J``."""
    return Quaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def quat_inner(a: Quaternion, b: Quaternion) -> float:
    """Euclidean inner product of the 4-component vectors."""
    return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z


def norm_sq(q: Quaternion) -> float:
    return quat_inner(q, q)


class Direction:
    """A unit 3-vector. Inputs off the unit sphere by more than
    :data:`UNIT_TOL` raise ``ValueError``; nothing is renormalized."""

    __slots__ = ("_v",)

    def __init__(self, x: float, y: float, z: float):
        v = (float(x), float(y), float(z))
        if not all(math.isfinite(c) for c in v):
            raise ValueError(f"direction components must be finite, got {v}")
        length = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        if abs(length - 1.0) > UNIT_TOL:
            raise ValueError(f"direction {v} is not a unit vector (|n| = {length!r})")
        self._v = v

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> "Direction":
        if len(vec) != 3:
            raise ValueError(f"direction needs 3 components, got {len(vec)}")
        return cls(*vec)

    @classmethod
    def from_angles(cls, theta: float, phi: float = 0.0) -> "Direction":
        """Polar angle ``theta`` from +z, azimuth ``phi`` from +x (radians)."""
        st = math.sin(theta)
        return cls(st * math.cos(phi), st * math.sin(phi), math.cos(theta))

    @property
    def vector(self) -> tuple[float, float, float]:
        return self._v

    def dot(self, other: "Direction") -> float:
        a, b = self._v, other._v
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]

    def __iter__(self):
        return iter(self._v)

    def __eq__(self, other):
        return isinstance(other, Direction) and self._v == other._v

    def __hash__(self):
        return hash(self._v)

    def __repr__(self):
        return "Direction(%r, %r, %r)" % self._v


def unit_quat_from_direction(n: Direction) -> Quaternion:
    """``(n.i) I + (n.j) J + (n.k) K``; a pure unit quaternion."""
    if not isinstance(n, Direction):
        n = Direction.from_vector(n)
    x, y, z = n.vector
    return Quaternion(0.0, x, y, z)
