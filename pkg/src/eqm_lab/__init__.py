"""Numerical laboratory for extended quantum mechanics constructions.

Subpackages mirror the constructions: :mod:`quaternion`, :mod:`spin_lattice`,
:mod:`entanglement`, :mod:`phase_space`, :mod:`quasiprob`, :mod:`twoslit`,
and the :mod:`cli` batch runner. Hot loops live in :mod:`eqm_lab._kernels`
(compiled when available, NumPy otherwise).
"""
from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
