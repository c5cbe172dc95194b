"""Hot kernels with a compiled core and a NumPy fallback.

The compiled module is used when it imports; set ``EQM_LAB_PURE=1`` to force
the fallback. ``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels as pure

compiled = None
if not os.environ.get("EQM_LAB_PURE"):
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None

_active = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "numpy"

elementary_amplitudes = _active.elementary_amplitudes
project_amplitudes = _active.project_amplitudes
sample_inverse_cdf = _active.sample_inverse_cdf

__all__ = [
    "BACKEND",
    "compiled",
    "pure",
    "elementary_amplitudes",
    "project_amplitudes",
    "sample_inverse_cdf",
]
