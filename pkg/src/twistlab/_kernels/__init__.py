"""Hot-kernel backend selection.

The compiled Cython module is preferred; the pure-Python reference is the
fallback and is forced by setting TWISTLAB_PURE=1. Both expose the same
two callables and agree to rounding (see tests/test_kernels.py and
benchmarks/bench_kernels.py).
"""

import os

from ._ref import KernelHermiticityError, KernelPositivityLost

if os.environ.get("TWISTLAB_PURE", "") not in ("", "0"):
    from . import _ref as _impl

    BACKEND = "pure"
else:
    try:
        from . import _fast as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _ref as _impl

        BACKEND = "pure"

dilated_trajectory = _impl.dilated_trajectory
mle_project = _impl.mle_project

__all__ = [
    "BACKEND",
    "KernelHermiticityError",
    "KernelPositivityLost",
    "dilated_trajectory",
    "mle_project",
]
