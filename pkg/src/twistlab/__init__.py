"""twistlab: desk-scale laboratory for non-Hermitian knotted band phases.

Simulates the two-band twister model through its Hermitian two-qubit
dilation, emulates the spin-readout tomography chain with Poisson shot
noise, computes knot-phase invariants (discriminant winding, global
biorthogonal Berry phase), and clusters unlabeled parameter sweeps with
a diffusion map.
"""

from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]
