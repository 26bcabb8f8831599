"""Excitation-driven Krylov model order reduction for eddy-current transients.

Desk-scale toolkit covering the full pipeline: filament-loop full-order
models, wavelet + SVD compression of the transient forcing into an
orthonormal manifold, block-Krylov reduced bases, backward-Euler transient
solvers (direct and modal, full and reduced), null-field coil control,
and a POD + neural-network surrogate trained on reduced-order solves.
"""

from . import errors
from .numerics import (
    EigDecomposition,
    block_orthonormalize,
    cholesky_factor,
    least_squares_minnorm,
    read_morb,
    sym_generalized_eig,
    truncated_svd,
    write_morb,
)

__version__ = "0.1.0"
