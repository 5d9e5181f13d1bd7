"""Numerical laboratory for the symplectic Dirichlet energy of sphere-valued maps.

Modules
-------
dec       sampled manifolds (S^3 with Berger metrics, flat tori) and forms
maps      maps into the radius-1/2 sphere, energies and gradients
topology  coexact potentials, Hopf invariant, F >= H bound
flow      descent flow with line search
spectral  coexact Hodge spectra, Jacobi operators, stability threshold
lie       SU(n) flag fibrations and the PHWC coderivative formula
io        form and map serialization
cli       the ``sdl`` command
"""

import os as _os

# SDL_THREADS caps BLAS/FFT thread pools; it must be read before numpy loads.
_threads = _os.environ.get("SDL_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
