"""Numerical laboratory for classical and free chaos on grid kernels.

Kernels are step functions on ``[0, 1]^q``. Wiener-side moments are computed
exactly by Gaussian diagram sums and checked by Monte Carlo; Wigner-side
moments use respecting non-crossing pairings and a GUE matrix oracle.
"""

__version__ = "0.1.0"
