"""Spherical-mean transform and universal back-projection on convex domains."""

from __future__ import annotations

from ._backend import BACKEND
from .forward import (
    Bump,
    Phantom,
    SphericalMeanData,
    WaveData,
    eval_phantom,
    forward_data,
    spherical_mean,
    wave_from_means_even,
    wave_from_means_odd,
)
from .geometry import Ellipsoid, SmoothConvexDomain2D, boundary_quadrature, domain_from_spec
from .inversion import (
    make_grid,
    reconstruct_elliptical,
    reconstruct_means,
    reconstruction_error,
    universal_backprojection_wave,
)
from .kernels import KernelEvaluator, kernel_k, smoothing_K
from .transforms import ProfileGrid, hilbert_transform, radon_indicator

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Bump",
    "Phantom",
    "SphericalMeanData",
    "WaveData",
    "eval_phantom",
    "forward_data",
    "spherical_mean",
    "wave_from_means_even",
    "wave_from_means_odd",
    "Ellipsoid",
    "SmoothConvexDomain2D",
    "boundary_quadrature",
    "domain_from_spec",
    "make_grid",
    "reconstruct_elliptical",
    "reconstruct_means",
    "reconstruction_error",
    "universal_backprojection_wave",
    "KernelEvaluator",
    "kernel_k",
    "smoothing_K",
    "ProfileGrid",
    "hilbert_transform",
    "radon_indicator",
    "__version__",
]
