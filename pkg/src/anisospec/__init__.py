"""Exact contour spectra, join trees and contours of 2D tensor-field anisotropy.

The anisotropy of a symmetric tensor ``((e, f), (f, g))`` is the squared
eigenvalue difference ``(e - g)**2 + 4 f**2``. With tensor components
interpolated linearly over each triangle it is a convex quadratic per
triangle, and this package computes its sublevel-set areas, merge trees and
level sets exactly, next to two piecewise linear baselines.
"""

from .contours import ContourSet, extract_contours
from .estimators import AnisotropyContours, AnisotropyJoinTree, AnisotropySpectrum
from .mesh import (
    LinearCoeffs,
    Tensor2S,
    TensorMesh,
    anisotropy,
    generate_synthetic,
    linear_coeffs,
    load_mesh,
    random_mesh,
    save_mesh,
    validate_mesh,
)
from .quadric import NormalizedFrame, QuadricKind, QuadricModel, build_quadric, classify, critical_point, normalize
from .spectrum import ComparisonReport, ContourSpectrum, InterpolationMode, compare_modes, cumulative_histogram, density
from .subdivision import MonotoneTriangle, SubdividedMesh, TriangleCase, subdivide_mesh
from .topology import JoinTree, NodeKind, join_tree, quadratic_join_tree, split_tree
from .validation import AnisoError, MeshValidationError, NumericalError

__version__ = "0.1.0"

__all__ = [
    "AnisoError",
    "AnisotropyContours",
    "AnisotropyJoinTree",
    "AnisotropySpectrum",
    "ComparisonReport",
    "ContourSet",
    "ContourSpectrum",
    "InterpolationMode",
    "JoinTree",
    "LinearCoeffs",
    "MeshValidationError",
    "MonotoneTriangle",
    "NodeKind",
    "NormalizedFrame",
    "NumericalError",
    "QuadricKind",
    "QuadricModel",
    "SubdividedMesh",
    "Tensor2S",
    "TensorMesh",
    "TriangleCase",
    "anisotropy",
    "build_quadric",
    "classify",
    "compare_modes",
    "critical_point",
    "cumulative_histogram",
    "density",
    "extract_contours",
    "generate_synthetic",
    "join_tree",
    "linear_coeffs",
    "load_mesh",
    "normalize",
    "quadratic_join_tree",
    "random_mesh",
    "save_mesh",
    "split_tree",
    "subdivide_mesh",
    "validate_mesh",
]
