"""Exceptions and input-validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np


class AnisoError(Exception):
    """Base class for all errors raised by this package."""


class MeshValidationError(AnisoError, ValueError):
    """The input mesh is malformed.

    Attributes
    ----------
    issues : list of ValidationIssue
        Every problem found, not only the first one.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        head = "; ".join(str(i) for i in self.issues[:5])
        more = f" (+{len(self.issues) - 5} more)" if len(self.issues) > 5 else ""
        super().__init__(f"invalid mesh: {head}{more}")


class DegenerateTriangleError(AnisoError, ValueError):
    pass


class NoCriticalPointError(AnisoError, ValueError):
    """Raised when a point minimum is requested from a parallel-line quadric."""


class NumericalError(AnisoError, ArithmeticError):
    """A floating-point consistency check failed.

    ``triangle`` carries the index of the offending input triangle when known.
    """

    def __init__(self, message, triangle=None):
        self.triangle = triangle
        if triangle is not None:
            message = f"triangle {triangle}: {message}"
        super().__init__(message)


MODE_NAMES = ("a", "b", "c")


def check_mesh(X, reorient=True):
    """Return a validated, CCW-oriented :class:`~anisospec.mesh.TensorMesh`.

    ``X`` may be a TensorMesh, a mapping in the JSON mesh layout, or a path to a
    mesh file. Raises :class:`MeshValidationError` listing every issue.
    """
    from .mesh import TensorMesh, load_mesh, validate_mesh

    if isinstance(X, TensorMesh):
        mesh = X
    elif isinstance(X, dict):
        mesh = TensorMesh.from_dict(X)
    elif isinstance(X, (str, bytes)) or hasattr(X, "__fspath__"):
        mesh = load_mesh(X)
    else:
        raise TypeError(f"expected a TensorMesh, mapping or path, got {type(X).__name__}")
    report = validate_mesh(mesh)
    if not report.ok:
        raise MeshValidationError(report.issues)
    return report.mesh if reorient else mesh


def check_modes(modes) -> tuple[str, ...]:
    """Normalise a mode selection such as ``"a,b,c"``, ``"abc"`` or ``["a", "c"]``."""
    if isinstance(modes, str):
        s = modes.strip()
        items: Iterable[str] = s.replace(",", " ").split() if ("," in s or " " in s) else list(s)
    else:
        items = modes
    out = []
    for m in items:
        m = str(getattr(m, "value", m)).strip().lower()
        if m not in MODE_NAMES:
            raise ValueError(f"unknown interpolation mode {m!r}; expected a subset of a, b, c")
        if m not in out:
            out.append(m)
    if not out:
        raise ValueError("at least one interpolation mode is required")
    return tuple(sorted(out))


def check_bins(bins) -> int:
    b = int(bins)
    if b != bins or b < 2:
        raise ValueError(f"bins must be an integer >= 2, got {bins!r}")
    return b


def check_thresholds(values) -> np.ndarray:
    v = np.atleast_1d(np.asarray(values, dtype=float))
    if v.ndim != 1:
        v = v.ravel()
    if not np.all(np.isfinite(v)):
        raise ValueError("thresholds must be finite")
    return v


def check_workers(n_jobs) -> int:
    n = int(n_jobs)
    if n < 1:
        raise ValueError(f"worker count must be >= 1, got {n_jobs!r}")
    return n


def as_points(points, n: int | None = None) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or (n is not None and p.shape[0] != n):
        want = f"({n}, 2)" if n is not None else "(k, 2)"
        raise ValueError(f"expected points of shape {want}, got {p.shape}")
    return p


def as_triangle(triangle: Sequence) -> np.ndarray:
    return as_points(triangle, 3)
