"""Cumulative histograms (sublevel areas) and their derivative densities.

Three interpolations of the anisotropy are supported:

``a``  linear on the original triangles,
``b``  linear on the monotone subdivision,
``c``  the exact quadratic given by linearly interpolated tensor components.

Per-triangle contributions are computed independently (optionally in worker
processes) and reduced in triangle order with a fixed pairwise tree, so the
result does not depend on the number of workers.
"""

from __future__ import annotations

import enum
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .area import linear_area_curve, piece_sublevel_area
from .mesh import TensorMesh
from .subdivision import SubdividedMesh, subdivide_mesh
from .validation import AnisoError, NumericalError, check_bins, check_modes, check_workers

DEFAULT_BINS = 256
#: Monotonicity corrections larger than this fraction of the total area are reported.
CORRECTION_RTOL = 1e-7


class InterpolationMode(str, enum.Enum):
    LINEAR_ORIGINAL = "a"
    LINEAR_MONOTONE = "b"
    QUADRATIC_EXACT = "c"


@dataclass(frozen=True, eq=False)
class ContourSpectrum:
    """Cumulative histogram on ``B + 1`` thresholds and its ``B`` bin densities."""

    mode: InterpolationMode
    bin_values: np.ndarray
    cumulative: np.ndarray
    total_area: float
    density: np.ndarray | None = None
    max_correction: float = 0.0

    @property
    def bins(self) -> int:
        return len(self.bin_values) - 1

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.bin_values[1:] + self.bin_values[:-1])

    def mean(self) -> float:
        """Mean anisotropy of the binned distribution (midpoint rule)."""
        dens = self.density if self.density is not None else density(self).density
        mass = dens * np.diff(self.bin_values)
        return float(np.sum(self.midpoints * mass) / np.sum(mass))


def uniform_thresholds(vmax: float, bins: int) -> np.ndarray:
    """``bins + 1`` evenly spaced thresholds on ``[0, vmax]``, both ends included.

    Written as ``vmax * (j / bins)`` so that doubling ``bins`` reproduces the
    coarse thresholds bit for bit.
    """
    return vmax * (np.arange(bins + 1) / bins)


def _tree_sum(rows: np.ndarray) -> np.ndarray:
    """Sum rows with a fixed pairwise reduction tree."""
    if len(rows) == 0:
        raise AnisoError("cannot reduce an empty mesh")
    while len(rows) > 1:
        if len(rows) % 2:
            rows = np.concatenate([rows, np.zeros((1,) + rows.shape[1:])])
        rows = rows[0::2] + rows[1::2]
    return rows[0]


def _linear_rows(values: np.ndarray, areas: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    return np.array([linear_area_curve(values[k], areas[k], thresholds) for k in range(len(areas))]).reshape(
        len(areas), len(thresholds)
    )


def _piece_rows(pieces, thresholds: np.ndarray) -> np.ndarray:
    out = np.empty((len(pieces), len(thresholds)))
    for k, piece in enumerate(pieces):
        try:
            out[k] = piece_sublevel_area(piece, thresholds)
        except NumericalError as exc:
            raise NumericalError(str(exc), triangle=piece.parent) from None
    return out


def _work(task):
    kind, payload, thresholds = task
    if kind == "linear":
        return _linear_rows(payload[0], payload[1], thresholds)
    return _piece_rows(payload, thresholds)


def _chunks(n: int, parts: int):
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [(bounds[i], bounds[i + 1]) for i in range(parts) if bounds[i + 1] > bounds[i]]


def triangle_contributions(submesh: SubdividedMesh, mode, thresholds, n_jobs: int = 1) -> np.ndarray:
    """Per-triangle sublevel areas, shape ``(n_triangles_in_mode, len(thresholds))``.

    Rows follow the canonical triangle order of the mode's triangulation (input
    triangles for ``a``, monotone pieces for ``b`` and ``c``).
    """
    mode = InterpolationMode(getattr(mode, "value", mode))
    thresholds = np.asarray(thresholds, dtype=float)
    n_jobs = check_workers(n_jobs)
    if mode is InterpolationMode.LINEAR_ORIGINAL:
        src = submesh.source
        vals = src.vertex_anisotropy()[src.triangles]
        areas = np.abs(src.triangle_areas())
        n = len(areas)
        tasks = [("linear", (vals[i:j], areas[i:j]), thresholds) for i, j in _chunks(n, n_jobs)]
    elif mode is InterpolationMode.LINEAR_MONOTONE:
        vals = submesh.values[submesh.triangles]
        areas = np.array([p.area for p in submesh.pieces])
        n = len(areas)
        tasks = [("linear", (vals[i:j], areas[i:j]), thresholds) for i, j in _chunks(n, n_jobs)]
    else:
        n = len(submesh.pieces)
        tasks = [("pieces", submesh.pieces[i:j], thresholds) for i, j in _chunks(n, n_jobs)]
    if n == 0:
        raise AnisoError("mesh has no triangles")
    if n_jobs == 1 or len(tasks) == 1:
        parts = [_work(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(n_jobs, len(tasks))) as pool:
            parts = list(pool.map(_work, tasks))
    return np.concatenate(parts, axis=0)


def sublevel_areas(submesh: SubdividedMesh, mode, thresholds, n_jobs: int = 1) -> np.ndarray:
    """Total area where the mode's anisotropy is at most each threshold (raw sums)."""
    rows = triangle_contributions(submesh, mode, thresholds, n_jobs)
    return _tree_sum(rows)


def _as_submesh(mesh_or_submesh) -> SubdividedMesh:
    if isinstance(mesh_or_submesh, SubdividedMesh):
        return mesh_or_submesh
    if isinstance(mesh_or_submesh, TensorMesh):
        return subdivide_mesh(mesh_or_submesh)
    raise TypeError(f"expected a TensorMesh or SubdividedMesh, got {type(mesh_or_submesh).__name__}")


def value_range_max(submesh: SubdividedMesh) -> float:
    """Upper end of the bin range; 1.0 for an everywhere-isotropic field."""
    vmax = float(np.max(submesh.values))
    return vmax if vmax > 0.0 else 1.0


def cumulative_histogram(mesh_or_submesh, mode, bins: int = DEFAULT_BINS, n_jobs: int = 1, vmax: float | None = None):
    """Cumulative histogram of one interpolation mode on uniform thresholds.

    The raw sums are made non-decreasing afterwards; a correction above
    ``CORRECTION_RTOL`` times the total area triggers a ``RuntimeWarning``.
    """
    submesh = _as_submesh(mesh_or_submesh)
    bins = check_bins(bins)
    mode = InterpolationMode(getattr(mode, "value", mode))
    top = value_range_max(submesh) if vmax is None else float(vmax)
    thresholds = uniform_thresholds(top, bins)
    raw = sublevel_areas(submesh, mode, thresholds, n_jobs)
    cum = np.maximum.accumulate(raw)
    correction = float(np.max(cum - raw))
    total = submesh.source.total_area()
    if correction > CORRECTION_RTOL * total:
        warnings.warn(
            f"mode {mode.value}: cumulative histogram needed a monotonicity correction of {correction:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    for a in (thresholds, cum):
        a.flags.writeable = False
    return ContourSpectrum(mode, thresholds, cum, total, None, correction)


def density(spec: ContourSpectrum) -> ContourSpectrum:
    """Forward-difference derivative of the cumulative histogram, one value per bin."""
    width = np.diff(spec.bin_values)
    if np.any(width <= 0.0):
        raise ValueError("zero-width bin in cumulative histogram")
    dens = np.diff(spec.cumulative) / width
    dens.flags.writeable = False
    return replace(spec, density=dens)


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """All requested spectra on shared thresholds plus summary statistics.

    ``bias_violation`` is ``max(CH_b - CH_c)`` over the thresholds; it is at
    most rounding noise because the linear interpolant of a convex function lies
    above it.
    """

    spectra: dict
    differences: dict
    bias_violation: float | None
    means: dict

    @property
    def total_area(self) -> float:
        return next(iter(self.spectra.values())).total_area


def compare_modes(mesh, bins: int = DEFAULT_BINS, modes="abc", n_jobs: int = 1) -> ComparisonReport:
    submesh = _as_submesh(mesh)
    modes = check_modes(modes)
    top = value_range_max(submesh)
    spectra = {m: density(cumulative_histogram(submesh, m, bins, n_jobs, vmax=top)) for m in modes}
    diffs = {}
    for x in modes:
        for y in modes:
            if x < y:
                diffs[f"{y}-{x}"] = spectra[y].cumulative - spectra[x].cumulative
    bias = None
    if "b" in spectra and "c" in spectra:
        bias = float(np.max(spectra["b"].cumulative - spectra["c"].cumulative))
    means = {m: s.mean() for m, s in spectra.items()}
    return ComparisonReport(spectra, diffs, bias, means)
