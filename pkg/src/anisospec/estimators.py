"""Scikit-learn style front ends for spectra, merge trees and contours.

Each estimator is fitted on one tensor mesh (a :class:`~anisospec.mesh.TensorMesh`,
its dict form, or a path to a mesh file) and keeps the monotone subdivision so
later queries do not redo it.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .contours import extract_contours
from .spectrum import DEFAULT_BINS, compare_modes, sublevel_areas, _tree_sum, triangle_contributions
from .subdivision import SubdividedMesh, subdivide_mesh
from .topology import mode_join_tree, split_tree
from .validation import check_bins, check_mesh, check_modes, check_thresholds, check_workers


def _fit_submesh(X) -> SubdividedMesh:
    if isinstance(X, SubdividedMesh):
        return X
    return subdivide_mesh(check_mesh(X))


class AnisotropySpectrum(BaseEstimator, TransformerMixin, auto_wrap_output_keys=None):
    """Cumulative histograms of the anisotropy under several interpolations.

    Parameters
    ----------
    bins : int, default=256
        Number of uniform bins on ``[0, vmax]``; ``vmax`` is learned in ``fit``.
    modes : str or sequence, default="abc"
        Any non-empty subset of ``a`` (linear, input mesh), ``b`` (linear,
        monotone subdivision) and ``c`` (exact quadratic).
    n_jobs : int, default=1
        Worker processes. Results are bitwise independent of this value.

    Attributes
    ----------
    submesh_ : SubdividedMesh
    report_ : ComparisonReport
    bin_values_ : ndarray of shape (bins + 1,)
    cumulative_ : ndarray of shape (bins + 1, n_modes)
    density_ : ndarray of shape (bins, n_modes)
    modes_ : tuple of str
    total_area_ : float

    Examples
    --------
    >>> from anisospec.mesh import generate_synthetic
    >>> est = AnisotropySpectrum(bins=16).fit(generate_synthetic(5))
    >>> est.cumulative_.shape
    (17, 3)
    """

    def __init__(self, bins=DEFAULT_BINS, modes="abc", n_jobs=1):
        self.bins = bins
        self.modes = modes
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        bins = check_bins(self.bins)
        modes = check_modes(self.modes)
        n_jobs = check_workers(self.n_jobs)
        self.submesh_ = _fit_submesh(X)
        self.report_ = compare_modes(self.submesh_, bins, modes, n_jobs)
        self.modes_ = modes
        self.bin_values_ = self.report_.spectra[modes[0]].bin_values
        self.cumulative_ = np.column_stack([self.report_.spectra[m].cumulative for m in modes])
        self.density_ = np.column_stack([self.report_.spectra[m].density for m in modes])
        self.total_area_ = self.report_.total_area
        return self

    def transform(self, X):
        """Cumulative areas at the fitted thresholds for another mesh.

        Returns an array of shape ``(bins + 1, n_modes)``.
        """
        check_is_fitted(self, "submesh_")
        sub = self.submesh_ if X is self.submesh_ else _fit_submesh(X)
        cols = [np.maximum.accumulate(sublevel_areas(sub, m, self.bin_values_, self.n_jobs)) for m in self.modes_]
        return np.column_stack(cols)

    def sublevel_area(self, thresholds):
        """Exact area of ``{sqanis <= v}`` on the fitted mesh, one column per mode."""
        check_is_fitted(self, "submesh_")
        v = check_thresholds(thresholds)
        cols = [_tree_sum(triangle_contributions(self.submesh_, m, v, self.n_jobs)) for m in self.modes_]
        return np.clip(np.column_stack(cols), 0.0, self.total_area_)

    def mean(self) -> dict:
        check_is_fitted(self, "report_")
        return dict(self.report_.means)


class AnisotropyJoinTree(BaseEstimator, TransformerMixin, auto_wrap_output_keys=None):
    """Join tree (and optionally split tree) of the anisotropy.

    Parameters
    ----------
    mode : {"a", "b", "c"}, default="c"
    refine : int, default=2
        Uniform refinement levels used to sample the quadratic in mode ``c``.
    with_split : bool, default=False

    Attributes
    ----------
    tree_ : JoinTree
    split_tree_ : JoinTree or None
    n_leaves_ : int
    n_degenerate_ : int
        Number of minima whose value is numerically zero (tensor degenerate points).
    """

    def __init__(self, mode="c", refine=2, with_split=False):
        self.mode = mode
        self.refine = refine
        self.with_split = with_split

    def fit(self, X, y=None):
        mode = check_modes(self.mode)
        if len(mode) != 1:
            raise ValueError("AnisotropyJoinTree needs exactly one mode")
        if int(self.refine) < 0:
            raise ValueError("refine must be >= 0")
        self.submesh_ = _fit_submesh(X)
        self.tree_ = mode_join_tree(self.submesh_, mode[0], int(self.refine))
        self.split_tree_ = None
        if self.with_split:
            src = self.submesh_.source if mode[0] == "a" else self.submesh_
            self.split_tree_ = split_tree(src)
        self.n_leaves_ = len(self.tree_.leaves)
        self.n_degenerate_ = len(self.tree_.degenerate_leaves())
        return self

    def transform(self, X=None):
        """Node table ``(value, x, y, is_leaf, is_degenerate)`` of the fitted tree.

        When ``X`` is a mesh other than the fitted one, the tree is recomputed
        for it with the same settings.
        """
        check_is_fitted(self, "tree_")
        tree = self.tree_
        if X is not None and X is not self.submesh_:
            tree = mode_join_tree(_fit_submesh(X), check_modes(self.mode)[0], int(self.refine))
        leaves = {n.id for n in tree.leaves}
        return np.array(
            [(n.value, n.position[0], n.position[1], n.id in leaves, n.is_degenerate_point) for n in tree.nodes],
            dtype=float,
        ).reshape(-1, 5)


class AnisotropyContours(BaseEstimator):
    """Isocontours of the anisotropy.

    Parameters
    ----------
    mode : {"a", "b", "c"}, default="c"
    chordal_tol : float or None
        Arc sampling tolerance for mode ``c``; ``None`` uses ``1e-3`` times the
        bounding-box diagonal.
    n_jobs : int, default=1
    """

    def __init__(self, mode="c", chordal_tol=None, n_jobs=1):
        self.mode = mode
        self.chordal_tol = chordal_tol
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        if len(check_modes(self.mode)) != 1:
            raise ValueError("AnisotropyContours needs exactly one mode")
        self.submesh_ = _fit_submesh(X)
        return self

    def transform(self, isovalues):
        """One :class:`~anisospec.contours.ContourSet` per isovalue."""
        check_is_fitted(self, "submesh_")
        values = check_thresholds(isovalues)
        mode = check_modes(self.mode)[0]
        return [extract_contours(self.submesh_, mode, v, self.chordal_tol, self.n_jobs) for v in values]
