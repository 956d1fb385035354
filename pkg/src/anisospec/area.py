"""Exact sublevel-set areas inside single triangles.

The elliptic kernels work in normalized coordinates, where the anisotropy is
``x^2 + y^2`` and every sublevel set is a disc around the origin; the result is
converted back to original area by dividing by the frame's area factor. All
kernels accept a scalar threshold or an array of thresholds.
"""

from __future__ import annotations

import numpy as np

from .mesh import LinearCoeffs, polygon_area
from .quadric import QuadricModel, StripProfile
from .subdivision import MonotoneTriangle, TriangleCase
from .validation import NumericalError, as_triangle

#: Relative snap distance for circle/edge intersections near segment ends.
ROOT_SNAP = 1e-9


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def sector_area(theta_a, v):
    """Area of a circular sector with opening ``theta_a`` and squared radius ``v``."""
    return 0.5 * theta_a * np.asarray(v, dtype=float) if np.ndim(v) else 0.5 * theta_a * float(v)


def sector_density(theta_a) -> float:
    """Derivative of :func:`sector_area` with respect to ``v``; independent of ``v``."""
    return 0.5 * float(theta_a)


def _angle(p, q) -> float:
    return float(np.arctan2(abs(p[0] * q[1] - p[1] * q[0]), p[0] * q[0] + p[1] * q[1]))


def _far_edge_root(p, d, v):
    """Parameter ``t`` in [0, 1] with ``|p + t d|^2 = v`` on an outward-monotone edge."""
    a = d @ d
    b = 2.0 * (p @ d)
    c = p @ p - v
    disc = np.maximum(b * b - 4.0 * a * c, 0.0)
    # c <= 0 and b >= 0 here: the positive root without cancellation
    denom = b + np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(denom > 0.0, -2.0 * c / denom, 1.0)
    t = np.clip(t, 0.0, 1.0)
    t = np.where(t > 1.0 - ROOT_SNAP, 1.0, np.where(t < ROOT_SNAP, 0.0, t))
    return t


def apex_area(near, far, v):
    """Area of the disc ``{|x|^2 <= v}`` inside the triangle ``(origin, near, far)``.

    ``near`` is the vertex closer to the origin. For squared radii up to
    ``|near|^2`` the region is a sector; beyond it the contour meets the far edge
    at a point at angle ``theta`` from the ray to ``far``, and the area is the
    sector plus the region bounded by the arc, the far edge and the two rays.
    When the far edge has an interior closest point it is split there first.
    """
    near = np.asarray(near, dtype=float)
    far = np.asarray(far, dtype=float)
    v = np.asarray(v, dtype=float)
    v2 = float(near @ near)
    v3 = float(far @ far)
    if v2 > v3:
        near, far, v2, v3 = far, near, v3, v2
    d = far - near
    dd = float(d @ d)
    if dd == 0.0 or v3 == 0.0:
        return np.zeros_like(v) if v.ndim else 0.0
    t_foot = -float(near @ d) / dd
    if ROOT_SNAP < t_foot < 1.0 - ROOT_SNAP:
        m = near + t_foot * d
        return apex_area(m, near, v) + apex_area(m, far, v)

    theta_a = _angle(near, far)
    full = 0.5 * abs(float(near[0] * far[1] - near[1] * far[0]))
    vv = np.maximum(v, 0.0)
    t = _far_edge_root(near, d, vv)
    hit = near[None, :] + np.atleast_1d(t)[:, None] * d[None, :]
    theta = np.arctan2(np.abs(hit[:, 0] * far[1] - hit[:, 1] * far[0]), hit[:, 0] * far[0] + hit[:, 1] * far[1])
    theta = theta.reshape(np.shape(t))
    outer = sector_area(theta_a, v2) + bdef_area(theta_a, theta, vv, v2)
    res = np.where(vv <= v2, sector_area(theta_a, vv), np.where(vv >= v3, full, outer))
    res = np.clip(res, 0.0, full)
    return _out(res, v)


def bdef_area(theta_a, theta, v, v2):
    """Region between the contours at ``v2`` and ``v`` in a vertex-anchored triangle."""
    return 0.5 * (theta * v - theta_a * v2) + np.sqrt(v * v2) * 0.5 * np.sin(theta_a - theta)


def _norm_area(tri: MonotoneTriangle) -> float:
    return abs(polygon_area(tri.verts_norm))


def case1_area(tri: MonotoneTriangle, v):
    """Sublevel area (original units) of a piece with its minimum at a vertex."""
    if tri.case is not TriangleCase.MIN_AT_VERTEX:
        raise ValueError(f"case1_area needs a {TriangleCase.MIN_AT_VERTEX.value} piece, got {tri.case.value}")
    p = tri.verts_norm
    at_origin = np.flatnonzero(np.all(p == 0.0, axis=1))
    apex = int(at_origin[0]) if len(at_origin) else tri.order[0]
    others = [k for k in range(3) if k != apex]
    res = apex_area(p[others[0]] - p[apex], p[others[1]] - p[apex], v)
    return _out(np.clip(res, 0.0, _norm_area(tri)) / tri.area_factor, v)


def case2_area(tri: MonotoneTriangle, v):
    """Sublevel area (original units) of a piece whose minimum is not a vertex.

    The piece is written as a signed combination of triangles anchored at the
    origin, each of which is handled like the vertex-minimum case; the signs
    come from the orientation of each anchored triangle.
    """
    if tri.verts_norm is None:
        raise ValueError("case2_area needs an elliptic piece")
    p = tri.verts_norm
    v_arr = np.asarray(v, dtype=float)
    total = np.zeros_like(v_arr, dtype=float)
    magnitude = np.zeros_like(v_arr, dtype=float)
    for k in range(3):
        a, b = p[k], p[(k + 1) % 3]
        cross = a[0] * b[1] - a[1] * b[0]
        if cross == 0.0:
            continue
        part = apex_area(a, b, v_arr)
        total = total + np.sign(cross) * part
        magnitude = magnitude + part
    full = _norm_area(tri)
    # a thin piece far from the origin is a small difference of large anchored
    # areas, so the rounding scale is the size of the terms, not of the piece
    slack = 1e-9 * np.maximum(full, magnitude)
    inside = (v_arr >= tri.values[0]) & (v_arr < tri.values[2])
    bad = inside & ((total < -slack) | (total > full + slack))
    if np.any(bad):
        raise NumericalError(f"signed decomposition out of range for piece of triangle {tri.parent}", tri.parent)
    total = np.where(v_arr < tri.values[0], 0.0, np.where(v_arr >= tri.values[2], full, total))
    return _out(np.clip(total, 0.0, full) / tri.area_factor, v)


def _clip(poly: np.ndarray, normal, offset) -> np.ndarray:
    """Sutherland-Hodgman step keeping ``normal . p <= offset``."""
    if len(poly) == 0:
        return poly
    n = np.asarray(normal, dtype=float)
    s = poly @ n - offset
    out = []
    k = len(poly)
    for i in range(k):
        j = (i + 1) % k
        si, sj = s[i], s[j]
        if si <= 0.0:
            out.append(poly[i])
        if (si < 0.0 < sj) or (sj < 0.0 < si):
            t = si / (si - sj)
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out).reshape(-1, 2)


def clip_halfplane(poly, normal, offset) -> np.ndarray:
    return _clip(np.asarray(poly, dtype=float).reshape(-1, 2), normal, offset)


def _strip_area_scalar(prof: StripProfile, tri: np.ndarray, v: float) -> float:
    full = abs(polygon_area(tri))
    w = float(prof.halfwidth(v))
    if w < 0.0:
        return 0.0
    if not np.isfinite(w):
        return full
    n = prof.normal
    poly = _clip(tri, n, prof.center + w)
    poly = _clip(poly, (-n[0], -n[1]), -(prof.center - w))
    return min(abs(polygon_area(poly)), full)


def degenerate_strip_area(q: QuadricModel, triangle, v):
    """Area of the triangle inside the strip ``{q <= v}`` of a parallel-line quadric."""
    if q.strip is None:
        raise ValueError("degenerate_strip_area needs a parallel-line quadric")
    tri = as_triangle(triangle)
    if np.ndim(v) == 0:
        return _strip_area_scalar(q.strip, tri, float(v))
    return np.array([_strip_area_scalar(q.strip, tri, float(x)) for x in np.ravel(v)]).reshape(np.shape(v))


def linear_sublevel_area(coeffs: LinearCoeffs, triangle, v):
    """Area of ``triangle`` where the linear field ``coeffs`` is at most ``v`` (by clipping)."""
    tri = as_triangle(triangle)

    def one(x):
        if coeffs.sx == 0.0 and coeffs.sy == 0.0:
            return abs(polygon_area(tri)) if coeffs.sc <= x else 0.0
        return abs(polygon_area(_clip(tri, (coeffs.sx, coeffs.sy), x - coeffs.sc)))

    if np.ndim(v) == 0:
        return one(float(v))
    return np.array([one(float(x)) for x in np.ravel(v)]).reshape(np.shape(v))


def linear_area_curve(values, area: float, v) -> np.ndarray:
    """Closed-form sublevel area of a linear field from its three vertex values.

    Equivalent to :func:`linear_sublevel_area`, vectorized over ``v``.
    """
    v1, v2, v3 = np.sort(np.asarray(values, dtype=float))
    v = np.asarray(v, dtype=float)
    res = np.zeros_like(v)
    res = np.where(v >= v3, area, res)
    mid = (v >= v1) & (v < v3)
    if np.any(mid):
        with np.errstate(divide="ignore", invalid="ignore"):
            # products of ratios in [0, 1] rather than a ratio of products,
            # which underflows for nearly equal vertex values
            lower = area * ((v - v1) / (v2 - v1)) * ((v - v1) / (v3 - v1))
            upper = area * (1.0 - ((v3 - v) / (v3 - v1)) * ((v3 - v) / (v3 - v2)))
        branch = np.where((v <= v2) & (v2 > v1), lower, upper)
        res = np.where(mid, branch, res)
    return np.clip(res, 0.0, area)


def piece_sublevel_area(tri: MonotoneTriangle, v):
    """Exact quadratic sublevel area of any monotone piece."""
    if tri.case is TriangleCase.DEGENERATE_STRIP:
        return degenerate_strip_area(tri.quadric, tri.verts, v)
    if tri.case is TriangleCase.MIN_AT_VERTEX:
        return case1_area(tri, v)
    return case2_area(tri, v)


def sample_triangle(triangle, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points in a triangle via folded barycentric coordinates."""
    tri = as_triangle(triangle)
    u = rng.random((n, 2))
    fold = u.sum(axis=1) > 1.0
    u[fold] = 1.0 - u[fold]
    return tri[0] + u[:, :1] * (tri[1] - tri[0]) + u[:, 1:] * (tri[2] - tri[0])


def mc_sublevel_area(evaluator, triangle, v, n_samples: int, seed: int = 0, chunk: int = 1 << 16):
    """Monte Carlo estimate of a sublevel area with its binomial standard error.

    ``evaluator`` maps an ``(n, 2)`` array of points to values. Sampling uses
    numpy's PCG64 generator seeded with ``seed``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    tri = as_triangle(triangle)
    area = abs(polygon_area(tri))
    rng = np.random.default_rng(seed)
    hits = 0
    left = int(n_samples)
    while left:
        k = min(left, chunk)
        pts = sample_triangle(tri, k, rng)
        hits += int(np.count_nonzero(np.asarray(evaluator(pts)) <= v))
        left -= k
    frac = hits / n_samples
    return area * frac, area * np.sqrt(frac * (1.0 - frac) / n_samples)
