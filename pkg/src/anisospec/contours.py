"""Isocontours of the anisotropy for the three interpolation modes.

Modes ``a`` and ``b`` use marching triangles on the respective piecewise
linear mesh. Mode ``c`` follows the exact quadratic: crossings on each edge are
roots of ``|w_i + t (w_j - w_i)|^2 = v`` with ``w = (e - g, 2 f)``, and inside
an elliptic piece the contour is a circular arc in the normalized frame,
sampled to a chordal tolerance and mapped back. Crossings are keyed by the
global edge they lie on, so segments of neighbouring triangles share endpoints
exactly and stitch into polylines.

Vertex classification uses ``value >= isovalue`` as "above" throughout.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .mesh import TensorMesh
from .subdivision import SubdividedMesh, subdivide_mesh
from .validation import check_workers

#: Default chordal tolerance, relative to the bounding-box diagonal.
CHORDAL_RTOL = 1e-3


@dataclass(frozen=True, eq=False)
class ContourSet:
    """Polylines of one level set.

    ``provenance[k]`` lists, for every segment of polyline ``k``, the index of
    the triangle that produced it (input triangle for mode ``a``, monotone
    piece otherwise).
    """

    isovalue: float
    mode: str
    polylines: list
    closed: list
    provenance: list

    def __len__(self) -> int:
        return len(self.polylines)

    @property
    def n_points(self) -> int:
        return int(sum(len(p) for p in self.polylines))

    def points(self) -> np.ndarray:
        if not self.polylines:
            return np.empty((0, 2))
        return np.concatenate(self.polylines, axis=0)


def _pl_crossing(pos, val, a, b, iso):
    """Crossing on edge ``(a, b)`` (``a`` below, ``b`` above) computed from the sorted key."""
    i, j = (a, b) if a < b else (b, a)
    lo, hi = (i, j) if val[i] < iso else (j, i)
    t = (iso - val[lo]) / (val[hi] - val[lo])
    return pos[lo] + t * (pos[hi] - pos[lo])


def _pl_segments(pos, val, tris, ids, iso):
    segs = []
    for tid, tri in zip(ids, tris):
        below = [val[v] < iso for v in tri]
        if all(below) or not any(below):
            continue
        ends = []
        for k in range(3):
            a, b = tri[k], tri[(k + 1) % 3]
            if below[k] != below[(k + 1) % 3]:
                ends.append(((min(a, b), max(a, b), 0), _pl_crossing(pos, val, a, b, iso)))
        (k0, p0), (k1, p1) = ends
        segs.append((k0, k1, np.array([p0, p1]), tid))
    return segs


def _w(t):
    t = np.asarray(t, dtype=float)
    return np.stack([t[..., 0] - t[..., 2], 2.0 * t[..., 1]], axis=-1)


def edge_roots(p_a, p_b, t_a, t_b, iso, below_a: bool, below_b: bool):
    """Contour crossings of the quadratic along the segment from ``a`` to ``b``.

    Returns a list of parameters in ``[0, 1]`` measured from ``a``. The count is
    1 when exactly one end is below, 0 or 2 when both are above and 0 when both
    are below (the field is convex along any segment).
    """
    wa, wb = _w(t_a), _w(t_b)
    d = wb - wa
    dd = float(d @ d)
    if dd == 0.0 or (below_a and below_b):
        return []
    bh = float(wa @ d)
    c = float(wa @ wa) - iso
    disc = bh * bh - dd * c
    if disc < 0.0:
        disc = 0.0
        if below_a == below_b:
            return []
    sq = np.sqrt(disc)
    qq = -(bh + np.copysign(sq, bh)) if bh != 0.0 else sq
    r = sorted([qq / dd, c / qq] if qq != 0.0 else [0.0, 0.0])
    t1, t2 = (min(max(x, 0.0), 1.0) for x in r)
    if below_a != below_b:
        return [t2] if below_a else [t1]
    tmin = -bh / dd
    if disc > 0.0 and 0.0 < tmin < 1.0 and t1 < t2:
        return [t1, t2]
    return []


def _edge_points(sub, a, b, iso, below):
    i, j = (a, b) if a < b else (b, a)
    ts = edge_roots(sub.vertices[i], sub.vertices[j], sub.tensors[i], sub.tensors[j], iso, below[i], below[j])
    p, d = sub.vertices[i], sub.vertices[j] - sub.vertices[i]
    return [((i, j, k), p + t * d) for k, t in enumerate(ts)]


def _arc_points(frame, pa, pb, radius, tol):
    """Interior points of the arc from ``pa`` to ``pb`` (both on the contour)."""
    na, nb = frame.forward(np.array([pa, pb]))
    fa = np.arctan2(na[1], na[0])
    delta = float(np.arctan2(na[0] * nb[1] - na[1] * nb[0], na @ nb))
    tol_n = tol * frame.min_stretch()
    if radius <= 0.0:
        return np.empty((0, 2))
    step = 2.0 * np.arccos(max(1.0 - tol_n / radius, -1.0))
    step = min(step, np.pi / 4)
    n = int(np.ceil(abs(delta) / step)) if step > 0 else 1
    if n <= 1:
        return np.empty((0, 2))
    ang = fa + delta * np.arange(1, n) / n
    circ = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return frame.inverse(circ)


def _quadratic_segments(sub: SubdividedMesh, idx, iso, tol):
    below = sub.values < iso
    radius = float(np.sqrt(iso)) if iso > 0 else 0.0
    segs = []
    for pid in idx:
        piece = sub.pieces[pid]
        ids = sub.triangles[pid].tolist()
        hits = []
        for k in range(3):
            hits += _edge_points(sub, ids[k], ids[(k + 1) % 3], iso, below)
        if len(hits) < 2:
            continue
        frame = sub.frames[piece.parent]
        pts = np.array([h[1] for h in hits])
        if frame is not None:
            centroid = frame.forward(piece.verts.mean(axis=0))
            npts = frame.forward(pts)
            order = np.argsort(np.arctan2(centroid[0] * npts[:, 1] - centroid[1] * npts[:, 0], npts @ centroid),
                               kind="stable")
        else:
            prof = piece.quadric.strip
            n = np.asarray(prof.normal)
            side = np.sign(pts @ n - prof.center)
            along = pts @ np.array([-n[1], n[0]])
            order = np.lexsort((along, side))
        for s in range(0, len(order) - 1, 2):
            ka, pa = hits[order[s]]
            kb, pb = hits[order[s + 1]]
            mid = _arc_points(frame, pa, pb, radius, tol) if frame is not None else np.empty((0, 2))
            segs.append((ka, kb, np.vstack([pa, mid, pb]), pid))
    return segs


def _stitch(segs):
    incident = defaultdict(list)
    for s, (k0, k1, _, _) in enumerate(segs):
        incident[k0].append(s)
        incident[k1].append(s)
    used = [False] * len(segs)
    lines, closed, prov = [], [], []

    def walk(s, key):
        start = key
        chain, tids = [], []
        while True:
            k0, k1, pts, tid = segs[s]
            if k0 != key:
                pts = pts[::-1]
                k0, k1 = k1, k0
            chain.append(pts if not chain else pts[1:])
            tids.append(tid)
            used[s] = True
            key = k1
            nxt = [t for t in incident[key] if not used[t]]
            if not nxt:
                break
            s = nxt[0]
        lines.append(np.concatenate(chain, axis=0))
        closed.append(key == start and len(tids) > 1)
        prov.append(tids)

    for key in sorted(k for k, v in incident.items() if len(v) == 1):
        s = incident[key][0]
        if not used[s]:
            walk(s, key)
    for s in range(len(segs)):
        if not used[s]:
            walk(s, segs[s][0])
    return lines, closed, prov


def _chunks(n, parts):
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [range(bounds[i], bounds[i + 1]) for i in range(parts) if bounds[i + 1] > bounds[i]]


def _segment_task(task):
    kind, data, idx, iso, tol = task
    if kind == "pl":
        pos, val, tris = data
        return _pl_segments(pos, val, tris[idx.start : idx.stop].tolist(), list(idx), iso)
    return _quadratic_segments(data, idx, iso, tol)


def extract_contours(mesh, mode, isovalue: float, chordal_tol: float | None = None, n_jobs: int = 1) -> ContourSet:
    """Level set ``{sqanis = isovalue}`` as stitched polylines.

    Parameters
    ----------
    mesh : TensorMesh or SubdividedMesh
    mode : {"a", "b", "c"}
    isovalue : float, must be non-negative
    chordal_tol : float, optional
        Maximum distance between an arc and its polyline in mode ``c``;
        defaults to ``1e-3`` times the bounding-box diagonal.
    n_jobs : int
        Worker processes for the per-triangle pass; the result does not
        depend on it.
    """
    mode = str(getattr(mode, "value", mode))
    if mode not in ("a", "b", "c"):
        raise ValueError(f"unknown mode {mode!r}")
    iso = float(isovalue)
    if not np.isfinite(iso) or iso < 0.0:
        raise ValueError("isovalue must be finite and non-negative")
    n_jobs = check_workers(n_jobs)
    if isinstance(mesh, SubdividedMesh):
        sub = mesh
        source = mesh.source
    elif isinstance(mesh, TensorMesh):
        source = mesh
        sub = None if mode == "a" else subdivide_mesh(mesh)
    else:
        raise TypeError(f"expected a TensorMesh or SubdividedMesh, got {type(mesh).__name__}")
    tol = CHORDAL_RTOL * source.bbox_diagonal() if chordal_tol is None else float(chordal_tol)

    if mode == "a":
        data = (source.vertices, source.vertex_anisotropy(), source.triangles)
        n, kind = source.n_triangles, "pl"
    elif mode == "b":
        data = (sub.vertices, sub.values, sub.triangles)
        n, kind = sub.n_triangles, "pl"
    else:
        data = sub
        n, kind = sub.n_triangles, "quad"
    if iso == 0.0:
        # nothing lies strictly below zero; degenerate points are not traced
        return ContourSet(iso, mode, [], [], [])
    tasks = [(kind, data, idx, iso, tol) for idx in _chunks(n, n_jobs)]
    if n_jobs == 1 or len(tasks) <= 1:
        parts = [_segment_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(n_jobs, len(tasks))) as pool:
            parts = list(pool.map(_segment_task, tasks))
    segs = [s for part in parts for s in part]
    lines, closed, prov = _stitch(segs)
    return ContourSet(iso, mode, lines, closed, prov)


def contour_rows(contour_sets):
    """``(contour_id, x, y)`` rows with ids running over all sets in order."""
    rows = []
    cid = 0
    for cs in contour_sets:
        for line in cs.polylines:
            rows += [(cid, float(x), float(y)) for x, y in line]
            cid += 1
    return rows


def write_contours_csv(contour_sets, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["contour_id", "x", "y"])
        for cid, x, y in contour_rows(contour_sets):
            w.writerow([cid, repr(x), repr(y)])
