"""Subdivision of mesh triangles into pieces on which the anisotropy is monotone.

Inserted points (interior minima and edge minima) are shared between
neighbouring triangles: an edge minimum is computed once per undirected edge
from the two endpoint tensors alone, using the lower vertex index as origin,
so both triangles see the bit-identical point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .mesh import LinearCoeffs, TensorMesh, anisotropy, linear_coeffs
from .quadric import NormalizedFrame, QuadricKind, QuadricModel, build_quadric, normalize
from .validation import NumericalError, check_mesh

#: Parametric snap tolerance for inserted edge points (fraction of edge length).
EDGE_SNAP = 1e-10
#: Barycentric margin below which an interior minimum counts as lying on the boundary.
INSIDE_TOL = 1e-12
#: Relative radius below which a normalized vertex is taken to be the minimum itself.
VERTEX_SNAP = 1e-12


class TriangleCase(str, enum.Enum):
    MIN_AT_VERTEX = "MinAtVertex"
    GENERIC = "Generic"
    DEGENERATE_STRIP = "DegenerateStrip"


@dataclass(frozen=True, eq=False)
class MonotoneTriangle:
    """A sub-triangle without interior or edge-interior extremum of the anisotropy.

    ``verts`` are original coordinates in CCW order and ``ids`` the matching
    vertex indices of the owning :class:`SubdividedMesh` (local indices when
    produced by :func:`subdivide_triangle`). ``order`` lists the three corners by
    increasing value and ``values`` holds the values in that order.
    ``verts_norm`` is ``None`` for parallel-line (strip) triangles.
    """

    parent: int
    ids: tuple[int, int, int]
    verts: np.ndarray
    verts_norm: np.ndarray | None
    values: np.ndarray
    order: tuple[int, int, int]
    case: TriangleCase
    area_factor: float
    quadric: QuadricModel

    @property
    def area(self) -> float:
        p = self.verts
        return 0.5 * float((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1]))


def edge_minimum(q: QuadricModel, p, r):
    """Interior minimizer of ``q`` restricted to the segment ``p -> r``.

    Returns ``(point, value)`` when the minimizing parameter lies strictly inside
    the segment (beyond the snap tolerance), else ``None``.
    """
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    d = r - p
    a2 = q.a * d[0] ** 2 + q.b * d[0] * d[1] + q.c * d[1] ** 2
    if a2 <= 0.0:
        return None
    gx, gy = q.gradient(p[0], p[1])
    t = -(gx * d[0] + gy * d[1]) / (2.0 * a2)
    if not EDGE_SNAP < t < 1.0 - EDGE_SNAP:
        return None
    pt = p + t * d
    return pt, float(q(pt[0], pt[1]))


def _w(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.stack([t[..., 0] - t[..., 2], 2.0 * t[..., 1]], axis=-1)


def edge_minimum_tensors(p, r, tp, tr):
    """Edge minimum computed from endpoint positions and tensors only.

    Returns ``(t, point, tensor, value)`` or ``None``. Callers pass the lower
    indexed vertex as ``p`` so that both incident triangles agree exactly.
    """
    wp = _w(tp)
    dw = _w(tr) - wp
    a2 = float(dw @ dw)
    if a2 == 0.0:
        return None
    t = -float(wp @ dw) / a2
    if not EDGE_SNAP < t < 1.0 - EDGE_SNAP:
        return None
    p = np.asarray(p, dtype=float)
    tp = np.asarray(tp, dtype=float)
    pt = p + t * (np.asarray(r, dtype=float) - p)
    tt = tp + t * (np.asarray(tr, dtype=float) - tp)
    return t, pt, tt, anisotropy(tt)


def _inside(pc, tri) -> bool:
    (x1, y1), (x2, y2), (x3, y3) = tri
    den = (y2 - y3) * (x1 - x3) + (x3 - x2) * (y1 - y3)
    b1 = ((y2 - y3) * (pc[0] - x3) + (x3 - x2) * (pc[1] - y3)) / den
    b2 = ((y3 - y1) * (pc[0] - x3) + (x1 - x3) * (pc[1] - y3)) / den
    b3 = 1.0 - b1 - b2
    return min(b1, b2, b3) > INSIDE_TOL


def split_plan(corners, edge_pts, center, key):
    """Connectivity of the monotone pieces of one triangle.

    Parameters
    ----------
    corners : three vertex ids in CCW order.
    edge_pts : three entries, ``edge_pts[k]`` is the id of the minimum on the
        edge ``corners[k] -> corners[k+1]`` or ``None``.
    center : id of the interior minimum, or ``None``.
    key : callable giving a sort key (value, id) for comparing vertices.

    Returns a list of CCW id triples.
    """
    a = list(corners)
    m = list(edge_pts)
    if center is not None:
        ring = []
        for k in range(3):
            ring.append(a[k])
            if m[k] is not None:
                ring.append(m[k])
        return [(center, ring[i], ring[(i + 1) % len(ring)]) for i in range(len(ring))]

    have = [k for k in range(3) if m[k] is not None]
    if not have:
        return [tuple(a)]
    if len(have) == 1:
        k = have[0]
        z = a[(k + 2) % 3]
        return [(a[k], m[k], z), (m[k], a[(k + 1) % 3], z)]
    if len(have) == 2:
        k0 = ({0, 1, 2} - set(have)).pop()  # edge without a minimum: X -> Y
        x, y, z = a[k0], a[(k0 + 1) % 3], a[(k0 + 2) % 3]
        m1, m2 = m[(k0 + 1) % 3], m[(k0 + 2) % 3]  # on Y->Z and Z->X
        tris = [(m1, z, m2)]
        if key(m1) <= key(m2):
            tris += [(x, y, m1), (x, m1, m2)]
        else:
            tris += [(y, m1, m2), (x, y, m2)]
        return tris
    k = min(range(3), key=lambda j: key(m[j]))
    pm, nxt, prv = m[k], m[(k + 1) % 3], m[(k + 2) % 3]
    x, y, z = a[k], a[(k + 1) % 3], a[(k + 2) % 3]
    return [(x, pm, prv), (pm, y, nxt), (pm, nxt, z), (pm, z, prv)]


def _make_piece(parent, ids, pts, values, q, frame, center_id):
    pts = np.array(pts, dtype=float)
    vals = np.array(values, dtype=float)
    order = tuple(int(i) for i in np.lexsort((np.asarray(ids), vals)))
    if frame is None:
        case = TriangleCase.DEGENERATE_STRIP
        norm = None
        factor = 1.0
    else:
        norm = frame.forward(pts)
        factor = frame.area_factor
        r = np.hypot(norm[:, 0], norm[:, 1])
        if center_id is not None and center_id in ids:
            case = TriangleCase.MIN_AT_VERTEX
            norm[ids.index(center_id)] = 0.0
        elif np.min(r) <= VERTEX_SNAP * np.max(r):
            # the minimum already sits on an input vertex
            case = TriangleCase.MIN_AT_VERTEX
            norm[int(np.argmin(r))] = 0.0
        else:
            case = TriangleCase.GENERIC
    for a in (pts, vals) + ((norm,) if norm is not None else ()):
        a.flags.writeable = False
    return MonotoneTriangle(parent, tuple(int(i) for i in ids), pts, norm, vals[list(order)], order, case, factor, q)


def subdivide_triangle(q: QuadricModel, frame: NormalizedFrame | None, triangle, tensors=None, parent: int = 0):
    """Monotone pieces of a single triangle.

    ``triangle`` is a ``(3, 2)`` array (CCW). With ``tensors`` (``(3, 3)``) the
    edge minima and vertex values come from tensor interpolation, otherwise from
    ``q``. Local ids are 0-2 for the corners, then the inserted points.
    """
    tri = np.asarray(triangle, dtype=float)
    if tensors is not None:
        tens = np.asarray(tensors, dtype=float)
        vals = list(anisotropy(tens))
    else:
        tens = None
        vals = [float(q(x, y)) for x, y in tri]
    pts = [p for p in tri]
    edge_ids = [None, None, None]
    for k in range(3):
        i, j = k, (k + 1) % 3
        if tens is not None:
            hit = edge_minimum_tensors(tri[i], tri[j], tens[i], tens[j])
            found = None if hit is None else (hit[1], hit[3])
        else:
            found = edge_minimum(q, tri[i], tri[j])
        if found is not None:
            edge_ids[k] = len(pts)
            pts.append(found[0])
            vals.append(found[1])
    center = None
    if q.kind is QuadricKind.ELLIPTIC_MIN and _inside(q.critical_point, tri):
        center = len(pts)
        pc = np.asarray(q.critical_point, dtype=float)
        pts.append(pc)
        vals.append(anisotropy(_barycentric(pc, tri) @ tens) if tens is not None else float(q(*pc)))
    if q.kind is QuadricKind.ELLIPTIC_MIN and frame is None:
        frame = normalize(q)
    if q.kind is not QuadricKind.ELLIPTIC_MIN:
        frame = None
    plan = split_plan((0, 1, 2), edge_ids, center, lambda i: (vals[i], i))
    return [
        _make_piece(parent, ids, [pts[i] for i in ids], [vals[i] for i in ids], q, frame, center)
        for ids in plan
    ]


@dataclass(frozen=True, eq=False)
class SubdividedMesh:
    """Welded triangulation made of monotone pieces.

    Attributes
    ----------
    vertices, tensors, values : per-vertex arrays; the first ``n_original`` rows
        are the input vertices, followed by inserted points. Tensors at inserted
        points are interpolated from the parent triangle, and ``values`` is the
        anisotropy of each vertex tensor.
    triangles : ``(m, 3)`` CCW id triples, aligned with ``pieces``.
    provenance : parent triangle index of each piece.
    vertex_parent : parent triangle of interior-minimum vertices, -1 otherwise.
    """

    source: TensorMesh
    vertices: np.ndarray
    tensors: np.ndarray
    values: np.ndarray
    triangles: np.ndarray
    provenance: np.ndarray
    vertex_parent: np.ndarray
    pieces: list = field(repr=False)
    quadrics: list = field(repr=False)
    frames: list = field(repr=False)

    @property
    def n_original(self) -> int:
        return self.source.n_vertices

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def as_tensor_mesh(self) -> TensorMesh:
        return TensorMesh(self.vertices, self.triangles, self.tensors)

    def to_dict(self) -> dict:
        d = self.as_tensor_mesh().to_dict()
        d["values"] = self.values.tolist()
        d["provenance"] = self.provenance.tolist()
        d["cases"] = [p.case.value for p in self.pieces]
        return d


def subdivide_mesh(mesh: TensorMesh) -> SubdividedMesh:
    """Split every triangle of ``mesh`` into monotone pieces and weld the result."""
    mesh = check_mesh(mesh)
    verts = [p for p in mesh.vertices]
    tens = [t for t in mesh.tensors]
    vals = list(mesh.vertex_anisotropy())
    vparent = [-1] * len(verts)

    edge_point: dict[tuple[int, int], int | None] = {}
    for i, j in mesh.edges():
        i, j = int(i), int(j)
        hit = edge_minimum_tensors(mesh.vertices[i], mesh.vertices[j], mesh.tensors[i], mesh.tensors[j])
        if hit is None:
            edge_point[(i, j)] = None
            continue
        edge_point[(i, j)] = len(verts)
        verts.append(hit[1])
        tens.append(hit[2])
        vals.append(hit[3])
        vparent.append(-1)

    pieces, tris, prov, quadrics, frames = [], [], [], [], []
    for k, (i, j, l) in enumerate(mesh.triangles.tolist()):
        p = mesh.vertices[[i, j, l]]
        t = mesh.tensors[[i, j, l]]
        c = linear_coeffs(p[0], p[1], p[2], t[0], t[1], t[2])
        q = build_quadric(*(LinearCoeffs(float(c.sx[m]), float(c.sy[m]), float(c.sc[m])) for m in range(3)))
        frame = None
        center = None
        if q.kind is QuadricKind.ELLIPTIC_MIN:
            try:
                frame = normalize(q)
            except NumericalError as exc:
                raise NumericalError(str(exc), triangle=k) from None
            if _inside(q.critical_point, p):
                center = len(verts)
                pc = np.asarray(q.critical_point, dtype=float)
                bary = _barycentric(pc, p)
                tc = bary @ t
                verts.append(pc)
                tens.append(tc)
                vals.append(anisotropy(tc))
                vparent.append(k)
        quadrics.append(q)
        frames.append(frame)
        corners = (i, j, l)
        edge_ids = [edge_point[(min(a, b), max(a, b))] for a, b in ((i, j), (j, l), (l, i))]
        plan = split_plan(corners, edge_ids, center, lambda v: (vals[v], v))
        for ids in plan:
            piece = _make_piece(k, ids, [verts[v] for v in ids], [vals[v] for v in ids], q, frame, center)
            if piece.area <= 0.0:
                if piece.area < -1e-9 * abs(_tri_area(p)):
                    raise NumericalError("inserted point left its parent triangle", triangle=k)
                continue
            pieces.append(piece)
            tris.append(ids)
            prov.append(k)

    def frozen(a, dtype):
        a = np.asarray(a, dtype=dtype)
        a.flags.writeable = False
        return a

    return SubdividedMesh(
        source=mesh,
        vertices=frozen(verts, float).reshape(-1, 2),
        tensors=frozen(tens, float).reshape(-1, 3),
        values=frozen(vals, float),
        triangles=frozen(tris, np.int64).reshape(-1, 3),
        provenance=frozen(prov, np.int64),
        vertex_parent=frozen(vparent, np.int64),
        pieces=pieces,
        quadrics=quadrics,
        frames=frames,
    )


def _tri_area(p) -> float:
    return 0.5 * float((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1]))


def _barycentric(pt, tri) -> np.ndarray:
    (x1, y1), (x2, y2), (x3, y3) = tri
    den = (y2 - y3) * (x1 - x3) + (x3 - x2) * (y1 - y3)
    b1 = ((y2 - y3) * (pt[0] - x3) + (x3 - x2) * (pt[1] - y3)) / den
    b2 = ((y3 - y1) * (pt[0] - x3) + (x1 - x3) * (pt[1] - y3)) / den
    return np.array([b1, b2, 1.0 - b1 - b2])
