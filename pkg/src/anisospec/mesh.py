"""Triangulated 2D meshes carrying one symmetric 2x2 tensor per vertex.

A tensor ``((e, f), (f, g))`` is stored as the row ``[e, f, g]``. Tensor
components are interpolated linearly inside each triangle, which makes the
squared eigenvalue difference a quadratic function there.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .validation import DegenerateTriangleError

#: Triangles with |signed area| below this fraction of the squared bounding-box
#: diagonal are rejected as degenerate.
AREA_RTOL = 1e-12


class Tensor2S(NamedTuple):
    """Symmetric 2x2 tensor ``((e, f), (f, g))``."""

    e: float
    f: float
    g: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.e, self.f], [self.f, self.g]])

    def eigenvalues(self) -> tuple[float, float]:
        mean = 0.5 * (self.e + self.g)
        rad = float(np.hypot(0.5 * (self.e - self.g), self.f))
        return mean + rad, mean - rad


class LinearCoeffs(NamedTuple):
    """Coefficients of ``s(x, y) = sx * x + sy * y + sc``."""

    sx: float
    sy: float
    sc: float

    def __call__(self, x, y):
        return self.sx * np.asarray(x) + self.sy * np.asarray(y) + self.sc


def anisotropy(t) -> np.ndarray | float:
    """Squared eigenvalue difference ``(e - g)**2 + 4 f**2``.

    Accepts a :class:`Tensor2S` or any array whose last axis is ``(e, f, g)``.
    """
    a = np.asarray(t, dtype=float)
    u = a[..., 0] - a[..., 2]
    f = a[..., 1]
    out = u * u + 4.0 * f * f
    return float(out) if out.ndim == 0 else out


def signed_area(p1, p2, p3) -> float:
    return 0.5 * ((p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1]))


def polygon_area(poly) -> float:
    """Signed shoelace area of a closed polygon given as a ``(k, 2)`` array."""
    p = np.asarray(poly, dtype=float)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _bbox_diag2(points) -> float:
    p = np.asarray(points, dtype=float)
    span = p.max(axis=0) - p.min(axis=0)
    return float(span @ span)


def linear_coeffs(p1, p2, p3, s1, s2, s3) -> LinearCoeffs:
    """Coefficients of the linear interpolant through three samples.

    ``s1, s2, s3`` may be scalars or equally shaped arrays (several fields over
    the same triangle); the returned fields then have that shape.
    """
    (x1, y1), (x2, y2), (x3, y3) = p1, p2, p3
    den = (y2 - y3) * (x1 - x3) + (x3 - x2) * (y1 - y3)
    if abs(den) <= 2.0 * AREA_RTOL * _bbox_diag2([p1, p2, p3]) or den == 0.0:
        raise DegenerateTriangleError(f"degenerate triangle {p1}, {p2}, {p3}")
    s1, s2, s3 = (np.asarray(s, dtype=float) for s in (s1, s2, s3))
    sx = ((y2 - y3) * s1 + (y3 - y1) * s2 + (y1 - y2) * s3) / den
    sy = ((x3 - x2) * s1 + (x1 - x3) * s2 + (x2 - x1) * s3) / den
    sc = ((x2 * y3 - x3 * y2) * s1 + (x3 * y1 - x1 * y3) * s2 + (x1 * y2 - x2 * y1) * s3) / den
    if sx.ndim == 0:
        return LinearCoeffs(float(sx), float(sy), float(sc))
    return LinearCoeffs(sx, sy, sc)


@dataclass(frozen=True, eq=False)
class TensorMesh:
    """Triangulated domain with a symmetric tensor per vertex.

    Arrays are copied and made read-only on construction. Validation is separate
    (:func:`validate_mesh`) so that malformed input can be reported in full.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    tensors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 2)
        t = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        s = np.array(self.tensors, dtype=float).reshape(-1, 3)
        for a in (v, t, s):
            a.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "tensors", s)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def vertex_anisotropy(self) -> np.ndarray:
        return anisotropy(self.tensors)

    def triangle_points(self, k: int) -> np.ndarray:
        return self.vertices[self.triangles[k]]

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def total_area(self) -> float:
        return float(np.sum(np.abs(self.triangle_areas())))

    def bbox_diagonal(self) -> float:
        return float(np.sqrt(_bbox_diag2(self.vertices))) if self.n_vertices else 0.0

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted ``(i, j)`` rows, i < j."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def to_dict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "tensors": self.tensors.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TensorMesh":
        try:
            return cls(d["vertices"], d["triangles"], d["tensors"])
        except KeyError as exc:
            raise ValueError(f"mesh mapping lacks key {exc.args[0]!r}") from None


def tensor_field_coeffs(mesh: TensorMesh, triangle_index: int):
    """Linear coefficients of the ``e``, ``f`` and ``g`` components on one triangle."""
    i, j, k = mesh.triangles[triangle_index]
    p = mesh.vertices
    t = mesh.tensors
    c = linear_coeffs(p[i], p[j], p[k], t[i], t[j], t[k])
    return tuple(LinearCoeffs(float(c.sx[m]), float(c.sy[m]), float(c.sc[m])) for m in range(3))


@dataclass(frozen=True)
class ValidationIssue:
    kind: str  # "shape" | "index" | "degenerate" | "nonfinite"
    message: str
    index: int | None = None

    def __str__(self):
        where = f" [{self.index}]" if self.index is not None else ""
        return f"{self.kind}{where}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    issues: list = field(default_factory=list)
    mesh: TensorMesh | None = None
    n_reoriented: int = 0

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_mesh(mesh: TensorMesh) -> ValidationReport:
    """Check indices, finiteness and triangle areas; reorient triangles CCW.

    The returned report holds the reoriented mesh when no issue was found.
    """
    issues = []
    v, t, s = mesh.vertices, mesh.triangles, mesh.tensors
    n = len(v)
    if len(s) != n:
        issues.append(ValidationIssue("shape", f"{len(s)} tensors for {n} vertices"))
    if len(t) == 0:
        issues.append(ValidationIssue("shape", "mesh has no triangles"))
    for k in np.flatnonzero(~np.all(np.isfinite(v), axis=1)):
        issues.append(ValidationIssue("nonfinite", "vertex coordinate is not finite", int(k)))
    for k in np.flatnonzero(~np.all(np.isfinite(s), axis=1)):
        issues.append(ValidationIssue("nonfinite", "tensor component is not finite", int(k)))
    bad_idx = np.any((t < 0) | (t >= n), axis=1) if len(t) else np.zeros(0, bool)
    for k in np.flatnonzero(bad_idx):
        issues.append(ValidationIssue("index", f"vertex index out of range in {t[k].tolist()}", int(k)))
    for k in np.flatnonzero(~bad_idx):
        if len(set(t[k].tolist())) < 3:
            issues.append(ValidationIssue("degenerate", f"repeated vertex in {t[k].tolist()}", int(k)))
    if issues:
        return ValidationReport(issues)

    areas = mesh.triangle_areas()
    tol = AREA_RTOL * _bbox_diag2(v)
    for k in np.flatnonzero(np.abs(areas) <= tol):
        issues.append(ValidationIssue("degenerate", f"zero-area triangle {t[k].tolist()}", int(k)))
    if issues:
        return ValidationReport(issues)

    cw = areas < 0
    if np.any(cw):
        t = t.copy()
        t[cw] = t[cw][:, [0, 2, 1]]
        mesh = TensorMesh(v, t, s)
    return ValidationReport([], mesh, int(np.count_nonzero(cw)))


# -- file formats ------------------------------------------------------------


def load_mesh(path) -> TensorMesh:
    """Read a mesh from ``.json`` (vertex/triangle/tensor lists) or ``.csv`` (grid)."""
    path = os.fspath(path)
    if path.lower().endswith(".csv"):
        return load_grid_csv(path)
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return TensorMesh.from_dict(data)


def save_mesh(mesh: TensorMesh, path, extra: dict | None = None) -> None:
    d = mesh.to_dict()
    if extra:
        d.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(d, fh)
        fh.write("\n")


def grid_triangles(nx: int, ny: int) -> np.ndarray:
    """Triangulate an ``nx`` by ``ny`` vertex grid (row-major, x fastest).

    Every quad is split along the same diagonal, from its lower-left to its
    upper-right corner.
    """
    tris = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            v00 = j * nx + i
            v10 = v00 + 1
            v01 = v00 + nx
            v11 = v01 + 1
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return np.array(tris, dtype=np.int64).reshape(-1, 3)


def load_grid_csv(path) -> TensorMesh:
    """Read tensors sampled on a rectilinear grid from CSV with header ``x,y,e,f,g``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    missing = {"x", "y", "e", "f", "g"} - set(rows[0])
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    data = np.array([[float(r[c]) for c in ("x", "y", "e", "f", "g")] for r in rows])
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    nx, ny = len(xs), len(ys)
    if nx < 2 or ny < 2 or nx * ny != len(data):
        raise ValueError(f"{path}: samples do not form a complete grid ({nx} x {ny} for {len(data)} rows)")
    ix = np.searchsorted(xs, data[:, 0])
    iy = np.searchsorted(ys, data[:, 1])
    slot = iy * nx + ix
    if len(np.unique(slot)) != len(slot):
        raise ValueError(f"{path}: duplicate grid locations")
    tensors = np.empty((nx * ny, 3))
    tensors[slot] = data[:, 2:]
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])
    return TensorMesh(vertices, grid_triangles(nx, ny), tensors)


# -- synthetic data ----------------------------------------------------------


def _tensor_from_eigen(lam, mu, angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([lam * c * c + mu * s * s, (lam - mu) * c * s, lam * s * s + mu * c * c])


def generate_synthetic(
    grid_n: int = 5,
    seed: int = 0,
    eigenvalue_profile: tuple[float, float] | Callable = (2.0, 1.0),
    perturb_directions: bool = False,
    base_angles=None,
    angle_spread: float = np.pi,
    max_tries: int = 1000,
) -> TensorMesh:
    """Tensors on a regular ``grid_n`` x ``grid_n`` grid over ``[0, grid_n - 1]^2``.

    Parameters
    ----------
    eigenvalue_profile : (lam, mu) or callable
        Constant eigenvalues, or ``f(x, y) -> (lam, mu)`` per vertex.
    perturb_directions : bool
        Rotate each vertex's eigenvectors by a random angle drawn uniformly from
        ``angle_spread`` around ``base_angles`` (default 0). The eigenvalues are
        kept, and each rotation is redrawn until the floating-point anisotropy of
        the rotated tensor equals that of the unrotated one bit for bit, so that
        every ensemble member has exactly the same vertex values.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    rng = np.random.default_rng(seed)
    coords = np.arange(grid_n, dtype=float)
    gx, gy = np.meshgrid(coords, coords)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])
    n = len(vertices)
    if callable(eigenvalue_profile):
        eig = np.array([eigenvalue_profile(x, y) for x, y in vertices], dtype=float)
    else:
        eig = np.broadcast_to(np.asarray(eigenvalue_profile, dtype=float), (n, 2))
    base = np.zeros(n) if base_angles is None else np.broadcast_to(np.asarray(base_angles, float), (n,))

    tensors = np.empty((n, 3))
    for k in range(n):
        lam, mu = eig[k]
        t = _tensor_from_eigen(lam, mu, base[k])
        if perturb_directions:
            target = anisotropy(_tensor_from_eigen(lam, mu, 0.0))
            for _ in range(max_tries):
                cand = _tensor_from_eigen(lam, mu, base[k] + angle_spread * (rng.random() - 0.5))
                if anisotropy(cand) == target:
                    t = cand
                    break
            else:
                raise RuntimeError(f"could not draw an exactly anisotropy-preserving rotation at vertex {k}")
        tensors[k] = t
    return TensorMesh(vertices, grid_triangles(grid_n, grid_n), tensors)


def random_mesh(n_side: int, seed: int = 0, jitter: float = 0.25, scale: float = 1.0) -> TensorMesh:
    """Jittered-grid mesh with tensor components uniform in ``[-scale, scale]``.

    Produces ``2 * (n_side - 1)**2`` triangles; handy for tests and benchmarks.
    """
    rng = np.random.default_rng(seed)
    coords = np.arange(n_side, dtype=float)
    gx, gy = np.meshgrid(coords, coords)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])
    vertices = vertices + rng.uniform(-jitter, jitter, vertices.shape)
    tensors = rng.uniform(-scale, scale, (len(vertices), 3))
    return TensorMesh(vertices, grid_triangles(n_side, n_side), tensors)
