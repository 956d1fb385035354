"""Per-triangle quadratic model of the anisotropy and its normalizing frame.

With linearly interpolated components the vector ``w = (e - g, 2 f)`` is an
affine function of position, so the anisotropy ``|w|**2`` is a quadratic
``A x^2 + B xy + C y^2 + D x + E y + F`` whose Hessian is positive
semidefinite. It either has a single zero-valued minimum with elliptic
contours, or its minimum is attained along a line and the contours are pairs
of parallel lines.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .mesh import LinearCoeffs, TensorMesh, tensor_field_coeffs
from .validation import NoCriticalPointError, NumericalError

_EPS = np.finfo(float).eps


class QuadricKind(str, enum.Enum):
    ELLIPTIC_MIN = "EllipticMin"
    DEGENERATE_PARALLEL = "DegenerateParallel"


@dataclass(frozen=True)
class StripProfile:
    """1D form ``slope2 * (normal . p - center)**2 + floor`` of a parallel-line quadric.

    ``slope2 == 0`` means the quadric is constant (equal to ``floor``).
    """

    normal: tuple[float, float]
    slope2: float
    center: float
    floor: float

    def __call__(self, x, y):
        t = self.normal[0] * np.asarray(x) + self.normal[1] * np.asarray(y)
        return self.slope2 * (t - self.center) ** 2 + self.floor

    def halfwidth(self, v):
        """Half width of the strip ``{q <= v}`` along ``normal``; negative when empty."""
        v = np.asarray(v, dtype=float)
        if self.slope2 <= 0.0:
            return np.where(v >= self.floor, np.inf, -1.0)
        d = v - self.floor
        return np.where(d >= 0.0, np.sqrt(np.maximum(d, 0.0) / self.slope2), -1.0)


@dataclass(frozen=True)
class QuadricModel:
    """Coefficients of ``A x^2 + B xy + C y^2 + D x + E y + F`` plus derived data.

    ``h`` is the Hessian determinant ``4AC - B^2``. For models built from tensor
    coefficients it is evaluated as ``16 (f_x u_y - f_y u_x)^2`` with
    ``u = e - g``, which is the same quantity but never negative in floating
    point. ``e2`` and ``f2`` are the ``E`` and ``F`` coefficients.
    """

    a: float
    b: float
    c: float
    d: float
    e2: float
    f2: float
    h: float
    i_inv: float
    kind: QuadricKind
    critical_point: tuple[float, float] | None = None
    strip: StripProfile | None = None

    @property
    def scale(self) -> float:
        return max(abs(self.a), abs(self.b), abs(self.c), 1.0)

    @property
    def eps_h(self) -> float:
        return hessian_tolerance(self.a, self.b, self.c)

    @property
    def eps_i(self) -> float:
        a, b, c, d, e, f = self.coefficients
        return self.eps_h * max(abs(f), 1.0) + 64 * _EPS * (abs(b * d * e) + a * e * e + c * d * d)

    @property
    def coefficients(self) -> tuple[float, float, float, float, float, float]:
        return self.a, self.b, self.c, self.d, self.e2, self.f2

    def hessian_det(self) -> float:
        """``4AC - B^2`` straight from the coefficients."""
        return 4.0 * self.a * self.c - self.b * self.b

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.a * x * x + self.b * x * y + self.c * y * y + self.d * x + self.e2 * y + self.f2

    def gradient(self, x, y):
        return (2 * self.a * x + self.b * y + self.d, 2 * self.c * y + self.b * x + self.e2)

    @classmethod
    def from_coefficients(cls, a, b, c, d, e, f) -> "QuadricModel":
        """Model for arbitrary coefficients (no tensor provenance)."""
        a, b, c, d, e, f = map(float, (a, b, c, d, e, f))
        h = 4.0 * a * c - b * b
        if a < 0 or c < 0 or h < -1e-12 * max(a * c, b * b, 1.0):
            raise ValueError("only convex quadrics (positive semidefinite Hessian) are supported")
        return _finish(a, b, c, d, e, f, max(h, 0.0))


def hessian_tolerance(a, b, c) -> float:
    """Threshold separating the elliptic (H > tol) and parallel-line branches."""
    return 1e-10 * max(a * c, b * b, 1.0)


def _finish(a, b, c, d, e, f, h) -> QuadricModel:
    i_inv = b * d * e - a * e * e - c * d * d
    if h > hessian_tolerance(a, b, c):
        xc = (-2.0 * c * d + b * e) / h
        yc = (-2.0 * a * e + b * d) / h
        return QuadricModel(a, b, c, d, e, f, h, i_inv, QuadricKind.ELLIPTIC_MIN, (xc, yc))
    return QuadricModel(a, b, c, d, e, f, h, i_inv, QuadricKind.DEGENERATE_PARALLEL, None, _strip_profile(a, b, c, d, e, f))


def _strip_profile(a, b, c, d, e, f) -> StripProfile:
    lam = a + c
    if lam <= 64 * _EPS * max(abs(f), 1.0):
        return StripProfile((1.0, 0.0), 0.0, 0.0, max(f, 0.0))
    # the rank-one M = lam * n n^T; pick the better-conditioned row for n
    r1 = np.array([a, 0.5 * b])
    r2 = np.array([0.5 * b, c])
    n = r1 if r1 @ r1 >= r2 @ r2 else r2
    n = n / np.hypot(*n)
    k = d * n[0] + e * n[1]
    center = -k / (2.0 * lam)
    floor = max(f - k * k / (4.0 * lam), 0.0)
    return StripProfile((float(n[0]), float(n[1])), float(lam), float(center), float(floor))


def build_quadric(ec: LinearCoeffs, fc: LinearCoeffs, gc: LinearCoeffs) -> QuadricModel:
    """Quadratic anisotropy model from the linear coefficients of ``e``, ``f``, ``g``."""
    ux, uy, uc = ec.sx - gc.sx, ec.sy - gc.sy, ec.sc - gc.sc
    fx, fy, fcc = fc.sx, fc.sy, fc.sc
    a = ux * ux + 4.0 * fx * fx
    b = 2.0 * (ux * uy + 4.0 * fx * fy)
    c = uy * uy + 4.0 * fy * fy
    d = 2.0 * (ux * uc + 4.0 * fx * fcc)
    e = 2.0 * (uy * uc + 4.0 * fy * fcc)
    f = uc * uc + 4.0 * fcc * fcc
    cross = fx * uy - fy * ux
    return _finish(a, b, c, d, e, f, 16.0 * cross * cross)


def quadric_for_triangle(mesh: TensorMesh, k: int) -> QuadricModel:
    return build_quadric(*tensor_field_coeffs(mesh, k))


def classify(q: QuadricModel) -> QuadricKind:
    return QuadricKind.ELLIPTIC_MIN if q.h > q.eps_h else QuadricKind.DEGENERATE_PARALLEL


def critical_point(q: QuadricModel) -> tuple[float, float]:
    if classify(q) is not QuadricKind.ELLIPTIC_MIN:
        raise NoCriticalPointError("parallel-line quadric has no isolated critical point")
    a, b, c, d, e, _ = q.coefficients
    return (-2.0 * c * d + b * e) / q.h, (-2.0 * a * e + b * d) / q.h


def translated_constant(q: QuadricModel) -> float:
    """Constant term left after moving the minimum to the origin."""
    if classify(q) is not QuadricKind.ELLIPTIC_MIN:
        raise NoCriticalPointError("parallel-line quadric has no isolated critical point")
    return q.f2 + q.i_inv / q.h


@dataclass(frozen=True)
class NormalizedFrame:
    """Affine map taking an elliptic quadric to ``x_s^2 + y_s^2``.

    ``forward(p) = diag(sqrt(scales)) @ rotation.T @ (p - translation)``. The
    rotation columns are the eigenvectors of ``M = [[A, B/2], [B/2, C]]``,
    largest eigenvalue first, with determinant +1.
    """

    translation: tuple[float, float]
    rotation: np.ndarray
    scales: tuple[float, float]

    @property
    def area_factor(self) -> float:
        return float(np.sqrt(self.scales[0] * self.scales[1]))

    @property
    def _linear(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.scales))[:, None] * self.rotation.T

    def forward(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float) - np.asarray(self.translation)
        return p @ self._linear.T

    def inverse(self, points) -> np.ndarray:
        s = np.asarray(points, dtype=float) / np.sqrt(np.asarray(self.scales))
        return s @ self.rotation.T + np.asarray(self.translation)

    def min_stretch(self) -> float:
        """Smallest singular value of the forward map."""
        return float(np.sqrt(min(self.scales)))


def normalize(q: QuadricModel) -> NormalizedFrame:
    if classify(q) is not QuadricKind.ELLIPTIC_MIN:
        raise NoCriticalPointError("parallel-line quadric cannot be normalized to circles")
    a, hb, c = q.a, 0.5 * q.b, q.c
    lam1 = 0.5 * (a + c) + float(np.hypot(0.5 * (a - c), hb))
    lam2 = 0.25 * q.h / lam1  # det(M) / lam1, avoids cancellation
    if not (lam1 > 0.0 and lam2 > 0.0):
        raise NumericalError(f"non-positive eigenvalue of the quadratic form ({lam1}, {lam2})")
    if lam1 - lam2 <= 1e-12 * lam1:
        rot = np.eye(2)
    else:
        v1 = np.array([hb, lam1 - a])
        v2 = np.array([lam1 - c, hb])
        v = v1 if v1 @ v1 >= v2 @ v2 else v2
        v = v / np.hypot(*v)
        rot = np.array([[v[0], -v[1]], [v[1], v[0]]])
    rot.flags.writeable = False
    xc, yc = q.critical_point if q.critical_point is not None else critical_point(q)
    return NormalizedFrame((float(xc), float(yc)), rot, (float(lam1), float(lam2)))


def mesh_quadrics(mesh: TensorMesh) -> list[QuadricModel]:
    return [quadric_for_triangle(mesh, k) for k in range(mesh.n_triangles)]


QUADRIC_CSV_HEADER = ["tri", "A", "B", "C", "D", "E", "F", "H", "I", "kind", "xc", "yc"]


def write_quadrics_csv(quadrics, path) -> None:
    """Debug dump, one row per triangle."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(QUADRIC_CSV_HEADER)
        for k, q in enumerate(quadrics):
            xc, yc = q.critical_point if q.critical_point is not None else ("", "")
            w.writerow([k, *(repr(x) for x in q.coefficients), repr(q.h), repr(q.i_inv), q.kind.value,
                        repr(xc) if xc != "" else "", repr(yc) if yc != "" else ""])
