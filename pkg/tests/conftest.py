import numpy as np
import pytest

from anisospec.mesh import TensorMesh, anisotropy, generate_synthetic, random_mesh


def bowl_tensors(points):
    """Tensors whose anisotropy is exactly ``x^2 + y^2`` (``e - g = x``, ``2 f = y``)."""
    p = np.asarray(points, dtype=float)
    return np.column_stack([p[:, 0] / 2, p[:, 1] / 2, -p[:, 0] / 2])


def barycentric_rows(points, tri):
    tri = np.asarray(tri, dtype=float)
    m = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    uv = np.linalg.solve(m, (np.asarray(points, dtype=float) - tri[0]).T).T
    return np.column_stack([1.0 - uv.sum(axis=1), uv])


def tensor_evaluator(tri, tensors):
    """Anisotropy of linearly interpolated tensors, evaluated pointwise (MC oracle)."""
    tens = np.asarray(tensors, dtype=float)
    return lambda pts: anisotropy(barycentric_rows(pts, tri) @ tens)


def ray_monotone(piece, evaluate, n_rays=64, n_steps=65, seed=0, rtol=1e-9):
    """Sample ``evaluate`` along rays from the lowest corner to random boundary points."""
    rng = np.random.default_rng(seed)
    p = piece.verts
    lo = piece.order[0]
    others = [k for k in range(3) if k != lo]
    scale = max(float(np.max(np.abs(piece.values))), 1.0)
    t = np.linspace(0.0, 1.0, n_steps)[:, None]
    for _ in range(n_rays):
        s = rng.random()
        target = (1 - s) * p[others[0]] + s * p[others[1]]
        vals = evaluate(p[lo] + t * (target - p[lo]))
        if np.any(np.diff(vals) < -rtol * scale):
            return False
    return True


@pytest.fixture
def unit_triangle_mesh():
    return TensorMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [[1, 0, 1]] * 3)


@pytest.fixture
def synthetic5():
    return generate_synthetic(5, seed=1, perturb_directions=True)


@pytest.fixture(params=[0, 1, 2])
def small_random_mesh(request):
    return random_mesh(6, seed=request.param)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    def report(number, title, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
