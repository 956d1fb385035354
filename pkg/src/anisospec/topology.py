"""Join and split trees of piecewise linear fields on triangle meshes.

The sweep visits vertices by increasing ``(value, index)``, the index acting as
a symbolic perturbation, and tracks sublevel components with union-find. A
vertex whose lower neighbours belong to ``k > 1`` components becomes ``k - 1``
chained binary saddle nodes, so every saddle merges exactly two branches.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .mesh import TensorMesh, anisotropy
from .subdivision import SubdividedMesh
from .validation import AnisoError

#: Minima at or below this fraction of the largest value are flagged as degenerate points.
ZERO_RTOL = 1e-7


class NodeKind(str, enum.Enum):
    MINIMUM = "Minimum"
    MAXIMUM = "Maximum"
    SADDLE = "Saddle"
    ROOT = "Root"


@dataclass(frozen=True)
class TreeNode:
    id: int
    vertex: int
    value: float
    position: tuple[float, float]
    kind: NodeKind
    is_degenerate_point: bool = False
    parent_triangle: int | None = None


@dataclass(frozen=True, eq=False)
class JoinTree:
    """Merge tree; ``edges`` are ``(child, parent)`` node-id pairs."""

    nodes: list
    edges: list
    sweep: str = "join"
    meta: dict = field(default_factory=dict)

    @property
    def root(self) -> TreeNode:
        return next(n for n in self.nodes if n.kind is NodeKind.ROOT)

    @property
    def leaves(self) -> list:
        return [n for n in self.nodes if n.kind in (NodeKind.MINIMUM, NodeKind.MAXIMUM)]

    @property
    def saddles(self) -> list:
        return [n for n in self.nodes if n.kind is NodeKind.SADDLE]

    def degenerate_leaves(self) -> list:
        return [n for n in self.nodes if n.is_degenerate_point]

    def parent_of(self) -> dict:
        return dict(self.edges)

    def signature(self):
        """Hashable structure keyed by mesh vertex ids, independent of node numbering."""
        by_id = {n.id: n for n in self.nodes}
        nodes = sorted((n.vertex, n.kind.value) for n in self.nodes)
        edges = sorted((by_id[c].vertex, by_id[p].vertex) for c, p in self.edges)
        return tuple(nodes), tuple(edges)

    def shape(self):
        """Canonical unlabeled rooted-tree form (for isomorphism checks)."""
        children: dict[int, list[int]] = {}
        for c, p in self.edges:
            children.setdefault(p, []).append(c)

        def canon(i):
            return "(" + "".join(sorted(canon(c) for c in children.get(i, []))) + ")"

        return canon(self.root.id)

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {
                    "id": n.id,
                    "value": n.value,
                    "x": n.position[0],
                    "y": n.position[1],
                    "kind": n.kind.value,
                    "degenerate": n.is_degenerate_point,
                    "vertex": n.vertex,
                    "parent_triangle": n.parent_triangle,
                }
                for n in self.nodes
            ],
            "edges": [[c, p] for c, p in self.edges],
        }


class _DisjointSet:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b):
        """Attach the root of ``b`` under the root of ``a``; returns the new root."""
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra
        return ra


def vertex_neighbors(n_vertices: int, triangles: np.ndarray, check_conforming: bool = True) -> list:
    t = np.asarray(triangles, dtype=np.int64)
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    if check_conforming and np.any(counts > 2):
        bad = uniq[np.argmax(counts > 2)].tolist()
        raise AnisoError(f"non-conforming mesh: edge {bad} is shared by more than two triangles")
    nbrs = [[] for _ in range(n_vertices)]
    for i, j in uniq.tolist():
        nbrs[i].append(j)
        nbrs[j].append(i)
    return nbrs


def merge_sweep(values, triangles, positions=None, *, flip: bool = False, zero_tol: float | None = None,
                vertex_parent=None) -> JoinTree:
    """Join tree (``flip=False``) or split tree (``flip=True``) of a PL field."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    positions = np.zeros((n, 2)) if positions is None else np.asarray(positions, dtype=float)
    nbrs = vertex_neighbors(n, triangles)
    key = -values if flip else values
    order = np.lexsort((np.arange(n), key))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    if zero_tol is None:
        zero_tol = ZERO_RTOL * float(np.max(np.abs(values))) if n else 0.0

    leaf_kind = NodeKind.MAXIMUM if flip else NodeKind.MINIMUM
    nodes: list[TreeNode] = []
    edges: list[tuple[int, int]] = []
    ds = _DisjointSet(n)
    head: dict[int, int] = {}  # component root -> newest tree node of that component

    def add(v, kind):
        pt = None
        if vertex_parent is not None and vertex_parent[v] >= 0:
            pt = int(vertex_parent[v])
        degenerate = bool(kind is NodeKind.MINIMUM and values[v] <= zero_tol)
        nodes.append(TreeNode(len(nodes), int(v), float(values[v]), (float(positions[v, 0]), float(positions[v, 1])),
                              kind, degenerate, pt))
        return len(nodes) - 1

    for step, v in enumerate(order.tolist()):
        lower = {ds.find(u) for u in nbrs[v] if rank[u] < rank[v]}
        comps = sorted(lower, key=lambda r: rank[r])
        last = step == n - 1
        if not comps:
            node = add(v, NodeKind.ROOT if last else leaf_kind)
            head[v] = node
            continue
        if len(comps) == 1:
            r = ds.union(comps[0], v)
            if last:
                node = add(v, NodeKind.ROOT)
                edges.append((head[comps[0]], node))
                head[r] = node
            continue
        current = head[comps[0]]
        root = comps[0]
        for extra in comps[1:]:
            kind = NodeKind.ROOT if (last and extra == comps[-1]) else NodeKind.SADDLE
            node = add(v, kind)
            edges.append((current, node))
            edges.append((head[extra], node))
            root = ds.union(root, extra)
            current = node
        root = ds.union(root, v)
        head[root] = current

    roots = {ds.find(v) for v in range(n)}
    if len(roots) > 1:
        raise AnisoError("mesh is not connected; a merge tree needs a connected domain")
    return JoinTree(nodes, edges, "split" if flip else "join", {"zero_tol": zero_tol})


def _pl_inputs(mesh):
    if isinstance(mesh, SubdividedMesh):
        return mesh.values, mesh.triangles, mesh.vertices, mesh.vertex_parent
    if isinstance(mesh, TensorMesh):
        return mesh.vertex_anisotropy(), mesh.triangles, mesh.vertices, None
    raise TypeError(f"expected a TensorMesh or SubdividedMesh, got {type(mesh).__name__}")


def join_tree(mesh) -> JoinTree:
    """Join tree of the piecewise linear anisotropy on ``mesh``.

    A :class:`SubdividedMesh` gives the mode-b tree, a plain
    :class:`~anisospec.mesh.TensorMesh` the mode-a tree.
    """
    values, tris, pos, vparent = _pl_inputs(mesh)
    return merge_sweep(values, tris, pos, vertex_parent=vparent)


def split_tree(mesh) -> JoinTree:
    values, tris, pos, vparent = _pl_inputs(mesh)
    return merge_sweep(values, tris, pos, flip=True, vertex_parent=vparent)


def refine_uniform(vertices, triangles, tensors, levels: int = 1):
    """Split every triangle into four, ``levels`` times, interpolating tensors at midpoints.

    Existing vertices keep their indices; midpoints are shared across edges.
    """
    v = [np.asarray(p, dtype=float) for p in vertices]
    t = [np.asarray(s, dtype=float) for s in tensors]
    tris = [tuple(x) for x in np.asarray(triangles, dtype=np.int64).tolist()]
    for _ in range(levels):
        mid: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            k = (min(i, j), max(i, j))
            if k not in mid:
                mid[k] = len(v)
                v.append(0.5 * (v[k[0]] + v[k[1]]))
                t.append(0.5 * (t[k[0]] + t[k[1]]))
            return mid[k]

        new = []
        for a, b, c in tris:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        tris = new
    return np.array(v).reshape(-1, 2), np.array(tris, dtype=np.int64).reshape(-1, 3), np.array(t).reshape(-1, 3)


def quadratic_join_tree(submesh: SubdividedMesh, refine: int = 2) -> JoinTree:
    """Join tree of the exact quadratic anisotropy (mode c).

    Each monotone piece is refined uniformly and the quadratic is sampled at the
    new points through tensor interpolation, which is exact because the tensor
    field is linear on every piece. Vertex ids of ``submesh`` are preserved.
    """
    verts, tris, tens = refine_uniform(submesh.vertices, submesh.triangles, submesh.tensors, refine)
    values = anisotropy(tens)
    values[: len(submesh.values)] = submesh.values
    vparent = np.full(len(values), -1, dtype=np.int64)
    vparent[: len(submesh.vertex_parent)] = submesh.vertex_parent
    zero_tol = ZERO_RTOL * float(np.max(np.abs(submesh.values)))
    return merge_sweep(values, tris, verts, zero_tol=zero_tol, vertex_parent=vparent)


def mode_join_tree(mesh_or_submesh, mode: str, refine: int = 2) -> JoinTree:
    from .subdivision import subdivide_mesh

    mode = str(getattr(mode, "value", mode))
    if mode == "a":
        src = mesh_or_submesh.source if isinstance(mesh_or_submesh, SubdividedMesh) else mesh_or_submesh
        return join_tree(src)
    sub = mesh_or_submesh if isinstance(mesh_or_submesh, SubdividedMesh) else subdivide_mesh(mesh_or_submesh)
    if mode == "b":
        return join_tree(sub)
    if mode == "c":
        return quadratic_join_tree(sub, refine)
    raise ValueError(f"unknown mode {mode!r}")
