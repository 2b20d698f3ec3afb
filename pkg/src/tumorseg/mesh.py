"""Closed triangle meshes and the geometric primitives used during inflation.

Meshes are value-like: vertices (V,3) float64 world coordinates, faces (F,3)
int32 with consistent outward winding, plus the seeding center used for
center-vertex vectors.  All operations either return a new mesh or mutate a
locally owned copy; nothing here shares mutable state.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "TriangleMesh",
    "MeshError",
    "SplitBudgetError",
    "make_icosphere",
    "icosphere_vertex_counts",
    "split_long_edges",
    "vertex_normals",
    "estimate_curvature",
    "laplacian_smooth",
    "center_angles",
    "save_off",
    "save_stl",
]


class MeshError(ValueError):
    """Mesh violates the closed-manifold contract."""


class SplitBudgetError(RuntimeError):
    """Edge splitting exceeded its per-call budget (runaway refinement)."""


@dataclass(eq=False)
class TriangleMesh:
    vertices: np.ndarray
    faces: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int32).reshape(-1, 3)
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def edges(self) -> np.ndarray:
        """Unique undirected edges as an (E, 2) array with e[0] < e[1]."""
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e = np.sort(e, axis=1)
        return np.unique(e, axis=0)

    def signed_volume(self) -> float:
        v = self.vertices
        a, b, c = v[self.faces[:, 0]], v[self.faces[:, 1]], v[self.faces[:, 2]]
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def copy(self) -> "TriangleMesh":
        return TriangleMesh(self.vertices.copy(), self.faces.copy(), self.center.copy())

    def validate(self) -> None:
        """Raise MeshError unless this is a closed, outward-oriented 2-manifold."""
        if self.n_faces == 0:
            raise MeshError("mesh has no faces")
        if self.faces.min() < 0 or self.faces.max() >= self.n_vertices:
            raise MeshError("face index out of range")
        if np.any(self.faces[:, 0] == self.faces[:, 1]) or np.any(
            self.faces[:, 1] == self.faces[:, 2]
        ) or np.any(self.faces[:, 0] == self.faces[:, 2]):
            raise MeshError("face with repeated vertex index")
        directed = np.concatenate(
            [self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]]
        )
        d_unique, d_counts = np.unique(directed, axis=0, return_counts=True)
        if np.any(d_counts > 1):
            raise MeshError("duplicate directed edge (inconsistent winding or doubled face)")
        und = np.sort(directed, axis=1)
        u_unique, u_counts = np.unique(und, axis=0, return_counts=True)
        if np.any(u_counts != 2):
            raise MeshError("edge not shared by exactly two faces (boundary or non-manifold)")
        v = self.vertices
        a, b, c = v[self.faces[:, 0]], v[self.faces[:, 1]], v[self.faces[:, 2]]
        areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        scale = max(1.0, float(np.abs(v).max()))
        if np.any(areas < 1e-12 * scale * scale):
            raise MeshError("degenerate (zero-area) face")
        if self.signed_volume() <= 0:
            raise MeshError("mesh is not outward oriented (non-positive signed volume)")


# ---------------------------------------------------------------------------
# Icosphere construction
# ---------------------------------------------------------------------------

_MAX_SUBDIV = 7  # 163842 vertices


def icosphere_vertex_counts(max_level: int = _MAX_SUBDIV) -> list[int]:
    """Vertex counts achievable by icosahedron subdivision: 12, 42, 162, ..."""
    return [10 * 4**level + 2 for level in range(max_level + 1)]


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int32,
    )
    return verts, faces


def make_icosphere(target_vertex_count: int, center, radius: float) -> TriangleMesh:
    """Subdivided-icosahedron sphere at the level whose vertex count is
    closest to ``target_vertex_count`` (ties resolved to the coarser level)."""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if target_vertex_count < 12:
        raise ValueError(f"target_vertex_count must be >= 12, got {target_vertex_count}")
    counts = icosphere_vertex_counts()
    level = int(np.argmin([abs(c - target_vertex_count) for c in counts]))
    verts, faces = _icosahedron()
    for _ in range(level):
        verts, faces = _subdivide_unit_sphere(verts, faces)
    center = np.asarray(center, dtype=np.float64).reshape(3)
    return TriangleMesh(vertices=center + radius * verts, faces=faces, center=center)


def _subdivide_unit_sphere(verts: np.ndarray, faces: np.ndarray):
    verts = list(verts)
    midpoint: dict[tuple[int, int], int] = {}

    def mid(i: int, j: int) -> int:
        key = (i, j) if i < j else (j, i)
        idx = midpoint.get(key)
        if idx is None:
            m = verts[i] + verts[j]
            m /= np.linalg.norm(m)
            verts.append(m)
            idx = len(verts) - 1
            midpoint[key] = idx
        return idx

    new_faces = []
    for a, b, c in faces:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
    return np.asarray(verts), np.asarray(new_faces, dtype=np.int32)


# ---------------------------------------------------------------------------
# Refinement: midpoint bisection of long edges
# ---------------------------------------------------------------------------

def split_long_edges(
    mesh: TriangleMesh, max_edge_mm: float, max_splits: int = 200_000
) -> TriangleMesh:
    """Bisect every edge longer than ``max_edge_mm`` until none remain.

    Each split adds the midpoint vertex and retriangulates the two adjacent
    faces (no edge flips).  Raises SplitBudgetError when more than
    ``max_splits`` bisections would be needed.
    """
    if max_edge_mm <= 0:
        raise ValueError(f"max_edge_mm must be positive, got {max_edge_mm}")
    verts = list(mesh.vertices)
    faces = [tuple(f) for f in mesh.faces]
    max_sq = max_edge_mm * max_edge_mm
    splits = 0

    while True:
        # face incidence per undirected edge, rebuilt once per pass
        edge_faces: dict[tuple[int, int], list[int]] = defaultdict(list)
        for fi, (a, b, c) in enumerate(faces):
            for u, v in ((a, b), (b, c), (c, a)):
                edge_faces[(u, v) if u < v else (v, u)].append(fi)
        long_edges = []
        for (u, v), inc in edge_faces.items():
            d = verts[u] - verts[v]
            sq = float(d @ d)
            if sq > max_sq:
                long_edges.append((sq, u, v, inc))
        if not long_edges:
            break
        long_edges.sort(key=lambda t: -t[0])
        dirty: set[int] = set()
        progressed = False
        for _, u, v, inc in long_edges:
            if any(fi in dirty for fi in inc):
                continue  # adjacent face already retriangulated this pass
            if splits >= max_splits:
                raise SplitBudgetError(
                    f"edge split budget of {max_splits} exhausted (runaway refinement)"
                )
            m_idx = len(verts)
            verts.append(0.5 * (verts[u] + verts[v]))
            for fi in inc:
                a, b, c = faces[fi]
                # locate the directed occurrence of {u,v} to keep winding
                corners = (a, b, c, a)
                for k in range(3):
                    p, q = corners[k], corners[k + 1]
                    if {p, q} == {u, v}:
                        w = ({a, b, c} - {p, q}).pop()
                        faces.append((m_idx, q, w))
                        faces[fi] = (p, m_idx, w)
                        break
                dirty.add(fi)
            splits += 1
            progressed = True
        if not progressed:
            break

    if splits == 0:
        return mesh
    return TriangleMesh(
        vertices=np.asarray(verts), faces=np.asarray(faces, dtype=np.int32), center=mesh.center.copy()
    )


# ---------------------------------------------------------------------------
# Per-vertex geometry
# ---------------------------------------------------------------------------

def vertex_normals(mesh: TriangleMesh) -> np.ndarray:
    """Angle-weighted average of incident face normals, unit length, outward."""
    v = mesh.vertices
    f = mesh.faces
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    fn = np.cross(b - a, c - a)
    norms = np.linalg.norm(fn, axis=1, keepdims=True)
    fn = fn / np.maximum(norms, 1e-300)

    acc = np.zeros_like(v)
    corner_pts = (a, b, c)
    for k in range(3):
        p = corner_pts[k]
        q = corner_pts[(k + 1) % 3] - p
        r = corner_pts[(k + 2) % 3] - p
        cosang = np.einsum("ij,ij->i", q, r) / np.maximum(
            np.linalg.norm(q, axis=1) * np.linalg.norm(r, axis=1), 1e-300
        )
        ang = np.arccos(np.clip(cosang, -1.0, 1.0))
        np.add.at(acc, f[:, k], fn * ang[:, None])

    lens = np.linalg.norm(acc, axis=1)
    if np.any(lens < 1e-300):
        raise MeshError("vertex with no incident faces (isolated vertex)")
    return acc / lens[:, None]


def _uniform_laplacian(mesh: TriangleMesh) -> np.ndarray:
    """L(v) = mean of one-ring neighbors minus v."""
    v = mesh.vertices
    e = mesh.edges()
    sums = np.zeros_like(v)
    deg = np.zeros(len(v))
    np.add.at(sums, e[:, 0], v[e[:, 1]])
    np.add.at(sums, e[:, 1], v[e[:, 0]])
    np.add.at(deg, e[:, 0], 1.0)
    np.add.at(deg, e[:, 1], 1.0)
    deg = np.maximum(deg, 1.0)
    return sums / deg[:, None] - v


def estimate_curvature(mesh: TriangleMesh, normals: np.ndarray | None = None) -> np.ndarray:
    """Protrusion-only mean-curvature proxy.

    The uniform-umbrella Laplacian of a protruding vertex points inward,
    against the outward normal; kappa = max(0, -(L . n)) is therefore large
    exactly there and clamps to zero on flat and concave regions.
    """
    if normals is None:
        normals = vertex_normals(mesh)
    lap = _uniform_laplacian(mesh)
    h = -np.einsum("ij,ij->i", lap, normals)
    return np.maximum(h, 0.0)


def laplacian_smooth(mesh: TriangleMesh, smooth_lambda: float, iterations: int) -> TriangleMesh:
    """Move every vertex toward its one-ring mean: v += lambda * L(v), per pass."""
    if not (0.0 < smooth_lambda <= 1.0):
        raise ValueError(f"smooth_lambda must be in (0, 1], got {smooth_lambda}")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    out = mesh.copy()
    for _ in range(iterations):
        out.vertices = out.vertices + smooth_lambda * _uniform_laplacian(out)
    return out


def center_angles(mesh: TriangleMesh, normals: np.ndarray) -> np.ndarray:
    """Angle in [0, pi] between each vertex normal and the center-vertex vector."""
    d = mesh.vertices - mesh.center
    lens = np.linalg.norm(d, axis=1)
    if np.any(lens < 1e-12):
        raise MeshError("vertex coincides with the mesh center")
    d = d / lens[:, None]
    return np.arccos(np.clip(np.einsum("ij,ij->i", normals, d), -1.0, 1.0))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def save_off(mesh: TriangleMesh, path) -> Path:
    path = Path(path)
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} 0"]
    lines += [f"{x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
    path.write_text("\n".join(lines) + "\n")
    return path


def save_stl(mesh: TriangleMesh, path, name: str = "surface") -> Path:
    path = Path(path)
    v = mesh.vertices
    a, b, c = v[mesh.faces[:, 0]], v[mesh.faces[:, 1]], v[mesh.faces[:, 2]]
    fn = np.cross(b - a, c - a)
    fn = fn / np.maximum(np.linalg.norm(fn, axis=1, keepdims=True), 1e-300)
    parts = [f"solid {name}"]
    for i in range(len(mesh.faces)):
        parts.append(f"  facet normal {fn[i,0]:.9g} {fn[i,1]:.9g} {fn[i,2]:.9g}")
        parts.append("    outer loop")
        for p in (a[i], b[i], c[i]):
            parts.append(f"      vertex {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}")
        parts.append("    endloop")
        parts.append("  endfacet")
    parts.append(f"endsolid {name}")
    path.write_text("\n".join(parts) + "\n")
    return path
