"""Balloon-inflation segmentation.

A small icosphere is seeded from a user-drawn outline and grown iteratively.
Each iteration, in order: long-edge splitting, per-vertex normals/curvature/
center-angles, gated outward movement, then slight Laplacian smoothing.
A vertex only commits its outward step if the candidate position has similar
or higher intensity, so the front halts where the bright boundary falls off.
The run stops when mean inflation speed stays below a stall threshold.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .mesh import TriangleMesh, make_icosphere, split_long_edges, vertex_normals, \
    estimate_curvature, laplacian_smooth, center_angles
from .metrics import mask_volume, voxelize
from .results import SegmentationResult
from .volume import Volume, sample_intensity

__all__ = ["OutlineInit", "BalloonParams", "init_from_outline", "inflate_step", "run_balloon"]

_AXES = {"x": 0, "y": 1, "z": 2}
_INIT_VERTEX_TARGET = 162
_INIT_RADIUS_FACTOR = 0.25  # under-initialize: growth is outward-only


@dataclass
class OutlineInit:
    """User-drawn polygon on one slice: axis, slice index, in-plane mm points.

    In-plane coordinates follow the remaining axes in (x, y, z) order,
    e.g. axis="z" polygons are (x, y) mm pairs.
    """

    slice_axis: str
    slice_index: int
    polygon_mm: np.ndarray

    def __post_init__(self):
        if self.slice_axis not in _AXES:
            raise ValueError(f"slice_axis must be one of x/y/z, got {self.slice_axis!r}")
        self.polygon_mm = np.asarray(self.polygon_mm, dtype=np.float64).reshape(-1, 2)
        if len(self.polygon_mm) < 3:
            raise ValueError("outline polygon needs at least 3 points")
        if _self_intersects(self.polygon_mm):
            raise ValueError("outline polygon is self-intersecting")

    @classmethod
    def from_json(cls, obj: dict | str | Path) -> "OutlineInit":
        if isinstance(obj, (str, Path)):
            obj = json.loads(Path(obj).read_text())
        return cls(
            slice_axis=obj["axis"],
            slice_index=int(obj["index"]),
            polygon_mm=np.asarray(obj["polygon_mm"], dtype=np.float64),
        )

    def to_json(self) -> dict:
        return {
            "axis": self.slice_axis,
            "index": self.slice_index,
            "polygon_mm": [[float(x), float(y)] for x, y in self.polygon_mm],
        }


def _segments_cross(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _self_intersects(poly: np.ndarray) -> bool:
    n = len(poly)
    for i in range(n):
        a1, a2 = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue  # shared endpoint
            if _segments_cross(a1, a2, poly[j], poly[(j + 1) % n]):
                return True
    return False


def _polygon_centroid_area(poly: np.ndarray) -> tuple[np.ndarray, float]:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if abs(area) < 1e-12:
        raise ValueError("degenerate outline polygon (zero area)")
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy]), abs(area)


@dataclass
class BalloonParams:
    """Inflation parameters.  None fields resolve against the target volume:
    step 0.25x min spacing, edge limit 2x min spacing, tolerance 5% of the
    intensity range, stall threshold 5% of the step.

    The step and tolerance defaults were tuned on bright-rim phantoms: a
    half-spacing step with a 2% gate freezes the front a full interpolation
    shoulder (~0.7 voxel) inside the true edge, which measurably costs
    2-3 Dice points on a 20 mm sphere."""

    step_mm: float | None = None
    intensity_tolerance: float | None = None
    curvature_gain: float = 1.0
    angle_gain: float = 2.0
    max_edge_mm: float | None = None
    smooth_lambda: float = 0.2
    smooth_iters: int = 1
    stall_epsilon_mm: float | None = None
    stall_patience: int = 3
    max_iterations: int = 500
    split_budget: int = 200_000

    def resolved(self, volume: Volume) -> "BalloonParams":
        min_sp = min(volume.spacing)
        lo, hi = volume.intensity_range
        p = BalloonParams(**asdict(self))
        if p.step_mm is None:
            p.step_mm = 0.25 * min_sp
        if p.max_edge_mm is None:
            p.max_edge_mm = 2.0 * min_sp
        if p.intensity_tolerance is None:
            p.intensity_tolerance = 0.05 * (hi - lo)
        if p.stall_epsilon_mm is None:
            # must sit above the smoothing creep (lambda * e^2 / 2R, ~0.06 mm
            # on small meshes) or the stall detector never fires
            p.stall_epsilon_mm = 0.3 * p.step_mm
        p.validate()
        return p

    def validate(self):
        if self.step_mm is not None and self.step_mm <= 0:
            raise ValueError("step_mm must be > 0")
        if self.intensity_tolerance is not None and self.intensity_tolerance < 0:
            raise ValueError("intensity_tolerance must be >= 0")
        if self.curvature_gain < 0 or self.angle_gain < 0:
            raise ValueError("gains must be >= 0")
        if self.max_edge_mm is not None and self.max_edge_mm <= 0:
            raise ValueError("max_edge_mm must be > 0")
        if not (0 < self.smooth_lambda <= 1):
            raise ValueError("smooth_lambda must be in (0, 1]")
        if self.smooth_iters < 0:
            raise ValueError("smooth_iters must be >= 0")
        if self.stall_epsilon_mm is not None and self.stall_epsilon_mm <= 0:
            raise ValueError("stall_epsilon_mm must be > 0")
        if self.stall_patience < 1 or self.max_iterations < 1:
            raise ValueError("stall_patience and max_iterations must be >= 1")

    def record(self) -> dict:
        return {k: v for k, v in asdict(self).items()}


def init_from_outline(outline: OutlineInit, volume: Volume) -> TriangleMesh:
    """Small icosphere at the outline centroid, radius 1/4 of the outline's
    mean centroid-to-vertex distance."""
    axis = _AXES[outline.slice_axis]
    if not (0 <= outline.slice_index < volume.dims[axis]):
        raise ValueError(
            f"slice index {outline.slice_index} out of bounds for axis "
            f"{outline.slice_axis} with {volume.dims[axis]} slices"
        )
    centroid2, _area = _polygon_centroid_area(outline.polygon_mm)
    mean_dist = float(np.linalg.norm(outline.polygon_mm - centroid2, axis=1).mean())
    if mean_dist <= 0:
        raise ValueError("degenerate outline polygon (coincident points)")
    in_plane = [a for a in range(3) if a != axis]
    center = np.zeros(3)
    center[in_plane[0]] = centroid2[0]
    center[in_plane[1]] = centroid2[1]
    center[axis] = outline.slice_index * volume.spacing[axis]
    return make_icosphere(_INIT_VERTEX_TARGET, center, _INIT_RADIUS_FACTOR * mean_dist)


def inflate_step(
    mesh: TriangleMesh, volume: Volume, params: BalloonParams
) -> tuple[TriangleMesh, float]:
    """One full iteration: split, measure, inflate with intensity gating, smooth.

    Returns the new mesh and the mean committed displacement in mm over all
    vertices (pre-smoothing; vertices that stay contribute zero).
    """
    p = params
    m = split_long_edges(mesh, p.max_edge_mm, p.split_budget)
    normals = vertex_normals(m)
    kappa = estimate_curvature(m, normals)
    theta = center_angles(m, normals)

    cos_t = np.maximum(np.cos(theta), 0.0)
    step = p.step_mm / (1.0 + p.curvature_gain * kappa)
    if p.angle_gain > 0:
        step = step * cos_t**p.angle_gain
    candidates = m.vertices + step[:, None] * normals
    here = sample_intensity(volume, m.vertices)
    there = sample_intensity(volume, candidates)
    commit = (there >= here - p.intensity_tolerance) & (step > 0)

    new_vertices = np.where(commit[:, None], candidates, m.vertices)
    mean_disp = float(np.where(commit, step, 0.0).mean())
    out = TriangleMesh(vertices=new_vertices, faces=m.faces, center=m.center.copy())
    if p.smooth_iters > 0:
        out = laplacian_smooth(out, p.smooth_lambda, p.smooth_iters)
    return out, mean_disp


def _boundary_midpoint_offset(mesh: TriangleMesh, volume: Volume, p: BalloonParams) -> TriangleMesh:
    """Place the final surface halfway between the last accepted position and
    the first rejected candidate.

    A stalled vertex sits where its next outward step failed the intensity
    gate, so the true boundary lies between it and that candidate; offsetting
    by half the (modulated) step is the unbiased placement, mirroring the
    half-spacing rule used when extracting the graph cut surface.  Vertices
    whose candidate would still pass the gate are not offset.
    """
    normals = vertex_normals(mesh)
    kappa = estimate_curvature(mesh, normals)
    theta = center_angles(mesh, normals)
    step = p.step_mm / (1.0 + p.curvature_gain * kappa)
    if p.angle_gain > 0:
        step = step * np.maximum(np.cos(theta), 0.0) ** p.angle_gain
    candidates = mesh.vertices + step[:, None] * normals
    here = sample_intensity(volume, mesh.vertices)
    there = sample_intensity(volume, candidates)
    blocked = (there < here - p.intensity_tolerance) & (step > 0)
    verts = mesh.vertices + np.where(blocked, 0.5 * step, 0.0)[:, None] * normals
    return TriangleMesh(vertices=verts, faces=mesh.faces, center=mesh.center.copy())


def run_balloon(
    volume: Volume, outline: OutlineInit, params: BalloonParams | None = None
) -> SegmentationResult:
    """Inflate until the mean step stays under stall_epsilon_mm for
    stall_patience consecutive iterations, then voxelize and measure."""
    t0 = time.perf_counter()
    p = (params or BalloonParams()).resolved(volume)
    mesh = init_from_outline(outline, volume)

    converged = False
    streak = 0
    iterations = 0
    mean_disp = 0.0
    for iterations in range(1, p.max_iterations + 1):
        mesh, mean_disp = inflate_step(mesh, volume, p)
        if mean_disp < p.stall_epsilon_mm:
            streak += 1
            if streak >= p.stall_patience:
                converged = True
                break
        else:
            streak = 0

    mesh = _boundary_midpoint_offset(mesh, volume, p)
    mask = voxelize(mesh, volume.dims, volume.spacing)
    count, cm3 = mask_volume(mask)
    runtime_ms = (time.perf_counter() - t0) * 1000.0
    return SegmentationResult(
        mesh=mesh,
        mask=mask,
        volume_cm3=cm3,
        voxel_count=count,
        runtime_ms=runtime_ms,
        method="balloon",
        params_record=p.record(),
        diagnostics={
            "iterations": iterations,
            "converged": converged,
            "final_mean_displacement_mm": mean_disp,
            "vertex_count": mesh.n_vertices,
            "face_count": mesh.n_faces,
        },
    )
