"""Semi-automatic 3D tumor segmentation toolkit.

Two methods over a shared volume/mesh/mask core:

* balloon: a small seeded mesh inflated outward under intensity gating,
  curvature- and protrusion-modulated, with per-iteration refinement and
  smoothing.
* graph: intensity samples along rays from a seed become a directed graph
  whose exact s-t min-cut yields the optimal closed surface under a
  stiffness bound.

Shared post-processing voxelizes the surface, measures volume in cm3 and
voxel count, and compares masks with the Dice Similarity Coefficient.
"""

from .balloon import BalloonParams, OutlineInit, init_from_outline, inflate_step, run_balloon
from .mesh import (
    MeshError,
    SplitBudgetError,
    TriangleMesh,
    center_angles,
    estimate_curvature,
    laplacian_smooth,
    make_icosphere,
    save_off,
    save_stl,
    split_long_edges,
    vertex_normals,
)
from .metrics import BinaryMask, dsc, load_mask, mask_volume, save_mask, voxelize
from .raygraph import (
    CutSurface,
    FlowGraph,
    RayGraphSpec,
    SampledRays,
    build_graph,
    estimate_object_mean,
    extract_surface,
    min_cut,
    run_graph,
    sample_rays,
)
from .results import SegmentationResult
from .volume import (
    PhantomSpec,
    Volume,
    VolumeFormatError,
    load_volume,
    make_phantom,
    sample_intensity,
    save_volume,
)

__version__ = "0.1.0"

__all__ = [
    "BalloonParams",
    "BinaryMask",
    "CutSurface",
    "FlowGraph",
    "MeshError",
    "OutlineInit",
    "PhantomSpec",
    "RayGraphSpec",
    "SampledRays",
    "SegmentationResult",
    "SplitBudgetError",
    "TriangleMesh",
    "Volume",
    "VolumeFormatError",
    "build_graph",
    "center_angles",
    "dsc",
    "estimate_curvature",
    "estimate_object_mean",
    "extract_surface",
    "inflate_step",
    "init_from_outline",
    "laplacian_smooth",
    "load_mask",
    "load_volume",
    "make_icosphere",
    "make_phantom",
    "mask_volume",
    "min_cut",
    "run_balloon",
    "run_graph",
    "sample_intensity",
    "sample_rays",
    "save_mask",
    "save_off",
    "save_stl",
    "save_volume",
    "split_long_edges",
    "vertex_normals",
    "voxelize",
]
