"""Common result record shared by both segmentation methods."""

from __future__ import annotations

from dataclasses import dataclass, field

from .mesh import TriangleMesh
from .volume import BinaryMask

__all__ = ["SegmentationResult"]


@dataclass(eq=False)
class SegmentationResult:
    mesh: TriangleMesh
    mask: BinaryMask
    volume_cm3: float
    voxel_count: int
    runtime_ms: float
    method: str  # "balloon" | "graph"
    params_record: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("balloon", "graph"):
            raise ValueError(f"method must be 'balloon' or 'graph', got {self.method!r}")
        expected = self.voxel_count * self.mask.voxel_volume_mm3() / 1000.0
        if abs(self.volume_cm3 - expected) > 1e-9 * max(1.0, expected):
            raise ValueError(
                f"volume_cm3 {self.volume_cm3} inconsistent with voxel_count "
                f"{self.voxel_count} at this spacing (expected {expected})"
            )

    def to_dict(self) -> dict:
        """JSON-ready summary (mesh and mask are serialized separately)."""
        return {
            "method": self.method,
            "volume_cm3": self.volume_cm3,
            "voxel_count": self.voxel_count,
            "runtime_ms": self.runtime_ms,
            "params": self.params_record,
            "diagnostics": self.diagnostics,
        }
