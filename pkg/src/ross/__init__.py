"""Cross-modal label transfer: LIDAR semantics onto radar BEV imagery.

The toolchain goes scan + trajectory -> fused voxel map -> label images
aligned with radar BEV frames, with calibration, intensity analysis, CFAR
detection, evaluation, and a deterministic synthetic data generator.
"""

from .calibration import (
    CalibrationResult,
    TargetCorrespondence,
    detect_reflectors,
    estimate_extrinsics,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateGeometryError,
    EmptyEvaluationError,
    FormatError,
    InsufficientDataError,
    InsufficientHistoryError,
    RossError,
    TrajectoryRangeError,
)
from .fusion import VoxelLabelMap, accumulate, build_voxel_map, fuse_cell, merge_maps
from .geometry import (
    RigidTransform,
    StampedPose,
    interpolate_pose,
    slerp,
    voxel_index,
    voxel_indices,
)
from .metrics import ConfusionMatrix, MetricReport, confusion, iou_report
from .projection import polar_to_bev, render_label_image, stack_frames
from .synth import SceneSpec, generate_scene
from .taxonomy import ClassTable, load_class_table, remap_labels

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult",
    "TargetCorrespondence",
    "detect_reflectors",
    "estimate_extrinsics",
    "ConfigError",
    "DataError",
    "DegenerateGeometryError",
    "EmptyEvaluationError",
    "FormatError",
    "InsufficientDataError",
    "InsufficientHistoryError",
    "RossError",
    "TrajectoryRangeError",
    "VoxelLabelMap",
    "accumulate",
    "build_voxel_map",
    "fuse_cell",
    "merge_maps",
    "RigidTransform",
    "StampedPose",
    "interpolate_pose",
    "slerp",
    "voxel_index",
    "voxel_indices",
    "ConfusionMatrix",
    "MetricReport",
    "confusion",
    "iou_report",
    "polar_to_bev",
    "render_label_image",
    "stack_frames",
    "SceneSpec",
    "generate_scene",
    "ClassTable",
    "load_class_table",
    "remap_labels",
    "__version__",
]
