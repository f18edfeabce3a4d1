"""Co-visibility based camera memory retrieval and round-trip benchmarks."""

__version__ = "0.1.0"

from .camera import (
    CameraPose,
    Frustum,
    Intrinsics,
    build_frustum,
    contains,
    flatten_cam,
    look_pose,
    pose_from_rt,
    unflatten_cam,
)
from .covisibility import CovisConfig, CovisResult, covisibility, covisibility_oracle, pairwise_matrix
from .estimators import ContextCompressor, CovisibilityRetriever
from .memory import (
    ContextAssignment,
    FrameRecord,
    MemoryStore,
    SelectionStrategy,
    apply_context_dropout,
    push_segment,
    select_context,
)
from .trajectory import Trajectory, roundtrip_trajectory

__all__ = [
    "CameraPose",
    "ContextAssignment",
    "ContextCompressor",
    "CovisConfig",
    "CovisResult",
    "CovisibilityRetriever",
    "FrameRecord",
    "Frustum",
    "Intrinsics",
    "MemoryStore",
    "SelectionStrategy",
    "Trajectory",
    "apply_context_dropout",
    "build_frustum",
    "contains",
    "covisibility",
    "covisibility_oracle",
    "flatten_cam",
    "look_pose",
    "pairwise_matrix",
    "pose_from_rt",
    "push_segment",
    "roundtrip_trajectory",
    "select_context",
    "unflatten_cam",
]
