"""Round-trip camera trajectories for the memory benchmarks."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .camera import CameraPose, identity_pose, yaw_matrix

KINDS = ("deg90", "deg360")
DEFAULT_SEGMENT_LEN = 76


@dataclass(frozen=True)
class Trajectory:
    poses: List[CameraPose]
    kind: str
    segment_len: int
    yaws: np.ndarray

    def __len__(self):
        return len(self.poses)

    @property
    def apex(self) -> int:
        return (len(self.poses) - 1) // 2

    @property
    def n_segments(self) -> int:
        return (len(self.poses) - 1) // self.segment_len


def expected_length(kind: str, segment_len: int) -> int:
    if kind == "deg90":
        return 1 + 2 * segment_len
    if kind == "deg360":
        return 1 + 8 * segment_len
    raise ValueError(f"unknown trajectory kind {kind!r}, expected one of {KINDS}")


def roundtrip_yaws(kind: str, segment_len: int) -> np.ndarray:
    """Yaw in degrees per frame. The apex frame is shared by both halves."""
    if segment_len < 1:
        raise ValueError("segment_len must be >= 1")
    if kind == "deg90":
        steps, total = segment_len, 90.0
    elif kind == "deg360":
        steps, total = 4 * segment_len, 360.0
    else:
        raise ValueError(f"unknown trajectory kind {kind!r}, expected one of {KINDS}")
    forward = total * np.arange(steps + 1) / steps
    return np.concatenate([forward, forward[-2::-1]])


def roundtrip_trajectory(
    kind: str,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    base_pose: Optional[CameraPose] = None,
) -> Trajectory:
    """Rotate in place about the base camera's vertical axis, out to the apex
    yaw and back again."""
    base = identity_pose() if base_pose is None else base_pose
    yaws = roundtrip_yaws(kind, segment_len)
    center = base.center
    base_c2w = base.R.T
    poses = []
    for y in yaws:
        R = (base_c2w @ yaw_matrix(y)).T
        poses.append(CameraPose(R, -R @ center))
    yaws.setflags(write=False)
    return Trajectory(poses=poses, kind=kind, segment_len=segment_len, yaws=yaws)
