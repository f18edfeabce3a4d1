"""Camera poses, pinhole intrinsics and view frusta.

Poses are world-to-camera: ``x_cam = R @ x_world + t``. Cameras look along
+Z with +X to the right and +Y down.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BadClipPlanes, BadIntrinsics, NotARotation

ROTATION_TOL = 1e-6
# slack for "on the plane counts as inside"
PLANE_EPS = 1e-9

DEFAULT_FOV_H = 90.0
DEFAULT_ASPECT = 640.0 / 352.0
DEFAULT_NEAR = 0.1
DEFAULT_FAR = 20.0


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CameraPose:
    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "R", _frozen(self.R).reshape(3, 3))
        object.__setattr__(self, "t", _frozen(self.t).reshape(3))

    def __eq__(self, other):
        if not isinstance(other, CameraPose):
            return NotImplemented
        return np.array_equal(self.R, other.R) and np.array_equal(self.t, other.t)

    __hash__ = None

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.R.T @ self.t

    def allclose(self, other: "CameraPose", atol: float = 1e-9) -> bool:
        return np.allclose(self.R, other.R, rtol=0, atol=atol) and np.allclose(
            self.t, other.t, rtol=0, atol=atol
        )


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics. ``fx, fy, cx, cy`` are image-normalized and only
    set when parsed from a pose file."""

    fov_h: float = DEFAULT_FOV_H
    aspect: float = DEFAULT_ASPECT
    fx: Optional[float] = None
    fy: Optional[float] = None
    cx: Optional[float] = None
    cy: Optional[float] = None

    def __post_init__(self):
        if not (0.0 < self.fov_h < 180.0):
            raise BadIntrinsics(f"fov_h must lie in (0, 180), got {self.fov_h}")
        if not self.aspect > 0:
            raise BadIntrinsics(f"aspect must be positive, got {self.aspect}")

    @property
    def tan_half_h(self) -> float:
        return float(np.tan(np.deg2rad(self.fov_h) / 2))

    @property
    def tan_half_v(self) -> float:
        return self.tan_half_h / self.aspect

    @property
    def fov_v(self) -> float:
        return float(np.rad2deg(2 * np.arctan(self.tan_half_v)))


@dataclass(frozen=True, eq=False)
class Frustum:
    apex: np.ndarray
    # rows: near, far, right, left, bottom, top; inside means normals @ x <= offsets
    normals: np.ndarray
    offsets: np.ndarray
    near: float
    far: float
    # near-plane corners first, then far-plane, same (x, y) sign order in both
    corners: np.ndarray = field(repr=False)


def pose_from_rt(R, t) -> CameraPose:
    R = np.asarray(R, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if R.shape != (3, 3) or t.size != 3:
        raise NotARotation(f"expected 3x3 R and 3-vector t, got {R.shape} and {t.shape}")
    if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
        raise NotARotation("non-finite pose entries")
    err = np.max(np.abs(R.T @ R - np.eye(3)))
    if err > ROTATION_TOL or np.linalg.det(R) < 0:
        raise NotARotation(f"orthonormality error {err:.3g}, det {np.linalg.det(R):.6g}")
    return CameraPose(R, t)


def identity_pose() -> CameraPose:
    return CameraPose(np.eye(3), np.zeros(3))


def flatten_cam(pose: CameraPose) -> np.ndarray:
    """Row-major flattening of the 3x4 matrix [R|t]."""
    return np.hstack([pose.R, pose.t[:, None]]).reshape(12)


def unflatten_cam(vec) -> CameraPose:
    m = np.asarray(vec, dtype=np.float64).reshape(3, 4)
    return pose_from_rt(m[:, :3], m[:, 3])


def yaw_matrix(deg: float) -> np.ndarray:
    """Rotation about the camera's vertical (+Y, down) axis. Positive angles
    swing the +Z viewing direction towards +X, i.e. to the right."""
    a = np.deg2rad(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def look_pose(center, yaw_deg: float = 0.0, pitch_deg: float = 0.0) -> CameraPose:
    """World-to-camera pose for a camera at ``center`` with the given yaw,
    then pitch (positive pitch tilts the view up)."""
    p = np.deg2rad(pitch_deg)
    c, s = np.cos(p), np.sin(p)
    pitch = np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])
    c2w = yaw_matrix(yaw_deg) @ pitch
    R = c2w.T
    return CameraPose(R, -R @ np.asarray(center, dtype=np.float64))


def transform_pose(pose: CameraPose, Rw, tw) -> CameraPose:
    """Pose of the same camera after moving the world by ``x -> Rw x + tw``."""
    Rw = np.asarray(Rw, dtype=np.float64)
    R = pose.R @ Rw.T
    return CameraPose(R, pose.t - R @ np.asarray(tw, dtype=np.float64))


def _local_planes(intr: Intrinsics, near: float, far: float):
    a, b = intr.tan_half_h, intr.tan_half_v
    normals = np.array(
        [
            [0.0, 0.0, -1.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, -a],
            [-1.0, 0.0, -a],
            [0.0, 1.0, -b],
            [0.0, -1.0, -b],
        ]
    )
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    offsets = np.array([-near, far, 0.0, 0.0, 0.0, 0.0])
    return normals, offsets


def local_corners(intr: Intrinsics, near: float, far: float) -> np.ndarray:
    a, b = intr.tan_half_h, intr.tan_half_v
    signs = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    return np.array([[sx * a * z, sy * b * z, z] for z in (near, far) for sx, sy in signs])


def build_frustum(
    pose: CameraPose,
    intr: Intrinsics,
    near: float = DEFAULT_NEAR,
    far: float = DEFAULT_FAR,
) -> Frustum:
    if not (near > 0 and far > near):
        raise BadClipPlanes(f"need 0 < near < far, got near={near}, far={far}")
    n_c, d_c = _local_planes(intr, near, far)
    normals = n_c @ pose.R
    offsets = d_c - n_c @ pose.t
    corners = (local_corners(intr, near, far) - pose.t) @ pose.R
    return Frustum(
        apex=_frozen(pose.center),
        normals=_frozen(normals),
        offsets=_frozen(offsets),
        near=float(near),
        far=float(far),
        corners=_frozen(corners),
    )


def contains_points(frustum: Frustum, points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    return np.all(pts @ frustum.normals.T - frustum.offsets <= PLANE_EPS, axis=-1)


def contains(frustum: Frustum, point) -> bool:
    return bool(contains_points(frustum, np.asarray(point, dtype=np.float64)[None])[0])


def separated(fa: Frustum, fb: Frustum) -> bool:
    """True when a face plane of either frustum has the other entirely on
    its far side, so the two can share at most a measure-zero set."""
    for f, g in ((fa, fb), (fb, fa)):
        side = g.corners @ f.normals.T - f.offsets
        if np.any(np.all(side >= -PLANE_EPS, axis=0)):
            return True
    return False
