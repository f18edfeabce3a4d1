"""Input coercion shared by the estimator wrappers."""
from __future__ import annotations

from typing import List, Tuple

import numpy as np

from .camera import CameraPose, Intrinsics, unflatten_cam
from .errors import ShapeMismatch


def check_cameras(X, intr: Intrinsics) -> List[Tuple[CameraPose, Intrinsics]]:
    """Accept an (n, 12) array of flattened [R|t] rows, a list of poses, or
    a list of (pose, intrinsics) pairs."""
    if isinstance(X, np.ndarray) or (len(X) and not isinstance(X[0], (CameraPose, tuple))):
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 12:
            raise ShapeMismatch(f"expected (n, 12) flattened cameras, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("camera array holds non-finite values")
        return [(unflatten_cam(row), intr) for row in arr]
    out = []
    for item in X:
        if isinstance(item, CameraPose):
            out.append((item, intr))
        else:
            pose, cam_intr = item
            out.append((pose, cam_intr))
    return out


def check_latent(X) -> np.ndarray:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 4:
        raise ShapeMismatch(f"expected a (T, H, W, C) latent, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("latent holds non-finite values")
    return arr
