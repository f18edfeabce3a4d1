"""Co-visibility between two cameras as the IoU of their visible volumes.

The Monte Carlo estimator samples points uniformly in the bounding box of
both frusta and counts frustum memberships. ``covisibility_oracle`` is a
deterministic lattice count over the same box that serves as ground truth.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .camera import (
    DEFAULT_FAR,
    DEFAULT_NEAR,
    PLANE_EPS,
    CameraPose,
    Frustum,
    Intrinsics,
    build_frustum,
    separated,
)
from .errors import BadClipPlanes, EmptyInput

Camera = Tuple[CameraPose, Intrinsics]
DEFAULT_SAMPLES = 10_000


@dataclass(frozen=True)
class CovisConfig:
    n_samples: int = DEFAULT_SAMPLES
    near: float = DEFAULT_NEAR
    far: float = DEFAULT_FAR
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not (self.near > 0 and self.far > self.near):
            raise BadClipPlanes(f"need 0 < near < far, got {self.near}, {self.far}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class CovisResult:
    iou: float
    n_union: int
    n_intersection: int
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "iou": self.iou,
            "n_union": self.n_union,
            "n_intersection": self.n_intersection,
            "n_samples": self.n_samples,
        }


def union_box(fa: Frustum, fb: Frustum):
    pts = np.vstack([fa.corners, fb.corners])
    return pts.min(axis=0), pts.max(axis=0)


def pair_seed(seed: int, a: int, b: int) -> int:
    """Per-pair seed; symmetric in (a, b) so score matrices over a shared
    camera list come out exactly symmetric."""
    lo, hi = sorted((int(a), int(b)))
    ss = np.random.SeedSequence([int(seed), lo, hi])
    return int(ss.generate_state(1, np.uint64)[0])


def _mc_counts(fa: Frustum, fb: Frustum, n: int, seed: int) -> Tuple[int, int]:
    lo, hi = union_box(fa, fb)
    rng = np.random.default_rng(seed)
    # planes x points layout keeps the per-plane reductions contiguous
    pts = rng.random((3, n))
    pts *= (hi - lo)[:, None]
    pts += lo[:, None]
    normals = np.vstack([fa.normals, fb.normals])
    offsets = np.concatenate([fa.offsets, fb.offsets]) + PLANE_EPS
    inside = normals @ pts <= offsets[:, None]
    va = np.logical_and.reduce(inside[:6], axis=0)
    vb = np.logical_and.reduce(inside[6:], axis=0)
    return int(np.count_nonzero(va & vb)), int(np.count_nonzero(va | vb))


def _iou(n_inter: int, n_union: int) -> float:
    return n_inter / n_union if n_union > 0 else 0.0


def covisibility(c1: Camera, c2: Camera, cfg: CovisConfig = CovisConfig()) -> CovisResult:
    fa = build_frustum(*c1, cfg.near, cfg.far)
    fb = build_frustum(*c2, cfg.near, cfg.far)
    n_inter, n_union = _mc_counts(fa, fb, cfg.n_samples, cfg.seed)
    return CovisResult(_iou(n_inter, n_union), n_union, n_inter, cfg.n_samples)


# -- lattice oracle ---------------------------------------------------------


def _row_intervals(pose: CameraPose, intr: Intrinsics, near, far, Y, Z):
    """For lattice rows at (y, z), the interval of world x visible to the
    camera, from the pinhole conditions in camera coordinates."""
    R, t = pose.R, pose.t
    a, b = intr.tan_half_h, intr.tan_half_v
    # camera coords along a row: v(x) = base + x * R[:, 0]
    base = R[:, 1, None, None] * Y + R[:, 2, None, None] * Z + t[:, None, None]
    slope = R[:, 0]
    # each row g: g . v <= rhs
    g = np.array(
        [
            [0.0, 0.0, -1.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, -a],
            [-1.0, 0.0, -a],
            [0.0, 1.0, -b],
            [0.0, -1.0, -b],
        ]
    )
    rhs = np.array([-near, far, 0.0, 0.0, 0.0, 0.0])
    lo = np.full(Y.shape, -np.inf)
    hi = np.full(Y.shape, np.inf)
    for gk, rk in zip(g, rhs):
        A = np.tensordot(gk, base, axes=1)
        B = float(gk @ slope)
        if abs(B) < 1e-15:
            dead = A > rk
            lo[dead], hi[dead] = np.inf, -np.inf
        elif B > 0:
            hi = np.minimum(hi, (rk - A) / B)
        else:
            lo = np.maximum(lo, (rk - A) / B)
    return lo, hi


def _count(lo, hi, x0, h, n):
    # open interval: lattice points on a face plane are not counted
    i_lo = np.clip(np.floor((lo - x0) / h) + 1, 0, n)
    i_hi = np.clip(np.ceil((hi - x0) / h) - 1, -1, n - 1)
    return np.maximum(i_hi - i_lo + 1, 0)


def covisibility_oracle(
    c1: Camera,
    c2: Camera,
    resolution: int = 200,
    near: float = DEFAULT_NEAR,
    far: float = DEFAULT_FAR,
) -> float:
    """IoU over the ``resolution**3`` cell-center lattice of the union box,
    counting points strictly inside each frustum.

    Rows along x are counted analytically, so the cost is quadratic in
    ``resolution``.
    """
    if resolution < 16:
        raise ValueError("resolution must be >= 16")
    fa = build_frustum(*c1, near, far)
    fb = build_frustum(*c2, near, far)
    lo, hi = union_box(fa, fb)
    h = (hi - lo) / resolution
    centers = [lo[d] + (np.arange(resolution) + 0.5) * h[d] for d in range(3)]
    Y, Z = np.meshgrid(centers[1], centers[2], indexing="ij")
    a_lo, a_hi = _row_intervals(*c1, near, far, Y, Z)
    b_lo, b_hi = _row_intervals(*c2, near, far, Y, Z)
    x0 = centers[0][0]
    n_a = _count(a_lo, a_hi, x0, h[0], resolution).sum()
    n_b = _count(b_lo, b_hi, x0, h[0], resolution).sum()
    n_ab = _count(np.maximum(a_lo, b_lo), np.minimum(a_hi, b_hi), x0, h[0], resolution).sum()
    return _iou(float(n_ab), float(n_a + n_b - n_ab))


# -- batch scoring ----------------------------------------------------------


def pairwise_matrix(
    pred: Sequence[Camera],
    hist: Sequence[Camera],
    cfg: CovisConfig = CovisConfig(),
    pred_keys: Optional[Sequence[int]] = None,
    hist_keys: Optional[Sequence[int]] = None,
    n_jobs: int = 1,
) -> np.ndarray:
    """Co-visibility of every (pred, hist) pair.

    Entry (i, j) equals ``covisibility(pred[i], hist[j], cfg')`` where
    ``cfg'`` carries ``pair_seed(cfg.seed, pred_keys[i], hist_keys[j])``;
    keys default to list positions. Rows evaluate independently, so the
    result does not depend on ``n_jobs``. Pairs whose frusta are separated
    by a face plane score 0 without sampling.
    """
    if len(pred) == 0 or len(hist) == 0:
        raise EmptyInput("pairwise_matrix needs non-empty camera lists")
    pk = list(range(len(pred))) if pred_keys is None else list(pred_keys)
    hk = list(range(len(hist))) if hist_keys is None else list(hist_keys)
    if len(pk) != len(pred) or len(hk) != len(hist):
        raise ValueError("key lists must match camera lists")
    fp = [build_frustum(*c, cfg.near, cfg.far) for c in pred]
    fh = [build_frustum(*c, cfg.near, cfg.far) for c in hist]

    def row(i):
        out = np.zeros(len(fh))
        for j, fb in enumerate(fh):
            if separated(fp[i], fb):
                continue
            n_inter, n_union = _mc_counts(fp[i], fb, cfg.n_samples, pair_seed(cfg.seed, pk[i], hk[j]))
            out[j] = _iou(n_inter, n_union)
        return out

    if n_jobs == 1:
        rows = [row(i) for i in range(len(fp))]
    else:
        with ThreadPoolExecutor(max_workers=None if n_jobs < 0 else n_jobs) as ex:
            rows = list(ex.map(row, range(len(fp))))
    return np.vstack(rows)


def with_seed(cfg: CovisConfig, seed: int) -> CovisConfig:
    return replace(cfg, seed=seed)
