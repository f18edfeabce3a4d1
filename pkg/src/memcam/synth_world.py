"""A closed cylindrical room with flat-colored cells and a ray caster.

World +Y points down (matching the camera convention), so the floor sits
at ``y = +height/2`` and the ceiling at ``y = -height/2``. Azimuth is
measured from +Z towards +X.

Cell ids: wall cells first (``h_idx * n_azimuth + az_idx``), then floor
cells, then ceiling cells (both ``ring * n_sectors + sector``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from PIL import Image

from .camera import CameraPose, Intrinsics
from .errors import CameraOutsideScene, ShapeMismatch

MISS = np.iinfo(np.uint32).max
_MASK24 = (1 << 24) - 1


@dataclass(frozen=True)
class SceneSpec:
    radius: float = 5.0
    height: float = 3.0
    n_azimuth: int = 64
    n_height: int = 16
    n_rings: int = 4
    n_sectors: int = 32
    palette_seed: int = 0

    def __post_init__(self):
        for name in ("n_azimuth", "n_height", "n_rings", "n_sectors"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.radius <= 0 or self.height <= 0:
            raise ValueError("radius and height must be positive")
        if self.n_cells > 1 << 24:
            raise ValueError("too many cells for an injective 24-bit palette")

    @property
    def n_wall(self) -> int:
        return self.n_azimuth * self.n_height

    @property
    def n_disc(self) -> int:
        return self.n_rings * self.n_sectors

    @property
    def n_cells(self) -> int:
        return self.n_wall + 2 * self.n_disc


def palette(scene: SceneSpec) -> np.ndarray:
    """RGB color per cell id. A seeded bijection on 24-bit integers, so
    distinct cells never share a color."""
    rng = np.random.default_rng(scene.palette_seed)
    mul1, mul2 = (int(m) | 1 for m in rng.integers(1, 1 << 24, size=2))
    add = int(rng.integers(0, 1 << 24))
    x = np.arange(scene.n_cells, dtype=np.uint64)
    x = (x * np.uint64(mul1) + np.uint64(add)) & np.uint64(_MASK24)
    x ^= x >> np.uint64(12)
    x = (x * np.uint64(mul2)) & np.uint64(_MASK24)
    x ^= x >> np.uint64(7)
    rgb = np.stack([(x >> np.uint64(s)) & np.uint64(0xFF) for s in (16, 8, 0)], axis=-1)
    return rgb.astype(np.uint8)


def check_inside(scene: SceneSpec, pose: CameraPose):
    c = pose.center
    if not (np.hypot(c[0], c[2]) < scene.radius and abs(c[1]) < scene.height / 2):
        raise CameraOutsideScene(f"camera center {c} is not inside the room")


def _azimuth_index(x, z, n):
    az = np.mod(np.arctan2(x, z), 2 * np.pi)
    return np.minimum((az * (n / (2 * np.pi))).astype(np.int64), n - 1)


def pixel_rays(intr: Intrinsics, width: int, height: int) -> np.ndarray:
    """Camera-frame ray directions through pixel centers, shape (H, W, 3)."""
    fx = (width / 2) / intr.tan_half_h
    fy = (height / 2) / intr.tan_half_v
    u = (np.arange(width) + 0.5 - width / 2) / fx
    v = (np.arange(height) + 0.5 - height / 2) / fy
    d = np.empty((height, width, 3))
    d[..., 0] = u[None, :]
    d[..., 1] = v[:, None]
    d[..., 2] = 1.0
    return d


def render_ids(
    scene: SceneSpec, pose: CameraPose, intr: Intrinsics, width: int, height: int
) -> np.ndarray:
    """Cell id of the nearest surface hit per pixel, uint32 (H, W)."""
    if width < 1 or height < 1:
        raise ShapeMismatch("image size must be positive")
    check_inside(scene, pose)
    o = pose.center
    d = pixel_rays(intr, width, height) @ pose.R  # world directions
    dx, dy, dz = d[..., 0], d[..., 1], d[..., 2]

    a = dx * dx + dz * dz
    b = 2 * (o[0] * dx + o[2] * dz)
    c = o[0] ** 2 + o[2] ** 2 - scene.radius**2
    with np.errstate(divide="ignore", invalid="ignore"):
        t_wall = np.where(a > 0, (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a), np.inf)
        half = scene.height / 2
        t_floor = np.where(dy > 0, (half - o[1]) / dy, np.inf)
        t_ceil = np.where(dy < 0, (-half - o[1]) / dy, np.inf)

    ids = np.full((height, width), MISS, dtype=np.uint32)
    # ties go to the wall, which has the smaller ids
    wall = (t_wall <= t_floor) & (t_wall <= t_ceil) & np.isfinite(t_wall)
    floor = ~wall & (t_floor <= t_ceil) & np.isfinite(t_floor)
    ceil = ~wall & ~floor & np.isfinite(t_ceil)

    t = np.where(wall, t_wall, np.where(floor, t_floor, t_ceil))
    t = np.where(np.isfinite(t), t, 0.0)
    px = o[0] + t * dx
    py = o[1] + t * dy
    pz = o[2] + t * dz

    az_w = _azimuth_index(px, pz, scene.n_azimuth)
    h_idx = np.clip(((py + half) / scene.height * scene.n_height).astype(np.int64), 0, scene.n_height - 1)
    ids[wall] = (h_idx * scene.n_azimuth + az_w)[wall]

    r = np.hypot(px, pz)
    ring = np.clip((r / scene.radius * scene.n_rings).astype(np.int64), 0, scene.n_rings - 1)
    disc = ring * scene.n_sectors + _azimuth_index(px, pz, scene.n_sectors)
    ids[floor] = (scene.n_wall + disc)[floor]
    ids[ceil] = (scene.n_wall + scene.n_disc + disc)[ceil]
    return ids


def ids_to_image(scene: SceneSpec, ids: np.ndarray) -> np.ndarray:
    pal = palette(scene)
    out = np.zeros(ids.shape + (3,), dtype=np.uint8)
    hit = ids != MISS
    out[hit] = pal[ids[hit]]
    return out


def render(
    scene: SceneSpec, pose: CameraPose, intr: Intrinsics, width: int, height: int
) -> np.ndarray:
    """RGB uint8 image (H, W, 3), flat-shaded by cell color."""
    return ids_to_image(scene, render_ids(scene, pose, intr, width, height))


def surface_covisibility(
    scene: SceneSpec,
    c1: Tuple[CameraPose, Intrinsics],
    c2: Tuple[CameraPose, Intrinsics],
    resolution: int = 128,
    height: Optional[int] = None,
) -> float:
    """IoU of the visible cell-id sets of two cameras, rendered at
    ``resolution`` pixels wide."""

    def cells(cam):
        pose, intr = cam
        h = height or max(1, round(resolution / intr.aspect))
        ids = render_ids(scene, pose, intr, resolution, h)
        return np.unique(ids[ids != MISS])

    a, b = cells(c1), cells(c2)
    union = np.union1d(a, b).size
    return np.intersect1d(a, b).size / union if union else 0.0


def wall_azimuth_indices(scene: SceneSpec, ids: np.ndarray) -> np.ndarray:
    w = ids[ids < scene.n_wall]
    return np.unique(w % scene.n_azimuth)


ID_PNG_MISS = 0xFFFF


def save_ids_png(path, scene: SceneSpec, ids: np.ndarray):
    """Write an id buffer as 16-bit grayscale; misses become 0xFFFF."""
    if scene.n_cells >= ID_PNG_MISS:
        raise ValueError("scene has too many cells for a 16-bit id image")
    out = np.where(ids == MISS, ID_PNG_MISS, ids).astype(np.uint16)
    Image.fromarray(out).save(path)


def load_ids_png(path) -> np.ndarray:
    with Image.open(path) as im:
        raw = np.asarray(im).astype(np.uint32)
    return np.where(raw == ID_PNG_MISS, MISS, raw).astype(np.uint32)
