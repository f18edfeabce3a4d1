"""Round-trip consistency metrics: PSNR and SSIM over mirrored frame pairs."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
from PIL import Image
from scipy.ndimage import correlate1d

from .errors import DimensionMismatch, FrameCountMismatch, TooSmall
from .trajectory import expected_length

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1, SSIM_K2 = 0.01, 0.03
DYNAMIC_RANGE = 255.0
LUMA = np.array([0.299, 0.587, 0.114])

FRAME_RE = re.compile(r"frame_(\d+)\.png$")


def _pair(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    return a.astype(np.float64), b.astype(np.float64)


def psnr(a, b) -> float:
    a, b = _pair(a, b)
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10 * np.log10(DYNAMIC_RANGE**2 / mse)))


def to_luma(img) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    return img[..., :3] @ LUMA


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x**2) / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    r = len(g) // 2
    y = correlate1d(x, g, axis=0, mode="constant")
    y = correlate1d(y, g, axis=1, mode="constant")
    return y[r : x.shape[0] - r, r : x.shape[1] - r]


def ssim(a, b) -> float:
    """Mean SSIM on luma over all window centers where the 11x11 Gaussian
    window fits inside the image."""
    a, b = _pair(a, b)
    if min(a.shape[:2]) < SSIM_WINDOW:
        raise TooSmall(f"SSIM needs images at least {SSIM_WINDOW} px on each side")
    x, y = to_luma(a), to_luma(b)
    g = gaussian_window()
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
    mx, my = _filter_valid(x, g), _filter_valid(y, g)
    sxx = _filter_valid(x * x, g) - mx * mx
    syy = _filter_valid(y * y, g) - my * my
    sxy = _filter_valid(x * y, g) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


@dataclass
class RoundTripReport:
    benchmark: str
    segment_len: int
    pairs: List[tuple] = field(default_factory=list)
    psnr: List[float] = field(default_factory=list)
    ssim: List[float] = field(default_factory=list)

    @property
    def pair_count(self) -> int:
        return len(self.pairs)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean(self.psnr)) if self.psnr else float("nan")

    @property
    def mean_ssim(self) -> float:
        return float(np.mean(self.ssim)) if self.ssim else float("nan")

    def to_dict(self) -> dict:
        return {
            "kind": "roundtrip",
            "benchmark": self.benchmark,
            "segment_len": self.segment_len,
            "pair_count": self.pair_count,
            "mean_psnr": self.mean_psnr,
            "mean_ssim": self.mean_ssim,
            "pairs": [
                {"i": i, "j": j, "psnr": p, "ssim": s}
                for (i, j), p, s in zip(self.pairs, self.psnr, self.ssim)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoundTripReport":
        rows = d["pairs"]
        return cls(
            d["benchmark"],
            d["segment_len"],
            [(r["i"], r["j"]) for r in rows],
            [r["psnr"] for r in rows],
            [r["ssim"] for r in rows],
        )


def frame_paths(directory) -> List[Path]:
    found = []
    for p in Path(directory).iterdir():
        m = FRAME_RE.search(p.name)
        if m:
            found.append((int(m.group(1)), p))
    return [p for _, p in sorted(found)]


def load_frame(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def save_frame(path, img: np.ndarray):
    Image.fromarray(np.ascontiguousarray(img, dtype=np.uint8)).save(path)


def roundtrip_metrics(
    frames: Union[Sequence[np.ndarray], str, Path],
    benchmark: str,
    segment_len: int = 76,
) -> RoundTripReport:
    """Score frame i against frame L-1-i for every i before the apex.

    ``frames`` may be arrays, image paths, or a directory of
    ``frame_NNNNNN.png`` files; paths are loaded one pair at a time.
    """
    if isinstance(frames, (str, Path)):
        frames = frame_paths(frames)
    L = expected_length(benchmark, segment_len)
    if len(frames) != L:
        raise FrameCountMismatch(f"{benchmark} with segment_len {segment_len} needs {L} frames, got {len(frames)}")

    def get(i):
        f = frames[i]
        return load_frame(f) if isinstance(f, (str, Path)) else np.asarray(f)

    shape = get((L - 1) // 2).shape
    report = RoundTripReport(benchmark, segment_len)
    for i in range((L - 1) // 2):
        j = L - 1 - i
        a, b = get(i), get(j)
        if a.shape != shape or b.shape != shape:
            raise DimensionMismatch(f"frames {i}/{j} do not match shape {shape}")
        report.pairs.append((i, j))
        report.psnr.append(psnr(a, b))
        report.ssim.append(ssim(a, b))
    return report
