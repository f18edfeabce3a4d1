"""Toy-scale context tokenization: patchify, 2x spatial context compression,
pooled rotary positions and per-frame camera conditioning.

Latent grids are numpy arrays shaped (T, H, W, C). Token sequences are
(N, C_out) with N ordered by (t, h, w), plus an (N, 3) array of
(t, h, w) positions.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import OddChannels, ShapeMismatch


@dataclass(frozen=True, eq=False)
class TokenGrid:
    values: np.ndarray
    origin: str = "prediction"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 4 or min(v.shape) < 1:
            raise ShapeMismatch(f"expected a non-empty (T, H, W, C) array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("token grid holds non-finite values")
        if self.origin not in ("prediction", "context"):
            raise ValueError(f"unknown origin {self.origin!r}")
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True, eq=False)
class PatchifyWeights:
    kernel: np.ndarray  # (C_out, C_in, 1, p, p)
    bias: np.ndarray  # (C_out,)

    @property
    def patch(self) -> int:
        return self.kernel.shape[-1]

    @classmethod
    def random(cls, c_in: int, c_out: int, patch: int = 2, seed: int = 0) -> "PatchifyWeights":
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(c_in * patch * patch)
        return cls(rng.normal(0, scale, (c_out, c_in, 1, patch, patch)), rng.normal(0, 0.1, c_out))


@dataclass(frozen=True, eq=False)
class CompressorWeights:
    kernel: np.ndarray  # (C_out, C_in, 1, 2p, 2p), stride (1, 2p, 2p)
    bias: np.ndarray

    @property
    def patch(self) -> int:
        return self.kernel.shape[-1]


@dataclass(frozen=True, eq=False)
class CamEncoderWeights:
    weight: np.ndarray  # (C, 12)
    bias: np.ndarray  # (C,)


def _as_grid(latent) -> np.ndarray:
    if isinstance(latent, TokenGrid):
        return latent.values
    return TokenGrid(latent).values


def _strided_patches(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Non-overlapping spatial convolution, temporal extent 1."""
    T, H, W, C = x.shape
    c_out, c_in, kt, ph, pw = kernel.shape
    if kt != 1 or ph != pw:
        raise ShapeMismatch(f"unsupported kernel shape {kernel.shape}")
    if c_in != C:
        raise ShapeMismatch(f"kernel expects {c_in} channels, latent has {C}")
    if H % ph or W % pw:
        raise ShapeMismatch(f"latent {H}x{W} is not divisible by patch {ph}")
    blocks = x.reshape(T, H // ph, ph, W // pw, pw, C)
    out = np.einsum("thawbc,ocab->thwo", blocks, kernel[:, :, 0], optimize=True)
    return out.reshape(-1, c_out) + bias


def lattice_positions(T: int, Hp: int, Wp: int) -> np.ndarray:
    t, h, w = np.meshgrid(np.arange(T), np.arange(Hp), np.arange(Wp), indexing="ij")
    return np.stack([t, h, w], axis=-1).reshape(-1, 3).astype(np.float64)


def patchify(latent, w: PatchifyWeights) -> Tuple[np.ndarray, np.ndarray]:
    x = _as_grid(latent)
    tokens = _strided_patches(x, w.kernel, w.bias)
    T, H, W, _ = x.shape
    return tokens, lattice_positions(T, H // w.patch, W // w.patch)


def compress_context(latent, w: CompressorWeights, t_offset: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Context tokens at a quarter of the patchify count.

    Spatial positions are the means of the 2x2 patchify-lattice groups each
    token covers; temporal positions are shifted by ``t_offset`` so context
    frames sit after the prediction frames.
    """
    if isinstance(latent, TokenGrid) and latent.origin != "context":
        raise ShapeMismatch("compress_context expects a context grid")
    x = _as_grid(latent)
    tokens = _strided_patches(x, w.kernel, w.bias)
    T, H, W, _ = x.shape
    p = w.patch // 2
    fine = lattice_positions(T, H // p, W // p).reshape(T, H // (2 * p), 2, W // (2 * p), 2, 3)
    pos = fine.mean(axis=(2, 4)).reshape(-1, 3)
    pos[:, 0] += t_offset
    return tokens, pos


def init_from_patchify(w: PatchifyWeights) -> CompressorWeights:
    """Tile the patchify kernel over the 2p x 2p support, each tile scaled by
    1/4, so a patch block maps to the patchify output of its mean patch."""
    kernel = np.tile(w.kernel, (1, 1, 1, 2, 2)) / 4.0
    return CompressorWeights(kernel, np.array(w.bias, dtype=np.float64, copy=True))


def downsample2(latent) -> np.ndarray:
    """2x2 average pooling over the spatial axes."""
    x = _as_grid(latent)
    T, H, W, C = x.shape
    if H % 2 or W % 2:
        raise ShapeMismatch("spatial dims must be even")
    return x.reshape(T, H // 2, 2, W // 2, 2, C).mean(axis=(2, 4))


def default_axis_split(channels: int) -> Tuple[int, int, int]:
    """Channel budget per (t, h, w) rotary axis; each entry is even."""
    if channels % 2:
        raise OddChannels(f"rotary channels must be even, got {channels}")
    hw = 2 * (channels // 6)
    return channels - 2 * hw, hw, hw


def rope_rotate(
    tokens,
    positions,
    base: float = 10000.0,
    axis_split: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """3-axis rotary encoding on interleaved channel pairs.

    Channels are split into contiguous (t, h, w) groups; inside a group of
    size d, pair i is rotated by ``pos * base**(-2i/d)``.
    """
    x = np.asarray(tokens, dtype=np.float64)
    pos = np.asarray(positions, dtype=np.float64)
    C = x.shape[-1]
    if C % 2:
        raise OddChannels(f"token channels must be even, got {C}")
    split = default_axis_split(C) if axis_split is None else tuple(axis_split)
    if len(split) != 3 or sum(split) != C or any(s % 2 for s in split):
        raise OddChannels(f"axis split {split} must be three even sizes summing to {C}")
    if pos.shape != x.shape[:-1] + (3,):
        raise ShapeMismatch(f"positions shape {pos.shape} does not match tokens {x.shape}")
    angles = []
    for axis, d in enumerate(split):
        if d == 0:
            continue
        freqs = base ** (-np.arange(0, d, 2) / d)
        angles.append(pos[..., axis, None] * freqs)
    theta = np.concatenate(angles, axis=-1)
    cos, sin = np.cos(theta), np.sin(theta)
    even, odd = x[..., 0::2], x[..., 1::2]
    out = np.empty_like(x)
    out[..., 0::2] = even * cos - odd * sin
    out[..., 1::2] = even * sin + odd * cos
    return out


def camera_condition(F_in, cams, w: CamEncoderWeights) -> np.ndarray:
    """Add the per-frame camera encoding to every token of that frame.

    ``F_in`` is (F, N, C), ``cams`` is (F, 12).
    """
    F_in = np.asarray(F_in, dtype=np.float64)
    cams = np.asarray(cams, dtype=np.float64)
    W = np.asarray(w.weight, dtype=np.float64)
    if F_in.ndim != 3 or cams.shape != (F_in.shape[0], 12):
        raise ShapeMismatch(f"need (F, N, C) features and (F, 12) cams, got {F_in.shape}, {cams.shape}")
    if W.shape != (F_in.shape[2], 12) or np.shape(w.bias) != (F_in.shape[2],):
        raise ShapeMismatch(f"encoder shape {W.shape} does not map 12 -> {F_in.shape[2]}")
    enc = cams @ W.T + w.bias
    return F_in + enc[:, None, :]


# -- weight files -------------------------------------------------------------
# layout: uint32 LE header length, JSON header, then float32 LE tensors


def save_weights(path, tensors: Dict[str, np.ndarray]):
    header, blobs, offset = {}, [], 0
    for name, arr in tensors.items():
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        header[name] = {"shape": list(np.shape(arr)), "offset": offset, "nbytes": len(data)}
        blobs.append(data)
        offset += len(data)
    head = json.dumps({"dtype": "float32", "tensors": header}).encode()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        for b in blobs:
            fh.write(b)


def load_weights(path) -> Dict[str, np.ndarray]:
    raw = Path(path).read_bytes()
    (n,) = struct.unpack_from("<I", raw, 0)
    header = json.loads(raw[4 : 4 + n])
    body = raw[4 + n :]
    out = {}
    for name, meta in header["tensors"].items():
        chunk = body[meta["offset"] : meta["offset"] + meta["nbytes"]]
        out[name] = np.frombuffer(chunk, dtype="<f4").reshape(meta["shape"]).astype(np.float64)
    return out


def weights_to_tensors(w) -> Dict[str, np.ndarray]:
    if isinstance(w, CamEncoderWeights):
        return {"weight": w.weight, "bias": w.bias}
    return {"kernel": w.kernel, "bias": w.bias}
