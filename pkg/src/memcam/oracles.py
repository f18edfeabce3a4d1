"""Slow reference implementations used to cross-check the vectorized code,
plus the self-check suite behind ``memcam compress-check``."""
from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np

from .camera import flatten_cam, look_pose
from .compressor import (
    CamEncoderWeights,
    PatchifyWeights,
    camera_condition,
    compress_context,
    downsample2,
    init_from_patchify,
    patchify,
    rope_rotate,
)


def naive_patchify(x, kernel, bias):
    T, H, W, C = x.shape
    c_out, _, _, p, _ = kernel.shape
    out = []
    for t in range(T):
        for i in range(H // p):
            for j in range(W // p):
                tok = np.zeros(c_out)
                for o in range(c_out):
                    acc = bias[o]
                    for c in range(C):
                        for a in range(p):
                            for b in range(p):
                                acc += kernel[o, c, 0, a, b] * x[t, i * p + a, j * p + b, c]
                    tok[o] = acc
                out.append(tok)
    return np.array(out)


def naive_camera_condition(F_in, cams, weight, bias):
    out = np.array(F_in, dtype=np.float64, copy=True)
    F, N, C = out.shape
    for f in range(F):
        for n in range(N):
            for c in range(C):
                out[f, n, c] += sum(weight[c, q] * cams[f][q] for q in range(12)) + bias[c]
    return out


def naive_psnr(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    total = 0.0
    for v, w in zip(a.ravel().tolist(), b.ravel().tolist()):
        total += (v - w) ** 2
    mse = total / a.size
    return 99.0 if mse == 0 else min(99.0, 10 * math.log10(255.0**2 / mse))


def naive_ssim(a, b, size=11, sigma=1.5):
    lum = np.array([0.299, 0.587, 0.114])
    x = np.asarray(a, dtype=np.float64) @ lum
    y = np.asarray(b, dtype=np.float64) @ lum
    g1 = [math.exp(-((i - (size - 1) / 2) ** 2) / (2 * sigma**2)) for i in range(size)]
    s = sum(g1)
    g = np.outer(g1, g1) / (s * s)
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2
    vals = []
    for r in range(x.shape[0] - size + 1):
        for c in range(x.shape[1] - size + 1):
            px = x[r : r + size, c : c + size]
            py = y[r : r + size, c : c + size]
            mx, my = (g * px).sum(), (g * py).sum()
            vx = (g * (px - mx) ** 2).sum()
            vy = (g * (py - my) ** 2).sum()
            cxy = (g * (px - mx) * (py - my)).sum()
            vals.append(((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


def block_constant_latent(rng, T, H, W, C, block):
    coarse = rng.normal(size=(T, H // block, W // block, C))
    return np.repeat(np.repeat(coarse, block, axis=1), block, axis=2)


def run_compress_checks(seed: int = 0) -> List[Tuple[str, bool, str]]:
    rng = np.random.default_rng(seed)
    results = []

    def add(name, ok, detail=""):
        results.append((name, bool(ok), detail))

    # token-count law
    ok = True
    for _ in range(50):
        p = 2
        T = int(rng.integers(1, 5))
        H = 2 * p * int(rng.integers(1, 5))
        W = 2 * p * int(rng.integers(1, 5))
        C = int(rng.integers(4, 17))
        x = rng.normal(size=(T, H, W, C))
        pw = PatchifyWeights.random(C, 8, p, seed=int(rng.integers(1 << 31)))
        n_p = len(patchify(x, pw)[0])
        toks, pos = compress_context(x, init_from_patchify(pw))
        ok &= n_p == 4 * len(toks) and len(np.unique(pos[:, 0])) == T
    add("token count = patchify / 4", ok)

    # initialization equivalence and negative control
    worst, diffs = 0.0, []
    for _ in range(20):
        C, p = int(rng.integers(4, 9)), 2
        pw = PatchifyWeights.random(C, 8, p, seed=int(rng.integers(1 << 31)))
        cw = init_from_patchify(pw)
        xb = block_constant_latent(rng, 2, 8, 8, C, 2 * p)
        worst = max(worst, np.max(np.abs(compress_context(xb, cw)[0] - patchify(downsample2(xb), pw)[0])))
        xr = rng.normal(size=(2, 8, 8, C))
        diffs.append(np.max(np.abs(compress_context(xr, cw)[0] - patchify(downsample2(xr), pw)[0])))
    add("init equivalence on block-constant input", worst <= 1e-9, f"max diff {worst:.2e}")
    add("paths differ on general input", min(diffs) > 0, f"min diff {min(diffs):.2e}")

    # patchify vs naive loop
    x = rng.normal(size=(2, 4, 6, 3))
    pw = PatchifyWeights.random(3, 4, 2, seed=1)
    err = np.max(np.abs(patchify(x, pw)[0] - naive_patchify(x, pw.kernel, pw.bias)))
    add("patchify matches naive loop", err <= 1e-9, f"max diff {err:.2e}")

    # camera conditioning
    F, N, C = 3, 5, 6
    F_in = rng.normal(size=(F, N, C))
    cams = np.array([flatten_cam(look_pose(rng.normal(size=3), rng.uniform(0, 360))) for _ in range(F)])
    zero = CamEncoderWeights(np.zeros((C, 12)), np.zeros(C))
    add("zero camera encoder is identity", np.array_equal(camera_condition(F_in, cams, zero), F_in))
    w = CamEncoderWeights(rng.normal(size=(C, 12)), rng.normal(size=C))
    err = np.max(np.abs(camera_condition(F_in, cams, w) - naive_camera_condition(F_in, cams, w.weight, w.bias)))
    add("camera conditioning matches naive loop", err <= 1e-9, f"max diff {err:.2e}")

    # rope
    toks = rng.normal(size=(100, 12))
    pos = rng.uniform(-20, 20, size=(100, 3))
    rot = rope_rotate(toks, pos)
    err = np.max(np.abs(np.linalg.norm(rot, axis=1) - np.linalg.norm(toks, axis=1)))
    add("rope preserves norms", err <= 1e-9, f"max diff {err:.2e}")
    worst = 0.0
    for _ in range(100):
        q, k = rng.normal(size=(2, 12))
        a, b, s = rng.uniform(-20, 20, size=(3, 3))
        lhs = rope_rotate(q[None], a[None])[0] @ rope_rotate(k[None], b[None])[0]
        rhs = rope_rotate(q[None], (a + s)[None])[0] @ rope_rotate(k[None], (b + s)[None])[0]
        worst = max(worst, abs(lhs - rhs))
    add("rope relative-position invariance", worst <= 1e-6, f"max diff {worst:.2e}")
    return results
