"""Acceptance suite: one test per criterion. A PASS/FAIL line per criterion
is printed in the pytest terminal summary."""
import time

import numpy as np
import pytest

from memcam.bench import BenchConfig, run_retrieval_bench, run_roundtrip_bench
from memcam.camera import Intrinsics, flatten_cam, identity_pose, look_pose, pose_from_rt
from memcam.compressor import (
    CamEncoderWeights,
    PatchifyWeights,
    camera_condition,
    compress_context,
    downsample2,
    init_from_patchify,
    patchify,
    rope_rotate,
)
from memcam.covisibility import CovisConfig, covisibility, covisibility_oracle, pairwise_matrix
from memcam.errors import FieldCount, FrameCountMismatch, NonNumeric, NotARotation
from memcam.memory import ContextAssignment, apply_context_dropout
from memcam.metrics import roundtrip_metrics
from memcam.oracles import block_constant_latent, naive_camera_condition
from memcam.posefile import PoseRecord, format_re10k, parse_re10k
from memcam.synth_world import SceneSpec, surface_covisibility
from memcam.trajectory import roundtrip_trajectory
from tests.conftest import random_camera, random_pair
from tests.test_camera import random_rotation

SQ = Intrinsics(90, 1)


def report(n, msg):
    print(f"[criterion {n}] {msg}")


@pytest.mark.criterion(1, "Monte Carlo IoU vs lattice oracle")
def test_c01_covis_correctness():
    rng = np.random.default_rng(2024)
    pairs = [random_pair(rng) for _ in range(20)]
    t0 = time.perf_counter()
    errs = [
        abs(covisibility(a, b, CovisConfig(10_000, seed=i)).iou - covisibility_oracle(a, b, 200))
        for i, (a, b) in enumerate(pairs)
    ]
    elapsed = time.perf_counter() - t0
    good = sum(e <= 0.03 for e in errs)
    report(1, f"{good}/20 within 0.03, max err {max(errs):.4f}, {elapsed:.2f}s")
    assert good >= 19
    assert elapsed <= 10.0
    c = random_camera(rng)
    assert covisibility(c, c).iou == 1.0
    assert covisibility((identity_pose(), SQ), (look_pose([0, 0, 0], 180), SQ)).iou == 0.0


@pytest.mark.criterion(2, "symmetry and determinism")
def test_c02_symmetry_determinism():
    rng = np.random.default_rng(7)
    for i in range(100):
        a, b = random_pair(rng)
        cfg = CovisConfig(seed=i)
        assert covisibility(a, b, cfg) == covisibility(b, a, cfg)
    a, b = random_pair(rng)
    runs = {covisibility(a, b, CovisConfig(seed=11)).iou for _ in range(5)}
    assert len(runs) == 1
    cams = [random_camera(rng) for _ in range(16)]
    m1 = pairwise_matrix(cams, cams, n_jobs=1)
    m4 = pairwise_matrix(cams, cams, n_jobs=4)
    assert m1.tobytes() == m4.tobytes()
    np.testing.assert_array_equal(m1, m1.T)
    report(2, "100 pairs symmetric, repeat runs identical, 1 vs 4 threads identical")


@pytest.mark.criterion(3, "monotone co-visibility with matching ranks")
def test_c03_monotonicity():
    yaws = list(range(0, 91, 15))
    c0 = (identity_pose(), SQ)
    others = [(look_pose([0, 0, 0], y), SQ) for y in yaws]
    orac = [covisibility_oracle(c0, c, 200) for c in others]
    surf = [surface_covisibility(SceneSpec(), c0, c) for c in others]
    report(3, "oracle " + " ".join(f"{v:.3f}" for v in orac) + " | surface " + " ".join(f"{v:.3f}" for v in surf))
    assert all(x >= y for x, y in zip(orac, orac[1:]))
    assert all(x >= y for x, y in zip(surf, surf[1:]))
    assert list(np.argsort(orac, kind="stable")) == list(np.argsort(surf, kind="stable"))


@pytest.mark.slow
@pytest.mark.criterion(4, "strategy ordering on deg360 and deg90")
def test_c04_strategy_ordering():
    names = ("ours", "topk", "random", "recent", "train")
    t0 = time.perf_counter()
    r360 = run_retrieval_bench(BenchConfig(benchmark="deg360", strategies=names))
    elapsed = time.perf_counter() - t0
    r90 = run_retrieval_bench(BenchConfig(benchmark="deg90", strategies=names))
    m360 = {s: r360.mean_score(s) for s in names}
    m90 = {s: r90.mean_score(s) for s in names}
    report(4, "deg360 " + " ".join(f"{s}={v:.4f}" for s, v in m360.items()) + f" ({elapsed:.1f}s)")
    report(4, "deg90  " + " ".join(f"{s}={v:.4f}" for s, v in m90.items()))
    assert m360["ours"] >= m360["topk"]
    assert m360["ours"] >= m360["random"] >= m360["recent"]
    assert m360["ours"] - m360["recent"] >= 0.2
    assert abs(m90["ours"] - m90["recent"]) <= 0.1
    assert elapsed <= 120.0


@pytest.mark.criterion(5, "compressed token count is a quarter")
def test_c05_token_count():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = int(rng.integers(1, 3))
        T = int(rng.integers(1, 6))
        H, W = (2 * p * int(rng.integers(1, 6)) for _ in range(2))
        C = int(rng.integers(1, 9))
        x = rng.normal(size=(T, H, W, C))
        pw = PatchifyWeights.random(C, 4, p, seed=int(rng.integers(1 << 30)))
        toks_p, pos_p = patchify(x, pw)
        toks_c, pos_c = compress_context(x, init_from_patchify(pw))
        assert len(toks_p) == 4 * len(toks_c)
        assert len(np.unique(pos_c[:, 0])) == len(np.unique(pos_p[:, 0])) == T
    report(5, "50 grids: compressed = patchify / 4, temporal count kept")


@pytest.mark.criterion(6, "init equivalence and negative control")
def test_c06_init_equivalence():
    rng = np.random.default_rng(6)
    worst, least = 0.0, np.inf
    for _ in range(20):
        C, p = int(rng.integers(1, 9)), int(rng.integers(1, 3))
        pw = PatchifyWeights.random(C, 6, p, seed=int(rng.integers(1 << 30)))
        cw = init_from_patchify(pw)
        T, hb, wb = (int(v) for v in rng.integers(1, 4, size=3))
        x = block_constant_latent(rng, T, 2 * p * hb, 2 * p * wb, C, 2 * p)
        worst = max(worst, np.max(np.abs(compress_context(x, cw)[0] - patchify(downsample2(x), pw)[0])))
    for _ in range(20):
        C, p = int(rng.integers(1, 9)), int(rng.integers(1, 3))
        pw = PatchifyWeights.random(C, 6, p, seed=int(rng.integers(1 << 30)))
        x = rng.normal(size=(2, 4 * p, 4 * p, C))
        d = np.max(np.abs(compress_context(x, init_from_patchify(pw))[0] - patchify(downsample2(x), pw)[0]))
        least = min(least, d)
    report(6, f"block-constant max diff {worst:.2e}, general input min diff {least:.2e}")
    assert worst <= 1e-9
    assert least > 0


@pytest.mark.criterion(7, "camera conditioning contract")
def test_c07_camera_condition():
    rng = np.random.default_rng(7)
    F, N, C = 3, 6, 8
    F_in = rng.normal(size=(F, N, C))
    cams = np.array([flatten_cam(look_pose(rng.normal(size=3), y, 5)) for y in (0, 50, 120)])
    zero = CamEncoderWeights(np.zeros((C, 12)), np.zeros(C))
    assert np.array_equal(camera_condition(F_in, cams, zero), F_in)
    w = CamEncoderWeights(rng.normal(size=(C, 12)), rng.normal(size=C))
    err = np.max(np.abs(camera_condition(F_in, cams, w) - naive_camera_condition(F_in, cams, w.weight, w.bias)))
    assert err <= 1e-9
    out = camera_condition(np.zeros((F, N, C)), cams, w)
    for f in range(F):
        assert np.all(out[f] == out[f, 0])
        np.testing.assert_allclose(out[f, 0], w.weight @ cams[f] + w.bias, atol=1e-12)
    assert not np.allclose(out[0], out[1])
    report(7, f"zero encoder exact, naive loop diff {err:.2e}, per-frame broadcast on 3 frames")


@pytest.mark.criterion(8, "rotary encoding properties")
def test_c08_rope():
    rng = np.random.default_rng(8)
    toks = rng.normal(size=(200, 24))
    pos = rng.uniform(-100, 100, size=(200, 3))
    out = rope_rotate(toks, pos)
    norm_err = np.max(np.abs(np.linalg.norm(out, axis=1) - np.linalg.norm(toks, axis=1)))
    worst = 0.0
    for _ in range(100):
        q, k = rng.normal(size=(2, 24))
        a, b, s = rng.uniform(-50, 50, size=(3, 3))
        lhs = rope_rotate(q, a) @ rope_rotate(k, b)
        rhs = rope_rotate(q, a + s) @ rope_rotate(k, b + s)
        worst = max(worst, abs(lhs - rhs))
    report(8, f"norm err {norm_err:.2e}, relative invariance err {worst:.2e}")
    assert norm_err <= 1e-9
    assert worst <= 1e-6


@pytest.mark.slow
@pytest.mark.criterion(9, "round-trip harness fixed point")
def test_c09_roundtrip_fixed_point():
    for kind in ("deg90", "deg360"):
        rt = run_roundtrip_bench(BenchConfig(benchmark=kind))
        report(9, f"{kind}: {rt.pair_count} pairs, min psnr {min(rt.psnr)}, min ssim {min(rt.ssim)}")
        assert all(v == 99.0 for v in rt.psnr)
        assert all(v == 1.0 for v in rt.ssim)
    frames = [np.zeros((16, 16, 3), np.uint8)] * 152
    with pytest.raises(FrameCountMismatch):
        roundtrip_metrics(frames, "deg90", 76)


@pytest.mark.criterion(10, "trajectory length and apex law")
def test_c10_trajectory():
    t90 = roundtrip_trajectory("deg90", 76)
    assert len(t90) == 153 and t90.yaws[76] == 90.0 and t90.poses[0] == t90.poses[152]
    t360 = roundtrip_trajectory("deg360", 76)
    assert len(t360) == 609 and t360.yaws[304] % 360 == 0.0
    assert t360.poses[304].allclose(t360.poses[0], atol=1e-12)
    report(10, "deg90 153 poses apex 90, deg360 609 poses apex 360")


@pytest.mark.criterion(11, "pose file round trip and errors")
def test_c11_parser():
    rng = np.random.default_rng(11)
    recs = []
    for i in range(100):
        pose = pose_from_rt(random_rotation(rng), rng.normal(size=3) * 5)
        fx = rng.uniform(0.3, 1.5)
        intr = Intrinsics(fx=fx, fy=fx * rng.uniform(1.0, 2.0), cx=rng.uniform(0.4, 0.6), cy=rng.uniform(0.4, 0.6))
        recs.append(PoseRecord(float(rng.integers(0, 10**9)), intr, pose))
    back = parse_re10k(format_re10k(recs, url="https://example.com/clip"))
    assert len(back) == 100
    err = max(max(np.max(np.abs(a.pose.R - b.pose.R)), np.max(np.abs(a.pose.t - b.pose.t))) for a, b in zip(recs, back))
    assert err <= 1e-9
    good = "0 0.5 0.889 0.5 0.5 0 0 1 0 0 0 0 1 0 0 0 0 1 0"
    cases = [
        (good.rsplit(" ", 1)[0], FieldCount),
        (good.replace("0.889", "x1"), NonNumeric),
        (good.replace(" 1 0 0 0 0 1", " 3 0 0 0 0 1", 1), NotARotation),
    ]
    for bad, exc in cases:
        text = "\n".join(["https://example.com/clip", good, "", good, bad, good])
        with pytest.raises(exc) as info:
            parse_re10k(text)
        assert info.value.line_no == 5
    report(11, f"100 records max err {err:.1e}; FieldCount, NonNumeric, NotARotation at line 5")


@pytest.mark.criterion(12, "context dropout rate")
def test_c12_dropout():
    a = ContextAssignment((1, 2), ((0,), (0,)), ((1.0,), (1.0,)), (False, False), "ours")
    flags = [apply_context_dropout(a, 0.1, rng_seed=s).dropped for s in range(10_000)]
    frac = float(np.mean([f[0] for f in flags]))
    assert all(f[0] == f[1] for f in flags)
    report(12, f"dropped fraction {frac:.4f}")
    assert 0.09 <= frac <= 0.11
