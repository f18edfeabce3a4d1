"""Segment-wise retrieval benchmark and report emission."""
from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .camera import DEFAULT_ASPECT, DEFAULT_FOV_H, Intrinsics
from .covisibility import CovisConfig, pairwise_matrix, pair_seed
from .memory import FrameRecord, MemoryStore, SelectionStrategy, apply_context_dropout, select_context
from .metrics import RoundTripReport, roundtrip_metrics, save_frame
from .synth_world import SceneSpec, render
from .trajectory import DEFAULT_SEGMENT_LEN, Trajectory, roundtrip_trajectory

log = logging.getLogger(__name__)


@dataclass
class BenchConfig:
    benchmark: str = "deg90"
    segment_len: int = DEFAULT_SEGMENT_LEN
    strategies: Tuple[str, ...] = ("ours",)
    k: int = 1
    context_stride: int = 1
    dropout: float = 0.0
    covis: CovisConfig = field(default_factory=CovisConfig)
    scene: SceneSpec = field(default_factory=SceneSpec)
    image_size: Tuple[int, int] = (640, 352)
    fov_h: float = DEFAULT_FOV_H
    aspect: float = DEFAULT_ASPECT
    output_dir: Optional[str] = None
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        self.strategies = tuple(SelectionStrategy.parse(s).value for s in self.strategies)
        self.image_size = tuple(int(v) for v in self.image_size)
        if isinstance(self.covis, dict):
            self.covis = CovisConfig(**self.covis)
        if isinstance(self.scene, dict):
            self.scene = SceneSpec(**self.scene)

    @property
    def intrinsics(self) -> Intrinsics:
        return Intrinsics(self.fov_h, self.aspect)

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["strategies"] = list(self.strategies)
        d["image_size"] = list(self.image_size)
        return d


@dataclass
class StrategyResult:
    """Per predicted frame: selected memory ids, the mean score of those
    selections, and the best score over the whole segment's context."""

    selected: List[List[int]] = field(default_factory=list)
    assigned_scores: List[float] = field(default_factory=list)
    context_scores: List[float] = field(default_factory=list)
    dropped: List[bool] = field(default_factory=list)

    def summary(self) -> dict:
        s = np.asarray(self.context_scores)
        a = np.asarray(self.assigned_scores)
        hist = Counter(fid for sel in self.selected for fid in sel)
        return {
            "mean": float(s.mean()),
            "min": float(s.min()),
            "median": float(np.median(s)),
            "mean_assigned": float(a.mean()),
            "coverage": {str(k): v for k, v in sorted(hist.items())},
        }


@dataclass
class RetrievalReport:
    benchmark: str
    segment_len: int
    frame_ids: List[int] = field(default_factory=list)
    segments: List[int] = field(default_factory=list)
    i2v: List[bool] = field(default_factory=list)
    strategies: Dict[str, StrategyResult] = field(default_factory=dict)

    def mean_score(self, strategy) -> float:
        return float(np.mean(self.strategies[SelectionStrategy.parse(strategy).value].context_scores))

    def to_dict(self) -> dict:
        return {
            "kind": "retrieval",
            "benchmark": self.benchmark,
            "segment_len": self.segment_len,
            "frame_ids": self.frame_ids,
            "segments": self.segments,
            "i2v": self.i2v,
            "strategies": {
                name: {**asdict(res), "summary": res.summary()} for name, res in self.strategies.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RetrievalReport":
        strategies = {}
        for name, r in d["strategies"].items():
            strategies[name] = StrategyResult(
                r["selected"], r["assigned_scores"], r["context_scores"], r["dropped"]
            )
        return cls(d["benchmark"], d["segment_len"], d["frame_ids"], d["segments"], d["i2v"], strategies)


def frame_name(frame_id: int) -> str:
    return f"frame_{frame_id:06d}.png"


def render_trajectory(traj: Trajectory, intr: Intrinsics, scene: SceneSpec, size, out_dir=None):
    """Render every pose; write PNGs when ``out_dir`` is given, else return
    the images."""
    w, h = size
    frames = []
    for i, pose in enumerate(traj.poses):
        img = render(scene, pose, intr, w, h)
        if out_dir is None:
            frames.append(img)
        else:
            save_frame(Path(out_dir) / frame_name(i), img)
    return frames


def run_retrieval_bench(cfg: BenchConfig) -> RetrievalReport:
    """Walk the round-trip trajectory one segment at a time.

    Memory starts with frame 0. For each segment every configured strategy
    selects context from the current memory against one shared score
    matrix; the segment's ground-truth frames are then rendered (when an
    output directory is set) and appended to memory.
    """
    traj = roundtrip_trajectory(cfg.benchmark, cfg.segment_len)
    intr = cfg.intrinsics
    frames_dir = None
    if cfg.output_dir is not None:
        frames_dir = Path(cfg.output_dir) / "frames"
        frames_dir.mkdir(parents=True, exist_ok=True)

    def record(fid):
        ref = None
        if frames_dir is not None:
            save_frame(frames_dir / frame_name(fid), render(cfg.scene, traj.poses[fid], intr, *cfg.image_size))
            ref = f"frames/{frame_name(fid)}"
        return FrameRecord(fid, traj.poses[fid], intr, ref)

    store = MemoryStore(scene_id=f"synth-{cfg.scene.palette_seed}").push_segment([record(0)])
    report = RetrievalReport(cfg.benchmark, cfg.segment_len)
    for name in cfg.strategies:
        report.strategies[name] = StrategyResult()

    for seg in range(traj.n_segments):
        ids = list(range(1 + seg * cfg.segment_len, 1 + (seg + 1) * cfg.segment_len))
        predicted = [(i, traj.poses[i], intr) for i in ids]
        scores = pairwise_matrix(
            [(p, c) for _, p, c in predicted],
            [r.camera for r in store.records],
            cfg.covis,
            pred_keys=ids,
            hist_keys=store.frame_ids,
            n_jobs=cfg.n_jobs,
        )
        # the only memory is the fixed first frame: effectively image-to-video
        i2v = len(store) == 1
        col = {fid: j for j, fid in enumerate(store.frame_ids)}
        for s_idx, name in enumerate(cfg.strategies):
            seed = pair_seed(cfg.seed, seg, s_idx)
            a = select_context(
                store, predicted, name, cfg.k, cfg.covis, rng_seed=seed,
                scores=scores, context_stride=cfg.context_stride,
            )
            if cfg.dropout > 0:
                a = apply_context_dropout(a, cfg.dropout, rng_seed=seed + 1)
            ctx = [col[f] for f in a.context_ids()]
            res = report.strategies[name]
            for i in range(len(ids)):
                res.selected.append(list(a.selections[i]))
                res.assigned_scores.append(float(np.mean(a.scores[i])) if a.scores[i] else 0.0)
                res.context_scores.append(float(scores[i, ctx].max()) if ctx and not a.dropped[i] else 0.0)
                res.dropped.append(a.dropped[i])
        report.frame_ids.extend(ids)
        report.segments.extend([seg] * len(ids))
        report.i2v.extend([i2v] * len(ids))
        log.info("segment %d/%d scored against %d memory frames", seg + 1, traj.n_segments, len(store))
        store = store.push_segment([record(i) for i in ids])

    if cfg.output_dir is not None:
        store.save(Path(cfg.output_dir) / "memory.jsonl")
    return report


# -- report emission ----------------------------------------------------------


def _csv_rows(report) -> Tuple[List[str], List[list]]:
    if isinstance(report, RoundTripReport):
        header = ["i", "j", "psnr", "ssim"]
        rows = [[i, j, p, s] for (i, j), p, s in zip(report.pairs, report.psnr, report.ssim)]
        return header, rows
    header = ["frame_id", "segment", "i2v"]
    for name in report.strategies:
        header += [f"{name}_selected", f"{name}_assigned_score", f"{name}_context_score", f"{name}_dropped"]
    rows = []
    for n, fid in enumerate(report.frame_ids):
        row = [fid, report.segments[n], int(report.i2v[n])]
        for res in report.strategies.values():
            row += [
                " ".join(map(str, res.selected[n])),
                repr(res.assigned_scores[n]),
                repr(res.context_scores[n]),
                int(res.dropped[n]),
            ]
        rows.append(row)
    return header, rows


def emit_report(report, fmt: str, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path.write_text(json.dumps(report.to_dict(), indent=1))
    elif fmt == "csv":
        header, rows = _csv_rows(report)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path


def load_report(path):
    d = json.loads(Path(path).read_text())
    if d.get("kind") == "roundtrip":
        return RoundTripReport.from_dict(d)
    return RetrievalReport.from_dict(d)


def run_roundtrip_bench(cfg: BenchConfig) -> RoundTripReport:
    """Score ground-truth renders of the trajectory with the round-trip
    protocol. A perfect memory reaches the PSNR cap and SSIM 1."""
    traj = roundtrip_trajectory(cfg.benchmark, cfg.segment_len)
    return roundtrip_metrics(_RenderedFrames(traj, cfg), cfg.benchmark, cfg.segment_len)


class _RenderedFrames(Sequence):
    """Renders trajectory frames on access instead of holding them all."""

    def __init__(self, traj: Trajectory, cfg: BenchConfig):
        self.traj, self.cfg = traj, cfg

    def __len__(self):
        return len(self.traj)

    def __getitem__(self, i):
        return render(self.cfg.scene, self.traj.poses[i], self.cfg.intrinsics, *self.cfg.image_size)
