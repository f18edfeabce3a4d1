"""Pose file formats: RealEstate10K-style text files and trajectory JSON."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .camera import CameraPose, Intrinsics, flatten_cam, pose_from_rt
from .errors import FieldCount, NonNumeric, NotARotation

N_FIELDS = 19


class PoseRecord(NamedTuple):
    timestamp: float
    intr: Intrinsics
    pose: CameraPose


def _is_url_line(tokens: Sequence[str]) -> bool:
    if len(tokens) != 1:
        return False
    try:
        float(tokens[0])
    except ValueError:
        return True
    return False


def parse_re10k(text: str) -> List[PoseRecord]:
    """Parse a RealEstate10K camera file.

    Each data line holds ``timestamp fx fy cx cy 0 0`` followed by the
    row-major 3x4 world-to-camera matrix. Intrinsics are normalized by the
    image size. A leading URL line is skipped. Line numbers in errors are
    1-based.
    """
    records = []
    first = True
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        if first:
            first = False
            if _is_url_line(tokens):
                continue
        if len(tokens) != N_FIELDS:
            raise FieldCount(line_no, f"expected {N_FIELDS} fields, got {len(tokens)}")
        try:
            vals = [float(tok) for tok in tokens]
        except ValueError as exc:
            raise NonNumeric(line_no, str(exc)) from None
        if not all(math.isfinite(v) for v in vals):
            raise NonNumeric(line_no, "non-finite value")
        ts, fx, fy, cx, cy = vals[:5]
        if fx <= 0 or fy <= 0:
            raise NonNumeric(line_no, "focal lengths must be positive")
        m = np.array(vals[7:], dtype=np.float64).reshape(3, 4)
        try:
            pose = pose_from_rt(m[:, :3], m[:, 3])
        except NotARotation as exc:
            raise NotARotation(str(exc), line_no=line_no) from None
        fov_h = math.degrees(2 * math.atan(0.5 / fx))
        # square pixels: fx * W == fy * H
        intr = Intrinsics(fov_h=fov_h, aspect=fy / fx, fx=fx, fy=fy, cx=cx, cy=cy)
        records.append(PoseRecord(ts, intr, pose))
    return records


def read_re10k(path) -> List[PoseRecord]:
    return parse_re10k(Path(path).read_text())


def format_re10k(records: Iterable[PoseRecord], url: Optional[str] = None) -> str:
    lines = [url] if url else []
    for ts, intr, pose in records:
        fx = intr.fx if intr.fx is not None else 0.5 / intr.tan_half_h
        fy = intr.fy if intr.fy is not None else fx * intr.aspect
        cx = intr.cx if intr.cx is not None else 0.5
        cy = intr.cy if intr.cy is not None else 0.5
        vals = [ts, fx, fy, cx, cy, 0.0, 0.0, *flatten_cam(pose)]
        lines.append(" ".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"


def camera_to_dict(frame_id: int, pose: CameraPose, intr: Intrinsics) -> dict:
    return {
        "frame_id": int(frame_id),
        "R": [float(v) for v in pose.R.reshape(9)],
        "t": [float(v) for v in pose.t],
        "fov_h": float(intr.fov_h),
        "aspect": float(intr.aspect),
    }


def camera_from_dict(d: dict) -> Tuple[int, CameraPose, Intrinsics]:
    pose = pose_from_rt(np.reshape(d["R"], (3, 3)), d["t"])
    kw = {}
    if "fov_h" in d:
        kw["fov_h"] = float(d["fov_h"])
    if "aspect" in d:
        kw["aspect"] = float(d["aspect"])
    return int(d.get("frame_id", 0)), pose, Intrinsics(**kw)


def trajectory_to_json(poses: Sequence[CameraPose], intr: Intrinsics) -> str:
    return json.dumps([camera_to_dict(i, p, intr) for i, p in enumerate(poses)])


def cameras_from_json(text: str) -> List[Tuple[int, CameraPose, Intrinsics]]:
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    return [camera_from_dict(d) for d in data]


def load_cameras(path) -> List[Tuple[int, CameraPose, Intrinsics]]:
    """Load cameras from trajectory JSON, a memory-store JSONL or a
    RealEstate10K text file, picked by extension."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return cameras_from_json(text)
    if path.suffix == ".jsonl":
        return [camera_from_dict(json.loads(l)) for l in text.splitlines() if l.strip()]
    return [(i, r.pose, r.intr) for i, r in enumerate(parse_re10k(text))]
