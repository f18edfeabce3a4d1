"""Scene memory of past frames and the context-selection strategies."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .camera import CameraPose, Intrinsics
from .covisibility import CovisConfig, pairwise_matrix
from .errors import EmptyMemory, NonMonotonicId
from .posefile import camera_from_dict, camera_to_dict

PredictedFrame = Tuple[int, CameraPose, Intrinsics]


@dataclass(frozen=True)
class FrameRecord:
    frame_id: int
    pose: CameraPose
    intr: Intrinsics = field(default_factory=Intrinsics)
    image_ref: Optional[str] = None

    @property
    def camera(self):
        return self.pose, self.intr


@dataclass(frozen=True)
class MemoryStore:
    """Append-only, frame_id-ordered history. ``push_segment`` returns a new
    store, so any store value is a stable snapshot."""

    scene_id: str = "scene"
    records: Tuple[FrameRecord, ...] = ()

    def __len__(self):
        return len(self.records)

    @property
    def frame_ids(self) -> List[int]:
        return [r.frame_id for r in self.records]

    @property
    def last_id(self) -> int:
        return self.records[-1].frame_id if self.records else -1

    def push_segment(self, records: Sequence[FrameRecord]) -> "MemoryStore":
        last = self.last_id
        for r in records:
            if r.frame_id <= last:
                raise NonMonotonicId(f"frame_id {r.frame_id} does not follow {last}")
            last = r.frame_id
        return MemoryStore(self.scene_id, self.records + tuple(records))

    def save(self, path):
        with open(path, "w") as fh:
            for r in self.records:
                d = camera_to_dict(r.frame_id, r.pose, r.intr)
                d["image_ref"] = r.image_ref
                d["scene_id"] = self.scene_id
                fh.write(json.dumps(d) + "\n")

    @classmethod
    def load(cls, path) -> "MemoryStore":
        records, scene_id = [], None
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            scene_id = scene_id or d.get("scene_id")
            fid, pose, intr = camera_from_dict(d)
            records.append(FrameRecord(fid, pose, intr, d.get("image_ref")))
        return cls(scene_id or "scene").push_segment(records)


def push_segment(store: MemoryStore, records: Sequence[FrameRecord]) -> MemoryStore:
    return store.push_segment(records)


class SelectionStrategy(str, enum.Enum):
    OURS_ARGMAX = "ours"
    TRAIN_ELIGIBLE_RANDOM = "train"
    RECENT = "recent"
    RANDOM = "random"
    TOPK = "topk"

    @classmethod
    def parse(cls, value) -> "SelectionStrategy":
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        aliases = {"oursargmax": "ours", "argmax": "ours", "traineligiblerandom": "train"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class ContextAssignment:
    """Selected memory frames per predicted frame.

    ``dropped[i]`` flags frame i's context for zero-padding; the selection
    itself is kept.
    """

    predicted_ids: Tuple[int, ...]
    selections: Tuple[Tuple[int, ...], ...]
    scores: Tuple[Tuple[float, ...], ...]
    dropped: Tuple[bool, ...]
    strategy: str = ""

    def context_ids(self) -> List[int]:
        """Distinct selected frame ids over the whole prediction block."""
        return sorted({fid for sel in self.selections for fid in sel})

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "frames": [
                {"frame_id": p, "selected": list(s), "scores": list(c), "dropped": d}
                for p, s, c, d in zip(self.predicted_ids, self.selections, self.scores, self.dropped)
            ],
        }


def _ranked(ids: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """Positions sorted by key descending, ties to lowest frame_id."""
    return np.lexsort((ids, -keys))


def select_context(
    store: MemoryStore,
    predicted: Sequence[PredictedFrame],
    strategy="ours",
    k: int = 1,
    cfg: CovisConfig = CovisConfig(),
    rng_seed: int = 0,
    scores: Optional[np.ndarray] = None,
    context_stride: int = 1,
) -> ContextAssignment:
    """Pick ``k`` memory frames per predicted frame.

    With ``context_stride`` s > 1, selection runs for every s-th predicted
    frame and the frames in between reuse that choice, which shrinks the
    context budget to one selection per s predicted frames.

    ``scores`` may hold a precomputed ``pairwise_matrix`` keyed by frame
    ids; otherwise it is computed here.
    """
    strategy = SelectionStrategy.parse(strategy)
    if k < 1:
        raise ValueError("k must be >= 1")
    if context_stride < 1:
        raise ValueError("context_stride must be >= 1")
    if len(store) == 0:
        raise EmptyMemory("memory store is empty")
    n_pred = len(predicted)
    ids = np.array(store.frame_ids)
    if scores is None:
        scores = pairwise_matrix(
            [(p, i) for _, p, i in predicted],
            [r.camera for r in store.records],
            cfg,
            pred_keys=[f for f, _, _ in predicted],
            hist_keys=ids,
        )
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (n_pred, len(ids)):
        raise ValueError(f"scores shape {scores.shape} != {(n_pred, len(ids))}")

    rng = np.random.default_rng(rng_seed)
    leaders = list(range(0, n_pred, context_stride))
    n_groups = len(leaders)
    kk = min(k, len(ids))
    picks: List[List[int]] = []

    if strategy is SelectionStrategy.OURS_ARGMAX:
        for i in leaders:
            picks.append(list(_ranked(ids, scores[i])[:kk]))
    elif strategy is SelectionStrategy.TRAIN_ELIGIBLE_RANDOM:
        for i in leaders:
            elig = np.flatnonzero(scores[i] > 0)
            n = min(k, elig.size)
            picks.append(list(rng.choice(elig, n, replace=False)) if n else [])
    elif strategy is SelectionStrategy.RANDOM:
        for i in leaders:
            picks.append(list(rng.choice(len(ids), kk, replace=False)))
    elif strategy is SelectionStrategy.RECENT:
        # newest frames first; the context budget is k per group
        order = np.argsort(-ids, kind="stable")
        pool = order[: k * n_groups]
        picks = [_round_robin(pool, g, k) for g in range(n_groups)]
    elif strategy is SelectionStrategy.TOPK:
        counts = np.count_nonzero(scores > 0, axis=0)
        ranked = _ranked(ids, counts.astype(np.float64))
        ranked = ranked[counts[ranked] > 0]
        pool = ranked[: k * n_groups]
        picks = [_round_robin(pool, g, k) for g in range(n_groups)]

    selections, sel_scores, dropped = [], [], []
    for i in range(n_pred):
        pos = picks[i // context_stride]
        selections.append(tuple(int(ids[j]) for j in pos))
        sel_scores.append(tuple(float(scores[i, j]) for j in pos))
        dropped.append(len(pos) == 0)
    return ContextAssignment(
        predicted_ids=tuple(int(f) for f, _, _ in predicted),
        selections=tuple(selections),
        scores=tuple(sel_scores),
        dropped=tuple(dropped),
        strategy=strategy.value,
    )


def _round_robin(pool: np.ndarray, g: int, k: int) -> List[int]:
    if pool.size == 0:
        return []
    n = min(k, pool.size)
    return [int(pool[(g * k + m) % pool.size]) for m in range(n)]


def apply_context_dropout(assignment: ContextAssignment, p: float, rng_seed: int = 0) -> ContextAssignment:
    """With probability ``p`` flag every selection in the assignment as
    dropped (one draw for the whole assignment)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if np.random.default_rng(rng_seed).random() >= p:
        return assignment
    return ContextAssignment(
        assignment.predicted_ids,
        assignment.selections,
        assignment.scores,
        tuple(True for _ in assignment.dropped),
        assignment.strategy,
    )
