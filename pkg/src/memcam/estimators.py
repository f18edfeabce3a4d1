"""scikit-learn style wrappers around retrieval and context compression."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .camera import DEFAULT_ASPECT, DEFAULT_FAR, DEFAULT_FOV_H, DEFAULT_NEAR, Intrinsics
from .compressor import (
    PatchifyWeights,
    TokenGrid,
    compress_context,
    init_from_patchify,
    rope_rotate,
)
from .covisibility import CovisConfig, pairwise_matrix
from .memory import FrameRecord, MemoryStore, select_context
from .validation import check_cameras, check_latent


class CovisibilityRetriever(BaseEstimator):
    """Selects memory frames for new camera poses.

    ``fit`` takes the memory (a ``MemoryStore``, an (n, 12) array of
    flattened [R|t] rows, or a list of poses). ``predict`` returns an
    (n_pred, k) array of selected frame ids, padded with -1.
    """

    def __init__(
        self,
        strategy="ours",
        k=1,
        n_samples=10_000,
        near=DEFAULT_NEAR,
        far=DEFAULT_FAR,
        fov_h=DEFAULT_FOV_H,
        aspect=DEFAULT_ASPECT,
        context_stride=1,
        random_state=0,
    ):
        self.strategy = strategy
        self.k = k
        self.n_samples = n_samples
        self.near = near
        self.far = far
        self.fov_h = fov_h
        self.aspect = aspect
        self.context_stride = context_stride
        self.random_state = random_state

    def _config(self):
        return CovisConfig(self.n_samples, self.near, self.far, int(self.random_state))

    def _intr(self):
        return Intrinsics(self.fov_h, self.aspect)

    def fit(self, X, y=None):
        if isinstance(X, MemoryStore):
            self.memory_ = X
        else:
            cams = check_cameras(X, self._intr())
            ids = range(len(cams)) if y is None else [int(v) for v in y]
            self.memory_ = MemoryStore().push_segment(
                [FrameRecord(fid, p, i) for fid, (p, i) in zip(ids, cams)]
            )
        self.n_features_in_ = 12
        return self

    def _predicted(self, X, frame_ids):
        cams = check_cameras(X, self._intr())
        if frame_ids is None:
            start = self.memory_.last_id + 1
            frame_ids = range(start, start + len(cams))
        return [(int(f), p, i) for f, (p, i) in zip(frame_ids, cams)]

    def score_matrix(self, X, frame_ids=None):
        check_is_fitted(self, "memory_")
        pred = self._predicted(X, frame_ids)
        return pairwise_matrix(
            [(p, i) for _, p, i in pred],
            [r.camera for r in self.memory_.records],
            self._config(),
            pred_keys=[f for f, _, _ in pred],
            hist_keys=self.memory_.frame_ids,
        )

    def select(self, X, frame_ids=None):
        check_is_fitted(self, "memory_")
        pred = self._predicted(X, frame_ids)
        return select_context(
            self.memory_,
            pred,
            self.strategy,
            self.k,
            self._config(),
            rng_seed=int(self.random_state),
            context_stride=self.context_stride,
        )

    def predict(self, X, frame_ids=None):
        a = self.select(X, frame_ids)
        out = np.full((len(a.selections), self.k), -1, dtype=np.int64)
        for i, sel in enumerate(a.selections):
            out[i, : len(sel)] = sel
        return out


class ContextCompressor(TransformerMixin, BaseEstimator):
    """Compresses context latents to a quarter of the patchify token count.

    ``fit`` only sets up weights: the given patchify weights (or a seeded
    random patchify layer) extended to the 2x compressor support.
    """

    def __init__(
        self,
        n_channels=16,
        patch_size=2,
        t_offset=0.0,
        rope=False,
        rope_base=10000.0,
        patchify_weights=None,
        random_state=0,
    ):
        self.n_channels = n_channels
        self.patch_size = patch_size
        self.t_offset = t_offset
        self.rope = rope
        self.rope_base = rope_base
        self.patchify_weights = patchify_weights
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_latent(X)
        if self.patchify_weights is not None:
            pw = self.patchify_weights
        else:
            pw = PatchifyWeights.random(X.shape[-1], self.n_channels, self.patch_size, self.random_state)
        self.patchify_ = pw
        self.compressor_ = init_from_patchify(pw)
        self.n_features_in_ = X.shape[-1]
        return self

    def transform_with_positions(self, X):
        check_is_fitted(self, "compressor_")
        grid = TokenGrid(check_latent(X), origin="context")
        tokens, pos = compress_context(grid, self.compressor_, self.t_offset)
        if self.rope:
            tokens = rope_rotate(tokens, pos, self.rope_base)
        return tokens, pos

    def transform(self, X):
        return self.transform_with_positions(X)[0]
