import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from memcam.camera import flatten_cam, look_pose
from memcam.compressor import PatchifyWeights, compress_context, init_from_patchify, rope_rotate
from memcam.estimators import ContextCompressor, CovisibilityRetriever
from memcam.errors import ShapeMismatch


def test_retriever_params_and_clone():
    r = CovisibilityRetriever(strategy="recent", k=2)
    assert r.get_params()["k"] == 2
    c = clone(r.set_params(k=3))
    assert c.k == 3 and c.strategy == "recent"


def test_retriever_not_fitted():
    with pytest.raises(NotFittedError):
        CovisibilityRetriever().predict(np.zeros((1, 12)))


def test_retriever_predict():
    yaws = np.arange(0, 360, 30)
    X = np.array([flatten_cam(look_pose([0, 0, 0], y)) for y in yaws])
    r = CovisibilityRetriever(k=2).fit(X, y=np.arange(0, 24, 2))
    q = np.array([flatten_cam(look_pose([0, 0, 0], 61)), flatten_cam(look_pose([0, 0, 0], 179))])
    out = r.predict(q)
    assert out.shape == (2, 2)
    assert out[0, 0] == 4  # memory frame at 60 deg has id 4
    assert out[1, 0] == 12  # 180 deg
    m = r.score_matrix(q)
    assert m.shape == (2, 12)


def test_retriever_pads_missing():
    r = CovisibilityRetriever(strategy="train", k=3).fit([look_pose([0, 0, 0], 0)])
    out = r.predict([look_pose([0, 0, 0], 10)])
    np.testing.assert_array_equal(out, [[0, -1, -1]])


def test_retriever_bad_shape():
    with pytest.raises(ShapeMismatch):
        CovisibilityRetriever().fit(np.zeros((3, 11)))


def test_compressor_matches_functional(rng):
    X = rng.normal(size=(2, 8, 8, 4))
    pw = PatchifyWeights.random(4, 6, 2, seed=0)
    est = ContextCompressor(patchify_weights=pw, t_offset=3.0)
    out = est.fit_transform(X)
    ref, pos = compress_context(X, init_from_patchify(pw), 3.0)
    np.testing.assert_array_equal(out, ref)
    est_r = clone(est).set_params(rope=True).fit(X)
    np.testing.assert_allclose(est_r.transform(X), rope_rotate(ref, pos), atol=1e-12)


def test_compressor_random_init(rng):
    X = rng.normal(size=(1, 4, 4, 3))
    est = ContextCompressor(n_channels=8, random_state=1).fit(X)
    assert est.transform(X).shape == (1, 8)
    assert est.n_features_in_ == 3
    with pytest.raises(NotFittedError):
        ContextCompressor().transform(X)
    with pytest.raises(ShapeMismatch):
        est.transform(X[0])
