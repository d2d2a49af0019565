import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evpipe.baseline import CentroidModel, NotFittedError, area_downsample, featurize, fit, predict
from evpipe.ingest import CLASSES, label_from_id

D = 256


class TestFeaturize:
    def test_zero(self):
        assert not featurize(np.zeros((16, 20, 30), np.uint8)).any()

    def test_ones(self):
        assert np.allclose(featurize(np.full((16, 260, 346), 255, np.uint8)), 1.0)

    def test_alternating(self):
        frames = np.zeros((16, 32, 32), np.uint8)
        frames[1::2] = 255
        f = featurize(frames)
        assert f.shape == (D,) and np.allclose(f, 0.5)

    def test_area_pooling_exact_multiple(self, rng):
        img = rng.random((32, 48))
        expected = img.reshape(16, 2, 16, 3).mean(axis=(1, 3))
        assert np.allclose(area_downsample(img), expected)

    def test_area_pooling_preserves_mean(self, rng):
        img = rng.random((260, 346))
        assert area_downsample(img).mean() == pytest.approx(img.mean())

    def test_small_geometry(self):
        f = featurize(np.full((16, 4, 5), 51, np.uint8))
        assert f.shape == (D,) and np.allclose(f, 0.2)


class TestFitPredict:
    def test_one_per_class(self, rng):
        samples = [(rng.random(D), c) for c in CLASSES]
        model = fit(samples)
        for feat, label in samples:
            assert np.array_equal(model.centroids[label.id], feat)
            assert predict(model, feat) == label

    def test_mean(self):
        lab = label_from_id(4)
        model = fit([(np.zeros(D), lab), (np.ones(D), lab)])
        assert np.allclose(model.centroids[4], 0.5)
        model = fit([(np.full(D, 0.3), lab)] * 2)
        assert np.allclose(model.centroids[4], 0.3)

    def test_empty(self):
        with pytest.raises(ValueError):
            fit([])

    def test_unfitted(self):
        with pytest.raises(NotFittedError):
            predict(CentroidModel({}), np.zeros(D))

    def test_tie_goes_to_lowest_id(self):
        model = CentroidModel({7: np.ones(D), 2: np.zeros(D)})
        assert predict(model, np.full(D, 0.5)).id == 2

    def test_separable_clusters(self, rng):
        a, b = label_from_id(0), label_from_id(9)

        def draw(center, n):
            return [center + rng.uniform(-0.01, 0.01, D) for _ in range(n)]

        model = fit([(f, a) for f in draw(0.1, 20)] + [(f, b) for f in draw(0.9, 20)])
        assert all(predict(model, f) == a for f in draw(0.1, 50))
        assert all(predict(model, f) == b for f in draw(0.9, 50))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        samples = [(rng.random(D), label_from_id(int(rng.integers(0, 12)))) for _ in range(30)]
        q = rng.random(D)
        perm = rng.permutation(D)
        m1 = fit(samples)
        m2 = fit([(f[perm], lab) for f, lab in samples])
        assert predict(m1, q) == predict(m2, q[perm])

    def test_training_accuracy_on_separable_corpus(self, rng):
        samples = []
        for c in range(12):
            center = np.zeros(D)
            center[c * 20:(c + 1) * 20] = 1.0
            samples += [(center + rng.normal(0, 0.02, D), label_from_id(c)) for _ in range(5)]
        model = fit(samples)
        assert all(predict(model, f) == lab for f, lab in samples)

    def test_json_round_trip(self, rng):
        model = fit([(rng.random(D), label_from_id(c)) for c in (1, 5, 11)])
        back = CentroidModel.from_json(model.to_json())
        assert back.classes == [1, 5, 11]
        for k in back.classes:
            assert np.array_equal(back.centroids[k], model.centroids[k])
