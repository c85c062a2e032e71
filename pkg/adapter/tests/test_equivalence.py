"""Cross-implementation equivalence: adapter mirrors vs in-process builtins.

The adapter reimplements the toy classifiers from their documented
definitions; these tests drive it through the explanation toolkit's own
wire client and require the answers to match the in-process versions to
float32 transport precision.
"""

import json

import numpy as np
import pytest

from melexplain.core import MelSpectrogram, save_spectrogram
from melexplain.perturbation import ContentType, apply_mask, sample_masks
from melexplain.predictors import (
    AdditiveMaskPredictor,
    EnergyBandPredictor,
    SilenceCountPredictor,
    connect_external,
)
from melexplain.segmentation import segment_uniform

from conftest import adapter_argv


def random_excerpts(n, shape=(115, 80), seed=0):
    rng = np.random.default_rng(seed)
    return [
        MelSpectrogram(rng.normal(size=shape) + 1.0, 315 / 22050, "log_standardized")
        for _ in range(n)
    ]


@pytest.fixture
def remote():
    handles = []

    def connect(*extra):
        handle = connect_external(adapter_argv(*extra))
        handles.append(handle)
        return handle

    yield connect
    for handle in handles:
        handle.close()


class TestEnergyBandMirror:
    def test_matches_builtin_over_100_random_excerpts(self, remote):
        excerpts = random_excerpts(100, seed=42)
        local = EnergyBandPredictor(10, 70, gain=1.7, bias=-0.4)
        mirror = remote(
            "--mode", "builtin:energy_band:10,70,1.7,-0.4", "--shape", "115x80", "--stdio"
        )
        assert mirror.expected_shape == (115, 80)
        np.testing.assert_allclose(
            mirror.predict_batch(excerpts), local.predict_batch(excerpts), atol=1e-6
        )


class TestConstantMirror:
    def test_matches_builtin(self, remote):
        excerpts = random_excerpts(7, shape=(10, 4), seed=1)
        mirror = remote("--mode", "builtin:constant:0.7", "--shape", "10x4")
        np.testing.assert_allclose(mirror.predict_batch(excerpts), [0.7] * 7, atol=1e-7)


class TestAdditiveMirror:
    def test_matches_builtin_under_occlusion(self, remote, tmp_path):
        reference = random_excerpts(1, shape=(30, 8), seed=7)[0]
        save_spectrogram(reference, tmp_path / "ref.mels")
        contributions = [0.25, -0.1, 0.2, 0.05, 0.15]
        (tmp_path / "oracle.json").write_text(
            json.dumps(
                {
                    "base": 0.3,
                    "contributions": contributions,
                    "reference": "ref.mels",
                    "axis": "temporal",
                    "n_components": 5,
                }
            )
        )
        scheme = segment_uniform(30, 8, "temporal", 5)
        local = AdditiveMaskPredictor(scheme, 0.3, contributions, reference)
        mirror = remote("--mode", f"builtin:additive_mask:{tmp_path / 'oracle.json'}")
        assert mirror.expected_shape == (30, 8)

        masks = sample_masks(5, 32, seed=3).masks
        batch = [
            apply_mask(reference, scheme, mask, ContentType.zero(), sample_index=i)
            for i, mask in enumerate(masks)
        ]
        np.testing.assert_allclose(
            mirror.predict_batch(batch), local.predict_batch(batch), atol=1e-6
        )


class TestSilenceMirror:
    def test_matches_builtin_on_occluded_inputs(self, remote):
        scheme = segment_uniform(20, 10, "temporal", 10)
        local = SilenceCountPredictor(scheme)
        mirror = remote("--mode", "builtin:silence_detector:temporal,10", "--shape", "20x10")
        source = random_excerpts(1, shape=(20, 10), seed=9)[0]
        masks = sample_masks(10, 16, seed=4).masks
        batch = [
            apply_mask(source, scheme, mask, ContentType.zero(), sample_index=i)
            for i, mask in enumerate(masks)
        ]
        np.testing.assert_allclose(
            mirror.predict_batch(batch), local.predict_batch(batch), atol=1e-6
        )


class TestExplainThroughAdapter:
    def test_explanation_pipeline_runs_against_remote_model(self, remote, tmp_path):
        from melexplain.explainer import ExplainerConfig, explain

        reference = random_excerpts(1, shape=(30, 8), seed=11)[0]
        save_spectrogram(reference, tmp_path / "ref.mels")
        (tmp_path / "oracle.json").write_text(
            json.dumps(
                {
                    "base": 0.1,
                    "contributions": [0.3, 0.05, 0.2, 0.0, 0.1],
                    "reference": "ref.mels",
                    "axis": "temporal",
                    "n_components": 5,
                }
            )
        )
        mirror = remote("--mode", f"builtin:additive_mask:{tmp_path / 'oracle.json'}")
        scheme = segment_uniform(30, 8, "temporal", 5)
        config = ExplainerConfig(n_samples=200, top_k=3, ridge_lambda=0.0, seed=2)
        explanation = explain(reference, mirror, scheme, ContentType.zero(), config)
        assert explanation.top_components() == [0, 2, 4]
        assert explanation.prediction == pytest.approx(0.75, abs=1e-6)
