import numpy as np
import pytest

from melexplain.core import MelSpectrogram
from melexplain.explainer import ExplainerConfig, Explanation
from melexplain.metrics import (
    MetricsError,
    common_components,
    overlap_with_ground_truth,
    stability_trial,
    summarize,
    unique_components,
)
from melexplain.perturbation import ContentType
from melexplain.predictors import AdditiveMaskPredictor, ConstantPredictor
from melexplain.segmentation import segment_uniform

SCHEME = segment_uniform(40, 8, "temporal", 10)
OTHER_SCHEME = segment_uniform(40, 8, "spectral", 8)


def fake_explanation(components, scheme=SCHEME, top_k=3):
    entries = tuple((int(c), 1.0 - 0.1 * rank) for rank, c in enumerate(components))
    return Explanation(
        entries=entries,
        intercept=0.0,
        prediction=0.5,
        r2_local=1.0,
        scheme=scheme,
        content=ContentType.zero(),
        n_samples=100,
        top_k=top_k,
        seed=0,
    )


class TestUniqueComponents:
    def test_identical_explanations(self):
        result = unique_components([fake_explanation([0, 4, 7])] * 5)
        assert result.u_n == 3
        assert result.k == 5
        assert result.top_k == 3

    def test_hand_union(self):
        sets = [(0, 1, 2), (3, 4, 5), (6, 7, 8), (9, 0, 1), (2, 3, 4)]
        result = unique_components([fake_explanation(s) for s in sets])
        assert result.u_n == 10

    def test_single_explanation(self):
        assert unique_components([fake_explanation([2, 5, 8])]).u_n == 3

    def test_order_ignored(self):
        a = fake_explanation([1, 2, 3])
        b = fake_explanation([3, 2, 1])
        assert unique_components([a, b]).u_n == 3

    def test_mixed_schemes_rejected(self):
        with pytest.raises(MetricsError, match="schemes"):
            unique_components([fake_explanation([0, 1, 2]), fake_explanation([0, 1, 2], OTHER_SCHEME)])

    def test_mixed_top_k_rejected(self):
        with pytest.raises(MetricsError, match="top_k"):
            unique_components([fake_explanation([0, 1, 2]), fake_explanation([0, 1], top_k=2)])

    def test_bounds_over_random_sets(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            sets = [rng.choice(10, size=3, replace=False) for _ in range(5)]
            result = unique_components([fake_explanation(s) for s in sets])
            assert 3 <= result.u_n <= 10


class TestCommonComponents:
    @pytest.mark.parametrize(
        "reference,other,expected",
        [
            # classic report rows: temporal zero vs min_data, spectral
            # zero vs mean, spectral gaussian vs mean
            ((4, 3, 6), (4, 1, 5), 1),
            ((7, 8, 9), (7, 8, 9), 3),
            ((1, 8, 2), (5, 7, 8), 1),
        ],
    )
    def test_report_row_overlaps(self, reference, other, expected):
        result = common_components(fake_explanation(reference), fake_explanation(other))
        assert result.n_ce == expected

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a = fake_explanation(rng.choice(10, size=3, replace=False))
            b = fake_explanation(rng.choice(10, size=3, replace=False))
            assert common_components(a, b).n_ce == common_components(b, a).n_ce

    def test_equal_sets_any_order_give_top_k(self):
        a = fake_explanation([9, 4, 0])
        b = fake_explanation([0, 9, 4])
        assert common_components(a, b).n_ce == 3

    def test_mixed_schemes_rejected(self):
        with pytest.raises(MetricsError, match="schemes"):
            common_components(fake_explanation([0, 1, 2]), fake_explanation([0, 1, 2], OTHER_SCHEME))

    def test_ground_truth_overlap(self):
        assert overlap_with_ground_truth(fake_explanation([4, 3, 6]), {3, 6, 9}) == 2


class TestSummarize:
    def test_hand_distribution(self):
        summary = summarize([3, 3, 4, 4, 4])
        assert summary["median"] == 4
        assert summary["proportions"] == {3: 0.4, 4: 0.6}
        assert summary["count"] == 5

    def test_single_value(self):
        assert summarize([5])["median"] == 5

    def test_empty_rejected(self):
        with pytest.raises(MetricsError, match="empty"):
            summarize([])

    def test_even_count_takes_lower_middle(self):
        assert summarize([3, 4])["median"] == 3
        assert summarize([4, 3, 5, 6])["median"] == 4


class TestStabilityTrial:
    def make_input(self, seed=0):
        values = np.random.default_rng(seed).normal(size=(40, 8))
        return MelSpectrogram(values, 0.01, "log_standardized")

    def test_exact_oracle_is_perfectly_stable(self):
        spec = self.make_input(3)
        contributions = np.array([0.0, 0.3, 0.0, 0.2, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0])
        predictor = AdditiveMaskPredictor(SCHEME, 0.1, contributions, spec)
        config = ExplainerConfig(n_samples=256, top_k=3, ridge_lambda=0.0, seed=9)
        result = stability_trial(spec, predictor, SCHEME, ContentType.zero(), config, k=5)
        # the exact linear fit nails {1, 3, 6} for every seed
        assert result.u_n == 3
        assert all(s == frozenset({1, 3, 6}) for s in result.component_sets)

    def test_constant_classifier_ties_break_identically(self):
        spec = self.make_input(4)
        config = ExplainerConfig(n_samples=64, top_k=3, seed=5)
        result = stability_trial(spec, ConstantPredictor(0.6), SCHEME, ContentType.zero(), config, k=5)
        assert result.u_n == 3
        assert all(s == frozenset({0, 1, 2}) for s in result.component_sets)

    def test_duplicate_seeds_rejected(self):
        spec = self.make_input(5)
        config = ExplainerConfig(n_samples=16, seed=1)
        with pytest.raises(MetricsError, match="distinct"):
            stability_trial(
                spec, ConstantPredictor(0.5), SCHEME, ContentType.zero(), config,
                k=3, seeds=[1, 1, 2],
            )

    def test_derived_seeds_are_reproducible(self):
        spec = self.make_input(6)
        predictor = AdditiveMaskPredictor(
            SCHEME, 0.2, np.linspace(-0.2, 0.25, 10), spec
        )
        config = ExplainerConfig(n_samples=128, seed=2)
        first = stability_trial(spec, predictor, SCHEME, ContentType.zero(), config, k=4)
        second = stability_trial(spec, predictor, SCHEME, ContentType.zero(), config, k=4)
        assert first == second
