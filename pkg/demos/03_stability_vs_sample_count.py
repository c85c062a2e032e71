"""Explanation stability as a function of the synthetic sample count.

Repeatedly explains the same excerpts with different seeds and counts how
many unique components show up across the repeats (U_n; 3 is perfect for
top-3 explanations).  A noisy classifier makes small sample counts
unreliable; more samples average the noise away and U_n drops.  This is
a desk-scale miniature of the sweep the `ns-sweep` CLI command runs over
a real corpus.
"""

import numpy as np

from melexplain import ExplainerConfig, MelSpectrogram, segment_uniform
from melexplain.metrics import stability_trial, summarize
from melexplain.perturbation import ContentType
from melexplain.predictors import AdditiveMaskPredictor
from melexplain.seeding import stable_seed


class NoisyModel:
    """An additive oracle plus Gaussian prediction noise."""

    def __init__(self, base, sigma, seed):
        self.base, self.sigma = base, sigma
        self.rng = np.random.default_rng(seed)

    def predict_batch(self, specs):
        clean = self.base.predict_batch(specs)
        return np.clip(clean + self.rng.normal(0, self.sigma, len(clean)), 0, 1)


MASTER = 99
N_EXCERPTS = 12
SAMPLE_COUNTS = (500, 2000, 10000)

scheme = segment_uniform(20, 10, "temporal", 10)
results = {ns: [] for ns in SAMPLE_COUNTS}
for index in range(N_EXCERPTS):
    rng = np.random.default_rng(stable_seed(MASTER, index))
    excerpt = MelSpectrogram(rng.normal(size=(20, 10)), 0.01, "log_standardized")
    model = NoisyModel(
        AdditiveMaskPredictor(scheme, 0.4, rng.uniform(0, 0.03, 10), excerpt),
        sigma=0.05,
        seed=stable_seed(MASTER, index, "noise"),
    )
    for ns in SAMPLE_COUNTS:
        config = ExplainerConfig(n_samples=ns, ridge_lambda=0.0,
                                 seed=stable_seed(MASTER, index, ns))
        trial = stability_trial(excerpt, model, scheme, ContentType.zero(), config, k=5)
        results[ns].append(trial.u_n)

print(f"U_n over {N_EXCERPTS} excerpts, k=5 repeats, top-3 (lower is more stable):")
for ns in SAMPLE_COUNTS:
    summary = summarize(results[ns])
    spread = "  ".join(f"P(U_n={v})={p:.2f}" for v, p in summary["proportions"].items())
    print(f"  N_s={ns:>6}: median {summary['median']}   {spread}")
