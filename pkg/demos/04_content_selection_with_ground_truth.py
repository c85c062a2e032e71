"""Ground-truth-driven selection of the occlusion fill content.

Synthesizes annotated excerpts by splicing vocal-stem segments into
instrumental-stem excerpts, then measures, per fill content, how often a
positive top-3 explanation recovers the spliced segments.  Two models are
compared: an oracle that genuinely reads the vocal segments (content
choice should not matter) and a silence-counting model that reacts to the
fill itself (content choice matters a lot).
"""

import numpy as np

from melexplain import ExplainerConfig, MelSpectrogram
from melexplain.perturbation import ContentType
from melexplain.predictors import AdditiveMaskPredictor
from melexplain.synthdata import StemPair, generate_dataset, select_content

rng = np.random.default_rng(21)
pairs = [
    StemPair(
        vocal=MelSpectrogram(rng.normal(size=(150, 8)) + 2.5, 0.01, "log_standardized"),
        instrumental=MelSpectrogram(rng.normal(size=(150, 8)) + 1.5, 0.01, "log_standardized"),
        song_id=f"song{s}",
    )
    for s in range(3)
]
excerpts = generate_dataset(pairs, n_pairs_per_song=5, variants_per_pair=2,
                            excerpt_frames=40, seed=4)
print(f"synthesized {len(excerpts)} excerpts, each with 3 annotated vocal segments\n")

contents = [ContentType.zero(), ContentType.min_inp(), ContentType.mean_inp(),
            ContentType.gaussian_std()]
config = ExplainerConfig(n_samples=1500, top_k=3, ridge_lambda=0.0, seed=8)


def vocal_reader(excerpt):
    contributions = np.zeros(10)
    contributions[sorted(excerpt.vocal_components)] = 1 / 3
    return AdditiveMaskPredictor(excerpt.scheme, 0.0, contributions, excerpt.spec)


class SilenceAverseReader:
    """Reads vocal segments but also dislikes near-silent regions.

    Zero fills silence the occluded segments, so under that content the
    aversion term pollutes the surrogate with spurious weights; mean or
    gaussian fills never trigger it and the explanations stay faithful.
    """

    def __init__(self, excerpt, seed):
        self.reader = vocal_reader(excerpt)
        self.scheme = excerpt.scheme
        self.aversion = np.random.default_rng(seed).uniform(0.1, 0.5, 10)

    def predict_batch(self, specs):
        values = np.asarray([getattr(s, "values", s) for s in specs])
        columns = []
        for region in self.scheme.regions:
            frames, bands = region.slices()
            columns.append(np.all(np.abs(values[:, frames, bands]) < 1e-6, axis=(1, 2)))
        silent = np.stack(columns, axis=1)
        return np.clip(self.reader.predict_batch(specs) - silent @ self.aversion, 0, 1)


from melexplain.seeding import stable_seed  # noqa: E402

for name, factory in [
    ("vocal-reading oracle", vocal_reader),
    ("silence-averse reader", lambda e: SilenceAverseReader(e, seed=stable_seed(e.excerpt_id))),
]:
    report = select_content(excerpts, factory, contents, config)
    print(f"{name}: content ranking {' > '.join(report.ranking)}")
    for content_name, stats in report.per_content.items():
        print(
            f"  {content_name:>12}: full match {stats.full_match_proportion:5.1%}   "
            f"at least two {stats.at_least_two_proportion:5.1%}"
        )
    print()

print("the oracle is content-indifferent; the silence-averse model is not,")
print("so picking a fill content by ground-truth overlap protects against it.")
