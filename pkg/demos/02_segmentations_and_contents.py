"""Tour of segmentation layouts and occlusion fill contents.

Shows the three ways an excerpt can be cut into interpretable components
and what each of the five fill contents writes into an occluded region.
"""

import numpy as np

from melexplain import MelSpectrogram, apply_mask, dataset_stats, segment_uniform
from melexplain.perturbation import ContentType

rng = np.random.default_rng(3)

# Pretend corpus of log-scaled spectrograms, used for dataset-level fills.
corpus = [MelSpectrogram(rng.normal(loc=-4, scale=2, size=(115, 80)), 0.0143, "log")
          for _ in range(8)]
stats = dataset_stats(corpus)
excerpt = corpus[0]

print("segmentation layouts for a 115x80 excerpt:")
for axis, kwargs in [("temporal", {}), ("spectral", {}), ("time_frequency", {"n_freq": 4})]:
    scheme = segment_uniform(115, 80, axis, 10 if axis != "time_frequency" else 5, **kwargs)
    sizes = sorted({(r.n_frames, r.n_bands) for r in scheme.regions})
    print(f"  {axis:>15}: {scheme.n_components:3d} components, region sizes {sizes}")

# Occlude components 2 and 7 of the temporal layout with every content.
scheme = segment_uniform(115, 80, "temporal", 10)
mask = np.ones(10, dtype=np.uint8)
mask[[2, 7]] = 0

contents = [
    ContentType.zero(),
    ContentType.min_data(stats.min_value),
    ContentType.min_inp(),
    ContentType.mean_inp(),
    ContentType.gaussian_std(stats.band_stats),
]

print("\nfill statistics inside the occluded regions (components 2 and 7):")
occluded_cells = np.isin(scheme.label_grid(), [2, 7])
for content in contents:
    perturbed = apply_mask(excerpt, scheme, mask, content, seed=5)
    region = perturbed.values[occluded_cells]
    untouched = np.array_equal(
        perturbed.values[~occluded_cells], excerpt.values[~occluded_cells]
    )
    print(
        f"  {content.kind:>12}: mean {region.mean():8.3f}  std {region.std():6.3f}  "
        f"rest of excerpt untouched: {untouched}"
    )
