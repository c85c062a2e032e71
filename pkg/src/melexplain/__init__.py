"""Occlusion-based local explanations for black-box audio classifiers.

The package explains predictions of classifiers that consume fixed-size
mel-spectrogram excerpts.  An excerpt is partitioned into interpretable
components (temporal, spectral or time-frequency segments), randomly
occluded copies are scored by the classifier, and a locally-weighted
linear surrogate is fitted over the presence/absence bits.  The toolkit
also quantifies how reliable those explanations are under varying sample
counts and occlusion fill contents, and provides a ground-truth-driven
procedure for picking the most trustworthy fill content.
"""

from .core import (
    BandStats,
    DatasetStats,
    MelSpectrogram,
    SpectrogramError,
    SpectrogramFormatError,
    dataset_stats,
    load_spectrogram,
    save_spectrogram,
)
from .explainer import Explanation, ExplainerConfig, explain, fit_weighted_ridge, proximity_weights
from .perturbation import ContentType, SampleSet, apply_mask, enumerate_masks, sample_masks
from .segmentation import SegmentationScheme, segment_at_boundaries, segment_uniform

__version__ = "0.1.0"

__all__ = [
    "BandStats",
    "ContentType",
    "DatasetStats",
    "Explanation",
    "ExplainerConfig",
    "MelSpectrogram",
    "SampleSet",
    "SegmentationScheme",
    "SpectrogramError",
    "SpectrogramFormatError",
    "apply_mask",
    "dataset_stats",
    "enumerate_masks",
    "explain",
    "fit_weighted_ridge",
    "load_spectrogram",
    "proximity_weights",
    "sample_masks",
    "save_spectrogram",
    "segment_at_boundaries",
    "segment_uniform",
    "__version__",
]
