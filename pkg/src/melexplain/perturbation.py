"""Occlusion masks and their realization as perturbed spectrograms.

A mask is a binary vector over the components of a segmentation scheme:
1 keeps the component, 0 occludes it.  Occluded regions are overwritten
with fill values produced by a :class:`ContentType`; the choice of fill
content is one of the reliability knobs this toolkit studies.

Gaussian fills are drawn from substreams keyed by (seed, sample index,
component index), so realizing samples in any order, or in parallel,
gives identical output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import SCALE_LOG_STANDARDIZED, BandStats, MelSpectrogram
from .segmentation import Region, SegmentationScheme

CONTENT_NAMES = ("zero", "min_data", "min_inp", "mean_inp", "gaussian_std")


class PerturbationError(ValueError):
    """Mask/scheme/content mismatch."""


@dataclass(frozen=True, eq=False)
class ContentType:
    """Rule producing fill values for occluded regions.

    ``zero``, ``min_inp`` and ``mean_inp`` need nothing beyond the input
    itself.  ``min_data`` carries the dataset-wide minimum as a scalar.
    ``gaussian_std`` draws zero-mean unit-variance noise; on inputs that
    are already per-band standardized the draws are used directly, on any
    other scale they are mapped through the supplied per-band statistics
    (``mean[b] + std[b] * n``) so the noise matches the input distribution
    band by band.
    """

    kind: str
    value: float | None = None
    band_stats: BandStats | None = None

    def __post_init__(self):
        if self.kind not in CONTENT_NAMES:
            raise PerturbationError(f"unknown content type {self.kind!r}; expected one of {CONTENT_NAMES}")
        if self.kind == "min_data":
            if self.value is None or not np.isfinite(self.value):
                raise PerturbationError("min_data content needs a finite scalar value")
        elif self.value is not None:
            raise PerturbationError(f"content {self.kind!r} does not take a scalar value")
        if self.band_stats is not None and self.kind != "gaussian_std":
            raise PerturbationError(f"content {self.kind!r} does not take band statistics")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ContentType):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.value == other.value
            and self.band_stats == other.band_stats
        )

    def __hash__(self):
        return hash((self.kind, self.value))

    @classmethod
    def zero(cls) -> "ContentType":
        return cls("zero")

    @classmethod
    def min_data(cls, value: float) -> "ContentType":
        return cls("min_data", value=float(value))

    @classmethod
    def min_inp(cls) -> "ContentType":
        return cls("min_inp")

    @classmethod
    def mean_inp(cls) -> "ContentType":
        return cls("mean_inp")

    @classmethod
    def gaussian_std(cls, band_stats: BandStats | None = None) -> "ContentType":
        return cls("gaussian_std", band_stats=band_stats)

    @property
    def is_random(self) -> bool:
        return self.kind == "gaussian_std"

    def scalar_fill(self, spec: MelSpectrogram) -> float:
        """Fill value for deterministic contents (everything but gaussian)."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "min_data":
            return float(self.value)
        if self.kind == "min_inp":
            return float(spec.values.min())
        if self.kind == "mean_inp":
            # Scalar mean over the whole excerpt, not per band.
            return float(spec.values.mean(dtype=np.float64))
        raise PerturbationError(f"content {self.kind!r} has no scalar fill")

    def require_stats_for(self, spec: MelSpectrogram) -> BandStats | None:
        """Band statistics to map gaussian noise through, or None for N(0,1)."""
        if self.kind != "gaussian_std":
            return None
        if spec.scale == SCALE_LOG_STANDARDIZED:
            return None
        if self.band_stats is None:
            raise PerturbationError(
                "gaussian_std on a non-standardized input needs band statistics"
            )
        if self.band_stats.n_bands != spec.n_bands:
            raise PerturbationError(
                f"band count mismatch: stats have {self.band_stats.n_bands}, "
                f"input has {spec.n_bands}"
            )
        return self.band_stats


@dataclass(frozen=True)
class SampleSet:
    """N_s occlusion masks as a (N_s, N_c) 0/1 matrix; row 0 is all-ones."""

    masks: np.ndarray
    seed: int

    def __post_init__(self):
        masks = np.ascontiguousarray(self.masks, dtype=np.uint8)
        if masks.ndim != 2 or masks.shape[0] < 1 or masks.shape[1] < 1:
            raise PerturbationError(f"masks must be a non-empty 2-D matrix, got shape {masks.shape}")
        if masks.max(initial=0) > 1:
            raise PerturbationError("mask bits must be 0 or 1")
        if not np.all(masks[0] == 1):
            raise PerturbationError("the first mask must be all-ones (the unperturbed instance)")
        masks.setflags(write=False)
        object.__setattr__(self, "masks", masks)

    @property
    def n_samples(self) -> int:
        return self.masks.shape[0]

    @property
    def n_components(self) -> int:
        return self.masks.shape[1]

    def __len__(self) -> int:
        return self.n_samples

    def __getitem__(self, index: int) -> np.ndarray:
        return self.masks[index]


def sample_masks(n_components: int, n_samples: int, seed: int) -> SampleSet:
    """Draw ``n_samples`` masks, the first all-ones, the rest i.i.d.

    Every bit after row 0 is Bernoulli(0.5), which makes the draw uniform
    over the ``2**n_components`` possible masks and keeps the expected
    occlusion at half the components.
    """
    if n_components < 1:
        raise PerturbationError("need at least one component to sample masks")
    if n_samples < 1:
        raise PerturbationError("need at least one sample (the unperturbed instance)")
    rng = np.random.default_rng(seed)
    masks = np.empty((n_samples, n_components), dtype=np.uint8)
    masks[0] = 1
    if n_samples > 1:
        masks[1:] = rng.integers(0, 2, size=(n_samples - 1, n_components), dtype=np.uint8)
    return SampleSet(masks=masks, seed=seed)


def enumerate_masks(n_components: int) -> np.ndarray:
    """All ``2**n_components`` masks, row ``i`` holding the bits of ``i``.

    Component ``j`` is bit ``j`` of the row index, so the last row is the
    all-ones mask.  Intended for exhaustive oracles at small N_c.
    """
    if not (1 <= n_components <= 20):
        raise PerturbationError(f"exhaustive enumeration is for 1..20 components, got {n_components}")
    indices = np.arange(2**n_components, dtype=np.uint32)
    return ((indices[:, None] >> np.arange(n_components)[None, :]) & 1).astype(np.uint8)


def _noise_rng(seed: int, sample_index: int, component_index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(sample_index), int(component_index)])


def fill_values(
    content: ContentType,
    spec: MelSpectrogram,
    region: Region,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Fill grid for one occluded region, shaped like the region."""
    shape = (region.n_frames, region.n_bands)
    if region.frame_end > spec.n_frames or region.band_end > spec.n_bands:
        raise PerturbationError(f"region {region} exceeds grid {spec.shape}")
    if not content.is_random:
        return np.full(shape, np.float32(content.scalar_fill(spec)), dtype=np.float32)
    stats = content.require_stats_for(spec)
    if rng is None:
        raise PerturbationError("gaussian_std fills need an RNG stream")
    noise = rng.standard_normal(shape)
    if stats is not None:
        bands = slice(region.band_start, region.band_end)
        noise = stats.mean[bands] + stats.std[bands] * noise
    return noise.astype(np.float32)


def realize_batch(
    spec: MelSpectrogram,
    scheme: SegmentationScheme,
    masks: np.ndarray,
    content: ContentType,
    seed: int = 0,
    start_index: int = 0,
    labels: np.ndarray | None = None,
) -> np.ndarray:
    """Perturbed copies of ``spec`` for a batch of masks, shape (B, frames, bands).

    Row ``r`` corresponds to sample index ``start_index + r``; gaussian
    fills for that row come from the (seed, sample index, component index)
    substream, so batching and ordering never change the result.
    """
    if (scheme.n_frames, scheme.n_bands) != spec.shape:
        raise PerturbationError(
            f"scheme is for a {scheme.n_frames}x{scheme.n_bands} grid, input is {spec.shape}"
        )
    masks = np.atleast_2d(np.asarray(masks, dtype=np.uint8))
    if masks.shape[1] != scheme.n_components:
        raise PerturbationError(
            f"mask length {masks.shape[1]} does not match {scheme.n_components} components"
        )
    if labels is None:
        labels = scheme.label_grid()
    present = masks[:, labels].astype(bool)
    if content.is_random:
        content.require_stats_for(spec)  # fail fast before drawing anything
        out = np.where(present, spec.values[None, :, :], np.float32(0.0))
        for row in range(masks.shape[0]):
            occluded = np.flatnonzero(masks[row] == 0)
            for component in occluded:
                region = scheme.regions[component]
                rng = _noise_rng(seed, start_index + row, component)
                out[row][region.slices()] = fill_values(content, spec, region, rng)
        return out
    fill = np.float32(content.scalar_fill(spec))
    return np.where(present, spec.values[None, :, :], fill)


def apply_mask(
    spec: MelSpectrogram,
    scheme: SegmentationScheme,
    mask: np.ndarray | Iterable[int],
    content: ContentType,
    seed: int = 0,
    sample_index: int = 0,
) -> MelSpectrogram:
    """Perturbed version of ``spec``: components with bit 0 are occluded.

    Bins in components with bit 1 are returned unchanged, bit 0 regions
    are overwritten by the content's fill values.
    """
    mask = np.asarray(list(mask) if not isinstance(mask, np.ndarray) else mask, dtype=np.uint8)
    if mask.ndim != 1:
        raise PerturbationError("apply_mask expects a single 1-D mask")
    values = realize_batch(spec, scheme, mask[None, :], content, seed=seed, start_index=sample_index)
    return MelSpectrogram(values[0], spec.hop_seconds, spec.scale)
