"""Partition a spectrogram grid into interpretable components.

A component is a rectangular region of the time-frequency grid.  The three
supported layouts slice along time, along frequency, or into a uniform
time-frequency tiling.  Components are indexed in reading order so that a
component index means the same region in every run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

AXIS_TEMPORAL = "temporal"
AXIS_SPECTRAL = "spectral"
AXIS_TIME_FREQUENCY = "time_frequency"

_AXES = (AXIS_TEMPORAL, AXIS_SPECTRAL, AXIS_TIME_FREQUENCY)


class SegmentationError(ValueError):
    """Invalid segmentation request or malformed scheme."""


@dataclass(frozen=True)
class Region:
    """Half-open rectangle [frame_start, frame_end) x [band_start, band_end)."""

    frame_start: int
    frame_end: int
    band_start: int
    band_end: int

    def __post_init__(self):
        if not (0 <= self.frame_start < self.frame_end and 0 <= self.band_start < self.band_end):
            raise SegmentationError(f"degenerate region {self}")

    @property
    def n_frames(self) -> int:
        return self.frame_end - self.frame_start

    @property
    def n_bands(self) -> int:
        return self.band_end - self.band_start

    @property
    def area(self) -> int:
        return self.n_frames * self.n_bands

    def contains(self, frame: int, band: int) -> bool:
        return self.frame_start <= frame < self.frame_end and self.band_start <= band < self.band_end

    def slices(self) -> tuple[slice, slice]:
        return slice(self.frame_start, self.frame_end), slice(self.band_start, self.band_end)


@dataclass(frozen=True)
class SegmentationScheme:
    """A disjoint, exhaustive partition of an ``n_frames x n_bands`` grid."""

    axis: str
    n_frames: int
    n_bands: int
    regions: tuple[Region, ...]

    def __post_init__(self):
        if self.axis not in _AXES:
            raise SegmentationError(f"unknown axis {self.axis!r}; expected one of {_AXES}")
        covered = np.zeros((self.n_frames, self.n_bands), dtype=np.int32)
        for region in self.regions:
            if region.frame_end > self.n_frames or region.band_end > self.n_bands:
                raise SegmentationError(f"region {region} exceeds grid {self.n_frames}x{self.n_bands}")
            covered[region.slices()] += 1
        if covered.min() < 1 or covered.max() > 1:
            raise SegmentationError("regions must tile the grid exactly (disjoint and exhaustive)")

    @property
    def n_components(self) -> int:
        return len(self.regions)

    def label_grid(self) -> np.ndarray:
        """Component index of every cell, as an int32 grid (frames x bands)."""
        labels = np.empty((self.n_frames, self.n_bands), dtype=np.int32)
        for index, region in enumerate(self.regions):
            labels[region.slices()] = index
        return labels

    def component_of(self, frame: int, band: int) -> int:
        """Index of the unique component containing cell ``(frame, band)``."""
        if not (0 <= frame < self.n_frames and 0 <= band < self.n_bands):
            raise SegmentationError(
                f"cell ({frame}, {band}) outside grid {self.n_frames}x{self.n_bands}"
            )
        for index, region in enumerate(self.regions):
            if region.contains(frame, band):
                return index
        raise SegmentationError(f"no region contains cell ({frame}, {band})")  # pragma: no cover

    def to_json_dict(self) -> dict:
        return {
            "axis": self.axis,
            "n_frames": self.n_frames,
            "n_bands": self.n_bands,
            "n_components": self.n_components,
            "regions": [
                [r.frame_start, r.frame_end, r.band_start, r.band_end] for r in self.regions
            ],
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "SegmentationScheme":
        regions = tuple(Region(*map(int, row)) for row in payload["regions"])
        return cls(payload["axis"], int(payload["n_frames"]), int(payload["n_bands"]), regions)


def _split_lengths(length: int, n: int) -> list[tuple[int, int]]:
    # Remainder goes to the earliest slices, so sizes differ by at most one.
    base, remainder = divmod(length, n)
    bounds = []
    start = 0
    for i in range(n):
        width = base + (1 if i < remainder else 0)
        bounds.append((start, start + width))
        start += width
    return bounds


def segment_uniform(
    n_frames: int,
    n_bands: int,
    axis: str,
    n: int,
    n_freq: int | None = None,
) -> SegmentationScheme:
    """Uniform partition into ``n`` components along ``axis``.

    Remainder cells are assigned to the earliest components, so component
    sizes along the split axis differ by at most one.  ``time_frequency``
    needs both ``n`` (time slabs) and ``n_freq`` (frequency slabs) and
    yields ``n * n_freq`` tiles in row-major time-then-frequency order.
    """
    if axis not in _AXES:
        raise SegmentationError(f"unknown axis {axis!r}; expected one of {_AXES}")
    if n < 1:
        raise SegmentationError(f"need at least one component, got n={n}")
    if axis == AXIS_TEMPORAL:
        if n > n_frames:
            raise SegmentationError(f"cannot cut {n_frames} frames into {n} temporal components")
        regions = tuple(Region(a, b, 0, n_bands) for a, b in _split_lengths(n_frames, n))
    elif axis == AXIS_SPECTRAL:
        if n > n_bands:
            raise SegmentationError(f"cannot cut {n_bands} bands into {n} spectral components")
        regions = tuple(Region(0, n_frames, a, b) for a, b in _split_lengths(n_bands, n))
    else:
        if n_freq is None:
            raise SegmentationError("time_frequency segmentation needs n_freq")
        if n > n_frames or n_freq > n_bands or n_freq < 1:
            raise SegmentationError(
                f"cannot tile {n_frames}x{n_bands} into {n}x{n_freq} components"
            )
        frame_bounds = _split_lengths(n_frames, n)
        band_bounds = _split_lengths(n_bands, n_freq)
        regions = tuple(
            Region(fa, fb, ba, bb) for fa, fb in frame_bounds for ba, bb in band_bounds
        )
    return SegmentationScheme(axis, n_frames, n_bands, regions)


def segment_at_boundaries(
    n_frames: int, n_bands: int, boundary_frames: Sequence[int]
) -> SegmentationScheme:
    """Temporal partition cut at the given frame indices.

    Boundaries must be strictly ascending and strictly inside
    ``(0, n_frames)``; ``len(boundary_frames) + 1`` components result.
    """
    cuts = [int(b) for b in boundary_frames]
    for prev, cur in zip([0] + cuts, cuts):
        if not (0 < cur < n_frames):
            raise SegmentationError(f"boundary {cur} outside (0, {n_frames})")
        if cur <= prev:
            raise SegmentationError(f"boundaries must be strictly ascending, got {cuts}")
    edges = [0] + cuts + [n_frames]
    regions = tuple(Region(a, b, 0, n_bands) for a, b in zip(edges[:-1], edges[1:]))
    return SegmentationScheme(AXIS_TEMPORAL, n_frames, n_bands, regions)


def component_of(scheme: SegmentationScheme, frame: int, band: int) -> int:
    """Module-level alias for :meth:`SegmentationScheme.component_of`."""
    return scheme.component_of(frame, band)
