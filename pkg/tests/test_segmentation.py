import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from melexplain.segmentation import (
    SegmentationError,
    SegmentationScheme,
    component_of,
    segment_at_boundaries,
    segment_uniform,
)


class TestUniformTemporal:
    def test_115_frames_into_ten(self):
        scheme = segment_uniform(115, 80, "temporal", 10)
        widths = [r.n_frames for r in scheme.regions]
        # 115 = 5*12 + 5*11 with the remainder assigned to the earliest slices
        assert widths == [12, 12, 12, 12, 12, 11, 11, 11, 11, 11]
        assert all(r.band_start == 0 and r.band_end == 80 for r in scheme.regions)

    def test_single_component_is_whole_grid(self):
        scheme = segment_uniform(7, 5, "temporal", 1)
        assert scheme.n_components == 1
        region = scheme.regions[0]
        assert (region.frame_start, region.frame_end) == (0, 7)
        assert (region.band_start, region.band_end) == (0, 5)

    def test_too_many_components(self):
        with pytest.raises(SegmentationError, match="cannot cut"):
            segment_uniform(5, 80, "temporal", 6)

    def test_ordered_by_frame_start(self):
        scheme = segment_uniform(33, 4, "temporal", 7)
        starts = [r.frame_start for r in scheme.regions]
        assert starts == sorted(starts)


class TestUniformSpectral:
    def test_even_division(self):
        scheme = segment_uniform(115, 80, "spectral", 10)
        assert [r.n_bands for r in scheme.regions] == [8] * 10
        assert all(r.frame_start == 0 and r.frame_end == 115 for r in scheme.regions)
        starts = [r.band_start for r in scheme.regions]
        assert starts == sorted(starts)


class TestUniformTimeFrequency:
    def test_row_major_time_then_frequency(self):
        scheme = segment_uniform(6, 4, "time_frequency", 3, n_freq=2)
        assert scheme.n_components == 6
        # component index = time_slab * n_freq + freq_slab
        assert scheme.component_of(0, 0) == 0
        assert scheme.component_of(0, 3) == 1
        assert scheme.component_of(2, 0) == 2
        assert scheme.component_of(5, 3) == 5

    def test_needs_n_freq(self):
        with pytest.raises(SegmentationError, match="n_freq"):
            segment_uniform(6, 4, "time_frequency", 3)


class TestBoundaries:
    def test_single_cut(self):
        scheme = segment_at_boundaries(115, 80, [50])
        assert scheme.n_components == 2
        assert (scheme.regions[0].frame_start, scheme.regions[0].frame_end) == (0, 50)
        assert (scheme.regions[1].frame_start, scheme.regions[1].frame_end) == (50, 115)

    def test_no_cut(self):
        scheme = segment_at_boundaries(115, 80, [])
        assert scheme.n_components == 1

    def test_non_strict_boundaries(self):
        with pytest.raises(SegmentationError, match="strictly ascending"):
            segment_at_boundaries(115, 80, [10, 10])

    def test_out_of_range_boundary(self):
        with pytest.raises(SegmentationError, match="outside"):
            segment_at_boundaries(115, 80, [115])
        with pytest.raises(SegmentationError, match="outside"):
            segment_at_boundaries(115, 80, [0])


class TestComponentOf:
    def test_paper_sized_grid(self):
        scheme = segment_uniform(115, 80, "temporal", 10)
        assert component_of(scheme, 0, 0) == 0
        assert component_of(scheme, 114, 79) == 9
        # cumulative widths: [12, 24, ...] so frame 12 is in the second region
        assert component_of(scheme, 12, 0) == 1

    def test_out_of_grid(self):
        scheme = segment_uniform(10, 10, "temporal", 2)
        with pytest.raises(SegmentationError, match="outside grid"):
            component_of(scheme, 10, 0)
        with pytest.raises(SegmentationError, match="outside grid"):
            component_of(scheme, 0, -1)

    def test_label_grid_matches_component_of(self):
        scheme = segment_uniform(9, 7, "time_frequency", 4, n_freq=3)
        labels = scheme.label_grid()
        for frame in range(9):
            for band in range(7):
                assert labels[frame, band] == scheme.component_of(frame, band)


@settings(max_examples=60, deadline=None)
@given(
    n_frames=st.integers(1, 24),
    n_bands=st.integers(1, 24),
    n=st.integers(1, 8),
    axis=st.sampled_from(["temporal", "spectral", "time_frequency"]),
    n_freq=st.integers(1, 8),
)
def test_partition_property(n_frames, n_bands, n, axis, n_freq):
    """Every cell belongs to exactly one component and areas sum to the grid."""
    if axis == "temporal" and n > n_frames:
        return
    if axis == "spectral" and n > n_bands:
        return
    if axis == "time_frequency" and (n > n_frames or n_freq > n_bands):
        return
    scheme = segment_uniform(n_frames, n_bands, axis, n, n_freq)
    assert sum(r.area for r in scheme.regions) == n_frames * n_bands
    counts = np.zeros((n_frames, n_bands), dtype=int)
    for region in scheme.regions:
        counts[region.slices()] += 1
    assert counts.min() == 1 and counts.max() == 1


def test_deterministic():
    a = segment_uniform(115, 80, "temporal", 10)
    b = segment_uniform(115, 80, "temporal", 10)
    assert a == b


def test_json_round_trip():
    scheme = segment_uniform(11, 6, "time_frequency", 3, n_freq=2)
    assert SegmentationScheme.from_json_dict(scheme.to_json_dict()) == scheme


def test_overlapping_regions_rejected():
    from melexplain.segmentation import Region

    with pytest.raises(SegmentationError, match="tile the grid"):
        SegmentationScheme("temporal", 4, 2, (Region(0, 3, 0, 2), Region(2, 4, 0, 2)))


def test_gap_rejected():
    from melexplain.segmentation import Region

    with pytest.raises(SegmentationError, match="tile the grid"):
        SegmentationScheme("temporal", 4, 2, (Region(0, 2, 0, 2), Region(3, 4, 0, 2)))
