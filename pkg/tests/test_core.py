import numpy as np
import pytest

from melexplain.core import (
    HEADER_SIZE,
    BandStats,
    DatasetStats,
    MelSpectrogram,
    SpectrogramError,
    SpectrogramFormatError,
    dataset_stats,
    load_spectrogram,
    save_spectrogram,
)


def make_spec(values, hop=0.01, scale="linear"):
    return MelSpectrogram(np.asarray(values), hop, scale)


class TestMelSpectrogram:
    def test_shape_properties(self):
        spec = make_spec([[1, 2, 3], [4, 5, 6]])
        assert spec.n_frames == 2
        assert spec.n_bands == 3
        assert spec.shape == (2, 3)

    def test_empty_rejected(self):
        with pytest.raises(SpectrogramError, match="empty spectrogram"):
            make_spec(np.zeros((0, 5)))

    def test_non_finite_rejected(self):
        with pytest.raises(SpectrogramError, match="NaN or Inf"):
            make_spec([[1.0, np.nan]])
        with pytest.raises(SpectrogramError, match="NaN or Inf"):
            make_spec([[1.0, np.inf]])

    def test_unknown_scale_rejected(self):
        with pytest.raises(SpectrogramError, match="scale"):
            make_spec([[1.0]], scale="decibel")

    def test_values_immutable(self):
        spec = make_spec([[1.0, 2.0]])
        with pytest.raises(ValueError):
            spec.values[0, 0] = 9.0


class TestBinaryFormat:
    def test_round_trip_small(self, tmp_path):
        spec = make_spec([[1, 2, 3], [4, 5, 6]], hop=0.01)
        path = tmp_path / "small.mels"
        save_spectrogram(spec, path)
        assert path.stat().st_size == HEADER_SIZE + 6 * 4
        assert load_spectrogram(path) == spec

    def test_excerpt_file_size(self, tmp_path):
        spec = make_spec(np.random.default_rng(0).normal(size=(115, 80)))
        path = tmp_path / "excerpt.mels"
        save_spectrogram(spec, path)
        assert path.stat().st_size == 28 + 115 * 80 * 4

    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        for i, scale in enumerate(("linear", "log", "log_standardized")):
            values = rng.normal(scale=10.0 ** rng.integers(-6, 6), size=(9, 4)).astype(np.float32)
            spec = MelSpectrogram(values, float(rng.uniform(1e-4, 2.0)), scale)
            path = tmp_path / f"rt{i}.mels"
            save_spectrogram(spec, path)
            loaded = load_spectrogram(path)
            assert loaded.scale == spec.scale
            assert loaded.hop_seconds == spec.hop_seconds
            assert np.array_equal(
                loaded.values.view(np.uint32), spec.values.view(np.uint32)
            )

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc.mels"
        save_spectrogram(make_spec([[1, 2], [3, 4]]), path)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(SpectrogramFormatError, match="expected 44 bytes, found 40"):
            load_spectrogram(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.mels"
        save_spectrogram(make_spec([[1.0]]), path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(SpectrogramFormatError, match="bad magic"):
            load_spectrogram(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "bad.mels"
        save_spectrogram(make_spec([[1.0]]), path)
        raw = bytearray(path.read_bytes())
        raw[4] = 9
        path.write_bytes(bytes(raw))
        with pytest.raises(SpectrogramFormatError, match="version"):
            load_spectrogram(path)

    def test_nan_payload(self, tmp_path):
        path = tmp_path / "nan.mels"
        save_spectrogram(make_spec([[1.0]]), path)
        raw = bytearray(path.read_bytes())
        raw[HEADER_SIZE:] = np.float32(np.nan).tobytes()
        path.write_bytes(bytes(raw))
        with pytest.raises(SpectrogramError, match="NaN or Inf"):
            load_spectrogram(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpectrogramFormatError, match="cannot read"):
            load_spectrogram(tmp_path / "nope.mels")


class TestCsvFormat:
    def test_hand_authored_fixture(self, tmp_path):
        csv_path = tmp_path / "fixture.csv"
        csv_path.write_text("1,2\n3,4\n")
        (tmp_path / "fixture.meta.json").write_text('{"hop_seconds": 0.01, "scale": "linear"}')
        spec = load_spectrogram(csv_path)
        assert spec.shape == (2, 2)
        assert np.array_equal(spec.values, [[1, 2], [3, 4]])

    def test_csv_round_trip(self, tmp_path):
        spec = make_spec(np.random.default_rng(3).normal(size=(4, 3)), hop=0.02, scale="log")
        path = tmp_path / "rt.csv"
        save_spectrogram(spec, path)
        assert load_spectrogram(path) == spec

    def test_missing_sidecar(self, tmp_path):
        path = tmp_path / "alone.csv"
        path.write_text("1,2\n")
        with pytest.raises(SpectrogramFormatError, match="sidecar"):
            load_spectrogram(path)

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1,2\n3\n")
        (tmp_path / "ragged.meta.json").write_text('{"hop_seconds": 0.01, "scale": "linear"}')
        with pytest.raises(SpectrogramFormatError, match="ragged"):
            load_spectrogram(path)


class TestDatasetStats:
    def test_two_single_bin_spectrograms(self):
        stats = dataset_stats([make_spec([[0.0]]), make_spec([[2.0]])])
        assert stats.min_value == 0.0
        assert stats.band_stats.mean == pytest.approx([1.0])
        # population std over {0, 2}
        assert stats.band_stats.std == pytest.approx([1.0])
        assert stats.n_excerpts == 2

    def test_zero_variance_band_is_an_error(self):
        with pytest.raises(SpectrogramError, match="zero variance"):
            dataset_stats([make_spec([[3.0, 5.0]])])

    def test_empty_iterator(self):
        with pytest.raises(SpectrogramError, match="at least one"):
            dataset_stats([])

    def test_mismatched_band_counts(self):
        a = make_spec([[1.0, 2.0], [0.0, 1.0]])
        b = make_spec([[1.0, 2.0, 3.0], [4.0, 5.0, 0.0]])
        with pytest.raises(SpectrogramError, match="band count mismatch"):
            dataset_stats([a, b])

    def test_excerpt_count_plumbing(self):
        rng = np.random.default_rng(11)
        corpus = [make_spec(rng.normal(size=(2, 2))) for _ in range(656)]
        assert dataset_stats(corpus).n_excerpts == 656

    def test_min_bounds_every_input(self):
        rng = np.random.default_rng(4)
        corpus = [make_spec(rng.normal(size=(5, 3))) for _ in range(10)]
        stats = dataset_stats(corpus)
        for spec in corpus:
            assert stats.min_value <= float(spec.values.min())

    def test_pooling_order_invariance(self):
        rng = np.random.default_rng(5)
        corpus = [make_spec(rng.normal(size=(rng.integers(1, 30), 4))) for _ in range(20)]
        forward = dataset_stats(corpus)
        backward = dataset_stats(corpus[::-1])
        assert forward.min_value == backward.min_value
        np.testing.assert_allclose(forward.band_stats.mean, backward.band_stats.mean, atol=1e-12)
        np.testing.assert_allclose(forward.band_stats.std, backward.band_stats.std, atol=1e-12)

    def test_json_round_trip(self, tmp_path):
        stats = dataset_stats([make_spec([[0.0, 1.0]]), make_spec([[2.0, 5.0]])])
        path = tmp_path / "stats.json"
        stats.save(path)
        loaded = DatasetStats.load(path)
        assert loaded.min_value == stats.min_value
        assert loaded.n_excerpts == stats.n_excerpts
        assert loaded.band_stats == stats.band_stats


class TestBandStats:
    def test_non_positive_std_rejected(self):
        with pytest.raises(SpectrogramError, match="non-positive"):
            BandStats(np.zeros(2), np.array([1.0, 0.0]))

    def test_length_mismatch_rejected(self):
        with pytest.raises(SpectrogramError, match="equal length"):
            BandStats(np.zeros(2), np.ones(3))
