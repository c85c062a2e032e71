"""PCM audio to normalized log-mel excerpts matching the classifier geometry.

The pipeline is Hann-windowed magnitude STFT, area-normalized triangular
mel filterbank, natural log with an additive floor, optional per-band
standardization, then slicing into fixed-size excerpts (a center frame
plus symmetric context; 57 frames of context gives the default 115-frame
window).  The classifier under analysis never specified its exact STFT
parameters, so the defaults below are an engineering choice that yields
115 frames in roughly 1.64 s of audio; all of them are configurable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io.wavfile

from .core import (
    SCALE_LOG,
    SCALE_LOG_STANDARDIZED,
    BandStats,
    MelSpectrogram,
    SpectrogramError,
)

DEFAULT_CONTEXT = 57  # frames on either side of the center frame


class AudioFormatError(ValueError):
    """WAV file uses a codec or layout this frontend does not support."""


@dataclass(frozen=True)
class FeatureConfig:
    """STFT and mel filterbank parameters."""

    sample_rate_hz: int = 22050
    frame_length: int = 1024
    hop_length: int = 315
    n_bands: int = 80
    fmin_hz: float = 27.5
    fmax_hz: float = 8000.0
    log_floor: float = 1e-7

    def __post_init__(self):
        if not (0 <= self.fmin_hz < self.fmax_hz <= self.sample_rate_hz / 2):
            raise ValueError(
                f"need 0 <= fmin < fmax <= nyquist, got {self.fmin_hz}..{self.fmax_hz} "
                f"at {self.sample_rate_hz} Hz"
            )
        if not (self.frame_length >= self.hop_length >= 1):
            raise ValueError("need frame_length >= hop_length >= 1")
        if self.n_bands < 1:
            raise ValueError("need at least one mel band")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be > 0")

    @property
    def hop_seconds(self) -> float:
        return self.hop_length / self.sample_rate_hz


@dataclass(frozen=True)
class Excerpt:
    """Fixed-size window cut from a longer spectrogram."""

    spec: MelSpectrogram
    center_frame_index: int
    source_id: str = ""


def read_wav(source: str | Path) -> tuple[np.ndarray, int]:
    """Load a PCM WAV file as normalized mono samples in [-1, 1].

    Accepts 16/32-bit integer and 32/64-bit float PCM; stereo channels are
    averaged.  Compressed or companded codecs raise :class:`AudioFormatError`.
    """
    source = Path(source)
    try:
        rate, data = scipy.io.wavfile.read(source)
    except ValueError as exc:
        raise AudioFormatError(f"{source}: unsupported WAV format ({exc})") from exc
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        raise AudioFormatError(f"{source}: unsupported sample dtype {data.dtype}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return samples, int(rate)


def hz_to_mel(freq_hz):
    return 2595.0 * np.log10(1.0 + np.asarray(freq_hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_band_centers(config: FeatureConfig) -> np.ndarray:
    """Center frequency (Hz) of each triangular filter."""
    mel_points = np.linspace(hz_to_mel(config.fmin_hz), hz_to_mel(config.fmax_hz), config.n_bands + 2)
    return mel_to_hz(mel_points)[1:-1]


def mel_filterbank(config: FeatureConfig) -> np.ndarray:
    """Area-normalized triangular filters, shape (n_bands, n_fft_bins)."""
    n_bins = config.frame_length // 2 + 1
    fft_freqs = np.arange(n_bins) * config.sample_rate_hz / config.frame_length
    mel_points = np.linspace(hz_to_mel(config.fmin_hz), hz_to_mel(config.fmax_hz), config.n_bands + 2)
    hz_points = mel_to_hz(mel_points)
    bank = np.zeros((config.n_bands, n_bins))
    for b in range(config.n_bands):
        lo, center, hi = hz_points[b], hz_points[b + 1], hz_points[b + 2]
        rising = (fft_freqs - lo) / (center - lo)
        falling = (hi - fft_freqs) / (hi - center)
        bank[b] = np.clip(np.minimum(rising, falling), 0.0, None)
        # Normalize to unit area in Hz so band magnitudes stay comparable.
        bank[b] *= 2.0 / (hi - lo)
    return bank


def extract_mel(samples: np.ndarray, config: FeatureConfig = FeatureConfig()) -> MelSpectrogram:
    """Log-scaled mel spectrogram of a mono sample buffer.

    Frames are fully contained in the signal (no padding), so the output
    has ``1 + (len(samples) - frame_length) // hop_length`` frames.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise ValueError("extract_mel expects a mono 1-D sample buffer")
    if len(samples) < config.frame_length:
        raise ValueError(
            f"input too short: {len(samples)} samples, need at least {config.frame_length}"
        )
    n_frames = 1 + (len(samples) - config.frame_length) // config.hop_length
    offsets = np.arange(n_frames) * config.hop_length
    frames = samples[offsets[:, None] + np.arange(config.frame_length)[None, :]]
    window = np.hanning(config.frame_length)
    spectrum = np.abs(np.fft.rfft(frames * window, axis=1))
    mel = spectrum @ mel_filterbank(config).T
    return MelSpectrogram(np.log(mel + config.log_floor), config.hop_seconds, SCALE_LOG)


def standardize(spec: MelSpectrogram, band_stats: BandStats) -> MelSpectrogram:
    """Per-band z-scoring of a log-scaled spectrogram."""
    if spec.scale != SCALE_LOG:
        raise SpectrogramError(f"standardize expects scale={SCALE_LOG!r}, got {spec.scale!r}")
    if band_stats.n_bands != spec.n_bands:
        raise SpectrogramError(
            f"band count mismatch: stats have {band_stats.n_bands}, spectrogram has {spec.n_bands}"
        )
    values = (spec.values - band_stats.mean) / band_stats.std
    return MelSpectrogram(values, spec.hop_seconds, SCALE_LOG_STANDARDIZED)


def destandardize(spec: MelSpectrogram, band_stats: BandStats) -> MelSpectrogram:
    """Inverse of :func:`standardize`."""
    if spec.scale != SCALE_LOG_STANDARDIZED:
        raise SpectrogramError(
            f"destandardize expects scale={SCALE_LOG_STANDARDIZED!r}, got {spec.scale!r}"
        )
    if band_stats.n_bands != spec.n_bands:
        raise SpectrogramError(
            f"band count mismatch: stats have {band_stats.n_bands}, spectrogram has {spec.n_bands}"
        )
    values = spec.values * band_stats.std + band_stats.mean
    return MelSpectrogram(values, spec.hop_seconds, SCALE_LOG)


def slice_excerpts(
    spec: MelSpectrogram,
    context: int = DEFAULT_CONTEXT,
    stride: int = 1,
    source_id: str = "",
) -> list[Excerpt]:
    """Cut contiguous ``2 * context + 1``-frame windows advancing by ``stride``.

    A spectrogram shorter than one window yields an empty list with a
    warning rather than an error, so corpus sweeps keep going.
    """
    if context < 0 or stride < 1:
        raise ValueError("need context >= 0 and stride >= 1")
    window = 2 * context + 1
    if spec.n_frames < window:
        warnings.warn(
            f"spectrogram with {spec.n_frames} frames is shorter than one "
            f"{window}-frame excerpt; nothing to slice",
            stacklevel=2,
        )
        return []
    excerpts = []
    for start in range(0, spec.n_frames - window + 1, stride):
        values = spec.values[start : start + window]
        excerpts.append(
            Excerpt(
                spec=MelSpectrogram(values, spec.hop_seconds, spec.scale),
                center_frame_index=start + context,
                source_id=source_id,
            )
        )
    return excerpts


@dataclass(frozen=True)
class LabelEvent:
    seconds: float
    label: str


def read_label_events(source: str | Path) -> list[LabelEvent]:
    """Parse a label file: one ``"<seconds> <label>"`` line per segment start."""
    events = []
    for lineno, line in enumerate(Path(source).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or parts[1] not in ("sing", "nosing"):
            raise ValueError(f"{source}:{lineno}: expected '<seconds> sing|nosing', got {line!r}")
        events.append(LabelEvent(float(parts[0]), parts[1]))
    events.sort(key=lambda e: e.seconds)
    return events


def label_at(events: list[LabelEvent], seconds: float) -> str:
    """Label active at a time instant; 'nosing' before the first event."""
    current = "nosing"
    for event in events:
        if event.seconds <= seconds:
            current = event.label
        else:
            break
    return current
