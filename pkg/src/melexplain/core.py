"""Spectrogram data model, on-disk formats and dataset-level statistics.

A :class:`MelSpectrogram` is a time-by-frequency magnitude grid plus the
metadata needed to interpret it (seconds per frame and the value scale).
Values are held as little-endian float32 so that the binary round trip
through :func:`save_spectrogram` / :func:`load_spectrogram` is bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

SCALE_LINEAR = "linear"
SCALE_LOG = "log"
SCALE_LOG_STANDARDIZED = "log_standardized"

_SCALES = (SCALE_LINEAR, SCALE_LOG, SCALE_LOG_STANDARDIZED)
_SCALE_CODES = {name: code for code, name in enumerate(_SCALES)}

_MAGIC = b"MELS"
_VERSION = 1
# magic, version, n_frames, n_bands, hop_seconds, scale, reserved
_HEADER = struct.Struct("<4sIIIfII")
HEADER_SIZE = _HEADER.size  # 28 bytes


class SpectrogramError(ValueError):
    """Invalid spectrogram content (shape, NaN/Inf, scale mismatch...)."""


class SpectrogramFormatError(SpectrogramError):
    """Corrupt or unsupported spectrogram file."""


@dataclass(frozen=True)
class MelSpectrogram:
    """Immutable 2-D magnitude grid, frames along axis 0, bands along axis 1.

    ``values`` is coerced to C-contiguous float32 and ``hop_seconds`` to
    float32 precision, matching the on-disk representation.
    """

    values: np.ndarray
    hop_seconds: float
    scale: str = SCALE_LINEAR

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float32)
        if values.ndim != 2:
            raise SpectrogramError(f"expected a 2-D grid, got ndim={values.ndim}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise SpectrogramError("empty spectrogram")
        if not np.all(np.isfinite(values)):
            raise SpectrogramError("spectrogram contains NaN or Inf values")
        if self.scale not in _SCALES:
            raise SpectrogramError(f"unknown scale {self.scale!r}; expected one of {_SCALES}")
        hop = float(np.float32(self.hop_seconds))
        if not (hop > 0 and np.isfinite(hop)):
            raise SpectrogramError(f"hop_seconds must be positive and finite, got {self.hop_seconds}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "hop_seconds", hop)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_bands(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_values(self, values: np.ndarray, scale: str | None = None) -> "MelSpectrogram":
        """Copy of this spectrogram with new values (same hop, optionally new scale)."""
        return MelSpectrogram(values, self.hop_seconds, scale if scale is not None else self.scale)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MelSpectrogram):
            return NotImplemented
        return (
            self.scale == other.scale
            and self.hop_seconds == other.hop_seconds
            and self.values.shape == other.values.shape
            and bool(np.all(self.values == other.values))
        )

    def __hash__(self):
        return hash((self.values.shape, self.scale, self.hop_seconds))


@dataclass(frozen=True, eq=False)
class BandStats:
    """Per-band mean and (strictly positive) standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, BandStats):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.std, other.std)

    def __hash__(self):
        return hash((self.mean.shape, float(self.mean.sum()), float(self.std.sum())))

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.ndim != 1 or std.ndim != 1 or mean.shape != std.shape:
            raise SpectrogramError("band mean/std must be 1-D vectors of equal length")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(std))):
            raise SpectrogramError("band statistics must be finite")
        if np.any(std <= 0):
            bad = int(np.argmin(std))
            raise SpectrogramError(f"band {bad} has non-positive standard deviation ({std[bad]})")
        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def n_bands(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class DatasetStats:
    """Corpus-level statistics used by occlusion fill contents.

    ``min_value`` is the global minimum bin magnitude over every excerpt
    that contributed; ``band_stats`` pools all frames of all excerpts.
    """

    min_value: float
    band_stats: BandStats
    n_excerpts: int = field(default=0)

    def to_json_dict(self) -> dict:
        return {
            "min_value": self.min_value,
            "band_mean": self.band_stats.mean.tolist(),
            "band_std": self.band_stats.std.tolist(),
            "n_excerpts": self.n_excerpts,
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "DatasetStats":
        return cls(
            min_value=float(payload["min_value"]),
            band_stats=BandStats(np.asarray(payload["band_mean"]), np.asarray(payload["band_std"])),
            n_excerpts=int(payload.get("n_excerpts", 0)),
        )

    def save(self, destination: str | Path) -> None:
        Path(destination).write_text(json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, source: str | Path) -> "DatasetStats":
        return cls.from_json_dict(json.loads(Path(source).read_text()))


def save_spectrogram(spec: MelSpectrogram, destination: str | Path) -> None:
    """Write ``spec`` to ``destination``.

    ``.csv`` destinations get one comma-separated frame per line plus a
    ``<stem>.meta.json`` sidecar carrying ``hop_seconds`` and ``scale``;
    anything else gets the binary MELS format (28-byte header followed by
    the float32 payload, all little-endian, frame-major).
    """
    destination = Path(destination)
    if destination.suffix == ".csv":
        _save_csv(spec, destination)
        return
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        spec.n_frames,
        spec.n_bands,
        spec.hop_seconds,
        _SCALE_CODES[spec.scale],
        0,
    )
    payload = spec.values.astype("<f4", copy=False).tobytes(order="C")
    try:
        with open(destination, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise SpectrogramFormatError(f"cannot write spectrogram to {destination}: {exc}") from exc


def load_spectrogram(source: str | Path) -> MelSpectrogram:
    """Read a spectrogram written by :func:`save_spectrogram`."""
    source = Path(source)
    if source.suffix == ".csv":
        return _load_csv(source)
    try:
        raw = source.read_bytes()
    except OSError as exc:
        raise SpectrogramFormatError(f"cannot read spectrogram from {source}: {exc}") from exc
    if len(raw) < HEADER_SIZE:
        raise SpectrogramFormatError(f"{source}: file too small for a MELS header ({len(raw)} bytes)")
    magic, version, n_frames, n_bands, hop_seconds, scale_code, _reserved = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise SpectrogramFormatError(f"{source}: bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise SpectrogramFormatError(f"{source}: unsupported version {version}, expected {_VERSION}")
    if scale_code >= len(_SCALES):
        raise SpectrogramFormatError(f"{source}: unknown scale code {scale_code}")
    if n_frames < 1 or n_bands < 1:
        raise SpectrogramFormatError(f"{source}: degenerate shape {n_frames}x{n_bands}")
    expected = HEADER_SIZE + 4 * n_frames * n_bands
    if len(raw) != expected:
        raise SpectrogramFormatError(
            f"{source}: payload size mismatch, expected {expected} bytes, found {len(raw)}"
        )
    values = np.frombuffer(raw, dtype="<f4", offset=HEADER_SIZE).reshape(n_frames, n_bands)
    if not np.all(np.isfinite(values)):
        raise SpectrogramError(f"{source}: payload contains NaN or Inf")
    return MelSpectrogram(values, hop_seconds, _SCALES[scale_code])


def _sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".meta.json")


def _save_csv(spec: MelSpectrogram, destination: Path) -> None:
    lines = "\n".join(",".join(repr(float(v)) for v in frame) for frame in spec.values)
    destination.write_text(lines + "\n")
    meta = {"hop_seconds": spec.hop_seconds, "scale": spec.scale}
    _sidecar_path(destination).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _load_csv(source: Path) -> MelSpectrogram:
    sidecar = _sidecar_path(source)
    if not sidecar.exists():
        raise SpectrogramFormatError(f"{source}: missing metadata sidecar {sidecar.name}")
    meta = json.loads(sidecar.read_text())
    rows = []
    for lineno, line in enumerate(source.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise SpectrogramFormatError(f"{source}:{lineno}: unparsable value ({exc})") from exc
    if not rows:
        raise SpectrogramFormatError(f"{source}: no frames")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise SpectrogramFormatError(f"{source}: ragged rows, widths {sorted(widths)}")
    return MelSpectrogram(np.asarray(rows), float(meta["hop_seconds"]), str(meta["scale"]))


def dataset_stats(sources: Iterable[MelSpectrogram]) -> DatasetStats:
    """Pool statistics over a corpus of spectrograms.

    Returns the global minimum bin value plus per-band mean and population
    standard deviation pooled over all frames of all inputs.  All inputs
    must share the band count and every band must have non-zero variance;
    a constant band would break standardization downstream, so it is
    rejected here rather than silently clamped.
    """
    iterator: Iterator[MelSpectrogram] = iter(sources)
    n_bands = None
    count = 0
    total = None
    total_sq = None
    min_value = np.inf
    n_excerpts = 0
    for spec in iterator:
        values = spec.values.astype(np.float64)
        if n_bands is None:
            n_bands = spec.n_bands
            total = np.zeros(n_bands)
            total_sq = np.zeros(n_bands)
        elif spec.n_bands != n_bands:
            raise SpectrogramError(
                f"band count mismatch: expected {n_bands}, excerpt {n_excerpts} has {spec.n_bands}"
            )
        count += spec.n_frames
        total += values.sum(axis=0)
        total_sq += (values * values).sum(axis=0)
        min_value = min(min_value, float(values.min()))
        n_excerpts += 1
    if n_bands is None:
        raise SpectrogramError("dataset_stats needs at least one spectrogram")
    mean = total / count
    variance = np.maximum(total_sq / count - mean * mean, 0.0)
    if np.any(variance <= 0):
        bad = int(np.argmin(variance))
        raise SpectrogramError(
            f"band {bad} has zero variance over the dataset; cannot standardize"
        )
    return DatasetStats(
        min_value=min_value,
        band_stats=BandStats(mean, np.sqrt(variance)),
        n_excerpts=n_excerpts,
    )
