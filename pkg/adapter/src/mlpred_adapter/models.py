"""Models the adapter can serve.

The builtin mirrors reimplement the toolkit's toy classifiers from their
documented definitions (no import of the toolkit itself), so equivalence
tests across the wire genuinely compare two implementations.  User models
are any callable mapping a (batch, frames, bands) float array to a batch
of probabilities.
"""

from __future__ import annotations

import importlib.util
import json
import struct
from pathlib import Path

import numpy as np

MELS_MAGIC = b"MELS"
MELS_HEADER = struct.Struct("<4sIIIfII")


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def load_mels(path):
    """Minimal reader for the MELS excerpt format (header + f32 grid)."""
    raw = Path(path).read_bytes()
    if len(raw) < MELS_HEADER.size:
        raise ValueError(f"{path}: too small for a MELS header")
    magic, version, n_frames, n_bands, _hop, _scale, _reserved = MELS_HEADER.unpack_from(raw)
    if magic != MELS_MAGIC or version != 1:
        raise ValueError(f"{path}: not a MELS v1 file")
    expected = MELS_HEADER.size + 4 * n_frames * n_bands
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype="<f4", offset=MELS_HEADER.size).reshape(n_frames, n_bands)


def uniform_regions(n_frames, n_bands, axis, n):
    """Uniform temporal/spectral split; remainder goes to the earliest slices."""
    length = n_frames if axis == "temporal" else n_bands
    if not 1 <= n <= length:
        raise ValueError(f"cannot cut {length} into {n} slices")
    base, remainder = divmod(length, n)
    regions, start = [], 0
    for index in range(n):
        stop = start + base + (1 if index < remainder else 0)
        if axis == "temporal":
            regions.append((start, stop, 0, n_bands))
        else:
            regions.append((0, n_frames, start, stop))
        start = stop
    return regions


class ConstantModel:
    def __init__(self, probability):
        self.probability = float(probability)

    def predict(self, batch):
        return np.full(batch.shape[0], self.probability)


class EnergyBandModel:
    def __init__(self, band_lo, band_hi, gain, bias):
        self.band_lo, self.band_hi = int(band_lo), int(band_hi)
        self.gain, self.bias = float(gain), float(bias)

    def predict(self, batch):
        mean_energy = batch[:, :, self.band_lo : self.band_hi].mean(axis=(1, 2), dtype=np.float64)
        return sigmoid(self.gain * mean_energy + self.bias)


class AdditiveMaskModel:
    """clamp(base + sum of contributions over components equal to the reference)."""

    def __init__(self, regions, base, contributions, reference):
        self.regions = regions
        self.base = float(base)
        self.contributions = np.asarray(contributions, dtype=np.float64)
        self.reference = np.asarray(reference, dtype=np.float32)

    def predict(self, batch):
        total = np.full(batch.shape[0], self.base)
        for contribution, (fs, fe, bs, be) in zip(self.contributions, self.regions):
            present = np.all(
                batch[:, fs:fe, bs:be] == self.reference[fs:fe, bs:be], axis=(1, 2)
            )
            total += contribution * present
        return np.clip(total, 0.0, 1.0)


class SilenceCountModel:
    """sigmoid(gain * number of near-silent components + bias)."""

    def __init__(self, regions, threshold=1e-6, gain=2.0, bias=-1.0):
        self.regions = regions
        self.threshold = float(threshold)
        self.gain, self.bias = float(gain), float(bias)

    def predict(self, batch):
        silent = np.zeros(batch.shape[0])
        for fs, fe, bs, be in self.regions:
            silent += np.all(np.abs(batch[:, fs:fe, bs:be]) < self.threshold, axis=(1, 2))
        return sigmoid(self.gain * silent + self.bias)


def build_model(spec_text, shape):
    """Builtin mirror from its CLI spelling; returns (model, advertised shape).

    additive_mask reads its reference excerpt and advertises that shape,
    overriding the --shape flag.
    """
    if not spec_text.startswith("builtin:"):
        raise ValueError(f"expected builtin:<spec>, got {spec_text!r}")
    kind, _, args = spec_text[len("builtin:") :].partition(":")
    if kind == "constant":
        return ConstantModel(float(args)), shape
    if kind == "energy_band":
        lo, hi, gain, bias = (float(p) for p in args.split(","))
        return EnergyBandModel(lo, hi, gain, bias), shape
    if kind == "silence_detector":
        parts = args.split(",") if args else ["temporal", "10"]
        if len(parts) not in (2, 5):
            raise ValueError("silence_detector takes '<axis>,<n>[,<threshold>,<gain>,<bias>]'")
        regions = uniform_regions(shape[0], shape[1], parts[0], int(parts[1]))
        extras = [float(p) for p in parts[2:]] or [1e-6, 2.0, -1.0]
        return SilenceCountModel(regions, *extras), shape
    if kind == "additive_mask":
        config_path = Path(args)
        payload = json.loads(config_path.read_text())
        reference_path = Path(payload["reference"])
        if not reference_path.is_absolute():
            reference_path = config_path.parent / reference_path
        reference = load_mels(reference_path)
        regions = uniform_regions(
            reference.shape[0], reference.shape[1],
            payload.get("axis", "temporal"), int(payload["n_components"]),
        )
        model = AdditiveMaskModel(
            regions, payload.get("base", 0.0), payload["contributions"], reference
        )
        return model, reference.shape
    raise ValueError(f"unknown builtin {kind!r}")


class UserModel:
    def __init__(self, function):
        self.function = function

    def predict(self, batch):
        return np.asarray(self.function(batch), dtype=np.float64).ravel()


def load_user_model(spec_text):
    """Load ``module:<path.py>[:<callable>]`` (callable defaults to 'predict')."""
    path, _, name = spec_text.partition(":")
    name = name or "predict"
    module_path = Path(path)
    spec = importlib.util.spec_from_file_location(module_path.stem, module_path)
    if spec is None or spec.loader is None:
        raise ValueError(f"cannot import user module from {path!r}")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    function = getattr(module, name, None)
    if not callable(function):
        raise ValueError(f"{path!r} has no callable named {name!r}")
    return UserModel(function)
