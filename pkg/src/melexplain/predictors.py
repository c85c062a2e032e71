"""Black-box classifier interface: builtins plus a wire-protocol client.

Every predictor maps a batch of spectrograms to probabilities in [0, 1].
The builtins are controlled instruments for testing explanation behavior:
a constant output, a band-energy sigmoid, a classifier that is exactly
linear in component presence bits, and a detector that reacts only to
near-silent regions.  Real models run out of process behind the MLPRED/1
protocol and are reached through :func:`connect_external`.
"""

from __future__ import annotations

import json
import shlex
import socket
import struct
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .core import MelSpectrogram, load_spectrogram
from .segmentation import SegmentationScheme, segment_uniform

DEFAULT_THRESHOLD = 0.5

LABEL_VOCAL = "vocal"
LABEL_NON_VOCAL = "non_vocal"

PROTOCOL_MAGIC = b"MLPRED"
PROTOCOL_VERSION = 1
MSG_REQUEST = 1
MSG_RESPONSE = 2
MSG_ERROR = 255


class PredictorError(RuntimeError):
    """Base class for classifier-side failures."""


class ShapeError(PredictorError, ValueError):
    """Batch shape does not match what the predictor expects."""


class HandshakeError(PredictorError):
    """External predictor advertised an incompatible protocol."""


class TransportError(PredictorError):
    """Connection to an external predictor broke mid-exchange."""


class RemotePredictorError(PredictorError):
    """External predictor reported an application error (message type 255)."""

    def __init__(self, code: int, message: str):
        super().__init__(f"remote predictor error {code}: {message}")
        self.code = code
        self.message = message


def _batch_values(specs) -> np.ndarray:
    """Normalize a predictor input to a (batch, frames, bands) float array."""
    if isinstance(specs, np.ndarray):
        if specs.ndim == 2:
            specs = specs[None, :, :]
        if specs.ndim != 3:
            raise ShapeError(f"expected a (batch, frames, bands) array, got shape {specs.shape}")
        return specs
    if isinstance(specs, MelSpectrogram):
        return specs.values[None, :, :]
    arrays = [s.values if isinstance(s, MelSpectrogram) else np.asarray(s) for s in specs]
    if not arrays:
        return np.empty((0, 0, 0), dtype=np.float32)
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ShapeError(f"batch mixes shapes {sorted(shapes)}")
    return np.stack(arrays)


def _check_shape(values: np.ndarray, expected: tuple[int, int], who: str) -> None:
    if values.shape[0] == 0:
        return
    if values.shape[1:] != expected:
        raise ShapeError(
            f"{who} expects {expected[0]}x{expected[1]} inputs, got "
            f"{values.shape[1]}x{values.shape[2]}"
        )


def _clamp(probabilities: np.ndarray) -> np.ndarray:
    return np.clip(np.asarray(probabilities, dtype=np.float64), 0.0, 1.0)


def classify(probability: float, threshold: float = DEFAULT_THRESHOLD) -> str:
    """Hard decision: 'vocal' iff probability >= threshold (boundary inclusive)."""
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must be inside (0, 1), got {threshold}")
    return LABEL_VOCAL if probability >= threshold else LABEL_NON_VOCAL


def predict_batch(predictor, specs) -> np.ndarray:
    """Score a batch with any predictor object, returning probabilities."""
    return predictor.predict_batch(specs)


@dataclass(frozen=True)
class ConstantPredictor:
    """Always outputs the same probability; useful as a null instrument."""

    probability: float

    def __post_init__(self):
        if not (0.0 <= self.probability <= 1.0):
            raise ValueError(f"probability must be in [0, 1], got {self.probability}")

    def predict_batch(self, specs) -> np.ndarray:
        values = _batch_values(specs)
        return np.full(values.shape[0], self.probability, dtype=np.float64)


@dataclass(frozen=True)
class EnergyBandPredictor:
    """sigmoid(gain * mean(values over a band range) + bias)."""

    band_lo: int
    band_hi: int
    gain: float = 1.0
    bias: float = 0.0

    def __post_init__(self):
        if not (0 <= self.band_lo < self.band_hi):
            raise ValueError(f"need 0 <= band_lo < band_hi, got {self.band_lo}..{self.band_hi}")

    def predict_batch(self, specs) -> np.ndarray:
        values = _batch_values(specs)
        if values.shape[0] == 0:
            return np.empty(0, dtype=np.float64)
        if self.band_hi > values.shape[2]:
            raise ShapeError(
                f"band range {self.band_lo}..{self.band_hi} exceeds {values.shape[2]} bands"
            )
        mean_energy = values[:, :, self.band_lo : self.band_hi].mean(axis=(1, 2), dtype=np.float64)
        return _clamp(expit(self.gain * mean_energy + self.bias))


class AdditiveMaskPredictor:
    """Exactly linear in component presence bits.

    ``C(z) = clamp(base + sum_j contributions[j] * present_j)`` where
    ``present_j`` is 1 iff component j's bins all equal the reference
    excerpt's bins.  Because the response is exactly linear in the bits,
    the surrogate fit recovers ``contributions`` perfectly, which makes
    this the reference oracle for explainer tests.
    """

    def __init__(
        self,
        scheme: SegmentationScheme,
        base: float,
        contributions,
        reference: MelSpectrogram,
    ):
        contributions = np.asarray(contributions, dtype=np.float64)
        if contributions.shape != (scheme.n_components,):
            raise ValueError(
                f"need one contribution per component, got {contributions.shape} "
                f"for {scheme.n_components} components"
            )
        if (scheme.n_frames, scheme.n_bands) != reference.shape:
            raise ShapeError(
                f"scheme grid {scheme.n_frames}x{scheme.n_bands} does not match "
                f"reference shape {reference.shape}"
            )
        self.scheme = scheme
        self.base = float(base)
        self.contributions = contributions
        self.reference = reference

    def presence_bits(self, specs) -> np.ndarray:
        values = _batch_values(specs)
        _check_shape(values, self.reference.shape, "additive_mask predictor")
        bits = np.empty((values.shape[0], self.scheme.n_components), dtype=np.float64)
        for j, region in enumerate(self.scheme.regions):
            fs, bs = region.slices()
            bits[:, j] = np.all(
                values[:, fs, bs] == self.reference.values[fs, bs], axis=(1, 2)
            )
        return bits

    def predict_batch(self, specs) -> np.ndarray:
        bits = self.presence_bits(specs)
        return _clamp(self.base + bits @ self.contributions)


class SilenceCountPredictor:
    """Reacts to how many component regions are near-silent.

    A region counts as near-silent when every bin magnitude is below
    ``threshold``; the output is ``sigmoid(gain * count + bias)``.  Zero
    fills silence a region while mean or gaussian fills do not, so this
    instrument's explanations depend on the occlusion content, which is
    exactly the model property the content-sensitivity harness measures.
    """

    def __init__(
        self,
        scheme: SegmentationScheme,
        threshold: float = 1e-6,
        gain: float = 2.0,
        bias: float = -1.0,
    ):
        self.scheme = scheme
        self.threshold = float(threshold)
        self.gain = float(gain)
        self.bias = float(bias)

    def predict_batch(self, specs) -> np.ndarray:
        values = _batch_values(specs)
        if values.shape[0] == 0:
            return np.empty(0, dtype=np.float64)
        _check_shape(values, (self.scheme.n_frames, self.scheme.n_bands), "silence_detector")
        silent = np.zeros(values.shape[0], dtype=np.float64)
        for region in self.scheme.regions:
            fs, bs = region.slices()
            silent += np.all(np.abs(values[:, fs, bs]) < self.threshold, axis=(1, 2))
        return _clamp(expit(self.gain * silent + self.bias))


class _SocketTransport:
    def __init__(self, host: str, port: int, timeout: float = 30.0):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc

    def write(self, data: bytes) -> None:
        try:
            self._sock.sendall(data)
        except OSError as exc:
            raise TransportError(f"send failed: {exc}") from exc

    def read_exact(self, n: int) -> bytes:
        chunks = []
        remaining = n
        while remaining > 0:
            try:
                chunk = self._sock.recv(min(remaining, 1 << 20))
            except OSError as exc:
                raise TransportError(f"receive failed: {exc}") from exc
            if not chunk:
                raise TransportError(f"connection closed with {remaining} of {n} bytes unread")
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class _SubprocessTransport:
    def __init__(self, argv: list[str]):
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as exc:
            raise TransportError(f"cannot start predictor process {argv!r}: {exc}") from exc

    def write(self, data: bytes) -> None:
        try:
            self._proc.stdin.write(data)
            self._proc.stdin.flush()
        except (OSError, ValueError, BrokenPipeError) as exc:
            raise TransportError(f"predictor process rejected input: {exc}") from exc

    def read_exact(self, n: int) -> bytes:
        data = self._proc.stdout.read(n)
        if data is None or len(data) < n:
            got = 0 if data is None else len(data)
            raise TransportError(f"predictor process closed with {n - got} of {n} bytes unread")
        return data

    def close(self) -> None:
        for stream in (self._proc.stdin, self._proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        self._proc.terminate()
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()


class RemotePredictor:
    """MLPRED/1 client; treat an out-of-process model as a predictor.

    The protocol is little-endian over a byte stream.  Handshake: client
    sends ``MLPRED`` + u32 version; server answers u32 version plus the
    expected (n_frames, n_bands).  Each request is msg type 1, a u32 batch
    size and the float32 grids; the response is msg type 2 with one f32
    probability per input.  Message type 255 carries an error code and a
    UTF-8 message.  One connection handles one request at a time; open
    several predictors for parallel dispatch.
    """

    def __init__(self, transport):
        self._transport = transport
        self._lock = threading.Lock()  # one in-flight request per connection
        self._transport.write(PROTOCOL_MAGIC + struct.pack("<I", PROTOCOL_VERSION))
        reply = self._transport.read_exact(12)
        version, n_frames, n_bands = struct.unpack("<III", reply)
        if version != PROTOCOL_VERSION:
            self._transport.close()
            raise HandshakeError(
                f"server speaks protocol version {version}, expected {PROTOCOL_VERSION}"
            )
        self.n_frames = n_frames
        self.n_bands = n_bands

    @property
    def expected_shape(self) -> tuple[int, int]:
        return (self.n_frames, self.n_bands)

    def predict_batch(self, specs) -> np.ndarray:
        values = _batch_values(specs)
        # Validate locally so a bad batch never reaches the wire.
        _check_shape(values, self.expected_shape, "external predictor")
        batch = values.shape[0]
        payload = values.astype("<f4", copy=False).tobytes(order="C")
        with self._lock:
            self._transport.write(struct.pack("<II", MSG_REQUEST, batch) + payload)
            msg_type = struct.unpack("<I", self._transport.read_exact(4))[0]
            if msg_type == MSG_ERROR:
                code, length = struct.unpack("<II", self._transport.read_exact(8))
                message = self._transport.read_exact(length).decode("utf-8", errors="replace")
                raise RemotePredictorError(code, message)
            if msg_type != MSG_RESPONSE:
                raise TransportError(f"unexpected message type {msg_type} in response")
            (reply_batch,) = struct.unpack("<I", self._transport.read_exact(4))
            if reply_batch != batch:
                raise TransportError(
                    f"server answered {reply_batch} probabilities for {batch} inputs"
                )
            raw = self._transport.read_exact(4 * batch)
        return _clamp(np.frombuffer(raw, dtype="<f4").astype(np.float64))

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def connect_external(endpoint, timeout: float = 30.0) -> RemotePredictor:
    """Open an MLPRED/1 predictor.

    ``endpoint`` is either ``"tcp:<host>:<port>"``, ``"exec:<command>"``
    (the command is spawned and spoken to over stdio), or an argv list.
    """
    if isinstance(endpoint, (list, tuple)):
        return RemotePredictor(_SubprocessTransport(list(endpoint)))
    if endpoint.startswith("tcp:"):
        host, _, port = endpoint[4:].rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"malformed tcp endpoint {endpoint!r}; expected tcp:<host>:<port>")
        return RemotePredictor(_SocketTransport(host, int(port), timeout=timeout))
    if endpoint.startswith("exec:"):
        return RemotePredictor(_SubprocessTransport(shlex.split(endpoint[5:])))
    raise ValueError(f"unknown endpoint {endpoint!r}; expected tcp:..., exec:... or an argv list")


def _parse_floats(text: str, n: int, what: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != n:
        raise ValueError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    return [float(p) for p in parts]


def build_predictor(
    text: str,
    default_scheme: SegmentationScheme | None = None,
    input_shape: tuple[int, int] | None = None,
    base_dir: str | Path | None = None,
):
    """Construct a predictor from its command-line spelling.

    Builtins: ``builtin:constant:<p>``,
    ``builtin:energy_band:<lo>,<hi>,<gain>,<bias>``,
    ``builtin:silence_detector[:<axis>,<n>[,<threshold>,<gain>,<bias>]]``,
    ``builtin:additive_mask:<config.json>``.  External models:
    ``exec:<command>`` or ``tcp:<host>:<port>``.
    """
    if text.startswith(("tcp:", "exec:")):
        return connect_external(text)
    if not text.startswith("builtin:"):
        raise ValueError(f"unknown predictor spec {text!r}")
    rest = text[len("builtin:") :]
    kind, _, args = rest.partition(":")
    if kind == "constant":
        return ConstantPredictor(float(args))
    if kind == "energy_band":
        lo, hi, gain, bias = _parse_floats(args, 4, "energy_band")
        return EnergyBandPredictor(int(lo), int(hi), gain, bias)
    if kind == "silence_detector":
        if not args:
            if default_scheme is None:
                raise ValueError("silence_detector without arguments needs a segmentation scheme")
            return SilenceCountPredictor(default_scheme)
        parts = args.split(",")
        if len(parts) not in (2, 5):
            raise ValueError(
                "silence_detector takes '<axis>,<n>' or '<axis>,<n>,<threshold>,<gain>,<bias>'"
            )
        if input_shape is None:
            raise ValueError("silence_detector with an axis needs the input shape")
        scheme = segment_uniform(input_shape[0], input_shape[1], parts[0], int(parts[1]))
        extra = [float(p) for p in parts[2:]] or [1e-6, 2.0, -1.0]
        return SilenceCountPredictor(scheme, *extra)
    if kind == "additive_mask":
        config_path = Path(args)
        if base_dir is not None and not config_path.is_absolute():
            config_path = Path(base_dir) / config_path
        payload = json.loads(config_path.read_text())
        reference_path = Path(payload["reference"])
        if not reference_path.is_absolute():
            reference_path = config_path.parent / reference_path
        reference = load_spectrogram(reference_path)
        scheme = segment_uniform(
            reference.n_frames,
            reference.n_bands,
            payload.get("axis", "temporal"),
            int(payload["n_components"]),
            payload.get("n_freq"),
        )
        return AdditiveMaskPredictor(
            scheme, float(payload.get("base", 0.0)), payload["contributions"], reference
        )
    raise ValueError(f"unknown builtin predictor {kind!r}")
