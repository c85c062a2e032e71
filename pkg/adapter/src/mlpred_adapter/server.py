"""MLPRED/1 framing and the serve loop.

All integers and floats are little-endian.  The client opens with
``MLPRED`` + u32 version; the server answers u32 version plus the
expected (n_frames, n_bands).  Requests are msg type 1 with a u32 batch
size and that many float32 grids; responses are msg type 2 with one
float32 probability per input, always clamped to [0, 1].  Anything
malformed gets an error frame (msg type 255, u32 code, u32 length, UTF-8
message) and the connection is closed.  A zero-size batch is legal and
answered with an empty response, connection kept open.
"""

from __future__ import annotations

import socket
import struct
import sys
from dataclasses import dataclass

import numpy as np

MAGIC = b"MLPRED"
VERSION = 1
MSG_REQUEST = 1
MSG_RESPONSE = 2
MSG_ERROR = 255

CODE_PROTOCOL = 1
CODE_MODEL = 2

MAX_BATCH = 1 << 20


@dataclass(frozen=True)
class AdapterConfig:
    """What to serve and where: a model, its input shape, one transport."""

    model: object
    n_frames: int
    n_bands: int
    transport: str = "stdio"  # or "tcp"
    host: str = "127.0.0.1"
    port: int = 0
    max_connections: int = 0  # 0 means serve until interrupted


class _EndOfStream(Exception):
    pass


class _ProtocolError(Exception):
    pass


def _read_exact(reader, n, eof_ok=False):
    data = reader.read(n)
    if data is None:
        data = b""
    if len(data) == n:
        return data
    if not data and eof_ok:
        raise _EndOfStream
    raise _ProtocolError(f"stream ended with {n - len(data)} of {n} bytes missing")


def serve_stream(reader, writer, config: AdapterConfig) -> None:
    """Answer one connection until EOF; returns cleanly on client close."""

    def send(payload: bytes) -> None:
        writer.write(payload)
        writer.flush()

    def send_error(code: int, message: str) -> None:
        encoded = message.encode("utf-8")
        send(struct.pack("<III", MSG_ERROR, code, len(encoded)) + encoded)

    cells = config.n_frames * config.n_bands
    try:
        opening = _read_exact(reader, len(MAGIC) + 4, eof_ok=True)
    except _EndOfStream:
        return
    except _ProtocolError as exc:
        send_error(CODE_PROTOCOL, f"short handshake: {exc}")
        return
    magic, version = opening[: len(MAGIC)], struct.unpack("<I", opening[len(MAGIC) :])[0]
    if magic != MAGIC:
        send_error(CODE_PROTOCOL, f"bad handshake magic {magic!r}")
        return
    send(struct.pack("<III", VERSION, config.n_frames, config.n_bands))
    if version != VERSION:
        # advertise ourselves, then drop: the client decides what to do
        return

    while True:
        try:
            header = _read_exact(reader, 8, eof_ok=True)
        except _EndOfStream:
            return
        except _ProtocolError as exc:
            send_error(CODE_PROTOCOL, str(exc))
            return
        msg_type, batch = struct.unpack("<II", header)
        if msg_type != MSG_REQUEST:
            send_error(CODE_PROTOCOL, f"unexpected message type {msg_type}")
            return
        if batch > MAX_BATCH:
            send_error(CODE_PROTOCOL, f"batch size {batch} exceeds limit {MAX_BATCH}")
            return
        try:
            payload = _read_exact(reader, 4 * cells * batch)
        except _ProtocolError as exc:
            send_error(CODE_PROTOCOL, f"truncated request: {exc}")
            return
        values = np.frombuffer(payload, dtype="<f4").reshape(batch, config.n_frames, config.n_bands)
        if batch == 0:
            send(struct.pack("<II", MSG_RESPONSE, 0))
            continue
        try:
            probabilities = np.clip(
                np.asarray(config.model.predict(values), dtype=np.float64).ravel(), 0.0, 1.0
            )
        except Exception as exc:
            send_error(CODE_MODEL, f"model failed: {exc}")
            return
        if probabilities.shape[0] != batch:
            send_error(CODE_MODEL, f"model returned {probabilities.shape[0]} values for {batch}")
            return
        send(
            struct.pack("<II", MSG_RESPONSE, batch)
            + probabilities.astype("<f4").tobytes()
        )


def serve_stdio(config: AdapterConfig) -> None:
    serve_stream(sys.stdin.buffer, sys.stdout.buffer, config)


def serve_tcp(config: AdapterConfig) -> None:
    listener = socket.socket()
    listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    listener.bind((config.host, config.port))
    listener.listen(1)
    host, port = listener.getsockname()
    print(f"listening on {host}:{port}", file=sys.stderr, flush=True)
    served = 0
    while config.max_connections == 0 or served < config.max_connections:
        conn, _ = listener.accept()
        with conn:
            reader = conn.makefile("rb")
            writer = conn.makefile("wb")
            serve_stream(reader, writer, config)
            writer.close()
            reader.close()
        served += 1
    listener.close()
