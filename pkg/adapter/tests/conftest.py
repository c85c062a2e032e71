import struct
import subprocess
import sys

import pytest


class RawClient:
    """Bare-bones MLPRED/1 client speaking to an adapter subprocess.

    Deliberately independent of the explanation toolkit's client so the
    protocol itself is what gets tested.
    """

    def __init__(self, argv):
        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.PIPE
        )

    def send(self, payload: bytes) -> None:
        self.proc.stdin.write(payload)
        self.proc.stdin.flush()

    def read(self, n: int) -> bytes:
        data = self.proc.stdout.read(n)
        return b"" if data is None else data

    def handshake(self, version=1):
        self.send(b"MLPRED" + struct.pack("<I", version))
        reply = self.read(12)
        assert len(reply) == 12
        return struct.unpack("<III", reply)

    def request(self, grids) -> None:
        import numpy as np

        batch = np.asarray(grids, dtype="<f4")
        self.send(struct.pack("<II", 1, batch.shape[0]) + batch.tobytes(order="C"))

    def read_response(self):
        import numpy as np

        (msg_type,) = struct.unpack("<I", self.read(4))
        if msg_type == 255:
            code, length = struct.unpack("<II", self.read(8))
            return ("error", code, self.read(length).decode("utf-8"))
        assert msg_type == 2
        (batch,) = struct.unpack("<I", self.read(4))
        values = np.frombuffer(self.read(4 * batch), dtype="<f4")
        return ("ok", values)

    def expect_eof(self, timeout=10.0) -> None:
        assert self.read(1) == b""
        self.proc.stdin.close()
        self.proc.wait(timeout=timeout)

    def close(self) -> None:
        for stream in (self.proc.stdin, self.proc.stdout, self.proc.stderr):
            try:
                stream.close()
            except OSError:
                pass
        self.proc.terminate()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()


def adapter_argv(*extra):
    return [sys.executable, "-m", "mlpred_adapter", *extra]


@pytest.fixture
def raw_client():
    clients = []

    def start(*extra):
        client = RawClient(adapter_argv(*extra))
        clients.append(client)
        return client

    yield start
    for client in clients:
        client.close()
