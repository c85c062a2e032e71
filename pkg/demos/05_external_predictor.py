"""Talking to an out-of-process model over the MLPRED/1 wire protocol.

A real classifier (a trained CNN, say) runs in its own process and
answers batches of float32 grids with probabilities.  This demo writes a
tiny stand-in server to a temp file, spawns it, and drives it through the
same client the explainer uses, so the whole explanation pipeline works
unchanged against remote models.

The companion `adapter` package provides a production version of such a
server (`adapter --mode builtin:constant:0.7 --stdio`).
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from melexplain import ExplainerConfig, MelSpectrogram, explain, segment_uniform
from melexplain.perturbation import ContentType
from melexplain.predictors import connect_external

SERVER = '''
import struct, sys
inp, out = sys.stdin.buffer, sys.stdout.buffer
inp.read(10)                                   # MLPRED + client version
out.write(struct.pack("<III", 1, 30, 12))      # version, n_frames, n_bands
out.flush()
while True:
    header = inp.read(8)
    if len(header) < 8:
        break
    _, batch = struct.unpack("<II", header)
    grids = inp.read(4 * 30 * 12 * batch)
    values = memoryview(grids).cast("f")
    probabilities = []
    for i in range(batch):                     # mean-energy sigmoid
        grid = values[i * 360 : (i + 1) * 360]
        mean = sum(grid) / 360.0
        probabilities.append(1.0 / (1.0 + 2.718281828 ** (-3.0 * mean)))
    out.write(struct.pack("<II", 2, batch) + struct.pack(f"<{batch}f", *probabilities))
    out.flush()
'''

with tempfile.TemporaryDirectory() as workdir:
    server_path = Path(workdir) / "server.py"
    server_path.write_text(SERVER)

    model = connect_external([sys.executable, str(server_path)])
    print(f"handshake done; server expects {model.expected_shape} inputs")

    rng = np.random.default_rng(5)
    excerpt = MelSpectrogram(rng.normal(size=(30, 12)) + 0.3, 0.01, "log_standardized")
    print(f"remote prediction: {model.predict_batch([excerpt])[0]:.4f}")

    scheme = segment_uniform(30, 12, "temporal", 10)
    config = ExplainerConfig(n_samples=1000, top_k=3, seed=2)
    explanation = explain(excerpt, model, scheme, ContentType.mean_inp(), config)
    print("top components from the remote model:")
    for component, weight in explanation.entries:
        print(f"  segment {component}: {weight:+.4f}")
    model.close()
