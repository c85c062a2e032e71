"""Command line: pick a model and a transport, then serve.

Examples:
    adapter --mode builtin:constant:0.7 --stdio
    adapter --mode builtin:energy_band:0,80,2.0,0.0 --shape 115x80 --stdio
    adapter --mode builtin:additive_mask:oracle.json --stdio
    adapter --mode module:my_model.py:predict --shape 115x80 --tcp 127.0.0.1:9000
"""

from __future__ import annotations

import argparse
import sys

from .models import build_model, load_user_model
from .server import AdapterConfig, serve_stdio, serve_tcp


def _parse_shape(text):
    try:
        frames, bands = text.lower().split("x")
        return int(frames), int(bands)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected <frames>x<bands>, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adapter",
        description="Serve a model over the MLPRED/1 batch prediction protocol.",
    )
    parser.add_argument(
        "--mode", required=True,
        help="builtin:<spec> mirror or module:<path.py>[:<callable>] user model",
    )
    parser.add_argument(
        "--shape", type=_parse_shape, default=(115, 80),
        help="advertised input shape as <frames>x<bands> (default 115x80)",
    )
    transport = parser.add_mutually_exclusive_group()
    transport.add_argument("--stdio", action="store_true", help="serve stdin/stdout (default)")
    transport.add_argument("--tcp", metavar="HOST:PORT", help="listen on a TCP address")
    parser.add_argument(
        "--max-connections", type=int, default=0,
        help="stop after this many TCP connections (0 = run until killed)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    shape = args.shape
    try:
        if args.mode.startswith("builtin:"):
            model, shape = build_model(args.mode, shape)
        elif args.mode.startswith("module:"):
            model = load_user_model(args.mode[len("module:") :])
        else:
            raise ValueError(f"unknown mode {args.mode!r}")
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    config = AdapterConfig(
        model=model,
        n_frames=shape[0],
        n_bands=shape[1],
        transport="tcp" if args.tcp else "stdio",
        host=args.tcp.rsplit(":", 1)[0] if args.tcp else "127.0.0.1",
        port=int(args.tcp.rsplit(":", 1)[1]) if args.tcp else 0,
        max_connections=args.max_connections,
    )
    if config.transport == "tcp":
        serve_tcp(config)
    else:
        serve_stdio(config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
