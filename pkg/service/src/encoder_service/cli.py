"""Run the encoder service. Flags override the ENCODER_MODEL, SCORER_MODEL,
and PORT environment variables; the default models are the deterministic
stubs, real checkpoints are opt-in by name."""

from __future__ import annotations

import argparse
import os

import uvicorn

from .app import DEFAULT_MAX_BATCH, DEFAULT_PORT, ServiceConfig, create_app
from .models import STUB_MODEL_NAME


def build_config(argv: list[str] | None = None) -> tuple[ServiceConfig, str]:
    parser = argparse.ArgumentParser(prog="snipq-encoder-service", description=__doc__)
    parser.add_argument(
        "--encoder-model",
        default=os.environ.get("ENCODER_MODEL", STUB_MODEL_NAME),
        help=f"sentence encoder name, or '{STUB_MODEL_NAME}' (env ENCODER_MODEL)",
    )
    parser.add_argument(
        "--scorer-model",
        default=os.environ.get("SCORER_MODEL", STUB_MODEL_NAME),
        help=f"cross-encoder name, '{STUB_MODEL_NAME}', or 'none' (env SCORER_MODEL)",
    )
    parser.add_argument(
        "--port",
        type=int,
        default=int(os.environ.get("PORT", DEFAULT_PORT)),
        help=f"listen port (env PORT, default {DEFAULT_PORT})",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--max-batch", type=int, default=DEFAULT_MAX_BATCH, dest="max_batch")
    args = parser.parse_args(argv)
    scorer = None if args.scorer_model == "none" else args.scorer_model
    config = ServiceConfig(
        encoder_model=args.encoder_model,
        scorer_model=scorer,
        port=args.port,
        max_batch_size=args.max_batch,
    )
    return config, args.host


def main(argv: list[str] | None = None) -> int:
    config, host = build_config(argv)
    app = create_app(config)
    uvicorn.run(app, host=host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
