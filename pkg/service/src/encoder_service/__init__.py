"""Encoder service: sentence embeddings and query-snippet relevance scores
over HTTP, with a deterministic stub model mode for CI."""

from .app import ServiceConfig, create_app

__version__ = "0.1.0"
