"""FastAPI application exposing the encoder wire protocol.

POST /encode {"texts": [...]}            -> {"vectors": [[...]], "dimension": n}
POST /score  {"pairs": [{query,snippet}]} -> {"scores": [...]}
GET  /health                              -> {"status": "ok", "model": ..., "dimension": n}

400 on empty or oversized batches, 503 until models are loaded. The service
keeps no per-request state, so identical requests get identical bodies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .models import STUB_MODEL_NAME, load_encoder, load_scorer

DEFAULT_PORT = 8089
DEFAULT_MAX_BATCH = 256


@dataclass
class ServiceConfig:
    encoder_model: str = STUB_MODEL_NAME
    scorer_model: str | None = STUB_MODEL_NAME
    port: int = DEFAULT_PORT
    max_batch_size: int = DEFAULT_MAX_BATCH

    def __post_init__(self) -> None:
        if not 0 < self.port < 65536:
            raise ValueError(f"port must be in 1..65535, got {self.port}")
        if self.max_batch_size < 1:
            raise ValueError(f"max_batch_size must be >= 1, got {self.max_batch_size}")


@dataclass
class ModelState:
    config: ServiceConfig
    encoder: object | None = field(default=None)
    scorer: object | None = field(default=None)

    @property
    def loaded(self) -> bool:
        return self.encoder is not None

    def load(self) -> None:
        self.encoder = load_encoder(self.config.encoder_model)
        if self.config.scorer_model:
            self.scorer = load_scorer(self.config.scorer_model)


class EncodeRequest(BaseModel):
    texts: list[str]


class ScorePair(BaseModel):
    query: str
    snippet: str


class ScoreRequest(BaseModel):
    pairs: list[ScorePair]


def create_app(config: ServiceConfig | None = None, preload: bool = True) -> FastAPI:
    config = config or ServiceConfig()
    state = ModelState(config)
    if preload:
        state.load()

    app = FastAPI(title="snipq encoder service")
    app.state.models = state

    def require_loaded() -> None:
        if not state.loaded:
            raise HTTPException(status_code=503, detail="model not loaded")

    def check_batch(size: int) -> None:
        if size == 0:
            raise HTTPException(status_code=400, detail="empty batch")
        if size > config.max_batch_size:
            raise HTTPException(
                status_code=400,
                detail=f"batch too large: {size} > {config.max_batch_size}",
            )

    @app.get("/health")
    def health():
        if not state.loaded:
            return JSONResponse(status_code=503, content={"status": "loading"})
        return {
            "status": "ok",
            "model": state.encoder.name,
            "dimension": state.encoder.dimension,
        }

    @app.post("/encode")
    def encode(request: EncodeRequest):
        require_loaded()
        check_batch(len(request.texts))
        vectors = state.encoder.encode(request.texts)
        return {"vectors": vectors, "dimension": state.encoder.dimension}

    @app.post("/score")
    def score(request: ScoreRequest):
        require_loaded()
        if state.scorer is None:
            raise HTTPException(status_code=503, detail="no scorer model configured")
        check_batch(len(request.pairs))
        scores = state.scorer.score([(pair.query, pair.snippet) for pair in request.pairs])
        return {"scores": scores}

    return app
