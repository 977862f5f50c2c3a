import hashlib

import numpy as np
import pytest
from fastapi.testclient import TestClient

from encoder_service.app import ServiceConfig, create_app
from encoder_service.models import STUB_DIMENSION, StubEncoder, StubScorer


@pytest.fixture
def client():
    return TestClient(create_app(ServiceConfig(max_batch_size=8)))


class TestHealth:
    def test_healthy(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "ok"
        assert body["model"] == "stub"
        assert body["dimension"] == STUB_DIMENSION

    def test_loading_returns_503(self):
        client = TestClient(create_app(preload=False))
        assert client.get("/health").status_code == 503
        assert client.post("/encode", json={"texts": ["a"]}).status_code == 503
        assert client.post("/score", json={"pairs": [{"query": "q", "snippet": "s"}]}).status_code == 503

    def test_dimension_agrees_with_encode(self, client):
        health = client.get("/health").json()
        encoded = client.post("/encode", json={"texts": ["x"]}).json()
        assert health["dimension"] == encoded["dimension"] == len(encoded["vectors"][0])


class TestEncode:
    def test_deterministic_across_calls(self, client):
        first = client.post("/encode", json={"texts": ["a"]}).json()
        second = client.post("/encode", json={"texts": ["a"]}).json()
        assert first == second

    def test_order_preserving(self, client):
        batch = client.post("/encode", json={"texts": ["a", "b", "a"]}).json()["vectors"]
        singles = [
            client.post("/encode", json={"texts": [text]}).json()["vectors"][0]
            for text in ("a", "b", "a")
        ]
        assert batch == singles
        assert batch[0] == batch[2]
        assert batch[0] != batch[1]

    def test_empty_batch_400(self, client):
        response = client.post("/encode", json={"texts": []})
        assert response.status_code == 400
        assert "empty batch" in response.json()["detail"]

    def test_oversized_batch_400(self, client):
        response = client.post("/encode", json={"texts": ["x"] * 9})
        assert response.status_code == 400
        assert "batch too large" in response.json()["detail"]

    def test_count_matches_request(self, client):
        for size in (1, 3, 8):
            body = client.post("/encode", json={"texts": ["t"] * size}).json()
            assert len(body["vectors"]) == size

    def test_self_cosine_is_one(self, client):
        vector = np.array(client.post("/encode", json={"texts": ["any text"]}).json()["vectors"][0])
        cosine = float(np.dot(vector, vector) / (np.linalg.norm(vector) ** 2))
        assert abs(cosine - 1.0) < 1e-6

    def test_matches_documented_stub_function(self):
        # recompute the documented stub independently of the service path
        text = "cosy pub"
        seed = int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")
        rng = np.random.Generator(np.random.PCG64(seed))
        expected = rng.standard_normal(STUB_DIMENSION)
        expected /= np.linalg.norm(expected)
        got = StubEncoder().encode([text])[0]
        assert got == pytest.approx(list(expected), abs=1e-12)


class TestScore:
    def test_scores_in_unit_interval(self, client):
        pairs = [{"query": f"q{i}", "snippet": f"s{i}"} for i in range(5)]
        scores = client.post("/score", json={"pairs": pairs}).json()["scores"]
        assert len(scores) == 5
        assert all(0.0 <= s <= 1.0 for s in scores)

    def test_identical_pairs_equal_scores(self, client):
        pairs = [{"query": "q", "snippet": "s"}, {"query": "q", "snippet": "s"}]
        scores = client.post("/score", json={"pairs": pairs}).json()["scores"]
        assert scores[0] == scores[1]

    def test_matches_documented_stub_function(self, client):
        query, snippet = "vegan food", "vegan friendly"
        expected = (
            int.from_bytes(hashlib.sha256(f"{query}\x1f{snippet}".encode()).digest()[:8], "big")
            / 2**64
        )
        scores = client.post(
            "/score", json={"pairs": [{"query": query, "snippet": snippet}]}
        ).json()["scores"]
        assert scores[0] == pytest.approx(expected, abs=1e-15)
        assert StubScorer().score([(query, snippet)])[0] == pytest.approx(expected, abs=1e-15)

    def test_empty_batch_400(self, client):
        assert client.post("/score", json={"pairs": []}).status_code == 400

    def test_no_scorer_configured_503(self):
        client = TestClient(create_app(ServiceConfig(scorer_model=None)))
        response = client.post("/score", json={"pairs": [{"query": "q", "snippet": "s"}]})
        assert response.status_code == 503


class TestConfig:
    def test_port_bounds(self):
        with pytest.raises(ValueError):
            ServiceConfig(port=0)
        with pytest.raises(ValueError):
            ServiceConfig(port=70000)

    def test_batch_bounds(self):
        with pytest.raises(ValueError):
            ServiceConfig(max_batch_size=0)

    def test_cli_env_fallbacks(self, monkeypatch):
        from encoder_service.cli import build_config

        monkeypatch.setenv("ENCODER_MODEL", "stub")
        monkeypatch.setenv("SCORER_MODEL", "none")
        monkeypatch.setenv("PORT", "9001")
        config, host = build_config([])
        assert config.encoder_model == "stub"
        assert config.scorer_model is None
        assert config.port == 9001
        assert host == "127.0.0.1"

    def test_cli_flags_override_env(self, monkeypatch):
        from encoder_service.cli import build_config

        monkeypatch.setenv("PORT", "9001")
        config, _ = build_config(["--port", "9002", "--max-batch", "4"])
        assert config.port == 9002
        assert config.max_batch_size == 4
