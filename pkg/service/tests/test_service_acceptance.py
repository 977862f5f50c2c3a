"""Service acceptance: stub-model wire contract plus the end-to-end path
where the retrieval CLI populates an embedding file from this service and
then ranks with it."""

import functools
import json
import socket
import subprocess
import sys
import threading
import time

import numpy as np
import requests
import uvicorn
from fastapi.testclient import TestClient

from encoder_service.app import ServiceConfig, create_app


def check(name):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[FAIL] {name}")
                raise
            print(f"[PASS] {name}")

        return inner

    return wrap


@check("encoder service contract against the stub model")
def test_stub_contract():
    client = TestClient(create_app(ServiceConfig()))
    texts = ["cheap pizza", "vegan food", "cheap pizza"]
    first = client.post("/encode", json={"texts": texts}).json()
    second = client.post("/encode", json={"texts": texts}).json()
    # order-preserving, dimension-consistent, call-stable
    assert first == second
    assert first["vectors"][0] == first["vectors"][2]
    assert all(len(v) == first["dimension"] for v in first["vectors"])
    health = client.get("/health").json()
    assert health["dimension"] == first["dimension"]
    scores = client.post(
        "/score",
        json={"pairs": [{"query": "cheap pizza", "snippet": text} for text in texts]},
    ).json()["scores"]
    assert len(scores) == 3
    assert all(0.0 <= s <= 1.0 for s in scores)


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def _write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


CORPUS = [
    {
        "id": "e1",
        "name": "Pizza Corner",
        "cuisines": ["italian", "pizza"],
        "price_range": "cheap",
        "location": "centre",
        "reviews": [
            {"text": "Best pizza in town.", "rating": 5},
            {"text": "Very cheap and quick.", "rating": 4},
        ],
    },
    {
        "id": "e2",
        "name": "Green Garden",
        "cuisines": ["vegetarian"],
        "price_range": "moderate",
        "location": "west",
        "reviews": [{"text": "Amazing vegan options and friendly staff.", "rating": 5}],
    },
    {
        "id": "e3",
        "name": "Sea Breeze",
        "cuisines": ["seafood"],
        "price_range": "expensive",
        "location": "east",
        "reviews": [{"text": "Fresh fish, lovely views.", "rating": 4}],
    },
]

QUERIES = [
    {"id": "q1", "text": "cheap pizza", "category": "menu_item"},
    {"id": "q2", "text": "vegan friendly places", "category": "objective"},
]


@check("primary encode subcommand populates a file the primary ranks with")
def test_end_to_end_with_primary_cli(tmp_path):
    port = _free_port()
    server = uvicorn.Server(
        uvicorn.Config(create_app(ServiceConfig(port=port)), host="127.0.0.1", port=port,
                       log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base_url = f"http://127.0.0.1:{port}"
    deadline = time.time() + 15
    while time.time() < deadline:
        try:
            if requests.get(f"{base_url}/health", timeout=1).status_code == 200:
                break
        except requests.RequestException:
            time.sleep(0.05)
    else:
        raise RuntimeError("service did not come up")

    try:
        corpus = tmp_path / "corpus.jsonl"
        queries = tmp_path / "queries.jsonl"
        embeddings = tmp_path / "embeddings.jsonl"
        _write_jsonl(corpus, CORPUS)
        _write_jsonl(queries, QUERIES)

        encode = subprocess.run(
            [sys.executable, "-m", "snipq.cli", "encode",
             "--corpus", str(corpus), "--queries", str(queries),
             "--service-url", base_url, "--out", str(embeddings)],
            capture_output=True, text=True, timeout=120,
        )
        assert encode.returncode == 0, encode.stderr
        records = [json.loads(line) for line in embeddings.read_text().splitlines()]
        keys = {record["key"] for record in records}
        assert {"q1", "q2"} <= keys
        assert all(len(record["vector"]) == len(records[0]["vector"]) for record in records)

        rank = subprocess.run(
            [sys.executable, "-m", "snipq.cli", "rank",
             "--corpus", str(corpus), "--queries", str(queries), "--query-id", "q1",
             "--provider", "embedding", "--embeddings", str(embeddings)],
            capture_output=True, text=True, timeout=120,
        )
        assert rank.returncode == 0, rank.stderr
        ranked = json.loads(rank.stdout)
        assert len(ranked) == 3
        assert {entry["entity_id"] for entry in ranked} == {"e1", "e2", "e3"}
        # every score is a finite cosine of service vectors
        assert all(np.isfinite(entry["item_score"]) for entry in ranked)
    finally:
        server.should_exit = True
        thread.join(timeout=10)
