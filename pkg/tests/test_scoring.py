import numpy as np
import pytest

from snipq.corpus import Query, Snippet
from snipq.embedding import EmbeddingStore
from snipq.errors import ValidationError
from snipq.scoring import (
    EmbeddingCosineProvider,
    ScoreTable,
    TableProvider,
    TfIdfProvider,
    ThreeWayScores,
    load_score_table,
    load_three_way_table,
    relevance_score,
    snli_to_binary,
)
from snipq.tfidf import build_index


def snippet(sid, text, entity="e1"):
    return Snippet(id=sid, entity_id=entity, source="review", text=text)


QUERY = Query(id="q1", text="cheap pizza")


class TestSnliToBinary:
    def test_pure_entailment(self):
        assert snli_to_binary(ThreeWayScores(1.0, 0.0, 0.0)) == 1.0

    def test_no_entailment(self):
        assert snli_to_binary(ThreeWayScores(0.0, 0.4, 0.6)) == 0.0

    def test_entailment_passthrough(self):
        assert snli_to_binary(ThreeWayScores(0.7, 0.2, 0.1)) == 0.7

    def test_simplex_violation(self):
        with pytest.raises(ValidationError, match="sum to 1"):
            ThreeWayScores(0.5, 0.5, 0.5)

    def test_negative_component(self):
        with pytest.raises(ValidationError):
            ThreeWayScores(1.2, -0.1, -0.1)

    def test_tolerance_accepts_serialized_floats(self):
        scores = ThreeWayScores(0.3333333, 0.3333333, 0.3333335)
        assert snli_to_binary(scores) == 0.3333333

    def test_ignores_neutral_contradiction_split(self):
        a = ThreeWayScores(0.4, 0.6, 0.0)
        b = ThreeWayScores(0.4, 0.0, 0.6)
        assert snli_to_binary(a) == snli_to_binary(b)


class TestScoreTable:
    def test_load(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text(
            "query_id,snippet_id,score\nq1,s1,0.83\nq1,s2,0.1\nq2,s1,1.0\nq2,s2,0.0\n",
            encoding="utf-8",
        )
        table = load_score_table(path, model="external")
        assert table.lookup("q1", "s1") == 0.83
        assert table.lookup("q2", "s2") == 0.0
        assert len(table.scores) == 4
        assert table.model == "external"

    def test_header_only(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("query_id,snippet_id,score\n", encoding="utf-8")
        assert load_score_table(path).scores == {}

    def test_out_of_range_names_line(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("query_id,snippet_id,score\nq1,s1,1.2\n", encoding="utf-8")
        with pytest.raises(ValidationError, match=":2"):
            load_score_table(path)

    def test_duplicate_pair(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("query_id,snippet_id,score\nq1,s1,0.5\nq1,s1,0.6\n", encoding="utf-8")
        with pytest.raises(ValidationError, match="duplicate"):
            load_score_table(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("a,b,c\n", encoding="utf-8")
        with pytest.raises(ValidationError, match="header"):
            load_score_table(path)

    def test_three_way_table(self, tmp_path):
        path = tmp_path / "three.csv"
        path.write_text(
            "query_id,snippet_id,entailment,neutral,contradiction\n"
            "q1,s1,0.7,0.2,0.1\n"
            "q1,s2,0.0,0.4,0.6\n",
            encoding="utf-8",
        )
        table = load_three_way_table(path)
        assert table.lookup("q1", "s1") == 0.7
        assert table.lookup("q1", "s2") == 0.0

    def test_three_way_simplex_violation(self, tmp_path):
        path = tmp_path / "three.csv"
        path.write_text(
            "query_id,snippet_id,entailment,neutral,contradiction\nq1,s1,0.7,0.7,0.1\n",
            encoding="utf-8",
        )
        with pytest.raises(ValidationError, match=":2"):
            load_three_way_table(path)


class TestProviders:
    def test_tfidf_identical_text(self):
        snippets = [snippet("s1", "cheap pizza"), snippet("s2", "vegan food")]
        provider = TfIdfProvider(build_index(snippets))
        assert relevance_score(provider, QUERY, snippets[0]) == pytest.approx(1.0, abs=1e-12)

    def test_table_lookup(self):
        provider = TableProvider(ScoreTable(scores={("q1", "s1"): 0.83}))
        assert relevance_score(provider, QUERY, snippet("s1", "any")) == 0.83

    def test_table_missing_pair_named(self):
        provider = TableProvider(ScoreTable(scores={}))
        with pytest.raises(KeyError, match=r"\('q1', 's9'\)"):
            relevance_score(provider, QUERY, snippet("s9", "any"))

    def test_embedding_provider(self):
        store = EmbeddingStore(
            dimension=2, vectors={"q1": np.array([1.0, 0.0]), "s1": np.array([1.0, 0.0])}
        )
        provider = EmbeddingCosineProvider(store)
        assert relevance_score(provider, QUERY, snippet("s1", "any")) == pytest.approx(1.0)

    def test_non_finite_provider_score_rejected(self):
        class BadProvider:
            kind = "bad"

            def score(self, query, snip):
                return float("inf")

        with pytest.raises(ValidationError, match="non-finite"):
            relevance_score(BadProvider(), QUERY, snippet("s1", "any"))

    def test_statelessness_under_permutation(self):
        snippets = [snippet(f"s{i}", f"text number {i} pizza" * (i + 1)) for i in range(6)]
        provider = TfIdfProvider(build_index(snippets))
        forward = [relevance_score(provider, QUERY, s) for s in snippets]
        backward = [relevance_score(provider, QUERY, s) for s in reversed(snippets)]
        assert forward == backward[::-1]
