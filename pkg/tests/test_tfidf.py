import math
import random

import pytest

from oracles import oracle_cosine, oracle_query_vector, oracle_tfidf
from snipq.corpus import Snippet
from snipq.errors import ValidationError
from snipq.tfidf import (
    INDEX_FORMAT,
    SparseVector,
    build_index,
    cosine_sparse,
    load_index,
    save_index,
    tfidf_score,
    tokenize,
    vectorize,
)


def make_snippets(texts):
    return [
        Snippet(id=f"d{i}", entity_id=f"d{i}", source="review", text=text)
        for i, text in enumerate(texts)
    ]


FIXTURE_DOCS = ["cheap italian food", "cheap pizza", "vegan food"]


@pytest.fixture
def fixture_index():
    return build_index(make_snippets(FIXTURE_DOCS))


class TestTokenize:
    def test_empty(self):
        assert tokenize("") == []

    def test_punctuation_and_case(self):
        assert tokenize("Cosy, family-friendly PUB!") == ["cosy", "family", "friendly", "pub"]

    def test_duplicates_preserved(self):
        assert tokenize("vegan   vegan") == ["vegan", "vegan"]

    def test_digits_kept(self):
        assert tokenize("open 24 hours") == ["open", "24", "hours"]

    def test_underscore_splits(self):
        assert tokenize("wood_fired") == ["wood", "fired"]


class TestSparseVector:
    def test_ordering_enforced(self):
        with pytest.raises(ValidationError):
            SparseVector(((2, 1.0), (1, 1.0)))

    def test_no_zero_weights(self):
        with pytest.raises(ValidationError):
            SparseVector(((0, 0.0),))

    def test_dot_disjoint(self):
        u = SparseVector(((0, 1.0), (2, 2.0)))
        v = SparseVector(((1, 3.0), (3, 1.0)))
        assert u.dot(v) == 0.0


class TestBuildIndex:
    def test_fixture_df_and_idf(self, fixture_index):
        df_expected = {"cheap": 2, "food": 2, "italian": 1, "pizza": 1, "vegan": 1}
        n = 3
        for token, df in df_expected.items():
            column = fixture_index.vocabulary[token]
            assert fixture_index.idf[column] == math.log((1 + n) / (1 + df)) + 1.0
        assert fixture_index.idf[fixture_index.vocabulary["cheap"]] == math.log(4 / 3) + 1.0

    def test_single_doc_weight(self):
        index = build_index(make_snippets(["a a"]))
        vector = index.vector_for("d0")
        assert vector.entries == ((0, 2.0),)  # 2 * (ln(2/2) + 1)

    def test_identical_docs_identical_vectors(self):
        index = build_index(make_snippets(["same words here", "same words here"]))
        assert index.vector_for("d0") == index.vector_for("d1")

    def test_empty_list_rejected(self):
        with pytest.raises(ValidationError):
            build_index([])

    def test_all_empty_tokenization_rejected(self):
        with pytest.raises(ValidationError, match="no terms"):
            build_index(make_snippets(["!!!", "..."]))

    def test_some_empty_docs_allowed(self):
        index = build_index(make_snippets(["words here", "..."]))
        assert index.vector_for("d1").is_zero

    def test_matches_oracle(self, fixture_index):
        _, idf, vectors = oracle_tfidf([(f"d{i}", doc.split()) for i, doc in enumerate(FIXTURE_DOCS)])
        for doc_id, expected in vectors.items():
            got = {
                token: weight
                for token, column in fixture_index.vocabulary.items()
                for col, weight in fixture_index.vector_for(doc_id).entries
                if col == column
            }
            assert got == pytest.approx(expected, abs=1e-12)


class TestVectorize:
    def test_out_of_vocabulary_drops(self, fixture_index):
        assert vectorize(fixture_index, "zebra xylophone").is_zero

    def test_matches_stored_snippet_vector(self, fixture_index):
        assert vectorize(fixture_index, "cheap italian food") == fixture_index.vector_for("d0")

    def test_query_weights_match_oracle(self, fixture_index):
        _, idf, _ = oracle_tfidf([(f"d{i}", d.split()) for i, d in enumerate(FIXTURE_DOCS)])
        expected = oracle_query_vector("cheap cheap pizza".split(), idf)
        vector = vectorize(fixture_index, "cheap cheap pizza")
        got = {
            token: weight
            for token, column in fixture_index.vocabulary.items()
            for col, weight in vector.entries
            if col == column
        }
        assert got == pytest.approx(expected, abs=1e-12)


class TestTfIdfScore:
    def test_identical_text_scores_one(self, fixture_index):
        assert tfidf_score(fixture_index, "cheap italian food", "d0") == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_vocabulary_scores_zero(self, fixture_index):
        assert tfidf_score(fixture_index, "sushi ramen", "d0") == 0.0

    def test_unknown_snippet(self, fixture_index):
        with pytest.raises(KeyError, match="unknown snippet"):
            tfidf_score(fixture_index, "cheap", "nope")

    def test_fixture_scores_match_oracle(self, fixture_index):
        docs = [(f"d{i}", d.split()) for i, d in enumerate(FIXTURE_DOCS)]
        _, idf, vectors = oracle_tfidf(docs)
        query = oracle_query_vector("cheap pizza".split(), idf)
        for doc_id, doc_vector in vectors.items():
            expected = oracle_cosine(query, doc_vector)
            assert tfidf_score(fixture_index, "cheap pizza", doc_id) == pytest.approx(
                expected, abs=1e-9
            )

    def test_symmetry_on_vectors(self, fixture_index):
        u = vectorize(fixture_index, "cheap pizza")
        v = vectorize(fixture_index, "cheap italian food")
        assert cosine_sparse(u, v) == cosine_sparse(v, u)

    def test_duplicated_token_scale_invariance(self, fixture_index):
        for doc_id in ("d0", "d1", "d2"):
            assert tfidf_score(fixture_index, "pizza", doc_id) == tfidf_score(
                fixture_index, "pizza pizza", doc_id
            )


class TestProperties:
    def test_random_corpora_match_oracle(self):
        rng = random.Random(20240501)
        vocabulary = [f"w{i}" for i in range(12)]
        for _ in range(100):
            n_docs = rng.randint(1, 10)
            docs = []
            for i in range(n_docs):
                tokens = [rng.choice(vocabulary) for _ in range(rng.randint(1, 8))]
                docs.append((f"d{i}", tokens))
            index = build_index(
                make_snippets([" ".join(tokens) for _, tokens in docs])
            )
            _, idf, vectors = oracle_tfidf(docs)
            for token, expected_idf in idf.items():
                assert index.idf[index.vocabulary[token]] == pytest.approx(expected_idf, abs=1e-12)
            query_tokens = [rng.choice(vocabulary) for _ in range(rng.randint(1, 5))]
            query = oracle_query_vector(query_tokens, idf)
            for doc_id, doc_vector in vectors.items():
                expected = oracle_cosine(query, doc_vector)
                got = tfidf_score(index, " ".join(query_tokens), doc_id)
                assert got == pytest.approx(expected, abs=1e-9)
                assert 0.0 <= got <= 1.0

    def test_disjoint_append_changes_only_global_counts(self):
        base = ["cheap italian food", "cheap pizza", "vegan food"]
        extended = base + ["zzz yyy"]
        index = build_index(make_snippets(extended))
        docs = [(f"d{i}", d.split()) for i, d in enumerate(extended)]
        df, idf, vectors = oracle_tfidf(docs)
        # df of original tokens is unchanged by the disjoint doc
        base_df, _, _ = oracle_tfidf(docs[:3])
        for token, count in base_df.items():
            assert df[token] == count
        # scores after the rebuild equal the oracle with idf recomputed at the new N
        query = oracle_query_vector(["cheap", "pizza"], idf)
        for doc_id, doc_vector in vectors.items():
            assert tfidf_score(index, "cheap pizza", doc_id) == pytest.approx(
                oracle_cosine(query, doc_vector), abs=1e-12
            )


class TestPersistence:
    def test_round_trip(self, fixture_index, tmp_path):
        path = tmp_path / "index.json"
        save_index(fixture_index, path)
        loaded = load_index(path)
        assert loaded == fixture_index

    def test_magic_header(self, fixture_index, tmp_path):
        path = tmp_path / "index.json"
        save_index(fixture_index, path)
        assert INDEX_FORMAT in path.read_text(encoding="utf-8")

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text('{"format": "something-else"}', encoding="utf-8")
        with pytest.raises(ValidationError, match=INDEX_FORMAT):
            load_index(path)
