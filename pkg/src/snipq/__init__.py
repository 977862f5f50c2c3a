"""snipq: retrieve database entities for unconstrained natural-language
queries by scoring unstructured text snippets, plus the annotation-sampling
and evaluation machinery around that ranking."""

from .corpus import (
    EntityDatabase,
    EntityRecord,
    Query,
    Review,
    Snippet,
    extract_snippets,
    load_corpus,
    load_queries,
    save_corpus,
)
from .embedding import EmbeddingStore, EncoderClient, cosine, embedding_score, load_embeddings
from .errors import EmptyResultError, ValidationError
from .evaluation import (
    MetricsReport,
    RetrievalReport,
    classification_metrics,
    classify,
    evaluate_provider,
    kfold_splits,
    retrieval_metrics,
)
from .annotation import (
    AnnotatedPair,
    HitSpec,
    annotator_vs_majority_kappa,
    fleiss_kappa,
    majority_vote,
    quality_check,
    sample_annotation_pairs,
)
from .ranking import RankedEntity, RankingParams, rank_and_select, rank_hybrid, schema_filter
from .scoring import (
    EmbeddingCosineProvider,
    EncoderServiceProvider,
    ScoreTable,
    TableProvider,
    TfIdfProvider,
    ThreeWayScores,
    load_score_table,
    relevance_score,
    snli_to_binary,
)
from .tfidf import TfIdfIndex, build_index, tfidf_score, tokenize, vectorize

__version__ = "0.1.0"
