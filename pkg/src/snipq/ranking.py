"""Entity ranking: score every snippet, average each entity's best few, and
return the top entities; optionally pre-filter entities on schema slots.

All ties break on ascending id (snippet id among snippets, entity id among
entities) so rankings are deterministic and annotation sampling is
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .corpus import SLOT_KEYS, EntityDatabase, EntityRecord, Query
from .errors import EmptyResultError, ValidationError
from .scoring import relevance_score


@dataclass(frozen=True)
class RankingParams:
    """top_snippets: snippets averaged per entity; top_items: entities
    returned. strict_average divides by top_snippets even when an entity has
    fewer snippets (penalizing sparse entities with implicit zeros)."""

    top_snippets: int = 5
    top_items: int = 5
    strict_average: bool = False

    def __post_init__(self) -> None:
        if self.top_snippets < 1:
            raise ValidationError(f"top_snippets must be >= 1, got {self.top_snippets}")
        if self.top_items < 1:
            raise ValidationError(f"top_items must be >= 1, got {self.top_items}")


@dataclass(frozen=True)
class ScoredSnippet:
    snippet_id: str
    score: float


@dataclass(frozen=True)
class RankedEntity:
    entity_id: str
    item_score: float
    top_snippets: tuple[ScoredSnippet, ...]


def rank_and_select(
    provider, query: Query, database: EntityDatabase, params: RankingParams | None = None
) -> list[RankedEntity]:
    """Rank entities by the mean score of their best snippets and return the
    top ones with those snippets attached."""
    params = params or RankingParams()
    if not database.entities:
        raise ValidationError("cannot rank an empty database")
    ranked: list[RankedEntity] = []
    for entity in database.entities:
        scored = [
            ScoredSnippet(snippet.id, relevance_score(provider, query, snippet))
            for snippet in database.snippets_for(entity.id)
        ]
        scored.sort(key=lambda s: (-s.score, s.snippet_id))
        top = tuple(scored[: params.top_snippets])
        if not top:
            item_score = 0.0
        elif params.strict_average:
            item_score = sum(s.score for s in top) / params.top_snippets
        else:
            item_score = sum(s.score for s in top) / len(top)
        ranked.append(RankedEntity(entity.id, item_score, top))
    ranked.sort(key=lambda r: (-r.item_score, r.entity_id))
    return ranked[: params.top_items]


def _matches(entity: EntityRecord, constraints: Mapping[str, str]) -> bool:
    for key, value in constraints.items():
        want = value.lower()
        if key == "area":
            if entity.location is None or entity.location.lower() != want:
                return False
        elif key == "price_range":
            if entity.price_range is None or entity.price_range.lower() != want:
                return False
        else:  # cuisine
            if want not in (c.lower() for c in entity.cuisines):
                return False
    return True


def schema_filter(database: EntityDatabase, constraints: Mapping[str, str]) -> EntityDatabase:
    """Keep entities matching every constraint (case-insensitive, exact
    values); an empty constraint map keeps everything."""
    unknown = set(constraints) - set(SLOT_KEYS)
    if unknown:
        raise ValidationError(f"unknown constraint key(s): {sorted(unknown)}")
    keep = [entity.id for entity in database.entities if _matches(entity, constraints)]
    return database.subset(keep)


def rank_hybrid(
    provider, query: Query, database: EntityDatabase, params: RankingParams | None = None
) -> list[RankedEntity]:
    """Filter on the query's slot constraints, then rank the survivors."""
    if query.slot_constraints is None:
        raise ValidationError(f"query {query.id!r} has no slot constraints")
    filtered = schema_filter(database, query.slot_constraints)
    if not filtered.entities:
        raise EmptyResultError("no entity matches constraints")
    return rank_and_select(provider, query, filtered, params)


def ranked_to_dicts(ranked: list[RankedEntity]) -> list[dict]:
    """JSON-ready form: [{entity_id, item_score, top_snippets: [...]}]."""
    return [
        {
            "entity_id": r.entity_id,
            "item_score": r.item_score,
            "top_snippets": [
                {"snippet_id": s.snippet_id, "score": s.score} for s in r.top_snippets
            ],
        }
        for r in ranked
    ]
