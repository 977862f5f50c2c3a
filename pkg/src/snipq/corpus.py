"""Restaurant database ingestion: entities, reviews, snippets, and queries.

The database arrives as JSON-Lines, one entity object per line. Each entity
contributes one text snippet per nonempty structured field plus one snippet
per review at or above the rating cutoff. Snippet text is the raw field
value (lists joined by ", ") with no field-name prefix; the source tag
carries field identity separately.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ValidationError

PRICE_RANGES = ("cheap", "moderate", "expensive")
LOCATIONS = ("east", "west", "centre", "south")
MEALS = ("breakfast", "lunch", "dinner")
QUERY_CATEGORIES = ("menu_item", "objective", "subjective", "schema", "uncategorized")
SLOT_KEYS = ("area", "cuisine", "price_range")

# Structured fields in snippet-emission order; review snippets follow.
STRUCTURED_SOURCES = (
    "cuisines",
    "meals",
    "special_diets",
    "price_range",
    "location",
    "description",
)
SNIPPET_SOURCES = STRUCTURED_SOURCES + ("review",)

DEFAULT_MIN_RATING = 4


@dataclass(frozen=True)
class Review:
    text: str
    rating: int

    def __post_init__(self) -> None:
        if not self.text:
            raise ValidationError("review text must be nonempty")
        if isinstance(self.rating, bool) or not isinstance(self.rating, int):
            raise ValidationError(f"review rating must be an integer, got {self.rating!r}")
        if not 1 <= self.rating <= 5:
            raise ValidationError(f"review rating must be in 1..5, got {self.rating}")


@dataclass(frozen=True)
class EntityRecord:
    id: str
    name: str
    cuisines: tuple[str, ...] = ()
    price_range: str | None = None
    location: str | None = None
    meals: tuple[str, ...] = ()
    special_diets: tuple[str, ...] = ()
    description: str = ""
    reviews: tuple[Review, ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("entity id must be nonempty")
        if not self.name:
            raise ValidationError(f"entity {self.id}: name must be nonempty")
        for cuisine in self.cuisines:
            if not cuisine or cuisine != cuisine.lower():
                raise ValidationError(
                    f"entity {self.id}: cuisines must be nonempty lowercase strings, got {cuisine!r}"
                )
        if self.price_range is not None and self.price_range not in PRICE_RANGES:
            raise ValidationError(
                f"entity {self.id}: price_range {self.price_range!r} not one of {PRICE_RANGES}"
            )
        if self.location is not None and self.location not in LOCATIONS:
            raise ValidationError(
                f"entity {self.id}: location {self.location!r} not one of {LOCATIONS}"
            )
        for meal in self.meals:
            if meal not in MEALS:
                raise ValidationError(f"entity {self.id}: meals {meal!r} not one of {MEALS}")
        for diet in self.special_diets:
            if not diet:
                raise ValidationError(f"entity {self.id}: special_diets entries must be nonempty")


@dataclass(frozen=True)
class Snippet:
    id: str
    entity_id: str
    source: str
    text: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("snippet id must be nonempty")
        if not self.entity_id:
            raise ValidationError(f"snippet {self.id}: entity_id must be nonempty")
        if self.source not in SNIPPET_SOURCES:
            raise ValidationError(f"snippet {self.id}: source {self.source!r} not one of {SNIPPET_SOURCES}")
        if not self.text:
            raise ValidationError(f"snippet {self.id}: text must be nonempty")


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    category: str = "uncategorized"
    slot_constraints: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("query id must be nonempty")
        if not self.text:
            raise ValidationError(f"query {self.id}: text must be nonempty")
        if self.category not in QUERY_CATEGORIES:
            raise ValidationError(
                f"query {self.id}: category {self.category!r} not one of {QUERY_CATEGORIES}"
            )
        if self.slot_constraints is not None:
            unknown = set(self.slot_constraints) - set(SLOT_KEYS)
            if unknown:
                raise ValidationError(
                    f"query {self.id}: unknown slot constraint key(s) {sorted(unknown)}"
                )
            for key, value in self.slot_constraints.items():
                if not isinstance(value, str) or not value:
                    raise ValidationError(
                        f"query {self.id}: slot constraint {key!r} must be a nonempty string"
                    )
            object.__setattr__(self, "slot_constraints", dict(self.slot_constraints))


def extract_snippets(entity: EntityRecord, min_rating: int = DEFAULT_MIN_RATING) -> list[Snippet]:
    """Emit one snippet per nonempty structured field, then one per review
    rated at or above min_rating, in file order."""
    if isinstance(min_rating, bool) or not isinstance(min_rating, int) or not 1 <= min_rating <= 5:
        raise ValidationError(f"min_rating must be an integer in 1..5, got {min_rating!r}")
    field_texts = {
        "cuisines": ", ".join(entity.cuisines),
        "meals": ", ".join(entity.meals),
        "special_diets": ", ".join(entity.special_diets),
        "price_range": entity.price_range or "",
        "location": entity.location or "",
        "description": entity.description,
    }
    snippets: list[Snippet] = []
    for source in STRUCTURED_SOURCES:
        text = field_texts[source]
        if text:
            snippets.append(Snippet(f"{entity.id}#{source}#0", entity.id, source, text))
    ordinal = 0
    for review in entity.reviews:
        if review.rating >= min_rating:
            snippets.append(Snippet(f"{entity.id}#review#{ordinal}", entity.id, "review", review.text))
            ordinal += 1
    return snippets


@dataclass(frozen=True)
class EntityDatabase:
    """Immutable container of entities plus their extracted snippets."""

    entities: tuple[EntityRecord, ...]
    snippets: tuple[Snippet, ...]
    _entities_by_id: dict[str, EntityRecord] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )
    _snippets_by_id: dict[str, Snippet] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )
    _snippets_by_entity: dict[str, tuple[Snippet, ...]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        entities_by_id: dict[str, EntityRecord] = {}
        for entity in self.entities:
            if entity.id in entities_by_id:
                raise ValidationError(f"duplicate entity id {entity.id!r}")
            entities_by_id[entity.id] = entity
        snippets_by_id: dict[str, Snippet] = {}
        grouped: dict[str, list[Snippet]] = {entity.id: [] for entity in self.entities}
        for snippet in self.snippets:
            if snippet.id in snippets_by_id:
                raise ValidationError(f"duplicate snippet id {snippet.id!r}")
            if snippet.entity_id not in entities_by_id:
                raise ValidationError(
                    f"snippet {snippet.id}: references unknown entity {snippet.entity_id!r}"
                )
            snippets_by_id[snippet.id] = snippet
            grouped[snippet.entity_id].append(snippet)
        object.__setattr__(self, "_entities_by_id", entities_by_id)
        object.__setattr__(self, "_snippets_by_id", snippets_by_id)
        object.__setattr__(
            self, "_snippets_by_entity", {eid: tuple(snips) for eid, snips in grouped.items()}
        )

    @classmethod
    def from_entities(
        cls, entities: Iterable[EntityRecord], min_rating: int = DEFAULT_MIN_RATING
    ) -> "EntityDatabase":
        entity_tuple = tuple(entities)
        snippets: list[Snippet] = []
        for entity in entity_tuple:
            snippets.extend(extract_snippets(entity, min_rating))
        return cls(entities=entity_tuple, snippets=tuple(snippets))

    def entity(self, entity_id: str) -> EntityRecord:
        try:
            return self._entities_by_id[entity_id]
        except KeyError:
            raise KeyError(f"unknown entity id {entity_id!r}") from None

    def snippet(self, snippet_id: str) -> Snippet:
        try:
            return self._snippets_by_id[snippet_id]
        except KeyError:
            raise KeyError(f"unknown snippet id {snippet_id!r}") from None

    def snippets_for(self, entity_id: str) -> tuple[Snippet, ...]:
        self.entity(entity_id)
        return self._snippets_by_entity.get(entity_id, ())

    def subset(self, entity_ids: Iterable[str]) -> "EntityDatabase":
        """Restrict to the given entities, preserving order and the already
        extracted snippets."""
        keep = set(entity_ids)
        unknown = keep - set(self._entities_by_id)
        if unknown:
            raise KeyError(f"unknown entity id(s): {sorted(unknown)}")
        entities = tuple(e for e in self.entities if e.id in keep)
        snippets = tuple(s for s in self.snippets if s.entity_id in keep)
        return EntityDatabase(entities=entities, snippets=snippets)


def entity_from_dict(raw: Mapping) -> EntityRecord:
    if not isinstance(raw, Mapping):
        raise ValidationError(f"entity record must be a JSON object, got {type(raw).__name__}")
    entity_id = raw.get("id")
    if not isinstance(entity_id, str) or not entity_id:
        raise ValidationError("entity id must be a nonempty string")

    def string_list(key: str) -> tuple[str, ...]:
        value = raw.get(key, [])
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ValidationError(f"entity {entity_id}: {key} must be a list of strings")
        return tuple(value)

    reviews_raw = raw.get("reviews", [])
    if not isinstance(reviews_raw, list):
        raise ValidationError(f"entity {entity_id}: reviews must be a list")
    reviews = []
    for i, item in enumerate(reviews_raw):
        if not isinstance(item, Mapping) or "text" not in item or "rating" not in item:
            raise ValidationError(
                f"entity {entity_id}: review {i} must be an object with text and rating"
            )
        try:
            reviews.append(Review(text=item["text"], rating=item["rating"]))
        except ValidationError as exc:
            raise ValidationError(f"entity {entity_id}: review {i}: {exc}") from None

    name = raw.get("name")
    if not isinstance(name, str):
        raise ValidationError(f"entity {entity_id}: name must be a string")
    for key in ("price_range", "location", "description"):
        value = raw.get(key)
        if value is not None and not isinstance(value, str):
            raise ValidationError(f"entity {entity_id}: {key} must be a string")
    # Cuisine case carries no signal and the schema filter compares
    # case-insensitively, so canonicalize here rather than reject.
    cuisines = tuple(c.lower() for c in string_list("cuisines"))
    return EntityRecord(
        id=entity_id,
        name=name,
        cuisines=cuisines,
        price_range=raw.get("price_range"),
        location=raw.get("location"),
        meals=string_list("meals"),
        special_diets=string_list("special_diets"),
        description=raw.get("description") or "",
        reviews=tuple(reviews),
    )


def entity_to_dict(entity: EntityRecord) -> dict:
    out: dict = {"id": entity.id, "name": entity.name}
    if entity.cuisines:
        out["cuisines"] = list(entity.cuisines)
    if entity.price_range is not None:
        out["price_range"] = entity.price_range
    if entity.location is not None:
        out["location"] = entity.location
    if entity.meals:
        out["meals"] = list(entity.meals)
    if entity.special_diets:
        out["special_diets"] = list(entity.special_diets)
    if entity.description:
        out["description"] = entity.description
    if entity.reviews:
        out["reviews"] = [{"text": r.text, "rating": r.rating} for r in entity.reviews]
    return out


def _read_jsonl(path: str | Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from None


def load_corpus(path: str | Path, min_rating: int = DEFAULT_MIN_RATING) -> EntityDatabase:
    """Load and validate the entity database, extracting snippets on the way."""
    entities: list[EntityRecord] = []
    seen: set[str] = set()
    for line_no, raw in _read_jsonl(path):
        try:
            entity = entity_from_dict(raw)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{line_no}: {exc}") from None
        if entity.id in seen:
            raise ValidationError(f"{path}:{line_no}: duplicate entity id {entity.id!r}")
        seen.add(entity.id)
        entities.append(entity)
    return EntityDatabase.from_entities(entities, min_rating=min_rating)


def save_corpus(database: EntityDatabase, path: str | Path) -> None:
    """Write entities back to JSON-Lines; reloading yields an equal database."""
    with open(path, "w", encoding="utf-8") as handle:
        for entity in database.entities:
            handle.write(json.dumps(entity_to_dict(entity), ensure_ascii=False, sort_keys=True))
            handle.write("\n")


def query_from_dict(raw: Mapping) -> Query:
    if not isinstance(raw, Mapping):
        raise ValidationError(f"query record must be a JSON object, got {type(raw).__name__}")
    query_id = raw.get("id")
    if not isinstance(query_id, str) or not query_id:
        raise ValidationError("query id must be a nonempty string")
    text = raw.get("text")
    if not isinstance(text, str):
        raise ValidationError(f"query {query_id}: text must be a string")
    constraints = raw.get("slot_constraints")
    if constraints is not None and not isinstance(constraints, Mapping):
        raise ValidationError(f"query {query_id}: slot_constraints must be an object")
    return Query(
        id=query_id,
        text=text,
        category=raw.get("category", "uncategorized"),
        slot_constraints=constraints,
    )


def query_to_dict(query: Query) -> dict:
    out: dict = {"id": query.id, "text": query.text, "category": query.category}
    if query.slot_constraints is not None:
        out["slot_constraints"] = dict(query.slot_constraints)
    return out


def load_queries(path: str | Path) -> list[Query]:
    """Load the query file; slot constraints are taken verbatim."""
    queries: list[Query] = []
    seen: set[str] = set()
    for line_no, raw in _read_jsonl(path):
        try:
            query = query_from_dict(raw)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{line_no}: {exc}") from None
        if query.id in seen:
            raise ValidationError(f"{path}:{line_no}: duplicate query id {query.id!r}")
        seen.add(query.id)
        queries.append(query)
    return queries
