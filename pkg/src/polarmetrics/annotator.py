"""Deterministic reference annotation: sentence sentiment plus gazetteer entities.

Sentiment is a five-step scale from 0 (very negative) to 4 (very positive)
with 2 as the neutral midpoint. A sentence scores clamp(2 + sum of lexicon
deltas over its tokens, 0, 4), and every entity found in the sentence
inherits that sentence's score. Entity spotting is a case-insensitive
longest-match scan against a fixed gazetteer. An adapter ingests the same
annotations from JSON lines produced by external annotators.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .corpus import IngestStats, TweetRecord
from .errors import ConfigError, DataError

TOKEN_RE = re.compile(r"[^\W_]+")
SENTENCE_BREAK_RE = re.compile(r"(?<=[.!?])\s+")

NEUTRAL_SENTIMENT = 2

DEFAULT_ALLOWED_TYPES = frozenset({"LOCATION", "MISC", "PERSON"})
DEFAULT_DENIED_TYPES = frozenset({"EMAIL", "DATE", "NUMBER", "PERCENT", "TIME", "MONEY", "URL"})


# ==== resources ====


@dataclass(frozen=True)
class Lexicon:
    """Lowercase token -> sentiment delta in {-2, -1, +1, +2}."""

    deltas: Mapping[str, int]


class Gazetteer:
    """Known entity surfaces (lowercase) mapped to their entity type.

    Precomputes a first-character index so scanning long tweet streams stays
    cheap: candidate start positions are found with one compiled character
    class, then surfaces sharing that first character are tried longest
    first.
    """

    def __init__(self, surfaces: Mapping[str, str]):
        cleaned: dict[str, str] = {}
        for surface, entity_type in surfaces.items():
            if not surface or surface != surface.lower():
                raise ValueError(f"gazetteer surface {surface!r} must be nonempty lowercase")
            cleaned[surface] = entity_type
        self.surfaces = cleaned
        groups: dict[str, list[tuple[str, str]]] = {}
        for surface, entity_type in cleaned.items():
            groups.setdefault(surface[0], []).append((surface, entity_type))
        for bucket in groups.values():
            bucket.sort(key=lambda item: (-len(item[0]), item[0]))
        self._groups = groups
        first_chars = "".join(sorted(groups))
        self._starts = re.compile("[" + re.escape(first_chars) + "]") if first_chars else None

    def __len__(self) -> int:
        return len(self.surfaces)

    def __contains__(self, surface: str) -> bool:
        return surface in self.surfaces


def _tsv_rows(path: Path) -> Iterator[tuple[int, list[str]]]:
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.rstrip("\r\n")
            if not stripped.strip():
                continue
            yield lineno, stripped.split("\t")


def load_lexicon(path: Path | str) -> Lexicon:
    """Load a token<TAB>delta file. Deltas must be -2, -1, +1, or +2."""
    path = Path(path)
    deltas: dict[str, int] = {}
    for lineno, fields in _tsv_rows(path):
        if len(fields) != 2:
            raise DataError(f"{path.name} line {lineno}: expected token<TAB>delta")
        token = fields[0].strip().lower()
        if not token:
            raise DataError(f"{path.name} line {lineno}: empty token")
        if any(ch.isspace() for ch in token):
            raise DataError(f"{path.name} line {lineno}: token must not contain whitespace")
        try:
            delta = int(fields[1].strip())
        except ValueError as exc:
            raise DataError(f"{path.name} line {lineno}: delta must be an integer") from exc
        if delta == 0:
            raise DataError(f"{path.name} line {lineno}: zero delta for token {token!r}")
        if not -2 <= delta <= 2:
            raise DataError(f"{path.name} line {lineno}: delta {delta} outside -2..2")
        if token in deltas:
            raise DataError(f"{path.name} line {lineno}: duplicate token {token!r}")
        deltas[token] = delta
    return Lexicon(deltas)


def load_gazetteer(path: Path | str) -> Gazetteer:
    """Load a surface<TAB>TYPE file. Surfaces are matched case-insensitively."""
    path = Path(path)
    surfaces: dict[str, str] = {}
    for lineno, fields in _tsv_rows(path):
        if len(fields) != 2:
            raise DataError(f"{path.name} line {lineno}: expected surface<TAB>TYPE")
        surface = fields[0].strip().lower()
        if not surface:
            raise DataError(f"{path.name} line {lineno}: empty surface")
        entity_type = fields[1].strip()
        if not entity_type or any(ch.isspace() for ch in entity_type):
            raise DataError(f"{path.name} line {lineno}: entity type must be one token")
        if entity_type != entity_type.upper():
            raise DataError(f"{path.name} line {lineno}: entity type must be uppercase")
        if surface in surfaces:
            raise DataError(f"{path.name} line {lineno}: duplicate surface {surface!r}")
        surfaces[surface] = entity_type
    return Gazetteer(surfaces)


@dataclass(frozen=True)
class EntityTypePolicy:
    """Which entity types survive extraction.

    The allowlist and denylist must be disjoint; a match is kept only when
    its type is allowed (denied or unknown types are dropped silently).
    """

    allowed: frozenset[str]
    denied: frozenset[str] = DEFAULT_DENIED_TYPES

    def __post_init__(self) -> None:
        overlap = self.allowed & self.denied
        if overlap:
            raise ConfigError(f"entity types both allowed and denied: {sorted(overlap)}")

    def allows(self, entity_type: str) -> bool:
        return entity_type in self.allowed


def default_policy() -> EntityTypePolicy:
    return EntityTypePolicy(DEFAULT_ALLOWED_TYPES)


def policy_for(types: Iterable[str]) -> EntityTypePolicy:
    """Build a policy from an explicit allowlist.

    Types named here are honored even if the default denylist mentions them;
    the denylist shrinks to keep the two sets disjoint.
    """
    allowed = frozenset(t.strip().upper() for t in types if t.strip())
    if not allowed:
        raise ConfigError("entity type allowlist is empty")
    return EntityTypePolicy(allowed, DEFAULT_DENIED_TYPES - allowed)


# ==== annotation ====


@dataclass(frozen=True)
class SentenceAnnotation:
    """One sentence with its sentiment and the (surface, type) entities kept."""

    text: str
    sentiment: int
    entities: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class AnnotatedTweet:
    tweet_id: str
    user_id: str
    sentences: tuple[SentenceAnnotation, ...] = ()


def split_sentences(text: str) -> list[str]:
    """Split on '.', '!', or '?' followed by whitespace; keep terminators.

    Text without a terminator is one sentence. Empty or whitespace-only
    segments are dropped.
    """
    if not text:
        return []
    pieces = SENTENCE_BREAK_RE.split(text)
    return [piece.strip() for piece in pieces if piece.strip()]


def score_sentence(sentence: str, lexicon: Lexicon) -> int:
    """Score one sentence: clamp(2 + sum of deltas for matched tokens, 0, 4).

    Tokens are maximal alphanumeric runs of the lowercased sentence, so every
    occurrence of a lexicon word counts once per occurrence.
    """
    get = lexicon.deltas.get
    total = NEUTRAL_SENTIMENT
    for token in TOKEN_RE.findall(sentence.lower()):
        delta = get(token)
        if delta is not None:
            total += delta
    if total < 0:
        return 0
    if total > 4:
        return 4
    return total


def extract_entities(
    sentence: str, gazetteer: Gazetteer, policy: EntityTypePolicy
) -> list[tuple[str, str]]:
    """Find gazetteer entities: case-insensitive, longest match, left to right.

    Matches never overlap; a match whose type the policy rejects still
    consumes its span but is not returned. Returned surfaces keep the
    casing they had in the sentence.
    """
    starts = gazetteer._starts
    if starts is None:
        return []
    lowered = sentence.lower()
    groups = gazetteer._groups
    found: list[tuple[str, str]] = []
    next_free = 0
    for candidate in starts.finditer(lowered):
        position = candidate.start()
        if position < next_free:
            continue
        for surface, entity_type in groups[lowered[position]]:
            if lowered.startswith(surface, position):
                if policy.allows(entity_type):
                    found.append((sentence[position : position + len(surface)], entity_type))
                next_free = position + len(surface)
                break
    return found


def annotate_tweet(
    tweet: TweetRecord, lexicon: Lexicon, gazetteer: Gazetteer, policy: EntityTypePolicy
) -> AnnotatedTweet:
    """Annotate every sentence of a live tweet.

    Deleted tweets must never reach annotation; passing one raises
    ValueError. The function is pure: identical inputs give identical
    annotations.
    """
    if tweet.deleted:
        raise ValueError(f"tweet {tweet.tweet_id} is marked deleted and must not be annotated")
    sentences = tuple(
        SentenceAnnotation(
            text=sentence,
            sentiment=score_sentence(sentence, lexicon),
            entities=tuple(extract_entities(sentence, gazetteer, policy)),
        )
        for sentence in split_sentences(tweet.text)
    )
    return AnnotatedTweet(tweet.tweet_id, tweet.user_id, sentences)


# ==== pre-annotated adapter ====


def annotation_payload(annotated: AnnotatedTweet) -> dict:
    """Render one annotated tweet as the JSON-lines adapter object."""
    return {
        "tweet_id": annotated.tweet_id,
        "user_id": annotated.user_id,
        "sentences": [
            {
                "text": sentence.text,
                "sentiment": sentence.sentiment,
                "entities": [
                    {"surface": surface, "type": entity_type}
                    for surface, entity_type in sentence.entities
                ],
            }
            for sentence in annotated.sentences
        ],
    }


def write_preannotated(path: Path | str, annotated: Iterable[AnnotatedTweet]) -> int:
    """Serialize annotated tweets to the adapter format, one JSON object per line."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for item in annotated:
            handle.write(json.dumps(annotation_payload(item), ensure_ascii=False))
            handle.write("\n")
            count += 1
    return count


def _parse_annotated_line(
    line: str, policy: EntityTypePolicy, seen: set[str]
) -> tuple[AnnotatedTweet | None, str | None]:
    text = line.strip()
    if not text:
        return None, "blank line"
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        return None, f"invalid JSON ({exc.msg})"
    if not isinstance(payload, dict):
        return None, "expected a JSON object"
    tweet_id = payload.get("tweet_id")
    if not isinstance(tweet_id, str) or not tweet_id:
        return None, "missing or empty tweet_id"
    if tweet_id in seen:
        return None, f"duplicate tweet_id {tweet_id!r}"
    user_id = payload.get("user_id")
    if not isinstance(user_id, str) or not user_id:
        return None, "missing or empty user_id"
    raw_sentences = payload.get("sentences")
    if not isinstance(raw_sentences, list):
        return None, "sentences must be a list"
    sentences: list[SentenceAnnotation] = []
    for index, block in enumerate(raw_sentences):
        if not isinstance(block, dict):
            return None, f"sentence {index} is not an object"
        sentence_text = block.get("text")
        if not isinstance(sentence_text, str):
            return None, f"sentence {index} is missing text"
        sentiment = block.get("sentiment")
        if isinstance(sentiment, bool) or not isinstance(sentiment, int) or not 0 <= sentiment <= 4:
            return None, f"sentence {index} sentiment {sentiment!r} outside 0..4"
        raw_entities = block.get("entities", [])
        if not isinstance(raw_entities, list):
            return None, f"sentence {index} entities must be a list"
        lowered = sentence_text.lower()
        kept: list[tuple[str, str]] = []
        for entity in raw_entities:
            if not isinstance(entity, dict):
                return None, f"sentence {index} has a non-object entity"
            surface = entity.get("surface")
            entity_type = entity.get("type")
            if not isinstance(surface, str) or not surface:
                return None, f"sentence {index} has an entity without a surface"
            if not isinstance(entity_type, str) or not entity_type:
                return None, f"sentence {index} has an entity without a type"
            if surface.lower() not in lowered:
                return None, f"sentence {index} entity {surface!r} does not occur in its text"
            if policy.allows(entity_type):
                kept.append((surface, entity_type))
        sentences.append(SentenceAnnotation(sentence_text, sentiment, tuple(kept)))
    return AnnotatedTweet(tweet_id, user_id, tuple(sentences)), None


def ingest_preannotated(
    path: Path | str,
    policy: EntityTypePolicy,
    *,
    strict: bool = False,
    stats: IngestStats | None = None,
) -> Iterator[AnnotatedTweet]:
    """Yield annotated tweets from an external annotator's JSON-lines file.

    Validation mirrors the reference annotator's contract: sentiments must
    sit in 0..4 and every entity surface must occur in its sentence text
    (case-insensitive). Entities whose type the policy rejects are dropped
    silently. Malformed lines follow the same strict/skip semantics as
    tweet ingestion.
    """
    path = Path(path)
    if stats is None:
        stats = IngestStats()
    seen: set[str] = set()
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read annotations file {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            annotated, problem = _parse_annotated_line(line, policy, seen)
            if annotated is None:
                message = f"{path.name} line {lineno}: {problem}"
                if strict:
                    raise DataError(message)
                stats.reject(message)
                continue
            seen.add(annotated.tweet_id)
            stats.kept += 1
            yield annotated
