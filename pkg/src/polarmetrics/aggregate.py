"""Fan annotations out to mention rows and reduce them to exact aggregates.

Every (sentence, entity) pair becomes one mention row tagged with the
author's party and the tweet's window. Rows reduce to integer
(sentiment_sum, mention_count) cells per entity and party, so means are
exact rationals and shard merges are plain integer addition: associative,
commutative, and independent of row order.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

from .affiliation import PartyLabel
from .annotator import AnnotatedTweet
from .corpus import WindowLabel
from .errors import DataError

logger = logging.getLogger(__name__)

_WHITESPACE_RE = re.compile(r"\s+")


def normalize_entity_name(raw: str) -> str:
    """Lowercase, trim, and collapse internal whitespace runs to one space."""
    return _WHITESPACE_RE.sub(" ", raw.strip()).lower()


@dataclass(frozen=True)
class EntityMentionRow:
    entity: str
    entity_type: str
    user_id: str
    sentiment: int
    party: PartyLabel
    window: WindowLabel


def emit_mention_rows(
    annotated: AnnotatedTweet, party: PartyLabel, window: WindowLabel
) -> list[EntityMentionRow]:
    """Produce one mention row per entity per sentence of one tweet.

    Unaligned authors and tweets outside both windows produce nothing.
    Entity names are normalized; a name that normalizes to nothing is
    dropped with a warning.
    """
    if party is PartyLabel.UNALIGNED or window is WindowLabel.OUTSIDE:
        return []
    rows: list[EntityMentionRow] = []
    for sentence in annotated.sentences:
        for surface, entity_type in sentence.entities:
            name = normalize_entity_name(surface)
            if not name:
                logger.warning(
                    "dropping mention with empty normalized name (tweet %s)",
                    annotated.tweet_id,
                )
                continue
            rows.append(
                EntityMentionRow(name, entity_type, annotated.user_id, sentence.sentiment, party, window)
            )
    return rows


# ==== aggregation ====


@dataclass(frozen=True)
class EntityAggregate:
    """Exact per-party sentiment totals for one entity."""

    entity: str
    dem_sum: int = 0
    dem_mentions: int = 0
    rep_sum: int = 0
    rep_mentions: int = 0

    def totals(self, party: PartyLabel) -> tuple[int, int]:
        if party is PartyLabel.DEMOCRAT:
            return self.dem_sum, self.dem_mentions
        if party is PartyLabel.REPUBLICAN:
            return self.rep_sum, self.rep_mentions
        raise ValueError("party must be Democrat or Republican")

    def mean(self, party: PartyLabel) -> Fraction | None:
        total, count = self.totals(party)
        return Fraction(total, count) if count else None

    @property
    def weight(self) -> int:
        return self.dem_mentions + self.rep_mentions


@dataclass(frozen=True)
class AggregateTable:
    """Entity name -> EntityAggregate for one window."""

    entries: dict[str, EntityAggregate] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def entity_names(self) -> list[str]:
        return sorted(self.entries)

    def party_totals(self, party: PartyLabel) -> tuple[int, int]:
        """Sum of sentiment and mention counts for one party across all entities."""
        total = count = 0
        for aggregate in self.entries.values():
            part_sum, part_count = aggregate.totals(party)
            total += part_sum
            count += part_count
        return total, count


class AggregateBuilder:
    """Accumulates mention rows into integer cells; order never matters."""

    def __init__(self) -> None:
        self._cells: dict[str, list[int]] = {}

    def add(self, row: EntityMentionRow) -> None:
        cell = self._cells.get(row.entity)
        if cell is None:
            cell = self._cells[row.entity] = [0, 0, 0, 0]
        if row.party is PartyLabel.DEMOCRAT:
            cell[0] += row.sentiment
            cell[1] += 1
        elif row.party is PartyLabel.REPUBLICAN:
            cell[2] += row.sentiment
            cell[3] += 1
        else:
            raise ValueError("mention rows never carry the Unaligned label")

    def build(self) -> AggregateTable:
        return AggregateTable(
            {name: EntityAggregate(name, *cell) for name, cell in self._cells.items()}
        )


def reduce_to_instances(rows: Iterable[EntityMentionRow]) -> AggregateTable:
    """Reduce mention rows to per-entity, per-party sums and counts."""
    builder = AggregateBuilder()
    for row in rows:
        builder.add(row)
    return builder.build()


def merge_aggregates(left: AggregateTable, right: AggregateTable) -> AggregateTable:
    """Merge two shard tables by adding their integer cells."""
    merged = dict(left.entries)
    for name, aggregate in right.entries.items():
        existing = merged.get(name)
        if existing is None:
            merged[name] = aggregate
        else:
            merged[name] = EntityAggregate(
                name,
                existing.dem_sum + aggregate.dem_sum,
                existing.dem_mentions + aggregate.dem_mentions,
                existing.rep_sum + aggregate.rep_sum,
                existing.rep_mentions + aggregate.rep_mentions,
            )
    return AggregateTable(merged)


# ==== rendering and CSV round-trips ====


def format_decimal(value: Fraction | int, places: int) -> str:
    """Render an exact rational with fixed decimals, rounding halves up.

    Half-up means away from zero, so Fraction(205, 100) at one place is
    "2.1" and its negation is "-2.1". Exact arithmetic keeps the rendering
    deterministic across runs and platforms.
    """
    value = Fraction(value)
    negative = value < 0
    magnitude = -value if negative else value
    scaled = magnitude * 10**places
    units = scaled.numerator // scaled.denominator
    if 2 * (scaled.numerator - units * scaled.denominator) >= scaled.denominator:
        units += 1
    whole, part = divmod(units, 10**places)
    text = f"{whole}.{part:0{places}d}" if places else str(whole)
    if negative and units:
        text = "-" + text
    return text


MENTIONS_HEADER = ("entity", "entity_type", "user_id", "sentiment", "party", "window")
AGGREGATES_HEADER = ("entity", "party", "sentiment_sum", "mention_count", "mean_sentiment")


class MentionCsvWriter:
    """Streams mention rows to CSV without holding them in memory."""

    def __init__(self, path: Path | str):
        self._handle = open(path, "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._handle)
        self._writer.writerow(MENTIONS_HEADER)
        self.count = 0

    def write(self, row: EntityMentionRow) -> None:
        self._writer.writerow(
            (row.entity, row.entity_type, row.user_id, row.sentiment, row.party.code, row.window.value)
        )
        self.count += 1

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> MentionCsvWriter:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


def write_mentions_csv(path: Path | str, rows: Iterable[EntityMentionRow]) -> int:
    with MentionCsvWriter(path) as writer:
        for row in rows:
            writer.write(row)
        return writer.count


def read_mentions_csv(path: Path | str) -> Iterator[EntityMentionRow]:
    path = Path(path)
    try:
        handle = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read mentions file {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != MENTIONS_HEADER:
            raise DataError(f"{path.name}: expected header {','.join(MENTIONS_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6:
                raise DataError(f"{path.name} line {lineno}: expected 6 fields")
            entity, entity_type, user_id, raw_sentiment, party_code, window_value = row
            try:
                sentiment = int(raw_sentiment)
            except ValueError as exc:
                raise DataError(f"{path.name} line {lineno}: bad sentiment {raw_sentiment!r}") from exc
            if not 0 <= sentiment <= 4:
                raise DataError(f"{path.name} line {lineno}: sentiment {sentiment} outside 0..4")
            try:
                party = PartyLabel.from_code(party_code)
            except ValueError as exc:
                raise DataError(f"{path.name} line {lineno}: {exc}") from exc
            if party is PartyLabel.UNALIGNED:
                raise DataError(f"{path.name} line {lineno}: mention rows never carry U")
            try:
                window = WindowLabel(window_value)
            except ValueError as exc:
                raise DataError(f"{path.name} line {lineno}: unknown window {window_value!r}") from exc
            if window is WindowLabel.OUTSIDE:
                raise DataError(f"{path.name} line {lineno}: mention rows never carry outside")
            yield EntityMentionRow(entity, entity_type, user_id, sentiment, party, window)


def write_aggregates_csv(path: Path | str, table: AggregateTable) -> int:
    """Write one row per entity per party with mentions, sorted for determinism."""
    written = 0
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(AGGREGATES_HEADER)
        for name in table.entity_names():
            aggregate = table.entries[name]
            for party in (PartyLabel.DEMOCRAT, PartyLabel.REPUBLICAN):
                total, count = aggregate.totals(party)
                if count:
                    writer.writerow(
                        (name, party.code, total, count, format_decimal(Fraction(total, count), 6))
                    )
                    written += 1
    return written


def read_aggregates_csv(path: Path | str) -> AggregateTable:
    """Read an aggregates CSV back into a table.

    The mean_sentiment column is derived, so it is ignored on the way in;
    sums and counts are validated instead.
    """
    path = Path(path)
    builder: dict[str, list[int]] = {}
    seen: set[tuple[str, str]] = set()
    try:
        handle = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read aggregates file {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != AGGREGATES_HEADER:
            raise DataError(f"{path.name}: expected header {','.join(AGGREGATES_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise DataError(f"{path.name} line {lineno}: expected 5 fields")
            entity, party_code, raw_sum, raw_count, _mean = row
            if not entity:
                raise DataError(f"{path.name} line {lineno}: empty entity")
            if (entity, party_code) in seen:
                raise DataError(f"{path.name} line {lineno}: duplicate row for {entity!r}/{party_code}")
            seen.add((entity, party_code))
            try:
                total = int(raw_sum)
                count = int(raw_count)
            except ValueError as exc:
                raise DataError(f"{path.name} line {lineno}: bad integers") from exc
            if count < 1 or total < 0 or total > 4 * count:
                raise DataError(
                    f"{path.name} line {lineno}: sum {total} impossible for {count} mentions"
                )
            cell = builder.setdefault(entity, [0, 0, 0, 0])
            if party_code == "D":
                cell[0], cell[1] = total, count
            elif party_code == "R":
                cell[2], cell[3] = total, count
            else:
                raise DataError(f"{path.name} line {lineno}: unknown party code {party_code!r}")
    return AggregateTable({name: EntityAggregate(name, *cell) for name, cell in builder.items()})
