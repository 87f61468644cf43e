"""Party assignment from figurehead-follow counts.

A user's label is decided by majority: following strictly more Democrat
figureheads than Republican ones makes the user a Democrat, the reverse a
Republican. Ties, including following nobody, leave the user Unaligned and
their tweets contribute nothing downstream.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:
    from .corpus import FigureheadRoster, TweetRecord


class PartyLabel(Enum):
    DEMOCRAT = "Democrat"
    REPUBLICAN = "Republican"
    UNALIGNED = "Unaligned"

    @property
    def code(self) -> str:
        """One-letter token used in CSV artifacts."""
        if self is PartyLabel.DEMOCRAT:
            return "D"
        if self is PartyLabel.REPUBLICAN:
            return "R"
        return "U"

    @classmethod
    def from_code(cls, code: str) -> PartyLabel:
        for label in cls:
            if label.code == code:
                return label
        raise ValueError(f"unknown party code {code!r}")


@dataclass(frozen=True)
class AffiliationCounts:
    """How many distinct figureheads of each party one user follows."""

    user_id: str
    dem_follows: int
    rep_follows: int


def count_affiliation(user_id: str, roster: FigureheadRoster) -> AffiliationCounts:
    """Count the distinct figureheads of each party that user_id follows.

    Users absent from every follower list get (0, 0). Counts never exceed
    the number of figureheads per party in the roster.
    """
    dem = rep = 0
    for handle, party in roster.figureheads.items():
        if user_id in roster.followers[handle]:
            if party is PartyLabel.DEMOCRAT:
                dem += 1
            else:
                rep += 1
    return AffiliationCounts(user_id, dem, rep)


def assign_party(counts: AffiliationCounts) -> PartyLabel:
    if counts.dem_follows > counts.rep_follows:
        return PartyLabel.DEMOCRAT
    if counts.rep_follows > counts.dem_follows:
        return PartyLabel.REPUBLICAN
    return PartyLabel.UNALIGNED


def partition_corpus(
    tweets: Iterable[TweetRecord], roster: FigureheadRoster
) -> tuple[dict[str, PartyLabel], dict[PartyLabel, int]]:
    """Label every distinct author in a tweet stream.

    Returns the user_id -> PartyLabel map plus a count of users per label.
    Labeling is deterministic, so each user is resolved once no matter how
    many tweets they wrote.
    """
    labels: dict[str, PartyLabel] = {}
    for tweet in tweets:
        user_id = tweet.user_id
        if user_id not in labels:
            labels[user_id] = assign_party(count_affiliation(user_id, roster))
    tally = Counter(labels.values())
    return labels, {label: tally.get(label, 0) for label in PartyLabel}


AUDIT_HEADER = ("user_id", "f_d", "f_r", "label")


def write_affiliation_audit(
    path: Path | str, user_ids: Iterable[str], roster: FigureheadRoster
) -> int:
    """Write one audit row per user: follow counts and the resulting label."""
    written = 0
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(AUDIT_HEADER)
        for user_id in user_ids:
            counts = count_affiliation(user_id, roster)
            label = assign_party(counts)
            writer.writerow((user_id, counts.dem_follows, counts.rep_follows, label.value))
            written += 1
    return written


def read_affiliation_audit(path: Path | str) -> dict[str, PartyLabel]:
    """Read an audit CSV back into a user_id -> PartyLabel map."""
    from .errors import DataError

    labels: dict[str, PartyLabel] = {}
    try:
        handle = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read affiliations file {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [cell.strip() for cell in header] != list(AUDIT_HEADER):
            raise DataError(f"{Path(path).name}: expected header {','.join(AUDIT_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise DataError(f"{Path(path).name} line {lineno}: expected 4 fields")
            user_id = row[0].strip()
            if not user_id:
                raise DataError(f"{Path(path).name} line {lineno}: empty user_id")
            try:
                label = PartyLabel(row[3].strip())
            except ValueError as exc:
                raise DataError(
                    f"{Path(path).name} line {lineno}: unknown label {row[3]!r}"
                ) from exc
            if user_id in labels:
                raise DataError(f"{Path(path).name} line {lineno}: duplicate user_id {user_id!r}")
            labels[user_id] = label
    return labels
