"""Data model and file ingestion for the polarization pipeline.

Covers the four file-based inputs: tweet corpora (JSON lines), figurehead
rosters (CSV), follower lists (one text file per handle), and the event
window configuration (JSON). All timestamps are normalized to aware UTC
datetimes at second resolution.
"""

from __future__ import annotations

import json
import re
from csv import reader as csv_reader
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import Iterator

from .affiliation import PartyLabel
from .errors import DataError

_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}")

_PARTY_TOKENS = {"D": PartyLabel.DEMOCRAT, "R": PartyLabel.REPUBLICAN}


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 timestamp, or a bare YYYY-MM-DD read as midnight UTC.

    Naive timestamps are assumed to be UTC; anything carrying an offset is
    converted. Sub-second precision is truncated since the pipeline works at
    second resolution. Raises ValueError on unparseable input.
    """
    text = value.strip()
    if _DATE_RE.fullmatch(text):
        return datetime.strptime(text, "%Y-%m-%d").replace(tzinfo=timezone.utc)
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    moment = datetime.fromisoformat(text)
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    elif moment.tzinfo is not timezone.utc:
        moment = moment.astimezone(timezone.utc)
    return moment.replace(microsecond=0) if moment.microsecond else moment


# ==== event windows ====


class WindowLabel(Enum):
    BASELINE = "baseline"
    CRISIS = "crisis"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class TimeWindow:
    """Half-open interval [start, end) over aware UTC datetimes."""

    start: datetime
    end: datetime

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise DataError(
                f"window start {self.start.isoformat()} must precede end {self.end.isoformat()}"
            )

    def contains(self, moment: datetime) -> bool:
        return self.start <= moment < self.end

    @property
    def duration(self) -> timedelta:
        return self.end - self.start


@dataclass(frozen=True)
class EventWindows:
    """A named event with equal-length baseline and crisis observation windows."""

    event_name: str
    baseline: TimeWindow
    crisis: TimeWindow

    def __post_init__(self) -> None:
        if not self.event_name:
            raise DataError("event_name must be nonempty")
        if self.baseline.end > self.crisis.start:
            raise DataError("baseline window must end on or before the crisis window start")
        if self.baseline.duration != self.crisis.duration:
            raise DataError("baseline and crisis windows must cover equal durations")


def classify_window(moment: datetime, windows: EventWindows) -> WindowLabel:
    """Place a timestamp in exactly one of Baseline, Crisis, or Outside."""
    if windows.baseline.contains(moment):
        return WindowLabel.BASELINE
    if windows.crisis.contains(moment):
        return WindowLabel.CRISIS
    return WindowLabel.OUTSIDE


def parse_event_windows(payload: object, source: str = "windows config") -> EventWindows:
    """Build EventWindows from a decoded JSON payload, validating as it goes."""
    if not isinstance(payload, dict):
        raise DataError(f"{source}: expected a JSON object")
    name = payload.get("event_name")
    if not isinstance(name, str) or not name.strip():
        raise DataError(f"{source}: missing or empty event_name")

    def _window(key: str) -> TimeWindow:
        block = payload.get(key)
        if not isinstance(block, dict):
            raise DataError(f"{source}: missing {key} window")
        bounds = []
        for field_name in ("start", "end"):
            raw = block.get(field_name)
            if not isinstance(raw, str):
                raise DataError(f"{source}: {key}.{field_name} must be a timestamp string")
            try:
                bounds.append(parse_timestamp(raw))
            except ValueError as exc:
                raise DataError(f"{source}: unparseable {key}.{field_name} {raw!r}") from exc
        return TimeWindow(bounds[0], bounds[1])

    return EventWindows(name.strip(), _window("baseline"), _window("crisis"))


def load_windows(path: Path | str) -> EventWindows:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read windows file {path}: {exc}") from exc
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path.name}: invalid JSON ({exc.msg})") from exc
    return parse_event_windows(payload, source=path.name)


# ==== tweets ====


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    user_id: str
    text: str
    created_at: datetime
    deleted: bool = False


@dataclass
class IngestStats:
    """Tally of a line-oriented ingestion pass."""

    kept: int = 0
    rejected: int = 0
    errors: list[str] = field(default_factory=list)

    def reject(self, message: str) -> None:
        self.rejected += 1
        self.errors.append(message)


def _parse_tweet_line(line: str, seen: set[str]) -> tuple[TweetRecord | None, str | None]:
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
    body = payload.get("text")
    if not isinstance(body, str):
        return None, "missing text"
    raw_created = payload.get("created_at")
    if not isinstance(raw_created, str):
        return None, "missing created_at"
    try:
        created_at = parse_timestamp(raw_created)
    except ValueError:
        return None, f"unparseable created_at {raw_created!r}"
    deleted = payload.get("deleted", False)
    if not isinstance(deleted, bool):
        return None, "deleted must be a boolean"
    return TweetRecord(tweet_id, user_id, body, created_at, deleted), None


def parse_tweets(
    path: Path | str, *, strict: bool = False, stats: IngestStats | None = None
) -> Iterator[TweetRecord]:
    """Yield tweet records from a JSON-lines file in file order.

    Args:
        path: JSON-lines file, one tweet object per line.
        strict: when true the first malformed line aborts with DataError;
            otherwise bad lines are skipped and counted in stats.
        stats: optional tally that receives kept/rejected counts and the
            line-numbered error messages.

    Deleted tweets are yielded as-is; downstream stages decide what to skip.
    Duplicate tweet_id values within the file count as malformed lines.
    """
    path = Path(path)
    if stats is None:
        stats = IngestStats()
    seen: set[str] = set()
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read tweets file {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            record, problem = _parse_tweet_line(line, seen)
            if record is None:
                message = f"{path.name} line {lineno}: {problem}"
                if strict:
                    raise DataError(message)
                stats.reject(message)
                continue
            seen.add(record.tweet_id)
            stats.kept += 1
            yield record


# ==== roster and followers ====


@dataclass(frozen=True)
class FigureheadRoster:
    """Figurehead handles with party tags plus per-handle follower sets."""

    figureheads: dict[str, PartyLabel]
    followers: dict[str, frozenset[str]]

    def handles_for(self, party: PartyLabel) -> list[str]:
        return [handle for handle, tag in self.figureheads.items() if tag is party]


def load_affiliation_data(roster_path: Path | str, followers_dir: Path | str) -> FigureheadRoster:
    """Load the figurehead roster CSV and one follower list per handle.

    The roster is a two-column CSV (handle,party) with party tokens D or R.
    Each handle must have <handle>.txt in followers_dir holding one user_id
    per line; blank lines and #-comments are ignored and duplicates are
    dropped. A follower file for a handle missing from the roster is an
    error, as is a roster handle without a follower file.
    """
    roster_path = Path(roster_path)
    followers_dir = Path(followers_dir)
    figureheads: dict[str, PartyLabel] = {}
    try:
        handle_file = open(roster_path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read roster file {roster_path}: {exc}") from exc
    with handle_file:
        rows = csv_reader(handle_file)
        header = next(rows, None)
        if header is None or [cell.strip() for cell in header] != ["handle", "party"]:
            raise DataError(f"{roster_path.name}: expected header handle,party")
        for lineno, row in enumerate(rows, start=2):
            if len(row) != 2:
                raise DataError(f"{roster_path.name} line {lineno}: expected 2 fields")
            handle = row[0].strip()
            if not handle:
                raise DataError(f"{roster_path.name} line {lineno}: empty handle")
            if handle in figureheads:
                raise DataError(f"{roster_path.name} line {lineno}: duplicate handle {handle!r}")
            party = _PARTY_TOKENS.get(row[1].strip().upper())
            if party is None:
                raise DataError(f"{roster_path.name} line {lineno}: unknown party {row[1]!r}")
            figureheads[handle] = party

    if not followers_dir.is_dir():
        raise DataError(f"followers directory {followers_dir} does not exist")
    followers: dict[str, frozenset[str]] = {}
    for handle in figureheads:
        follower_path = followers_dir / f"{handle}.txt"
        try:
            lines = follower_path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise DataError(f"missing follower list for handle {handle!r}: {exc}") from exc
        ids = set()
        for line in lines:
            entry = line.strip()
            if not entry or entry.startswith("#"):
                continue
            ids.add(entry)
        followers[handle] = frozenset(ids)
    for stray in sorted(followers_dir.glob("*.txt")):
        if stray.stem not in figureheads:
            raise DataError(f"follower list {stray.name} names a handle missing from the roster")
    return FigureheadRoster(figureheads, followers)
