"""Command-line driver: one end-to-end run command plus composable stages.

The `run` command takes a corpus from raw tweets to report files in one
pass. Each intermediate stage (assign, annotate, mentions, aggregate,
polarize, report) is also runnable on its own so partial pipelines can be
inspected or recomputed; composing the stages by hand produces the same
report as `run`. Exit codes: 0 success, 1 usage error, 2 data error, 3 no
jointly-mentioned entities.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

from . import affiliation, aggregate, annotator, corpus, polarimetry, synth
from .errors import ConfigError, DataError, NoJointEntitiesError

_WINDOW_STATS_KEYS = {
    corpus.WindowLabel.BASELINE: "baseline_tweets",
    corpus.WindowLabel.CRISIS: "crisis_tweets",
}


@dataclass
class RunConfig:
    """Everything the end-to-end run needs; exactly one annotation source."""

    tweets: Path
    roster: Path
    followers: Path
    windows: Path
    out: Path
    lexicon: Path | None = None
    gazetteer: Path | None = None
    preannotated: Path | None = None
    entity_types: tuple[str, ...] | None = None
    strict: bool = False
    shards: int = 1

    def validate(self) -> None:
        if (self.lexicon is None) != (self.gazetteer is None):
            raise ConfigError("--lexicon and --gazetteer must be given together")
        lexicon_mode = self.lexicon is not None
        if lexicon_mode == (self.preannotated is not None):
            raise ConfigError(
                "provide exactly one annotation source: --lexicon/--gazetteer or --preannotated"
            )
        if self.shards < 1:
            raise ConfigError("--shards must be at least 1")


@dataclass
class StreamCounters:
    """Counts collected while draining a tweet stream."""

    ingest: corpus.IngestStats = field(default_factory=corpus.IngestStats)
    annotation: corpus.IngestStats = field(default_factory=corpus.IngestStats)
    skipped: dict[str, int] = field(
        default_factory=lambda: {"deleted": 0, "unaligned": 0, "outside": 0, "unannotated": 0}
    )
    volumes: dict[corpus.WindowLabel, int] = field(
        default_factory=lambda: {corpus.WindowLabel.BASELINE: 0, corpus.WindowLabel.CRISIS: 0}
    )


def _roster_labeler(roster: corpus.FigureheadRoster) -> Callable[[str], affiliation.PartyLabel]:
    cache: dict[str, affiliation.PartyLabel] = {}

    def label_for(user_id: str) -> affiliation.PartyLabel:
        label = cache.get(user_id)
        if label is None:
            label = affiliation.assign_party(affiliation.count_affiliation(user_id, roster))
            cache[user_id] = label
        return label

    label_for.cache = cache  # type: ignore[attr-defined]
    return label_for


def _iter_window_annotations(
    tweets_path: Path,
    windows: corpus.EventWindows,
    label_for: Callable[[str], affiliation.PartyLabel],
    annotate: Callable[[corpus.TweetRecord], annotator.AnnotatedTweet | None],
    strict: bool,
    counters: StreamCounters,
) -> Iterator[tuple[annotator.AnnotatedTweet, affiliation.PartyLabel, corpus.WindowLabel]]:
    """Stream (annotation, party, window) for every tweet that survives the gates."""
    for record in corpus.parse_tweets(tweets_path, strict=strict, stats=counters.ingest):
        if record.deleted:
            counters.skipped["deleted"] += 1
            continue
        party = label_for(record.user_id)
        if party is affiliation.PartyLabel.UNALIGNED:
            counters.skipped["unaligned"] += 1
            continue
        window = corpus.classify_window(record.created_at, windows)
        if window is corpus.WindowLabel.OUTSIDE:
            counters.skipped["outside"] += 1
            continue
        annotated = annotate(record)
        if annotated is None:
            if strict:
                raise DataError(f"tweet {record.tweet_id} has no annotation")
            counters.skipped["unannotated"] += 1
            continue
        counters.volumes[window] += 1
        yield annotated, party, window


def _reference_annotator(
    lexicon_path: Path, gazetteer_path: Path, policy: annotator.EntityTypePolicy
) -> Callable[[corpus.TweetRecord], annotator.AnnotatedTweet]:
    lexicon = annotator.load_lexicon(lexicon_path)
    gazetteer = annotator.load_gazetteer(gazetteer_path)

    def annotate(record: corpus.TweetRecord) -> annotator.AnnotatedTweet:
        return annotator.annotate_tweet(record, lexicon, gazetteer, policy)

    return annotate


def _preannotated_lookup(
    path: Path, policy: annotator.EntityTypePolicy, strict: bool, counters: StreamCounters
) -> Callable[[corpus.TweetRecord], annotator.AnnotatedTweet | None]:
    table: dict[str, annotator.AnnotatedTweet] = {}
    for item in annotator.ingest_preannotated(
        path, policy, strict=strict, stats=counters.annotation
    ):
        table[item.tweet_id] = item

    def lookup(record: corpus.TweetRecord) -> annotator.AnnotatedTweet | None:
        return table.get(record.tweet_id)

    return lookup


def _policy_from(entity_types: tuple[str, ...] | None) -> annotator.EntityTypePolicy:
    if entity_types:
        return annotator.policy_for(entity_types)
    return annotator.default_policy()


def _write_window_stats(path: Path, volumes: dict[corpus.WindowLabel, int]) -> None:
    payload = {key: volumes[window] for window, key in _WINDOW_STATS_KEYS.items()}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_window_stats(path: Path) -> dict[corpus.WindowLabel, int]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read window stats file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path.name}: invalid JSON ({exc.msg})") from exc
    volumes: dict[corpus.WindowLabel, int] = {}
    for window, key in _WINDOW_STATS_KEYS.items():
        value = payload.get(key) if isinstance(payload, dict) else None
        if not isinstance(value, int) or value < 0:
            raise DataError(f"{path.name}: missing or bad {key}")
        volumes[window] = value
    return volumes


@dataclass
class RunResult:
    report: polarimetry.PolarizationReport
    out_dir: Path
    counters: StreamCounters
    mention_count: int


def run_pipeline(config: RunConfig) -> RunResult:
    """Execute the full pipeline and write every artifact under config.out.

    Outputs: mentions.csv, aggregates_baseline.csv, aggregates_crisis.csv,
    entities.csv, report.csv, report.json, window_stats.json, and
    affiliations.csv. The aggregate merge is associative, so the report is
    byte-identical for any shard count and any input order.
    """
    config.validate()
    roster = corpus.load_affiliation_data(config.roster, config.followers)
    windows = corpus.load_windows(config.windows)
    policy = _policy_from(config.entity_types)
    counters = StreamCounters()

    if config.preannotated is not None:
        annotate = _preannotated_lookup(config.preannotated, policy, config.strict, counters)
    else:
        annotate = _reference_annotator(config.lexicon, config.gazetteer, policy)

    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    label_for = _roster_labeler(roster)
    builders = {
        corpus.WindowLabel.BASELINE: [aggregate.AggregateBuilder() for _ in range(config.shards)],
        corpus.WindowLabel.CRISIS: [aggregate.AggregateBuilder() for _ in range(config.shards)],
    }
    stream = _iter_window_annotations(
        config.tweets, windows, label_for, annotate, config.strict, counters
    )
    sharded = 0
    with aggregate.MentionCsvWriter(out_dir / "mentions.csv") as mention_writer:
        for annotated, party, window in stream:
            builder = builders[window][sharded % config.shards]
            sharded += 1
            for row in aggregate.emit_mention_rows(annotated, party, window):
                mention_writer.write(row)
                builder.add(row)
        mention_count = mention_writer.count

    tables: dict[corpus.WindowLabel, aggregate.AggregateTable] = {}
    for window, window_builders in builders.items():
        table = window_builders[0].build()
        for builder in window_builders[1:]:
            table = aggregate.merge_aggregates(table, builder.build())
        tables[window] = table

    aggregate.write_aggregates_csv(
        out_dir / "aggregates_baseline.csv", tables[corpus.WindowLabel.BASELINE]
    )
    aggregate.write_aggregates_csv(
        out_dir / "aggregates_crisis.csv", tables[corpus.WindowLabel.CRISIS]
    )
    _write_window_stats(out_dir / "window_stats.json", counters.volumes)
    affiliation.write_affiliation_audit(
        out_dir / "affiliations.csv", sorted(label_for.cache), roster  # type: ignore[attr-defined]
    )
    polarimetry.write_entities_csv(
        out_dir / "entities.csv",
        [
            (corpus.WindowLabel.BASELINE, tables[corpus.WindowLabel.BASELINE]),
            (corpus.WindowLabel.CRISIS, tables[corpus.WindowLabel.CRISIS]),
        ],
    )

    report = polarimetry.build_report(
        tables[corpus.WindowLabel.BASELINE],
        tables[corpus.WindowLabel.CRISIS],
        windows,
        counters.volumes[corpus.WindowLabel.BASELINE],
        counters.volumes[corpus.WindowLabel.CRISIS],
    )
    polarimetry.write_report_csv(out_dir / "report.csv", report)
    polarimetry.write_report_json(out_dir / "report.json", report)
    return RunResult(report, out_dir, counters, mention_count)


# ==== commands ====


def _print_stream_summary(counters: StreamCounters) -> None:
    ingest = counters.ingest
    print(f"[ok] tweets kept: {ingest.kept}, rejected: {ingest.rejected}")
    if counters.annotation.rejected:
        print(f"[warn] annotation lines rejected: {counters.annotation.rejected}")
    skipped = counters.skipped
    print(
        "[ok] skipped: "
        f"{skipped['deleted']} deleted, {skipped['unaligned']} unaligned, "
        f"{skipped['outside']} outside windows, {skipped['unannotated']} unannotated"
    )


def _print_report(report: polarimetry.PolarizationReport, report_format: str) -> None:
    if report_format == "json":
        print(json.dumps(polarimetry.report_to_dict(report), indent=2, sort_keys=True))
    elif report_format == "csv":
        print(",".join(polarimetry.REPORT_HEADER))
        print(",".join(polarimetry._report_row(report)))
    else:
        print(polarimetry.render_report_table(report))


def cmd_run(args: argparse.Namespace) -> int:
    config = RunConfig(
        tweets=args.tweets,
        roster=args.roster,
        followers=args.followers,
        windows=args.windows,
        out=args.out,
        lexicon=args.lexicon,
        gazetteer=args.gazetteer,
        preannotated=args.preannotated,
        entity_types=_parse_entity_types(args.entity_types),
        strict=args.strict,
        shards=args.shards,
    )
    result = run_pipeline(config)
    _print_stream_summary(result.counters)
    print(f"[ok] wrote {result.mention_count} mention rows under {result.out_dir}")
    _print_report(result.report, args.format)
    return 0


def cmd_assign(args: argparse.Namespace) -> int:
    roster = corpus.load_affiliation_data(args.roster, args.followers)
    stats = corpus.IngestStats()
    labels, tallies = affiliation.partition_corpus(
        corpus.parse_tweets(args.tweets, strict=args.strict, stats=stats), roster
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    audit_path = out_dir / "affiliations.csv"
    affiliation.write_affiliation_audit(audit_path, sorted(labels), roster)
    print(f"[ok] tweets kept: {stats.kept}, rejected: {stats.rejected}")
    for label in affiliation.PartyLabel:
        print(f"[ok] {label.value}: {tallies[label]} users")
    print(f"[ok] wrote {audit_path}")
    return 0


def cmd_annotate(args: argparse.Namespace) -> int:
    policy = _policy_from(_parse_entity_types(args.entity_types))
    annotate = _reference_annotator(args.lexicon, args.gazetteer, policy)
    stats = corpus.IngestStats()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    annotated_path = out_dir / "annotated.jsonl"
    deleted = 0

    def live_annotations() -> Iterator[annotator.AnnotatedTweet]:
        nonlocal deleted
        for record in corpus.parse_tweets(args.tweets, strict=args.strict, stats=stats):
            if record.deleted:
                deleted += 1
                continue
            yield annotate(record)

    count = annotator.write_preannotated(annotated_path, live_annotations())
    print(f"[ok] tweets kept: {stats.kept}, rejected: {stats.rejected}, deleted: {deleted}")
    print(f"[ok] wrote {count} annotated tweets to {annotated_path}")
    return 0


def cmd_mentions(args: argparse.Namespace) -> int:
    windows = corpus.load_windows(args.windows)
    policy = _policy_from(_parse_entity_types(args.entity_types))
    counters = StreamCounters()

    if args.affiliations is not None:
        if args.roster is not None or args.followers is not None:
            raise ConfigError("--affiliations replaces --roster/--followers")
        table = affiliation.read_affiliation_audit(args.affiliations)

        def label_for(user_id: str) -> affiliation.PartyLabel:
            return table.get(user_id, affiliation.PartyLabel.UNALIGNED)

    elif args.roster is not None and args.followers is not None:
        label_for = _roster_labeler(corpus.load_affiliation_data(args.roster, args.followers))
    else:
        raise ConfigError("provide --affiliations or both --roster and --followers")

    if args.preannotated is not None:
        if args.lexicon is not None or args.gazetteer is not None:
            raise ConfigError("--preannotated replaces --lexicon/--gazetteer")
        annotate = _preannotated_lookup(args.preannotated, policy, args.strict, counters)
    elif args.lexicon is not None and args.gazetteer is not None:
        annotate = _reference_annotator(args.lexicon, args.gazetteer, policy)
    else:
        raise ConfigError("provide --preannotated or both --lexicon and --gazetteer")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stream = _iter_window_annotations(
        args.tweets, windows, label_for, annotate, args.strict, counters
    )
    mentions_path = out_dir / "mentions.csv"
    with aggregate.MentionCsvWriter(mentions_path) as writer:
        for annotated, party, window in stream:
            for row in aggregate.emit_mention_rows(annotated, party, window):
                writer.write(row)
        count = writer.count
    _write_window_stats(out_dir / "window_stats.json", counters.volumes)
    _print_stream_summary(counters)
    print(f"[ok] wrote {count} mention rows to {mentions_path}")
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    builders = {
        corpus.WindowLabel.BASELINE: aggregate.AggregateBuilder(),
        corpus.WindowLabel.CRISIS: aggregate.AggregateBuilder(),
    }
    for row in aggregate.read_mentions_csv(args.mentions):
        builders[row.window].add(row)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for window, builder in builders.items():
        path = out_dir / f"aggregates_{window.value}.csv"
        rows = aggregate.write_aggregates_csv(path, builder.build())
        print(f"[ok] wrote {rows} aggregate rows to {path}")
    return 0


def cmd_polarize(args: argparse.Namespace) -> int:
    tables = [
        (corpus.WindowLabel.BASELINE, aggregate.read_aggregates_csv(args.baseline)),
        (corpus.WindowLabel.CRISIS, aggregate.read_aggregates_csv(args.crisis)),
    ]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    entities_path = out_dir / "entities.csv"
    rows = polarimetry.write_entities_csv(entities_path, tables)
    print(f"[ok] wrote {rows} entity rows to {entities_path}")
    for label, table in tables:
        polarities = polarimetry.entity_polarities(table)
        if not polarities:
            raise NoJointEntitiesError(
                f"no jointly-mentioned entities in the {label.value} window"
            )
        corpus_value = polarimetry.corpus_polarization(polarities)
        print(
            f"[ok] {label.value} polarization: {polarimetry.format_percent(corpus_value.value)} "
            f"({corpus_value.entity_count} joint entities, weight {corpus_value.total_weight})"
        )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    baseline_table = aggregate.read_aggregates_csv(args.baseline)
    crisis_table = aggregate.read_aggregates_csv(args.crisis)
    windows = corpus.load_windows(args.windows)
    volumes = _read_window_stats(args.window_stats)
    report = polarimetry.build_report(
        baseline_table,
        crisis_table,
        windows,
        volumes[corpus.WindowLabel.BASELINE],
        volumes[corpus.WindowLabel.CRISIS],
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    polarimetry.write_report_csv(out_dir / "report.csv", report)
    polarimetry.write_report_json(out_dir / "report.json", report)
    print(f"[ok] wrote {out_dir / 'report.csv'} and {out_dir / 'report.json'}")
    _print_report(report, args.format)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec = synth.load_planted_spec(args.spec)
    if args.seed is not None:
        spec = synth.with_seed(spec, args.seed)
    bundle = synth.generate_corpus(spec, args.out)
    print(f"[ok] wrote bundle under {bundle.directory}")
    for path in (
        bundle.tweets_path,
        bundle.roster_path,
        bundle.lexicon_path,
        bundle.gazetteer_path,
        bundle.windows_path,
        bundle.truth_path,
    ):
        print(f"[ok]   {path.name}")
    return 0


# ==== parser ====


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage problems must exit 1, not argparse's 2
        raise ConfigError(message)


def _parse_entity_types(raw: str | None) -> tuple[str, ...] | None:
    if raw is None:
        return None
    types = tuple(piece.strip() for piece in raw.split(",") if piece.strip())
    if not types:
        raise ConfigError("--entity-types must name at least one type")
    return types


def _add_tweet_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tweets", type=Path, required=True, help="tweet corpus (JSON lines)")
    parser.add_argument(
        "--strict", action="store_true", help="abort on the first malformed input line"
    )


def _add_roster_flags(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument(
        "--roster", type=Path, required=required, help="figurehead roster CSV (handle,party)"
    )
    parser.add_argument(
        "--followers",
        type=Path,
        required=required,
        help="directory holding <handle>.txt follower lists",
    )


def _add_annotation_flags(parser: argparse.ArgumentParser, required: bool = False) -> None:
    parser.add_argument("--lexicon", type=Path, required=required, help="token<TAB>delta TSV")
    parser.add_argument("--gazetteer", type=Path, required=required, help="surface<TAB>TYPE TSV")
    if not required:
        parser.add_argument(
            "--preannotated", type=Path, help="annotations from an external annotator (JSON lines)"
        )
    parser.add_argument(
        "--entity-types",
        help="comma-separated entity type allowlist (default LOCATION,MISC,PERSON)",
    )


def _add_out_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, required=True, help="output directory")


def _add_format_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format", choices=("table", "csv", "json"), default="table", help="stdout report format"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="polarmetrics",
        description="Measure partisan sentiment polarization around an event.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="full pipeline: tweets to report files")
    _add_tweet_flags(run_parser)
    _add_roster_flags(run_parser)
    _add_annotation_flags(run_parser)
    run_parser.add_argument("--windows", type=Path, required=True, help="event windows JSON")
    run_parser.add_argument(
        "--shards", type=int, default=1, help="number of aggregation shards (result-invariant)"
    )
    _add_out_flag(run_parser)
    _add_format_flag(run_parser)
    run_parser.set_defaults(handler=cmd_run)

    assign_parser = commands.add_parser("assign", help="label users and write the audit CSV")
    _add_tweet_flags(assign_parser)
    _add_roster_flags(assign_parser)
    _add_out_flag(assign_parser)
    assign_parser.set_defaults(handler=cmd_assign)

    annotate_parser = commands.add_parser("annotate", help="run the reference annotator")
    _add_tweet_flags(annotate_parser)
    _add_annotation_flags(annotate_parser, required=True)
    _add_out_flag(annotate_parser)
    annotate_parser.set_defaults(handler=cmd_annotate)

    mentions_parser = commands.add_parser("mentions", help="emit per-mention rows")
    _add_tweet_flags(mentions_parser)
    _add_roster_flags(mentions_parser, required=False)
    mentions_parser.add_argument(
        "--affiliations", type=Path, help="audit CSV from the assign stage"
    )
    _add_annotation_flags(mentions_parser)
    mentions_parser.add_argument("--windows", type=Path, required=True, help="event windows JSON")
    _add_out_flag(mentions_parser)
    mentions_parser.set_defaults(handler=cmd_mentions)

    aggregate_parser = commands.add_parser("aggregate", help="reduce mention rows per window")
    aggregate_parser.add_argument(
        "--mentions", type=Path, required=True, help="mentions.csv from the mentions stage"
    )
    _add_out_flag(aggregate_parser)
    aggregate_parser.set_defaults(handler=cmd_aggregate)

    polarize_parser = commands.add_parser("polarize", help="per-entity and corpus polarization")
    polarize_parser.add_argument(
        "--baseline", type=Path, required=True, help="baseline aggregates CSV"
    )
    polarize_parser.add_argument("--crisis", type=Path, required=True, help="crisis aggregates CSV")
    _add_out_flag(polarize_parser)
    polarize_parser.set_defaults(handler=cmd_polarize)

    report_parser = commands.add_parser("report", help="assemble report files from aggregates")
    report_parser.add_argument(
        "--baseline", type=Path, required=True, help="baseline aggregates CSV"
    )
    report_parser.add_argument("--crisis", type=Path, required=True, help="crisis aggregates CSV")
    report_parser.add_argument("--windows", type=Path, required=True, help="event windows JSON")
    report_parser.add_argument(
        "--window-stats", type=Path, required=True, help="window_stats.json from the mentions stage"
    )
    _add_out_flag(report_parser)
    _add_format_flag(report_parser)
    report_parser.set_defaults(handler=cmd_report)

    synth_parser = commands.add_parser("synth", help="generate a planted synthetic bundle")
    synth_parser.add_argument("--spec", type=Path, required=True, help="planted spec JSON")
    synth_parser.add_argument("--seed", type=int, help="override the spec's seed")
    _add_out_flag(synth_parser)
    synth_parser.set_defaults(handler=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NoJointEntitiesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
