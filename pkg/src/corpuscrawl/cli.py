"""Command-line entry points.

Exit codes: 0 success, 1 validation error, 2 partial completion.
"""
from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
import threading
from collections import Counter
from pathlib import Path
from typing import List, Optional

from . import __version__
from .config import RunConfig, load_config
from .coordinator import Coordinator, CoordinatorClient, LeaseConfig, ResourceKind, make_server, open_store
from .crawl import discovery_loop
from .curation import (ReferenceScorer, detect_scripts, duration_stats, filter_by_threshold,
                       language_hours, pairs_from_manifest, sample_splits, score_corpus,
                       score_duration_report, stats_table, text_length_stats, threshold_sweep)
from .curation.scoring import SWEEP_THRESHOLDS, by_language, write_pairs_jsonl
from .curation.scripts import scripts_tsv
from ._fs import atomic_write_text
from .download import ManifestSink, download_loop, read_manifest
from .errors import CorpusCrawlError, ValidationError
from .harvester import feed_coordinator, language_distribution, prioritize, read_dumps
from .platform import open_platform
from .subtitles import cue_transcript, parse_subtitle

log = logging.getLogger("corpuscrawl")

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL = 0, 1, 2
MANIFEST_NAME = "manifest.jsonl"


class JsonLogFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        event = {"ts": round(record.created, 3), "level": record.levelname.lower(),
                 "logger": record.name, "event": record.getMessage()}
        if record.exc_info:
            event["exc"] = self.formatException(record.exc_info)
        return json.dumps(event, ensure_ascii=False)


def setup_logging(verbose: bool = False) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonLogFormatter())
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def _client(cfg: RunConfig):
    if not cfg.coordinator_url:
        raise ValidationError("no coordinator URL (use --coordinator or CORPUSCRAWL_COORDINATOR_URL)")
    return CoordinatorClient(cfg.coordinator_url)


def _platform(cfg: RunConfig):
    if cfg.platform in ("", "sim:"):
        raise ValidationError("no platform configured (use --world or --platform)")
    return open_platform(cfg.platform)


def _run_threads(targets) -> list:
    results = [None] * len(targets)
    errors = []

    def wrap(i, fn):
        try:
            results[i] = fn()
        except Exception as exc:  # surfaced after join
            log.exception("worker %d crashed", i)
            errors.append(exc)

    threads = [threading.Thread(target=wrap, args=(i, fn), daemon=True) for i, fn in enumerate(targets)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return results


# -- commands ---------------------------------------------------------------

def cmd_serve(cfg: RunConfig, host: str, port: int, journal: Optional[str]) -> int:
    coordinator = Coordinator(store=open_store(journal), lease=LeaseConfig(cfg.lease_duration_s))
    server = make_server(coordinator, host, port)
    def _stop(signum, frame):
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGTERM, _stop)
    signal.signal(signal.SIGINT, _stop)
    log.info("coordinator listening on http://%s:%d", *server.server_address[:2])
    try:
        server.serve_forever()
    finally:
        server.server_close()
        coordinator.store.close()
    return EXIT_OK


def cmd_harvest(dump_dir, client, limit: Optional[int], out: Optional[Path] = None) -> int:
    diagnostics: Counter = Counter()
    entries = read_dumps(dump_dir, diagnostics)
    dist = language_distribution(entries)
    queue = prioritize(entries, dist)
    added = feed_coordinator(queue, client, limit)
    if out is not None:
        atomic_write_text(out / "keyword_languages.tsv", dist.to_tsv())
    log.info("fed %d new keywords (%d harvested, %d undecodable lines)",
             added, len(entries), diagnostics["undecodable_lines"])
    return added


def cmd_crawl(cfg: RunConfig, client, platform, idle_polls: int = 3, poll_interval: float = 0.05) -> int:
    targets = []
    for i in range(cfg.keyword_workers):
        targets.append(lambda i=i: discovery_loop(
            client, platform, f"keyword-{i}", (ResourceKind.KEYWORD,), idle_polls, poll_interval,
            cfg.max_pages))
    for i in range(cfg.channel_workers):
        targets.append(lambda i=i: discovery_loop(
            client, platform, f"channel-{i}", (ResourceKind.CHANNEL,), idle_polls, poll_interval,
            cfg.max_pages))
    results = _run_threads(targets)
    partial = sum(r.partial for r in results)
    failures = sum(len(r.failures) for r in results)
    log.info("discovery drained: %s", json.dumps(client.stats()))
    return EXIT_PARTIAL if partial or failures else EXIT_OK


def cmd_download(cfg: RunConfig, client, platform, idle_polls: int = 3,
                 poll_interval: float = 0.05) -> int:
    out = cfg.out
    sink = ManifestSink(out / MANIFEST_NAME)
    targets = [lambda i=i: download_loop(client, platform, sink, out, f"download-{i}",
                                         cfg.strict_subtitles, idle_polls, poll_interval)
               for i in range(cfg.download_workers)]
    results = _run_threads(targets)
    records = sink.finalize()
    counts = Counter(r.subset for r in records)
    log.info("manifest has %d records: %s", len(records), dict(sorted(counts.items())))
    failures = sum(len(r.failures) for r in results)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_curate(manifest_path, cfg: RunConfig, scorer=None) -> dict:
    """Score every labeled utterance, filter, split per language and write reports."""
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    out = cfg.out / "curation"
    records = read_manifest(manifest_path)
    pairs = pairs_from_manifest(records, root)
    if scorer is None:
        scorer = ReferenceScorer(_platform(cfg))
    scored = score_corpus(pairs, scorer)
    kept = filter_by_threshold(scored, cfg.threshold)

    header = f"# threshold={float(cfg.threshold)!r} cap={cfg.cap:g} seed={cfg.seed}\n"
    write_pairs_jsonl(out / "scores.jsonl", scored)

    rows = ["language\tscored\tkept\tkept_hours\ttrain\ttest"]
    skipped = []
    kept_by_lang = by_language(kept)
    for lang, group in sorted(by_language(scored).items()):
        lang_kept = kept_by_lang.get(lang, [])
        n_train = n_test = 0
        if len(lang_kept) > cfg.test_size:
            splits = sample_splits(lang_kept, cfg.train_max, cfg.test_size, cfg.seed)
            n_train, n_test = len(splits.train), len(splits.test)
            write_pairs_jsonl(out / "splits" / f"{lang}.train.jsonl", splits.train)
            write_pairs_jsonl(out / "splits" / f"{lang}.test.jsonl", splits.test)
        else:
            skipped.append(lang)
        hours = sum(p.duration for p in lang_kept) / 3600.0
        rows.append(f"{lang}\t{len(group)}\t{len(lang_kept)}\t{hours:.6f}\t{n_train}\t{n_test}")
    atomic_write_text(out / "report.tsv", header + "\n".join(rows) + "\n")

    sweep = threshold_sweep(scored, SWEEP_THRESHOLDS, cfg.sweep_cap)
    atomic_write_text(out / "sweep.csv", sweep.to_csv())
    atomic_write_text(out / "sweep.json", json.dumps(sweep.to_dict(), indent=1) + "\n")
    for subset in ("manual", "automatic"):
        rep = score_duration_report([p for p in scored if p.subset == subset], cfg.cap)
        atomic_write_text(out / f"score_duration_{subset}.csv", rep.to_csv())
        atomic_write_text(out / f"score_histogram_{subset}.csv", rep.histogram_csv())

    summary = {
        "threshold": float(cfg.threshold), "cap": cfg.cap, "seed": cfg.seed,
        "utterances": len(scored), "kept": len(kept),
        "kept_hours": sum(p.duration for p in kept) / 3600.0,
        "languages_without_split": skipped,
    }
    atomic_write_text(out / "summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return summary


def cmd_stats(manifest_path, out_dir) -> dict:
    """Table-style duration and text-length statistics, language hours and script ranking."""
    manifest_path = Path(manifest_path)
    out = Path(out_dir) / "stats"
    records = read_manifest(manifest_path)
    subsets = ("manual", "automatic", "unlabeled")
    video_hours = {s: [r.duration / 3600.0 for r in records if r.subset == s] for s in subsets}
    utt_seconds = {s: [] for s in subsets[:2]}
    text_len = {s: [] for s in subsets[:2]}
    transcripts: List[str] = []
    for r in records:
        if r.subtitle_path is None:
            continue
        for cue in parse_subtitle((manifest_path.parent / r.subtitle_path).read_text(encoding="utf-8")):
            text = cue_transcript(cue)
            utt_seconds[r.subset].append(cue.duration)
            text_len[r.subset].append(text)
            transcripts.append(text)

    def table(columns, summarize, fmt):
        cols = {name.capitalize(): summarize(vals) if vals else None for name, vals in columns.items()}
        if all(v is None for v in cols.values()):
            return "\t" + "\t".join(cols) + "\n"
        return stats_table(cols, fmt)

    atomic_write_text(out / "video_duration_hours.tsv", table(video_hours, duration_stats, "{:.4f}"))
    atomic_write_text(out / "utterance_duration_seconds.tsv", table(utt_seconds, duration_stats, "{:.3f}"))
    atomic_write_text(out / "text_length_chars.tsv", table(text_len, text_length_stats, "{:.1f}"))
    hours = language_hours(records)
    atomic_write_text(out / "language_hours.tsv", hours.to_tsv())
    ranking = detect_scripts(transcripts)
    atomic_write_text(out / "scripts.tsv", scripts_tsv(ranking))

    def dump(columns, summarize):
        return {k: summarize(v).to_dict() if v else None for k, v in columns.items()}

    summary = {
        "records": len(records),
        "subsets": dict(sorted(Counter(r.subset for r in records).items())),
        "video_duration_hours": dump(video_hours, duration_stats),
        "utterance_duration_seconds": dump(utt_seconds, duration_stats),
        "text_length_chars": dump(text_len, text_length_stats),
        "unlabeled_hours": hours.unlabeled,
        "scripts": [[s, c] for s, c, _ in ranking],
    }
    atomic_write_text(out / "stats.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return summary


def cmd_pipeline(cfg: RunConfig, dump_dir=None, idle_polls: int = 3, poll_interval: float = 0.01) -> int:
    """Harvest, crawl, download, curate and report against one platform, all in-process."""
    platform = _platform(cfg)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    coordinator = Coordinator(store=open_store(str(out / "coordinator.journal")),
                              lease=LeaseConfig(cfg.lease_duration_s))
    try:
        if dump_dir is not None:
            cmd_harvest(dump_dir, coordinator, None, out)
        else:
            world = getattr(platform, "world", None)
            for kw in getattr(world, "queries", ()):
                coordinator.add_resource(ResourceKind.KEYWORD, kw)
        crawl_rc = cmd_crawl(cfg, coordinator, platform, idle_polls, poll_interval)
        download_rc = cmd_download(cfg, coordinator, platform, idle_polls, poll_interval)
    finally:
        coordinator.store.close()
    cmd_curate(out / MANIFEST_NAME, cfg)
    cmd_stats(out / MANIFEST_NAME, out)
    return max(crawl_rc, download_rc)


# -- argument parsing ----------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", dest="out_dir", help="output directory (all paths are relative to it)")
    p.add_argument("--coordinator", dest="coordinator_url", help="coordinator base URL")
    p.add_argument("--world", help="simulated world JSON file (shorthand for --platform sim:FILE)")
    p.add_argument("--platform", help="sim:<file>, http://<mounted sim>, or live_stub")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corpuscrawl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the coordinator HTTP service")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8600)
    p.add_argument("--journal", help="journal file for durable state (default: in-memory)")
    p.add_argument("--lease", dest="lease_duration_s", type=float)

    p = sub.add_parser("harvest", help="extract keywords from <lang>.txt dumps and queue them")
    _add_common(p)
    p.add_argument("--dumps", required=True)
    p.add_argument("--limit", type=int)

    p = sub.add_parser("crawl", help="run keyword and channel workers until discovery drains")
    _add_common(p)
    p.add_argument("--keyword-workers", type=int)
    p.add_argument("--channel-workers", type=int)
    p.add_argument("--max-pages", type=int)

    p = sub.add_parser("download", help="run download workers and write the manifest")
    _add_common(p)
    p.add_argument("--download-workers", type=int)
    p.add_argument("--strict-subtitles", action="store_true", default=None)

    p = sub.add_parser("curate", help="score, filter and split a manifest")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--cap", type=float)
    p.add_argument("--test-size", type=int)
    p.add_argument("--train-max", type=int)

    p = sub.add_parser("stats", help="corpus statistics for a manifest")
    _add_common(p)
    p.add_argument("--manifest", required=True)

    p = sub.add_parser("pipeline", help="run every stage in-process against one platform")
    _add_common(p)
    p.add_argument("--dumps")
    p.add_argument("--threshold", type=float)
    p.add_argument("--test-size", type=int)
    p.add_argument("--download-workers", type=int)
    return parser


_OVERRIDES = ("out_dir", "coordinator_url", "platform", "seed", "lease_duration_s", "keyword_workers",
              "channel_workers", "max_pages", "download_workers", "strict_subtitles", "threshold",
              "cap", "test_size", "train_max")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    overrides = {k: getattr(args, k, None) for k in _OVERRIDES}
    if getattr(args, "world", None):
        overrides["platform"] = f"sim:{args.world}"
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "serve":
            return cmd_serve(cfg, args.host, args.port, args.journal)
        if args.command == "harvest":
            cmd_harvest(args.dumps, _client(cfg), args.limit, cfg.out)
            return EXIT_OK
        if args.command == "crawl":
            return cmd_crawl(cfg, _client(cfg), _platform(cfg))
        if args.command == "download":
            return cmd_download(cfg, _client(cfg), _platform(cfg))
        if args.command == "curate":
            summary = cmd_curate(args.manifest, cfg)
            print(json.dumps(summary, sort_keys=True))
            return EXIT_OK
        if args.command == "stats":
            summary = cmd_stats(args.manifest, cfg.out)
            print(json.dumps({"records": summary["records"], "subsets": summary["subsets"]}))
            return EXIT_OK
        if args.command == "pipeline":
            return cmd_pipeline(cfg, args.dumps)
    except (CorpusCrawlError, OSError, json.JSONDecodeError, TypeError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_INVALID
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
