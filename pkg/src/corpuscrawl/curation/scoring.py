"""Utterance scoring, score capping, threshold filtering and train/test sampling."""
from __future__ import annotations

import csv
import io
import json
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence

from .._fs import atomic_write_text
from ..errors import ValidationError
from ..subtitles import cue_transcript, parse_subtitle
from .ctc import ctc_log_loss

DEFAULT_THRESHOLD = 2.0
PLOT_CAP = 20.0
SWEEP_CAP = 16.0
SWEEP_THRESHOLDS = tuple(float(t) for t in range(1, 17))
HISTOGRAM_BIN_WIDTH = 1.0


@dataclass(frozen=True)
class UtterancePair:
    video_id: str
    cue_index: int
    duration: float
    transcript: str
    score: Optional[float] = None
    raw_score: Optional[float] = None
    subset: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self):
        if not self.duration > 0:
            raise ValidationError(f"{self.video_id}#{self.cue_index}: duration must be > 0")
        if self.score is not None and not self.score >= 0:
            raise ValidationError(f"{self.video_id}#{self.cue_index}: score must be >= 0")

    @property
    def key(self):
        return (self.video_id, self.cue_index)

    @property
    def scored(self) -> bool:
        return self.score is not None and math.isfinite(self.score)


def pairs_from_manifest(records, root) -> List[UtterancePair]:
    """One pair per cue of every labeled manifest record."""
    root = Path(root)
    out = []
    for rec in records:
        if rec.subtitle_path is None:
            continue
        text = (root / rec.subtitle_path).read_text(encoding="utf-8")
        for i, cue in enumerate(parse_subtitle(text)):
            out.append(UtterancePair(rec.video_id, i, cue.duration, cue_transcript(cue),
                                     subset=rec.subset, language=rec.language))
    return sorted(out, key=lambda p: p.key)


class ReferenceScorer:
    """CTC score of the subtitle text against the platform's synthetic posteriors."""

    def __init__(self, source, corruption: Optional[float] = None, seed: int = 0):
        self.source = source
        self.corruption = corruption
        self.seed = seed

    def __call__(self, pair: UtterancePair) -> float:
        labels = self.source.encode(pair.transcript)
        if not labels:
            return math.inf
        post = self.source.posteriors(pair.video_id, pair.cue_index, self.corruption, self.seed)
        return ctc_log_loss(post, labels)


def score_corpus(pairs: Iterable[UtterancePair], scorer: Callable[[UtterancePair], float],
                 workers: int = 1) -> List[UtterancePair]:
    """Attach ``scorer(pair)`` to every pair; output ordered by (video_id, cue_index)."""
    pairs = sorted(pairs, key=lambda p: p.key)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            scores = list(pool.map(scorer, pairs))
    else:
        scores = [scorer(p) for p in pairs]
    return [replace(p, score=s, raw_score=s) for p, s in zip(pairs, scores)]


def cap_scores(pairs: Iterable[UtterancePair], cap: float) -> List[UtterancePair]:
    """Reporting copies with ``score = min(score, cap)``; ``raw_score`` keeps the original."""
    out = []
    for p in pairs:
        raw = p.raw_score if p.raw_score is not None else p.score
        if p.score is None or not math.isfinite(p.score):
            out.append(replace(p, raw_score=raw))
        else:
            out.append(replace(p, score=min(p.score, cap), raw_score=raw))
    return out


def filter_by_threshold(pairs: Iterable[UtterancePair], threshold: float) -> List[UtterancePair]:
    """Keep pairs scoring at or below ``threshold``; unscored and infinite scores never pass."""
    return [p for p in pairs if p.scored and p.score <= threshold]


@dataclass(frozen=True)
class Splits:
    train: List[UtterancePair]
    test: List[UtterancePair]


def sample_splits(pairs: Sequence[UtterancePair], train_max: int, test_size: int, seed: int) -> Splits:
    pairs = sorted(pairs, key=lambda p: p.key)
    if test_size < 0 or train_max < 0:
        raise ValidationError("split sizes must be non-negative")
    if test_size >= len(pairs):
        raise ValidationError(f"test_size {test_size} needs more than {len(pairs)} pairs")
    order = list(range(len(pairs)))
    random.Random(seed).shuffle(order)
    test_idx = order[:test_size]
    train_idx = order[test_size:test_size + min(train_max, len(pairs) - test_size)]
    return Splits(train=[pairs[i] for i in sorted(train_idx)],
                  test=[pairs[i] for i in sorted(test_idx)])


@dataclass(frozen=True)
class SweepReport:
    thresholds: List[float]
    kept_counts: List[int]
    kept_hours: List[float]
    cap: Optional[float] = SWEEP_CAP

    def __post_init__(self):
        if list(self.thresholds) != sorted(self.thresholds):
            raise ValidationError("thresholds must be ascending")
        if any(b < a for a, b in zip(self.kept_counts, self.kept_counts[1:])):
            raise ValidationError("kept counts must be non-decreasing")

    def to_dict(self) -> dict:
        return {"cap": self.cap, "thresholds": list(self.thresholds),
                "kept_counts": list(self.kept_counts), "kept_hours": list(self.kept_hours)}

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(f"# cap={_fmt(self.cap)}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["threshold", "kept_count", "kept_hours"])
        for t, n, h in zip(self.thresholds, self.kept_counts, self.kept_hours):
            w.writerow([repr(float(t)), n, f"{h:.6f}"])
        return out.getvalue()


def threshold_sweep(pairs: Sequence[UtterancePair], thresholds: Sequence[float] = SWEEP_THRESHOLDS,
                    cap: Optional[float] = SWEEP_CAP) -> SweepReport:
    """Score once, filter at each threshold; scores above ``cap`` count as ``cap``."""
    thresholds = sorted(float(t) for t in thresholds)
    view = cap_scores(pairs, cap) if cap is not None else list(pairs)
    counts, hours = [], []
    for t in thresholds:
        kept = filter_by_threshold(view, t)
        counts.append(len(kept))
        hours.append(math.fsum(p.duration for p in kept) / 3600.0)
    return SweepReport(thresholds, counts, hours, cap)


@dataclass(frozen=True)
class ScoreDurationReport:
    cap: float
    rows: List[tuple]  # (video_id, cue_index, subset, duration, capped score)
    histogram: List[tuple]  # (bin_start, bin_end, count)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(f"# cap={_fmt(self.cap)}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["video_id", "cue_index", "subset", "duration", "score"])
        for vid, idx, subset, dur, score in self.rows:
            w.writerow([vid, idx, subset or "", f"{dur:.3f}", f"{score:.6f}"])
        return out.getvalue()

    def histogram_csv(self) -> str:
        out = io.StringIO()
        out.write(f"# cap={_fmt(self.cap)} bin_width={_fmt(HISTOGRAM_BIN_WIDTH)}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["bin_start", "bin_end", "count"])
        for lo, hi, n in self.histogram:
            w.writerow([_fmt(lo), _fmt(hi), n])
        return out.getvalue()


def score_duration_report(pairs: Iterable[UtterancePair], cap: float = PLOT_CAP) -> ScoreDurationReport:
    """Duration/score scatter data plus a score histogram with unit-width bins.

    The last bin is closed so that scores equal to ``cap`` land in it.
    """
    capped = [p for p in cap_scores(pairs, cap) if p.scored]
    rows = [(p.video_id, p.cue_index, p.subset, p.duration, p.score) for p in capped]
    n_bins = max(1, math.ceil(cap / HISTOGRAM_BIN_WIDTH))
    counts = [0] * n_bins
    for p in capped:
        counts[min(int(p.score // HISTOGRAM_BIN_WIDTH), n_bins - 1)] += 1
    histogram = [(k * HISTOGRAM_BIN_WIDTH, (k + 1) * HISTOGRAM_BIN_WIDTH, counts[k]) for k in range(n_bins)]
    return ScoreDurationReport(cap, rows, histogram)


def _fmt(x) -> str:
    return "none" if x is None else f"{x:g}"


def write_pairs_jsonl(path, pairs: Iterable[UtterancePair]) -> None:
    lines = []
    for p in pairs:
        lines.append(json.dumps({
            "video_id": p.video_id, "cue_index": p.cue_index, "duration": p.duration,
            # infeasible alignments score +inf, which JSON cannot carry
            "transcript": p.transcript, "score": p.score if p.scored else None,
            "subset": p.subset, "language": p.language,
        }, ensure_ascii=False))
    atomic_write_text(path, "".join(l + "\n" for l in lines))


def by_language(pairs: Iterable[UtterancePair]) -> Dict[str, List[UtterancePair]]:
    groups: Dict[str, List[UtterancePair]] = {}
    for p in pairs:
        groups.setdefault(p.language or "", []).append(p)
    return groups
