"""Descriptive statistics over durations, transcript lengths and per-language hours."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional

from ..errors import ValidationError

ROW_LABELS = ("Mean", "Std", "Min", "Max")
SUBSETS = ("manual", "automatic", "unlabeled")


@dataclass(frozen=True)
class StatsSummary:
    mean: float
    std: float
    min: float
    max: float
    count: int

    def row(self, label: str) -> float:
        return {"Mean": self.mean, "Std": self.std, "Min": self.min, "Max": self.max}[label]

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "min": self.min, "max": self.max, "count": self.count}


def summarize(values: Iterable[float]) -> StatsSummary:
    """Population mean/std/min/max in one streaming pass (Welford's update)."""
    count = 0
    mean = 0.0
    m2 = 0.0
    lo = math.inf
    hi = -math.inf
    for x in values:
        x = float(x)
        count += 1
        delta = x - mean
        mean += delta / count
        m2 += delta * (x - mean)
        lo = min(lo, x)
        hi = max(hi, x)
    if count == 0:
        raise ValidationError("cannot summarize an empty collection")
    # keep min <= mean <= max despite rounding
    mean = min(max(mean, lo), hi)
    return StatsSummary(mean, math.sqrt(max(m2, 0.0) / count), lo, hi, count)


def duration_stats(values: Iterable[float]) -> StatsSummary:
    return summarize(values)


def text_length_stats(transcripts: Iterable[str]) -> StatsSummary:
    """Length statistics in Unicode scalar values (code points)."""
    return summarize(len(t) for t in transcripts)


def stats_table(columns: Mapping[str, Optional[StatsSummary]], fmt: str = "{:.4f}",
                sep: str = "\t") -> str:
    """Render the Mean/Std/Min/Max x subset layout; empty columns print as '-'."""
    names = list(columns)
    lines = [sep.join([""] + names)]
    for label in ROW_LABELS:
        cells = [label]
        for name in names:
            s = columns[name]
            cells.append("-" if s is None else fmt.format(s.row(label)))
        lines.append(sep.join(cells))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LanguageHours:
    by_language: Dict[str, Dict[str, float]]  # language -> {"manual": h, "automatic": h}
    unlabeled: float

    @property
    def total(self) -> float:
        return math.fsum(h for d in self.by_language.values() for h in d.values()) + self.unlabeled

    def ranked(self) -> List[tuple]:
        rows = [(lang, d.get("manual", 0.0), d.get("automatic", 0.0)) for lang, d in self.by_language.items()]
        return sorted(rows, key=lambda r: (-(r[1] + r[2]), r[0]))

    def to_tsv(self) -> str:
        lines = ["language\tmanual_hours\tautomatic_hours\ttotal_hours"]
        for lang, m, a in self.ranked():
            lines.append(f"{lang}\t{m:.6f}\t{a:.6f}\t{m + a:.6f}")
        return "\n".join(lines) + "\n"


def language_hours(manifest) -> LanguageHours:
    """Hours per (language, subset); unlabeled audio has no language and is totalled apart."""
    sums: Dict[str, Dict[str, List[float]]] = {}
    unlabeled: List[float] = []
    for rec in manifest:
        if rec.language is None:
            unlabeled.append(rec.duration)
            continue
        sums.setdefault(rec.language, {"manual": [], "automatic": []})[rec.subset].append(rec.duration)
    hours = {lang: {k: math.fsum(v) / 3600.0 for k, v in d.items()} for lang, d in sums.items()}
    return LanguageHours(hours, math.fsum(unlabeled) / 3600.0)
