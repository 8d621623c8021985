"""Reader and writer for the WebVTT subset the platform serves.

::

    WEBVTT

    00:00:01.000 --> 00:00:03.500
    first cue
    may span lines

    00:00:04.000 --> 00:00:05.000
    second cue
"""
from __future__ import annotations

import re
from typing import List, Sequence

from .errors import SubtitleFormatError
from .models import Cue

_TIMING = re.compile(
    r"^(\d{2,}):([0-5]\d):([0-5]\d)\.(\d{3})\s+-->\s+(\d{2,}):([0-5]\d):([0-5]\d)\.(\d{3})\s*$")


def _seconds(h, m, s, ms) -> float:
    return int(h) * 3600 + int(m) * 60 + int(s) + int(ms) / 1000.0


def format_timestamp(seconds: float) -> str:
    total_ms = int(round(seconds * 1000))
    h, rem = divmod(total_ms, 3_600_000)
    m, rem = divmod(rem, 60_000)
    s, ms = divmod(rem, 1000)
    return f"{h:02d}:{m:02d}:{s:02d}.{ms:03d}"


def repair_cues(raw: Sequence[tuple]) -> List[Cue]:
    """Sort ``(start, end, text)`` triples, drop empty spans and clip overlaps.

    A cue that runs past the start of the next kept cue is truncated there;
    if that leaves nothing, the cue is dropped.
    """
    ordered = sorted(raw, key=lambda c: (c[0], c[1]))
    kept: List[Cue] = []
    next_start = float("inf")
    for start, end, text in reversed(ordered):
        end = min(end, next_start)
        if end > start:
            kept.append(Cue(start, end, text))
            next_start = start
    kept.reverse()
    return kept


def parse_subtitle(text: str) -> List[Cue]:
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    if not lines or lines[0].lstrip("﻿").strip() != "WEBVTT":
        raise SubtitleFormatError("missing WEBVTT header")
    raw = []
    i = 1
    n = len(lines)
    while i < n:
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        m = _TIMING.match(line)
        if not m:
            raise SubtitleFormatError(f"line {i + 1}: expected cue timing, got {line!r}")
        start = _seconds(*m.group(1, 2, 3, 4))
        end = _seconds(*m.group(5, 6, 7, 8))
        i += 1
        body = []
        while i < n and lines[i].strip():
            body.append(lines[i].strip())
            i += 1
        if not body:
            raise SubtitleFormatError(f"line {i}: cue without text")
        raw.append((start, end, "\n".join(body)))
    return repair_cues(raw)


def render_subtitle(cues: Sequence[Cue]) -> str:
    blocks = ["WEBVTT", ""]
    for cue in cues:
        blocks.append(f"{format_timestamp(cue.start)} --> {format_timestamp(cue.end)}")
        blocks.append(cue.text)
        blocks.append("")
    return "\n".join(blocks)


def cue_transcript(cue: Cue) -> str:
    return " ".join(cue.text.split("\n"))
