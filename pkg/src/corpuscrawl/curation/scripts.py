"""Writing-system histogram for transcripts.

Characters are bucketed by code-point block.  Whitespace, punctuation,
digits and symbols belong to no writing system and are not counted;
combining marks count toward the script of the letter they attach to.
"""
from __future__ import annotations

import bisect
import unicodedata
from collections import Counter
from typing import Iterable, List, Optional, Tuple

SCRIPTS = ("Latin", "Cyrillic", "Han", "Hiragana", "Katakana", "Greek", "Devanagari",
           "Hangul", "Malayalam", "Arabic", "Other")

_RANGES = sorted([
    (0x0041, 0x005A, "Latin"), (0x0061, 0x007A, "Latin"), (0x00AA, 0x00AA, "Latin"),
    (0x00BA, 0x00BA, "Latin"), (0x00C0, 0x00D6, "Latin"), (0x00D8, 0x00F6, "Latin"),
    (0x00F8, 0x02AF, "Latin"), (0x1D00, 0x1D7F, "Latin"), (0x1E00, 0x1EFF, "Latin"),
    (0x2C60, 0x2C7F, "Latin"), (0xA720, 0xA7FF, "Latin"), (0xAB30, 0xAB6F, "Latin"),
    (0xFF21, 0xFF3A, "Latin"), (0xFF41, 0xFF5A, "Latin"),
    (0x0370, 0x03FF, "Greek"), (0x1F00, 0x1FFF, "Greek"),
    (0x0400, 0x052F, "Cyrillic"), (0x1C80, 0x1C8F, "Cyrillic"), (0x2DE0, 0x2DFF, "Cyrillic"),
    (0xA640, 0xA69F, "Cyrillic"),
    (0x0600, 0x06FF, "Arabic"), (0x0750, 0x077F, "Arabic"), (0x08A0, 0x08FF, "Arabic"),
    (0xFB50, 0xFDFF, "Arabic"), (0xFE70, 0xFEFF, "Arabic"),
    (0x0900, 0x097F, "Devanagari"), (0xA8E0, 0xA8FF, "Devanagari"),
    (0x0D00, 0x0D7F, "Malayalam"),
    (0x1100, 0x11FF, "Hangul"), (0x3130, 0x318F, "Hangul"), (0xA960, 0xA97F, "Hangul"),
    (0xAC00, 0xD7FF, "Hangul"), (0xFFA0, 0xFFDC, "Hangul"),
    (0x3040, 0x309F, "Hiragana"),
    (0x30A0, 0x30FF, "Katakana"), (0x31F0, 0x31FF, "Katakana"), (0xFF66, 0xFF9F, "Katakana"),
    (0x3005, 0x3005, "Han"), (0x3007, 0x3007, "Han"), (0x3021, 0x3029, "Han"),
    (0x3400, 0x4DBF, "Han"), (0x4E00, 0x9FFF, "Han"), (0xF900, 0xFAFF, "Han"),
    (0x20000, 0x3134F, "Han"),
])
_STARTS = [r[0] for r in _RANGES]


def _block_script(cp: int) -> str:
    i = bisect.bisect_right(_STARTS, cp) - 1
    if i >= 0 and _RANGES[i][0] <= cp <= _RANGES[i][1]:
        return _RANGES[i][2]
    return "Other"


def char_script(ch: str, previous: Optional[str] = None) -> Optional[str]:
    """Script of one character, or ``None`` if it belongs to no writing system."""
    cat = unicodedata.category(ch)
    if cat[0] in "ZPSNC":
        return None
    if cat[0] == "M" and 0x0300 <= ord(ch) <= 0x036F:
        # generic combining diacritics inherit the base letter's script
        return previous
    return _block_script(ord(ch))


def script_counts(text: str) -> Counter:
    counts: Counter = Counter()
    prev = None
    for ch in text:
        script = char_script(ch, prev)
        if script is not None:
            counts[script] += 1
        prev = script
    return counts


def detect_scripts(transcripts: Iterable[str]) -> List[Tuple[str, int, float]]:
    """Rank writing systems by character count: ``[(script, count, share), ...]``."""
    total: Counter = Counter()
    for t in transcripts:
        total += script_counts(t)
    n = sum(total.values())
    ranked = sorted(total.items(), key=lambda kv: (-kv[1], SCRIPTS.index(kv[0])))
    return [(s, c, c / n) for s, c in ranked]


def scripts_tsv(ranking: List[Tuple[str, int, float]]) -> str:
    lines = ["rank\tscript\tcharacters\tshare"]
    lines += [f"{i}\t{s}\t{c}\t{share:.6f}" for i, (s, c, share) in enumerate(ranking, 1)]
    return "\n".join(lines) + "\n"
