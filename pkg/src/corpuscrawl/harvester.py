"""Keyword harvesting from per-language text dumps.

Dumps are plain UTF-8 files named ``<lang>.txt`` with one document per line.
Keywords are ranked so that rarer languages are searched first.
"""
from __future__ import annotations

import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple, Union

from .coordinator.core import ResourceKind
from .errors import ValidationError

log = logging.getLogger(__name__)

MIN_TOKEN_LENGTH = 2


@dataclass(frozen=True)
class KeywordEntry:
    keyword: str
    language: str
    # provenance only; two entries with the same (keyword, language) are equal
    source_doc: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.keyword:
            raise ValidationError("keyword must be non-empty")


@dataclass(frozen=True)
class LanguageDistribution:
    counts: Dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def ranked(self) -> List[Tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def to_tsv(self) -> str:
        lines = ["language\tunique_keyword_count"]
        lines += [f"{lang}\t{n}" for lang, n in self.ranked()]
        return "\n".join(lines) + "\n"


def _is_separator(ch: str) -> bool:
    # whitespace, punctuation, symbols and control/format characters
    return unicodedata.category(ch)[0] in "ZPSC"


def tokenize(text: str) -> Iterator[str]:
    token: List[str] = []
    for ch in text:
        if _is_separator(ch):
            if token:
                yield "".join(token)
                token = []
        else:
            token.append(ch)
    if token:
        yield "".join(token)


def _keep(token: str) -> bool:
    return len(token) >= MIN_TOKEN_LENGTH and not token.isnumeric()


def extract_keywords(documents: Iterable[Union[str, bytes]], language: str,
                     diagnostics: Optional[Counter] = None,
                     source: Optional[str] = None) -> Set[KeywordEntry]:
    """Split documents into case-folded unique keywords tagged with ``language``.

    Byte lines that are not valid UTF-8 are skipped and tallied under
    ``diagnostics["undecodable_lines"]``.
    """
    if not language:
        raise ValidationError("language tag must be non-empty")
    seen: Dict[str, KeywordEntry] = {}
    for lineno, doc in enumerate(documents, 1):
        if isinstance(doc, bytes):
            try:
                doc = doc.decode("utf-8")
            except UnicodeDecodeError:
                if diagnostics is not None:
                    diagnostics["undecodable_lines"] += 1
                continue
        for token in tokenize(doc.casefold()):
            if _keep(token) and token not in seen:
                where = f"{source}:{lineno}" if source else None
                seen[token] = KeywordEntry(token, language, where)
    return set(seen.values())


def read_dumps(dump_dir, diagnostics: Optional[Counter] = None) -> Set[KeywordEntry]:
    """Harvest every ``<lang>.txt`` in ``dump_dir``."""
    entries: Set[KeywordEntry] = set()
    paths = sorted(Path(dump_dir).glob("*.txt"))
    for path in paths:
        with open(path, "rb") as fh:
            lines = (line.rstrip(b"\r\n") for line in fh)
            entries |= extract_keywords(lines, path.stem, diagnostics, source=path.name)
    log.info("harvested %d keywords from %d dumps", len(entries), len(paths))
    return entries


def language_distribution(entries: Iterable[KeywordEntry]) -> LanguageDistribution:
    counts = Counter(e.language for e in set(entries))
    return LanguageDistribution(dict(counts))


def prioritize(entries: Iterable[KeywordEntry], distribution: LanguageDistribution) -> List[KeywordEntry]:
    """Order keywords rarest language first; ties by (language, keyword)."""
    entries = list(entries)
    missing = {e.language for e in entries} - distribution.counts.keys()
    if missing:
        raise ValidationError(f"languages missing from distribution: {sorted(missing)}")
    return sorted(entries, key=lambda e: (distribution.counts[e.language], e.language, e.keyword))


def feed_coordinator(queue: Iterable[KeywordEntry], client, limit: Optional[int] = None) -> int:
    """Push up to ``limit`` keywords as Keyword resources; returns how many were new."""
    added = 0
    for i, entry in enumerate(queue):
        if limit is not None and i >= limit:
            break
        _, created = client.add_resource(ResourceKind.KEYWORD, entry.keyword)
        added += created
    return added
