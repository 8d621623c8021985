"""Value types exchanged between the platform adapter and the workers."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ValidationError


class SubtitleKind(str, enum.Enum):
    MANUAL = "manual"
    AUTOMATIC = "automatic"


@dataclass(frozen=True)
class SubtitleDescriptor:
    language: str
    kind: SubtitleKind

    def __post_init__(self):
        if not self.language:
            raise ValidationError("subtitle language must be non-empty")
        object.__setattr__(self, "kind", SubtitleKind(self.kind))


@dataclass(frozen=True)
class Cue:
    start: float
    end: float
    text: str

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise ValidationError(f"bad cue interval [{self.start}, {self.end}]")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class VideoRecord:
    id: str
    channel_id: str
    duration_s: float
    license_cc: bool
    subtitles: Tuple[SubtitleDescriptor, ...] = ()
    title_keywords: Tuple[str, ...] = ()

    @property
    def has_subtitles(self) -> bool:
        return bool(self.subtitles)


@dataclass(frozen=True)
class SearchPage:
    video_ids: Tuple[str, ...]
    continuation: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "video_ids", tuple(self.video_ids))
        if len(set(self.video_ids)) != len(self.video_ids):
            raise ValidationError("duplicate video ids within one page")


@dataclass(frozen=True)
class RawMedia:
    """Undecoded PCM as the platform serves it: ``samples`` is (frames, channels)."""

    samples: np.ndarray
    sample_rate: int


@dataclass(frozen=True)
class SearchQuery:
    keyword: str
    require_subtitles: bool = True
    require_cc_license: bool = True
    max_pages: int = 10

    def __post_init__(self):
        if not self.keyword:
            raise ValidationError("search keyword must be non-empty")
        if self.max_pages < 1:
            raise ValidationError("max_pages must be >= 1")
