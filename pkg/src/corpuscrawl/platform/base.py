"""The adapter surface workers use to talk to a video platform."""
from __future__ import annotations

from typing import Optional, Protocol, Sequence

import numpy as np

from ..models import RawMedia, SearchPage, SearchQuery, SubtitleKind, VideoRecord


class Platform(Protocol):
    def search(self, query: SearchQuery, continuation: Optional[str] = None) -> SearchPage: ...

    def video_metadata(self, video_id: str) -> VideoRecord: ...

    def channel_videos(self, channel_id: str, continuation: Optional[str] = None) -> SearchPage: ...

    def media(self, video_id: str) -> RawMedia: ...

    def subtitle(self, video_id: str, language: str, kind: SubtitleKind) -> str: ...


class AlignmentSource(Protocol):
    """Something that can produce frame posteriors for a cue (the reference scorer's input)."""

    def posteriors(self, video_id: str, cue_index: int, corruption: Optional[float] = None,
                   seed: int = 0) -> np.ndarray: ...

    def encode(self, text: str) -> Sequence[int]: ...


class LivePlatform:
    """Placeholder for a real-platform adapter.  Not implemented in this build."""

    def _unavailable(self, *args, **kwargs):
        raise NotImplementedError("live platform access is not implemented; use a simulated world")

    search = video_metadata = channel_videos = media = subtitle = _unavailable
