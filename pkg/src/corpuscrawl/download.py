"""Download worker: pick a subtitle, fetch audio and text, write manifest records."""
from __future__ import annotations

import enum
import json
import logging
import os
import threading
import time
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, List, Optional

from ._fs import atomic_write
from .audio import normalize_audio, wav_bytes
from .coordinator.core import ResourceKind
from .errors import (EmptyAudioError, InvalidStateError, NotFoundError, PlatformError,
                     StaleLeaseError, SubtitleFormatError, ValidationError)
from .models import SubtitleDescriptor, SubtitleKind
from .subtitles import parse_subtitle, render_subtitle

log = logging.getLogger(__name__)


class Subset(str, enum.Enum):
    MANUAL = "manual"
    AUTOMATIC = "automatic"
    UNLABELED = "unlabeled"


@dataclass(frozen=True)
class Classification:
    subset: Subset
    language: Optional[str] = None

    @property
    def labeled(self) -> bool:
        return self.subset is not Subset.UNLABELED

    @property
    def track(self) -> Optional[SubtitleDescriptor]:
        """The one subtitle to download, if any."""
        if not self.labeled:
            return None
        kind = SubtitleKind.MANUAL if self.subset is Subset.MANUAL else SubtitleKind.AUTOMATIC
        return SubtitleDescriptor(self.language, kind)


UNLABELED = Classification(Subset.UNLABELED)


def resolve_subtitles(descriptors: Iterable[SubtitleDescriptor], strict: bool = False) -> Classification:
    """Decide a video's language from its subtitle list.

    A lone manual track or a lone automatic track is trusted.  One manual
    track plus automatic tracks in the same language is taken as manual,
    unless ``strict`` is set, in which case any second track disqualifies the
    video.  Everything else, including any disagreement between track
    languages, leaves the video unlabeled.
    """
    descriptors = list(descriptors)
    if not descriptors:
        return UNLABELED
    if len({d.language for d in descriptors}) > 1:
        return UNLABELED
    manual = [d for d in descriptors if d.kind is SubtitleKind.MANUAL]
    automatic = [d for d in descriptors if d.kind is SubtitleKind.AUTOMATIC]
    if len(manual) == 1 and (not automatic or not strict):
        return Classification(Subset.MANUAL, manual[0].language)
    if not manual and len(automatic) == 1:
        return Classification(Subset.AUTOMATIC, automatic[0].language)
    return UNLABELED


@dataclass(frozen=True)
class ManifestRecord:
    video_id: str
    channel_id: str
    subset: str
    language: Optional[str]
    audio_path: str
    subtitle_path: Optional[str]
    duration: float
    num_cues: int

    def __post_init__(self):
        subset = Subset(self.subset)
        object.__setattr__(self, "subset", subset.value)
        unlabeled = subset is Subset.UNLABELED
        if unlabeled != (self.language is None) or unlabeled != (self.subtitle_path is None):
            raise ValidationError(
                f"{self.video_id}: unlabeled records carry neither language nor subtitle, labeled ones carry both")
        if self.num_cues < 0:
            raise ValidationError("num_cues must be >= 0")

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestRecord":
        return cls(**{f.name: d.get(f.name) for f in fields(cls)})


def read_manifest(path) -> List[ManifestRecord]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, "r", encoding="utf-8") as fh:
        return [ManifestRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


class ManifestSink:
    """Append-only JSON-lines manifest; each record is one locked write."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, record: ManifestRecord) -> None:
        line = (record.to_json() + "\n").encode("utf-8")
        with self._lock:
            fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
            try:
                os.write(fd, line)
            finally:
                os.close(fd)

    def records(self) -> List[ManifestRecord]:
        return read_manifest(self.path)

    def finalize(self) -> List[ManifestRecord]:
        """Rewrite the manifest sorted by video id, keeping the last record per video."""
        with self._lock:
            latest = {r.video_id: r for r in read_manifest(self.path)}
            ordered = [latest[k] for k in sorted(latest)]
            atomic_write(self.path, "".join(r.to_json() + "\n" for r in ordered).encode("utf-8"))
            return ordered


@dataclass
class DownloadStats:
    processed: Counter = field(default_factory=Counter)
    skipped: List[str] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(self.processed.values())


class SkippedVideo(Exception):
    """The video was settled (resource completed) without producing a record."""


def process_video(client, platform, sink: ManifestSink, out_dir, worker_id: str = "download-0",
                  strict: bool = False, notes: Optional[list] = None) -> Optional[ManifestRecord]:
    """Lease one Video resource and turn it into a manifest record.

    Returns ``None`` when there is no video to lease.  Platform failures
    propagate without completing the resource, so the lease lapses and the
    video is retried later.  A missing video or empty audio completes the
    resource and raises ``SkippedVideo``.
    """
    res = client.acquire_next(ResourceKind.VIDEO, worker_id)
    if res is None:
        return None
    vid = res.payload
    out_dir = Path(out_dir)
    try:
        meta = platform.video_metadata(vid)
        cls = resolve_subtitles(meta.subtitles, strict=strict)
        cues = []
        subtitle_rel = None
        if cls.labeled:
            track = cls.track
            text = platform.subtitle(vid, track.language, track.kind)
            try:
                cues = parse_subtitle(text)
            except SubtitleFormatError as exc:
                msg = f"{vid}: malformed {track.kind.value} subtitle ({exc}); left unlabeled"
                log.warning(msg)
                if notes is not None:
                    notes.append(msg)
                cls, cues = UNLABELED, []
            else:
                subtitle_rel = f"subtitles/{vid}.{track.language}.{track.kind.value}.vtt"
        audio = normalize_audio(platform.media(vid))
    except (NotFoundError, EmptyAudioError) as exc:
        _settle(client, res, worker_id, f"skipped: {exc}")
        raise SkippedVideo(f"{vid}: {exc}") from exc

    audio_rel = f"audio/{vid}.wav"
    atomic_write(out_dir / audio_rel, wav_bytes(audio))
    if subtitle_rel:
        atomic_write(out_dir / subtitle_rel, render_subtitle(cues).encode("utf-8"))
    record = ManifestRecord(
        video_id=vid, channel_id=meta.channel_id, subset=cls.subset.value, language=cls.language,
        audio_path=audio_rel, subtitle_path=subtitle_rel, duration=audio.duration, num_cues=len(cues))
    sink.append(record)
    _settle(client, res, worker_id, record.subset)
    return record


def _settle(client, res, worker_id: str, result: str) -> None:
    try:
        client.complete(res.id, worker_id, result)
    except (StaleLeaseError, InvalidStateError) as exc:
        # lease lapsed mid-download; the re-run overwrites files and finalize() dedups the manifest
        log.warning("late completion of %s: %s", res.payload, exc)


def _work_pending(client) -> bool:
    stats = client.stats()
    if stats[ResourceKind.VIDEO.value]["in_progress"]:
        return True
    return any(stats[k.value]["in_progress"] or stats[k.value]["not_started"]
               for k in (ResourceKind.KEYWORD, ResourceKind.CHANNEL))


def download_loop(client, platform, sink: ManifestSink, out_dir, worker_id: str = "download-0",
                  strict: bool = False, idle_polls: int = 3, poll_interval: float = 0.05) -> DownloadStats:
    """Process videos until the queue stays empty and no upstream work is pending."""
    stats = DownloadStats()
    idle = 0
    while idle < idle_polls:
        try:
            record = process_video(client, platform, sink, out_dir, worker_id, strict, stats.notes)
        except SkippedVideo as exc:
            stats.skipped.append(str(exc))
            idle = 0
            continue
        except PlatformError as exc:
            log.warning("download failed, leaving lease to expire: %s", exc)
            stats.failures.append(str(exc))
            idle = 0
            continue
        if record is not None:
            stats.processed[record.subset] += 1
            idle = 0
            continue
        if not _work_pending(client):
            idle += 1
        if poll_interval:
            time.sleep(poll_interval)
    return stats
