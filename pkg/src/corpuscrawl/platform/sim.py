"""Deterministic in-process video platform driven by a JSON world file.

World file layout (all keys except ``videos`` optional)::

    {
      "page_size": 10,
      "seed": 0,
      "frame_rate": 25,
      "queries": ["kw", ...],          # suggested seed keywords for demo runs
      "channels": ["c-empty", ...],    # channels that exist but may have no videos
      "videos": [
        {
          "id": "v0001", "channel_id": "c01",
          "title_keywords": ["kw", "kw", "other"],
          "license_cc": true, "duration_s": 21.5,
          "sample_rate": 48000, "channels": 2, "audio_seed": 17,
          "subtitle_tracks": [
            {"language": "en", "kind": "manual",
             "cues": [{"start": 0.5, "end": 3.0, "text": "hello there"}]}
          ],
          "spoken_text": ["hello there"],
          "cue_corruption": [0.0]
        }
      ]
    }

Video order in the file is upload order.  ``spoken_text[i]`` is what is
actually said during cue ``i`` (timed by the first track that has a cue
``i``), and ``cue_corruption[i]`` is the default corruption level of the
synthetic posteriors for that cue.
"""
from __future__ import annotations

import base64
import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ValidationError, VideoNotFoundError
from ..models import Cue, RawMedia, SearchPage, SearchQuery, SubtitleDescriptor, SubtitleKind, VideoRecord
from ..subtitles import render_subtitle

BLANK = 0
UNKNOWN = 1
PEAK_PROBABILITY = 0.95
DEFAULT_FRAME_RATE = 25.0


@dataclass(frozen=True)
class TrackSpec:
    language: str
    kind: SubtitleKind
    cues: Tuple[Cue, ...]

    @property
    def descriptor(self) -> SubtitleDescriptor:
        return SubtitleDescriptor(self.language, self.kind)


@dataclass(frozen=True)
class VideoSpec:
    id: str
    channel_id: str
    title_keywords: Tuple[str, ...]
    license_cc: bool
    duration_s: float
    subtitle_tracks: Tuple[TrackSpec, ...] = ()
    spoken_text: Tuple[str, ...] = ()
    cue_corruption: Tuple[float, ...] = ()
    audio_seed: int = 0
    sample_rate: int = 48_000
    channels: int = 1

    def record(self) -> VideoRecord:
        return VideoRecord(self.id, self.channel_id, self.duration_s, self.license_cc,
                           tuple(t.descriptor for t in self.subtitle_tracks), self.title_keywords)


@dataclass
class World:
    videos: List[VideoSpec]
    page_size: int = 10
    seed: int = 0
    frame_rate: float = DEFAULT_FRAME_RATE
    queries: List[str] = field(default_factory=list)
    extra_channels: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.page_size < 1:
            raise ValidationError("page_size must be >= 1")
        ids = [v.id for v in self.videos]
        if len(set(ids)) != len(ids):
            raise ValidationError("video ids must be unique")
        for v in self.videos:
            for t in v.subtitle_tracks:
                for c in t.cues:
                    if c.end > v.duration_s + 1e-9:
                        raise ValidationError(f"{v.id}: cue ends after the video ({c.end} > {v.duration_s})")
        self.by_id: Dict[str, VideoSpec] = {v.id: v for v in self.videos}
        self.by_channel: Dict[str, List[str]] = {c: [] for c in self.extra_channels}
        for v in self.videos:
            self.by_channel.setdefault(v.channel_id, []).append(v.id)
        chars = set()
        for v in self.videos:
            for text in v.spoken_text:
                chars.update(normalize_text(text))
            for t in v.subtitle_tracks:
                for c in t.cues:
                    chars.update(normalize_text(c.text))
        self.vocabulary: List[str] = ["<blank>", "<unk>"] + sorted(chars)
        self._symbol = {ch: i for i, ch in enumerate(self.vocabulary) if i >= 2}

    # -- loading -----------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "World":
        videos = []
        for v in data["videos"]:
            tracks = tuple(
                TrackSpec(t["language"], SubtitleKind(t["kind"]),
                          tuple(Cue(float(c["start"]), float(c["end"]), c["text"]) for c in t.get("cues", ())))
                for t in v.get("subtitle_tracks", ()))
            videos.append(VideoSpec(
                id=v["id"], channel_id=v["channel_id"],
                title_keywords=tuple(v.get("title_keywords", ())),
                license_cc=bool(v.get("license_cc", False)),
                duration_s=float(v["duration_s"]),
                subtitle_tracks=tracks,
                spoken_text=tuple(v.get("spoken_text", ())),
                cue_corruption=tuple(float(x) for x in v.get("cue_corruption", ())),
                audio_seed=int(v.get("audio_seed", 0)),
                sample_rate=int(v.get("sample_rate", 48_000)),
                channels=int(v.get("channels", 1)),
            ))
        return cls(videos, page_size=int(data.get("page_size", 10)), seed=int(data.get("seed", 0)),
                   frame_rate=float(data.get("frame_rate", DEFAULT_FRAME_RATE)),
                   queries=list(data.get("queries", ())),
                   extra_channels=list(data.get("channels", ())))

    @classmethod
    def load(cls, path) -> "World":
        with open(resolve_world_path(path), "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "page_size": self.page_size,
            "seed": self.seed,
            "frame_rate": self.frame_rate,
            "queries": list(self.queries),
            "channels": list(self.extra_channels),
            "videos": [{
                "id": v.id, "channel_id": v.channel_id,
                "title_keywords": list(v.title_keywords),
                "license_cc": v.license_cc, "duration_s": v.duration_s,
                "sample_rate": v.sample_rate, "channels": v.channels, "audio_seed": v.audio_seed,
                "subtitle_tracks": [{
                    "language": t.language, "kind": t.kind.value,
                    "cues": [{"start": c.start, "end": c.end, "text": c.text} for c in t.cues],
                } for t in v.subtitle_tracks],
                "spoken_text": list(v.spoken_text),
                "cue_corruption": list(v.cue_corruption),
            } for v in self.videos],
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=1) + "\n",
                              encoding="utf-8")

    # -- text encoding -----------------------------------------------------

    def encode(self, text: str) -> List[int]:
        return [self._symbol.get(ch, UNKNOWN) for ch in normalize_text(text)]


WORLDS_DIR = Path(__file__).resolve().parent.parent / "worlds"


def bundled_worlds() -> List[str]:
    return sorted(p.stem for p in WORLDS_DIR.glob("*.json"))


def resolve_world_path(path) -> Path:
    """A file path, or the name of a bundled world such as ``demo12``."""
    p = Path(path)
    if p.exists() or p.suffix:
        return p
    bundled = WORLDS_DIR / f"{p.name}.json"
    return bundled if bundled.exists() else p


def normalize_text(text: str) -> str:
    return " ".join(text.casefold().split())


def _token(offset: int, salt: str) -> str:
    raw = f"{offset}:{hashlib.sha1(salt.encode('utf-8')).hexdigest()[:8]}"
    return base64.urlsafe_b64encode(raw.encode("ascii")).decode("ascii")


def _offset(token: Optional[str], salt: str) -> int:
    if token is None:
        return 0
    try:
        offset, check = base64.urlsafe_b64decode(token.encode("ascii")).decode("ascii").split(":")
        offset = int(offset)
    except (ValueError, UnicodeDecodeError):
        raise ValidationError(f"malformed continuation token {token!r}") from None
    if _token(offset, salt) != token or offset < 0:
        raise ValidationError("continuation token does not belong to this listing")
    return offset


class SimPlatform:
    """Serves a ``World``.  Read-only after construction, so safe to share across threads.

    ``fault`` is called as ``fault(operation, args)`` before every request and
    may raise ``PlatformError`` to simulate outages.
    """

    def __init__(self, world: World, fault: Optional[Callable[[str, tuple], None]] = None):
        self.world = world
        self.fault = fault

    @classmethod
    def from_file(cls, path, **kwargs) -> "SimPlatform":
        return cls(World.load(path), **kwargs)

    def _check(self, op: str, *args):
        if self.fault is not None:
            self.fault(op, args)

    def _video(self, video_id: str) -> VideoSpec:
        try:
            return self.world.by_id[video_id]
        except KeyError:
            raise VideoNotFoundError(f"unknown video {video_id!r}") from None

    def _page(self, ids: Sequence[str], continuation: Optional[str], salt: str) -> SearchPage:
        start = _offset(continuation, salt)
        end = start + self.world.page_size
        nxt = _token(end, salt) if end < len(ids) else None
        return SearchPage(tuple(ids[start:end]), nxt)

    # -- listings ------------------------------------------------------------

    def matches(self, query: SearchQuery) -> List[str]:
        """Full ranked result list for ``query`` (what paging walks through)."""
        kw = query.keyword.casefold()
        scored = []
        for v in self.world.videos:
            hits = sum(1 for t in v.title_keywords if t.casefold() == kw)
            if not hits:
                continue
            if query.require_cc_license and not v.license_cc:
                continue
            if query.require_subtitles and not v.subtitle_tracks:
                continue
            scored.append((-hits, v.id))
        scored.sort()
        return [vid for _, vid in scored]

    def search(self, query: SearchQuery, continuation: Optional[str] = None) -> SearchPage:
        self._check("search", query, continuation)
        salt = f"search|{query.keyword.casefold()}|{query.require_subtitles}|{query.require_cc_license}"
        return self._page(self.matches(query), continuation, salt)

    def channel_videos(self, channel_id: str, continuation: Optional[str] = None) -> SearchPage:
        self._check("channel_videos", channel_id, continuation)
        try:
            ids = self.world.by_channel[channel_id]
        except KeyError:
            raise VideoNotFoundError(f"unknown channel {channel_id!r}") from None
        return self._page(ids, continuation, f"channel|{channel_id}")

    # -- per-video lookups ---------------------------------------------------

    def video_metadata(self, video_id: str) -> VideoRecord:
        self._check("video_metadata", video_id)
        return self._video(video_id).record()

    def media(self, video_id: str) -> RawMedia:
        """Seeded noise plus two tones, int16, at the video's native rate and channel count."""
        self._check("media", video_id)
        v = self._video(video_id)
        n = int(round(v.duration_s * v.sample_rate))
        rng = np.random.default_rng([self.world.seed, v.audio_seed])
        t = np.arange(n, dtype=np.float64) / v.sample_rate
        f1, f2 = rng.uniform(110.0, 440.0), rng.uniform(440.0, 1760.0)
        base = 0.25 * np.sin(2 * np.pi * f1 * t) + 0.1 * np.sin(2 * np.pi * f2 * t)
        chans = [base + 0.02 * rng.standard_normal(n) for _ in range(v.channels)]
        pcm = np.clip(np.rint(np.stack(chans, axis=1) * 32767.0), -32768, 32767).astype(np.int16)
        return RawMedia(pcm, v.sample_rate)

    def subtitle(self, video_id: str, language: str, kind: SubtitleKind) -> str:
        self._check("subtitle", video_id, language, kind)
        v = self._video(video_id)
        kind = SubtitleKind(kind)
        for t in v.subtitle_tracks:
            if t.language == language and t.kind is kind:
                return render_subtitle(t.cues)
        raise VideoNotFoundError(f"{video_id} has no {kind.value} subtitle in {language!r}")

    # -- alignment stand-in ------------------------------------------------

    def encode(self, text: str) -> List[int]:
        return self.world.encode(text)

    @property
    def vocabulary(self) -> List[str]:
        return list(self.world.vocabulary)

    def cue_duration(self, v: VideoSpec, cue_index: int) -> float:
        for t in v.subtitle_tracks:
            if cue_index < len(t.cues):
                return t.cues[cue_index].duration
        # untimed speech: assume a brisk 12 characters per second
        return max(len(v.spoken_text[cue_index]), 1) / 12.0

    def posteriors(self, video_id: str, cue_index: int, corruption: Optional[float] = None,
                   seed: int = 0) -> np.ndarray:
        """Frame x symbol posteriors peaked on what was actually said during the cue.

        With ``corruption`` c, each frame is independently replaced by a uniform
        row with probability c; c=0 gives a clean peaked matrix, c=1 all-uniform.
        """
        self._check("posteriors", video_id, cue_index)
        v = self._video(video_id)
        if not 0 <= cue_index < len(v.spoken_text):
            raise VideoNotFoundError(f"{video_id} has no spoken segment {cue_index}")
        if corruption is None:
            corruption = v.cue_corruption[cue_index] if cue_index < len(v.cue_corruption) else 0.0
        if not 0.0 <= corruption <= 1.0:
            raise ValidationError(f"corruption must be in [0, 1], got {corruption}")
        labels = self.world.encode(v.spoken_text[cue_index])
        frames = int(round(self.cue_duration(v, cue_index) * self.world.frame_rate))
        rng = np.random.default_rng([self.world.seed, v.audio_seed, cue_index, seed])
        return synth_posteriors(labels, len(self.world.vocabulary), frames, corruption, rng)


def peaked_path(labels: Sequence[int], frames: int) -> List[int]:
    """A frame-level symbol path of length >= ``frames`` that CTC-collapses to ``labels``."""
    tokens: List[int] = []
    for i, lab in enumerate(labels):
        if i and labels[i - 1] == lab:
            tokens.append(BLANK)
        tokens.append(lab)
    if not tokens:
        tokens = [BLANK]
    total = max(frames, len(tokens))
    share, extra = divmod(total, len(tokens))
    path: List[int] = []
    for i, tok in enumerate(tokens):
        path.extend([tok] * (share + (1 if i < extra else 0)))
    return path


def synth_posteriors(labels: Sequence[int], vocab_size: int, frames: int, corruption: float,
                     rng: np.random.Generator) -> np.ndarray:
    path = peaked_path(labels, frames)
    T = len(path)
    off = (1.0 - PEAK_PROBABILITY) / (vocab_size - 1)
    post = np.full((T, vocab_size), off)
    post[np.arange(T), path] = PEAK_PROBABILITY
    if corruption > 0:
        noisy = rng.random(T) < corruption
        post[noisy] = 1.0 / vocab_size
    # renormalize to absorb rounding so rows sum to 1 to machine precision
    post /= post.sum(axis=1, keepdims=True)
    return post


# -- world generation -----------------------------------------------------

_LEXICON = {
    "en": "river music garden history science morning travel language market winter "
          "engine family forest kitchen island story".split(),
    "es": "ciudad música jardín historia ciencia mañana viaje idioma mercado invierno".split(),
    "de": "stadt musik garten geschichte wissenschaft morgen reise sprache markt winter".split(),
    "ru": "город музыка сад история наука утро путешествие язык рынок зима".split(),
    "is": "borg tónlist garður saga vísindi morgunn ferðalag tungumál markaður vetur".split(),
    "el": "πόλη μουσική κήπος ιστορία επιστήμη πρωί ταξίδι γλώσσα αγορά χειμώνας".split(),
    "hi": "शहर संगीत बगीचा इतिहास विज्ञान सुबह यात्रा भाषा बाजार सर्दी".split(),
    "ja": "まち おんがく にわ れきし かがく あさ たび ことば いちば ふゆ".split(),
}

# subtitle situations cycled through first so every small world covers them all
_TRACK_LAYOUTS = [
    ("manual",),
    ("automatic",),
    ("manual", "automatic"),
    ("manual", "manual*"),
    (),
    ("automatic", "automatic"),
    ("manual", "automatic*"),
    ("manual",),
    ("automatic",),
]


def _sentence(rng: random.Random, lang: str, n_words: int) -> str:
    return " ".join(rng.choice(_LEXICON[lang]) for _ in range(n_words))


def generate_world(n_videos: int, seed: int = 0, page_size: int = 10,
                   videos_per_channel: int = 5, n_queries: int = 6,
                   sample_rates: Sequence[int] = (8000, 16000, 44100, 48000),
                   max_duration: float = 40.0) -> World:
    """Build a reproducible random world covering every subtitle situation."""
    rng = random.Random(seed)
    langs = sorted(_LEXICON)
    n_channels = max(1, math.ceil(n_videos / videos_per_channel))
    channel_lang = {f"c{i:03d}": rng.choice(langs) for i in range(n_channels)}
    channel_cc = {c: rng.random() < 0.8 for c in channel_lang}
    channel_ids = sorted(channel_lang)
    topic_pool = sorted({w for words in _LEXICON.values() for w in words})
    videos = []
    for i in range(n_videos):
        channel = channel_ids[i % n_channels] if i < n_channels else rng.choice(channel_ids)
        lang = channel_lang[channel]
        other = rng.choice([l for l in langs if l != lang])
        layout = _TRACK_LAYOUTS[i] if i < len(_TRACK_LAYOUTS) else rng.choice(_TRACK_LAYOUTS)
        duration = round(rng.uniform(6.0, max_duration), 3)
        n_cues = rng.randint(2, 6)
        # lay cues out left to right inside the video
        bounds = sorted(round(rng.uniform(0.0, duration), 3) for _ in range(2 * n_cues))
        spans = [(bounds[2 * k], bounds[2 * k + 1]) for k in range(n_cues)
                 if bounds[2 * k + 1] - bounds[2 * k] >= 0.3]
        spoken = [_sentence(rng, lang, max(1, int((b - a) * 1.2))) for a, b in spans]
        corruption = [rng.choice((0.5, 0.8, 1.0)) if rng.random() < 0.15 else 0.0 for _ in spans]
        tracks = []
        for slot in layout:
            kind = slot.rstrip("*")
            tlang = other if slot.endswith("*") else lang
            cues = []
            for (a, b), said in zip(spans, spoken):
                if tlang != lang:
                    text = _sentence(rng, tlang, len(said.split()))
                elif kind == "manual" and rng.random() < 0.1:
                    text = "[music]"
                elif kind == "automatic":
                    words = [w for w in said.split() if rng.random() > 0.15] or said.split()[:1]
                    text = " ".join(words).lower()
                else:
                    text = said
                cues.append(Cue(a, b, text))
            tracks.append(TrackSpec(tlang, SubtitleKind(kind), tuple(cues)))
        own = _LEXICON[lang]
        title = [rng.choice(own) for _ in range(rng.randint(2, 4))]
        if rng.random() < 0.3:
            title.append(rng.choice(topic_pool))
        videos.append(VideoSpec(
            id=f"v{i:04d}", channel_id=channel, title_keywords=tuple(title),
            license_cc=channel_cc[channel] if rng.random() < 0.9 else not channel_cc[channel],
            duration_s=duration, subtitle_tracks=tuple(tracks), spoken_text=tuple(spoken),
            cue_corruption=tuple(corruption), audio_seed=rng.randrange(2 ** 31),
            sample_rate=rng.choice(list(sample_rates)), channels=rng.choice((1, 2)),
        ))
    # seed keywords are drawn from real titles so demo runs discover something
    title_words = sorted({w for v in videos for w in v.title_keywords})
    queries = sorted(rng.sample(title_words, min(n_queries, len(title_words))))
    return World(videos, page_size=page_size, seed=seed, queries=queries,
                 extra_channels=[f"c{n_channels:03d}"])
