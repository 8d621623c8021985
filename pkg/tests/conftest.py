import json

import pytest

from corpuscrawl.platform.sim import WORLDS_DIR


class FakeClock:
    def __init__(self, now=1000.0):
        self.now = now

    def __call__(self):
        return self.now

    def advance(self, dt):
        self.now += dt


@pytest.fixture
def clock():
    return FakeClock()


def video(vid, channel="c1", keywords=("kw",), cc=True, tracks=(("en", "manual"),), duration=10.0,
          spoken=("hello world", "good morning"), rate=16000, channels=1, seed=1):
    """Compact world-video record; two cues by default."""
    cues = [{"start": 1.0, "end": 3.0, "text": spoken[0]},
            {"start": 4.0, "end": 6.5, "text": spoken[1]}][:len(spoken)]
    return {
        "id": vid, "channel_id": channel, "title_keywords": list(keywords), "license_cc": cc,
        "duration_s": duration, "sample_rate": rate, "channels": channels, "audio_seed": seed,
        "subtitle_tracks": [{"language": lang, "kind": kind, "cues": cues} for lang, kind in tracks],
        "spoken_text": list(spoken), "cue_corruption": [0.0] * len(spoken),
    }


def write_world(path, videos, **extra):
    data = {"page_size": 10, "seed": 0, "videos": videos}
    data.update(extra)
    path.write_text(json.dumps(data, ensure_ascii=False), encoding="utf-8")
    return path


@pytest.fixture
def bundled():
    return lambda name: WORLDS_DIR / f"{name}.json"
