"""Expose a ``SimPlatform`` over HTTP and talk to it with ``HttpPlatform``.

Routes (all GET)::

    /search?keyword=&subtitles=0|1&cc=0|1[&continuation=]
    /videos/<id>
    /channels/<id>/videos[?continuation=]
    /media/<id>                              audio/wav, native rate and channels
    /subtitles/<id>?language=&kind=          text/vtt
    /posteriors/<id>/<cue>[?corruption=&seed=]
    /vocabulary
"""
from __future__ import annotations

import io
import json
import threading
import urllib.error
import urllib.parse
import urllib.request
import wave
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import List, Optional

import numpy as np

from ..errors import NotFoundError, PlatformError, ValidationError, VideoNotFoundError
from ..models import RawMedia, SearchPage, SearchQuery, SubtitleDescriptor, SubtitleKind, VideoRecord
from .sim import SimPlatform, normalize_text, UNKNOWN


def _record_to_json(rec: VideoRecord) -> dict:
    return {
        "id": rec.id, "channel_id": rec.channel_id, "duration_s": rec.duration_s,
        "license_cc": rec.license_cc, "title_keywords": list(rec.title_keywords),
        "subtitles": [{"language": d.language, "kind": d.kind.value} for d in rec.subtitles],
    }


def _record_from_json(d: dict) -> VideoRecord:
    return VideoRecord(d["id"], d["channel_id"], float(d["duration_s"]), bool(d["license_cc"]),
                       tuple(SubtitleDescriptor(s["language"], SubtitleKind(s["kind"]))
                             for s in d["subtitles"]),
                       tuple(d.get("title_keywords", ())))


def _page_json(page: SearchPage) -> dict:
    return {"video_ids": list(page.video_ids), "continuation": page.continuation}


def _flag(value: Optional[str]) -> bool:
    return value not in (None, "", "0", "false")


class _Handler(BaseHTTPRequestHandler):
    platform: SimPlatform = None
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        pass

    def _send(self, code: int, data: bytes, ctype: str):
        self.send_response(code)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _json(self, code: int, body):
        self._send(code, json.dumps(body, ensure_ascii=False).encode("utf-8"),
                   "application/json; charset=utf-8")

    def do_GET(self):
        url = urllib.parse.urlsplit(self.path)
        q = {k: v[-1] for k, v in urllib.parse.parse_qs(url.query).items()}
        parts = [urllib.parse.unquote(p) for p in url.path.strip("/").split("/") if p]
        p = self.platform
        try:
            if parts == ["search"]:
                query = SearchQuery(q.get("keyword", ""), _flag(q.get("subtitles")), _flag(q.get("cc")))
                return self._json(200, _page_json(p.search(query, q.get("continuation"))))
            if parts == ["vocabulary"]:
                return self._json(200, p.vocabulary)
            if len(parts) == 2 and parts[0] == "videos":
                return self._json(200, _record_to_json(p.video_metadata(parts[1])))
            if len(parts) == 3 and parts[0] == "channels" and parts[2] == "videos":
                return self._json(200, _page_json(p.channel_videos(parts[1], q.get("continuation"))))
            if len(parts) == 2 and parts[0] == "media":
                media = p.media(parts[1])
                return self._send(200, _wav(media), "audio/wav")
            if len(parts) == 2 and parts[0] == "subtitles":
                text = p.subtitle(parts[1], q.get("language", ""), SubtitleKind(q.get("kind", "manual")))
                return self._send(200, text.encode("utf-8"), "text/vtt; charset=utf-8")
            if len(parts) == 3 and parts[0] == "posteriors":
                corruption = float(q["corruption"]) if "corruption" in q else None
                mat = p.posteriors(parts[1], int(parts[2]), corruption, int(q.get("seed", 0)))
                return self._json(200, {"matrix": mat.tolist()})
            return self._json(404, {"error": "NotFound", "detail": self.path})
        except NotFoundError as exc:
            return self._json(404, {"error": type(exc).__name__, "detail": str(exc)})
        except (ValidationError, ValueError) as exc:
            return self._json(400, {"error": "ValidationError", "detail": str(exc)})
        except PlatformError as exc:
            return self._json(503, {"error": type(exc).__name__, "detail": str(exc)})


def _wav(media: RawMedia) -> bytes:
    out = io.BytesIO()
    samples = np.asarray(media.samples, dtype=np.int16)
    with wave.open(out, "wb") as wf:
        wf.setnchannels(samples.shape[1])
        wf.setsampwidth(2)
        wf.setframerate(media.sample_rate)
        wf.writeframes(samples.astype("<i2").tobytes())
    return out.getvalue()


class PlatformServer:
    def __init__(self, platform: SimPlatform, host: str = "127.0.0.1", port: int = 0):
        handler = type("PlatformHandler", (_Handler,), {"platform": platform})
        self.server = ThreadingHTTPServer((host, port), handler)
        self.server.daemon_threads = True
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        self.thread.join()


class HttpPlatform:
    """Platform adapter speaking to a mounted simulator (or anything with the same routes)."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._vocab: Optional[List[str]] = None

    def _get(self, path: str, **params) -> bytes:
        params = {k: v for k, v in params.items() if v is not None}
        url = self.base_url + urllib.parse.quote(path)
        if params:
            url += "?" + urllib.parse.urlencode(params)
        try:
            with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                return resp.read()
        except urllib.error.HTTPError as err:
            detail = err.read().decode("utf-8", "replace")
            if err.code == 404:
                raise VideoNotFoundError(detail) from None
            if err.code == 400:
                raise ValidationError(detail) from None
            raise PlatformError(f"HTTP {err.code}: {detail}") from None
        except (urllib.error.URLError, OSError) as err:
            raise PlatformError(str(err)) from None

    def _get_json(self, path: str, **params):
        return json.loads(self._get(path, **params).decode("utf-8"))

    def search(self, query: SearchQuery, continuation: Optional[str] = None) -> SearchPage:
        d = self._get_json("/search", keyword=query.keyword,
                           subtitles=int(query.require_subtitles), cc=int(query.require_cc_license),
                           continuation=continuation)
        return SearchPage(tuple(d["video_ids"]), d["continuation"])

    def video_metadata(self, video_id: str) -> VideoRecord:
        return _record_from_json(self._get_json(f"/videos/{video_id}"))

    def channel_videos(self, channel_id: str, continuation: Optional[str] = None) -> SearchPage:
        d = self._get_json(f"/channels/{channel_id}/videos", continuation=continuation)
        return SearchPage(tuple(d["video_ids"]), d["continuation"])

    def media(self, video_id: str) -> RawMedia:
        with wave.open(io.BytesIO(self._get(f"/media/{video_id}")), "rb") as wf:
            ch, rate = wf.getnchannels(), wf.getframerate()
            raw = wf.readframes(wf.getnframes())
        return RawMedia(np.frombuffer(raw, dtype="<i2").astype(np.int16).reshape(-1, ch), rate)

    def subtitle(self, video_id: str, language: str, kind: SubtitleKind) -> str:
        return self._get(f"/subtitles/{video_id}", language=language,
                         kind=SubtitleKind(kind).value).decode("utf-8")

    def posteriors(self, video_id: str, cue_index: int, corruption: Optional[float] = None,
                   seed: int = 0) -> np.ndarray:
        d = self._get_json(f"/posteriors/{video_id}/{cue_index}", corruption=corruption, seed=seed)
        return np.asarray(d["matrix"], dtype=np.float64)

    @property
    def vocabulary(self) -> List[str]:
        if self._vocab is None:
            self._vocab = self._get_json("/vocabulary")
        return list(self._vocab)

    def encode(self, text: str) -> List[int]:
        index = {ch: i for i, ch in enumerate(self.vocabulary) if i >= 2}
        return [index.get(ch, UNKNOWN) for ch in normalize_text(text)]
