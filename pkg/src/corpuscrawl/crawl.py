"""Keyword-based and channel-based discovery workers."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .coordinator.core import ResourceKind
from .errors import InvalidStateError, NotFoundError, PlatformError, StaleLeaseError
from .models import SearchQuery

log = logging.getLogger(__name__)

DEFAULT_MAX_PAGES = 10


@dataclass
class CrawlResult:
    video_ids: List[str]
    partial: bool = False
    error: Optional[str] = None


def crawl_search(platform, query: SearchQuery) -> CrawlResult:
    """Walk search result pages like scrolling down the results, up to ``query.max_pages``.

    Each page's hits are re-checked against metadata: hits that are not CC
    licensed when the query requires it are dropped; missing subtitles are
    tolerated (those videos end up unlabeled).  A platform error on page k
    returns pages 1..k-1 with ``partial`` set.
    """
    seen = set()
    out: List[str] = []
    continuation = None
    for page_no in range(query.max_pages):
        try:
            page = platform.search(query, continuation)
            kept = []
            for vid in page.video_ids:
                if vid in seen:
                    continue
                if query.require_cc_license and not platform.video_metadata(vid).license_cc:
                    log.info("dropping %s: not CC licensed", vid)
                    continue
                kept.append(vid)
        except PlatformError as exc:
            log.warning("search %r failed on page %d: %s", query.keyword, page_no + 1, exc)
            return CrawlResult(out, partial=True, error=str(exc))
        for vid in kept:
            seen.add(vid)
            out.append(vid)
        continuation = page.continuation
        if continuation is None:
            break
    return CrawlResult(out)


def extract_channel(platform, video_id: str) -> str:
    return platform.video_metadata(video_id).channel_id


def enumerate_channel(platform, channel_id: str, max_pages: Optional[int] = None) -> List[str]:
    """Every video of a channel in upload order."""
    out: List[str] = []
    seen = set()
    continuation = None
    pages = 0
    while True:
        page = platform.channel_videos(channel_id, continuation)
        pages += 1
        for vid in page.video_ids:
            if vid not in seen:
                seen.add(vid)
                out.append(vid)
        continuation = page.continuation
        if continuation is None or (max_pages is not None and pages >= max_pages):
            return out


@dataclass
class DiscoveryStats:
    keywords: int = 0
    channels: int = 0
    videos_added: int = 0
    channels_added: int = 0
    partial: int = 0
    failures: List[str] = field(default_factory=list)


_DISCOVERY_KINDS = (ResourceKind.KEYWORD, ResourceKind.CHANNEL)


def _discovery_pending(client, kinds) -> bool:
    # keywords, queued or leased, can still produce channels for us; a lease
    # on our own kind may expire and come back
    watched = {ResourceKind.KEYWORD, *kinds}
    stats = client.stats()
    return any(stats[k.value]["in_progress"] or stats[k.value]["not_started"] for k in watched)


def discovery_loop(client, platform, worker_id: str = "discovery-0",
                   kinds: Sequence[ResourceKind] = _DISCOVERY_KINDS,
                   idle_polls: int = 3, poll_interval: float = 0.05,
                   max_pages: int = DEFAULT_MAX_PAGES, require_subtitles: bool = True,
                   require_cc_license: bool = True) -> DiscoveryStats:
    """Drain Keyword and Channel resources, registering what they lead to.

    A keyword yields its search hits as Video resources and each hit's channel
    as a Channel resource; a channel yields all its videos.  The loop stops
    after ``idle_polls`` consecutive empty polls during which no Keyword or
    Channel work was pending anywhere.
    """
    stats = DiscoveryStats()
    idle = 0
    while idle < idle_polls:
        worked = False
        for kind in kinds:
            res = client.acquire_next(kind, worker_id)
            if res is None:
                continue
            worked = True
            try:
                if kind is ResourceKind.KEYWORD:
                    summary = _run_keyword(client, platform, res.payload, stats,
                                           SearchQuery(res.payload, require_subtitles,
                                                       require_cc_license, max_pages))
                else:
                    summary = _run_channel(client, platform, res.payload, stats)
            except NotFoundError as exc:
                summary = f"not found: {exc}"
            except PlatformError as exc:
                # leave the lease to expire so the resource is retried
                log.warning("%s %r failed: %s", kind.value, res.payload, exc)
                stats.failures.append(f"{kind.value}:{res.payload}")
                continue
            try:
                client.complete(res.id, worker_id, summary)
            except (StaleLeaseError, InvalidStateError) as exc:
                # our lease lapsed and someone else owns the work now; results were idempotent adds
                log.warning("late completion of %s: %s", res.payload, exc)
        if worked:
            idle = 0
        else:
            if not _discovery_pending(client, kinds):
                idle += 1
            if poll_interval:
                time.sleep(poll_interval)
    return stats


def _run_keyword(client, platform, keyword: str, stats: DiscoveryStats, query: SearchQuery) -> str:
    result = crawl_search(platform, query)
    stats.keywords += 1
    if result.partial:
        stats.partial += 1
    for vid in result.video_ids:
        _, created = client.add_resource(ResourceKind.VIDEO, vid)
        stats.videos_added += created
        _, created = client.add_resource(ResourceKind.CHANNEL, extract_channel(platform, vid))
        stats.channels_added += created
    tag = " partial" if result.partial else ""
    return f"{len(result.video_ids)} videos{tag}"


def _run_channel(client, platform, channel_id: str, stats: DiscoveryStats) -> str:
    videos = enumerate_channel(platform, channel_id)
    stats.channels += 1
    for vid in videos:
        _, created = client.add_resource(ResourceKind.VIDEO, vid)
        stats.videos_added += created
    return f"{len(videos)} videos"
