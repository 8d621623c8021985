"""Resource registry with leased dispatch.

Every keyword, channel and video the crawl touches is a ``Resource`` that
moves NotStarted -> InProgress -> Done.  Workers lease resources through
``acquire_next``; a lease that is not completed before it expires sends the
resource back to NotStarted so another worker can pick it up.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import logging
import threading
import time
import uuid
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Tuple

from ..errors import InvalidStateError, NotFoundError, StaleLeaseError, ValidationError

log = logging.getLogger(__name__)

DEFAULT_LEASE_SECONDS = 300.0


class ResourceKind(str, enum.Enum):
    KEYWORD = "keyword"
    CHANNEL = "channel"
    VIDEO = "video"


class ResourceState(str, enum.Enum):
    NOT_STARTED = "not_started"
    IN_PROGRESS = "in_progress"
    DONE = "done"


@dataclass(frozen=True)
class Lease:
    worker_id: str
    expires_at: float


@dataclass(frozen=True)
class Resource:
    id: str
    kind: ResourceKind
    payload: str
    state: ResourceState = ResourceState.NOT_STARTED
    lease: Optional[Lease] = None
    result: Optional[str] = None
    seq: int = 0
    completed_by: Optional[str] = None

    def to_wire(self) -> dict:
        # lease timestamps are monotonic and process-local; keep them off the wire
        return {
            "id": self.id,
            "kind": self.kind.value,
            "payload": self.payload,
            "state": self.state.value,
            "worker_id": self.lease.worker_id if self.lease else None,
            "result": self.result,
        }


@dataclass(frozen=True)
class LeaseConfig:
    duration: float = DEFAULT_LEASE_SECONDS
    clock: Callable[[], float] = time.monotonic

    def __post_init__(self):
        if not self.duration > 0:
            raise ValidationError("lease duration must be > 0")


@dataclass(frozen=True)
class Event:
    """One applied transition, as recorded in the audit log."""

    seq: int
    at: float
    op: str  # add | acquire | complete | release
    resource_id: str
    worker_id: Optional[str] = None
    expires_at: Optional[float] = None


def _coerce_kind(kind) -> ResourceKind:
    try:
        return ResourceKind(kind)
    except ValueError:
        raise ValidationError(f"unknown resource kind {kind!r}") from None


class Coordinator:
    """Thread-safe lease coordinator.

    All mutations happen under one lock, so each operation is atomic and
    readers never see a half-applied transition.  ``store`` receives every
    applied event for persistence; ``audit=True`` additionally keeps the
    full event log in memory (used by the safety audit).
    """

    def __init__(self, store=None, lease: Optional[LeaseConfig] = None,
                 audit: bool = False, auto_expire: bool = True):
        from .store import MemoryStore

        self.lease = lease or LeaseConfig()
        self.store = store if store is not None else MemoryStore()
        self.auto_expire = auto_expire
        self.events: Optional[List[Event]] = [] if audit else None
        self._lock = threading.RLock()
        self._resources: Dict[str, Resource] = {}
        self._by_key: Dict[Tuple[ResourceKind, str], str] = {}
        # per-kind min-heap of (seq, id) for NotStarted resources; stale entries skipped lazily
        self._ready: Dict[ResourceKind, list] = {k: [] for k in ResourceKind}
        self._leased: set = set()
        self._seq = itertools.count()
        self._event_seq = itertools.count()
        self._restore()

    # -- persistence -----------------------------------------------------

    def _restore(self):
        now = self.lease.clock()
        last_seq = -1
        for res in self.store.load():
            if res.state is ResourceState.IN_PROGRESS:
                # monotonic deadlines don't survive a restart; grant a fresh full lease
                res = replace(res, lease=Lease(res.lease.worker_id, now + self.lease.duration))
            self._index(res)
            last_seq = max(last_seq, res.seq)
        self._seq = itertools.count(last_seq + 1)

    def _index(self, res: Resource):
        self._resources[res.id] = res
        self._by_key[(res.kind, res.payload)] = res.id
        if res.state is ResourceState.NOT_STARTED:
            heapq.heappush(self._ready[res.kind], (res.seq, res.id))
        elif res.state is ResourceState.IN_PROGRESS:
            self._leased.add(res.id)

    def _apply(self, res: Resource, op: str, at: float):
        self._resources[res.id] = res
        if res.state is ResourceState.IN_PROGRESS:
            self._leased.add(res.id)
        else:
            self._leased.discard(res.id)
        self.store.append(op, res)
        if self.events is not None:
            self.events.append(Event(
                next(self._event_seq), at, op, res.id,
                res.lease.worker_id if res.lease else None,
                res.lease.expires_at if res.lease else None,
            ))

    # -- operations ------------------------------------------------------

    def add_resource(self, kind, payload: str) -> Tuple[str, bool]:
        """Register a resource; returns ``(id, created)``.  Idempotent per (kind, payload)."""
        kind = _coerce_kind(kind)
        if not isinstance(payload, str) or not payload:
            raise ValidationError("payload must be a non-empty string")
        with self._lock:
            existing = self._by_key.get((kind, payload))
            if existing is not None:
                return existing, False
            res = Resource(id=uuid.uuid4().hex, kind=kind, payload=payload, seq=next(self._seq))
            self._by_key[(kind, payload)] = res.id
            heapq.heappush(self._ready[kind], (res.seq, res.id))
            self._apply(res, "add", self.lease.clock())
            return res.id, True

    def acquire_next(self, kind, worker_id: str) -> Optional[Resource]:
        kind = _coerce_kind(kind)
        if not worker_id:
            raise ValidationError("worker_id must be non-empty")
        with self._lock:
            now = self.lease.clock()
            if self.auto_expire:
                self._release_expired(now)
            heap = self._ready[kind]
            while heap:
                _, rid = heapq.heappop(heap)
                res = self._resources[rid]
                if res.state is not ResourceState.NOT_STARTED:
                    continue
                res = replace(res, state=ResourceState.IN_PROGRESS,
                              lease=Lease(worker_id, now + self.lease.duration))
                self._apply(res, "acquire", now)
                return res
            return None

    def complete(self, resource_id: str, worker_id: str, result: Optional[str] = None) -> bool:
        with self._lock:
            res = self._get(resource_id)
            if res.state is ResourceState.DONE:
                # a replayed completion is a no-op; anyone else is too late
                if res.completed_by == worker_id:
                    return True
                raise StaleLeaseError(f"{resource_id} already completed by another worker")
            if res.state is ResourceState.NOT_STARTED:
                raise InvalidStateError(f"{resource_id} is not leased")
            if res.lease.worker_id != worker_id:
                raise StaleLeaseError(
                    f"{resource_id} is leased to {res.lease.worker_id}, not {worker_id}")
            now = self.lease.clock()
            done = replace(res, state=ResourceState.DONE, lease=None, result=result,
                           completed_by=worker_id)
            self._apply(done, "complete", now)
            return True

    def release_expired(self, now: Optional[float] = None) -> int:
        with self._lock:
            return self._release_expired(self.lease.clock() if now is None else now)

    def _release_expired(self, now: float) -> int:
        count = 0
        for rid in sorted(self._leased, key=lambda r: self._resources[r].seq):
            res = self._resources[rid]
            if res.lease.expires_at < now:
                released = replace(res, state=ResourceState.NOT_STARTED, lease=None)
                self._apply(released, "release", now)
                heapq.heappush(self._ready[res.kind], (res.seq, res.id))
                count += 1
        if count:
            log.info("reclaimed %d expired leases", count)
        return count

    def stats(self) -> Dict[str, Dict[str, int]]:
        with self._lock:
            out = {k.value: {s.value: 0 for s in ResourceState} for k in ResourceKind}
            for res in self._resources.values():
                out[res.kind.value][res.state.value] += 1
            return out

    # -- reads -----------------------------------------------------------

    def get(self, resource_id: str) -> Resource:
        with self._lock:
            return self._get(resource_id)

    def _get(self, resource_id: str) -> Resource:
        try:
            return self._resources[resource_id]
        except KeyError:
            raise NotFoundError(resource_id) from None

    def resources(self, kind=None) -> List[Resource]:
        with self._lock:
            items = sorted(self._resources.values(), key=lambda r: r.seq)
        if kind is not None:
            kind = _coerce_kind(kind)
            items = [r for r in items if r.kind is kind]
        return items

    def __len__(self):
        with self._lock:
            return len(self._resources)
