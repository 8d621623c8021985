"""Persistence backends for the coordinator.

The coordinator keeps its working set in memory and hands every applied
transition to a store.  ``JournalStore`` writes one JSON line per transition
(the full post-transition resource, so replay is last-write-wins) and
periodically compacts the file into a single snapshot record.
"""
from __future__ import annotations

import json
import logging
import os
import threading
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from .core import Lease, Resource, ResourceKind, ResourceState

log = logging.getLogger(__name__)


def resource_to_record(res: Resource) -> dict:
    return {
        "id": res.id,
        "kind": res.kind.value,
        "payload": res.payload,
        "state": res.state.value,
        "lease": [res.lease.worker_id, res.lease.expires_at] if res.lease else None,
        "result": res.result,
        "seq": res.seq,
        "completed_by": res.completed_by,
    }


def resource_from_record(rec: dict) -> Resource:
    lease = rec.get("lease")
    return Resource(
        id=rec["id"],
        kind=ResourceKind(rec["kind"]),
        payload=rec["payload"],
        state=ResourceState(rec["state"]),
        lease=Lease(lease[0], float(lease[1])) if lease else None,
        result=rec.get("result"),
        seq=int(rec["seq"]),
        completed_by=rec.get("completed_by"),
    )


class MemoryStore:
    """No durability; state lives only in the coordinator."""

    def load(self) -> Iterable[Resource]:
        return ()

    def append(self, op: str, res: Resource) -> None:
        pass

    def close(self) -> None:
        pass


class JournalStore:
    def __init__(self, path, compact_every: int = 50_000, fsync: bool = False):
        self.path = Path(path)
        self.compact_every = compact_every
        self.fsync = fsync
        self._lock = threading.Lock()
        self._state: Dict[str, Resource] = {}
        self._since_compact = 0
        self._fh = None

    def load(self) -> List[Resource]:
        self._state = {}
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        rec = json.loads(line)
                    except json.JSONDecodeError:
                        # torn tail write from a crash; everything before it is intact
                        log.warning("%s:%d: ignoring unreadable journal line", self.path, lineno)
                        continue
                    if rec.get("op") == "snapshot":
                        self._state = {}
                        for r in rec["resources"]:
                            res = resource_from_record(r)
                            self._state[res.id] = res
                    else:
                        res = resource_from_record(rec["resource"])
                        self._state[res.id] = res
        self.compact()
        return sorted(self._state.values(), key=lambda r: r.seq)

    def append(self, op: str, res: Resource) -> None:
        line = json.dumps({"op": op, "resource": resource_to_record(res)}, ensure_ascii=False)
        with self._lock:
            self._state[res.id] = res
            fh = self._open()
            fh.write(line + "\n")
            fh.flush()
            if self.fsync:
                os.fsync(fh.fileno())
            self._since_compact += 1
            if self._since_compact >= self.compact_every:
                self._compact_locked()

    def compact(self) -> None:
        with self._lock:
            self._compact_locked()

    def _compact_locked(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        snapshot = {
            "op": "snapshot",
            "resources": [resource_to_record(r)
                          for r in sorted(self._state.values(), key=lambda r: r.seq)],
        }
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(snapshot, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.path)
        self._since_compact = 0

    def _open(self):
        if self._fh is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8")
        return self._fh

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None


def open_store(path: Optional[str]):
    return JournalStore(path) if path else MemoryStore()
