"""Offline checks over a coordinator event log."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .core import Event


@dataclass
class AuditReport:
    violations: List[str] = field(default_factory=list)
    acquisitions: Counter = field(default_factory=Counter)
    completed: set = field(default_factory=set)

    @property
    def ok(self) -> bool:
        return not self.violations


def audit_events(events: Iterable[Event]) -> AuditReport:
    """Replay the log and flag any instant with two unexpired leases on one resource.

    Also rejects transitions the state machine does not allow, so a log that
    passes describes a legal history.
    """
    report = AuditReport()
    state: Dict[str, str] = {}
    lease: Dict[str, Optional[Tuple[str, float]]] = {}
    for ev in sorted(events, key=lambda e: e.seq):
        rid = ev.resource_id
        cur = state.get(rid)
        if ev.op == "add":
            if cur is not None:
                report.violations.append(f"{rid}: added twice")
            state[rid] = "not_started"
            lease[rid] = None
        elif ev.op == "acquire":
            held = lease.get(rid)
            if held is not None and held[1] >= ev.at:
                report.violations.append(
                    f"{rid}: acquired by {ev.worker_id} at {ev.at} while {held[0]} "
                    f"holds a lease until {held[1]}")
            if cur != "not_started":
                report.violations.append(f"{rid}: acquire from state {cur}")
            state[rid] = "in_progress"
            lease[rid] = (ev.worker_id, ev.expires_at)
            report.acquisitions[rid] += 1
        elif ev.op == "release":
            held = lease.get(rid)
            if cur != "in_progress" or held is None:
                report.violations.append(f"{rid}: release from state {cur}")
            elif held[1] >= ev.at:
                report.violations.append(f"{rid}: released before its lease expired")
            state[rid] = "not_started"
            lease[rid] = None
        elif ev.op == "complete":
            if cur != "in_progress":
                report.violations.append(f"{rid}: complete from state {cur}")
            state[rid] = "done"
            lease[rid] = None
            report.completed.add(rid)
        else:
            report.violations.append(f"{rid}: unknown op {ev.op}")
    return report
