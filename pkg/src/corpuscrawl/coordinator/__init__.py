from .core import (DEFAULT_LEASE_SECONDS, Coordinator, Event, Lease, LeaseConfig, Resource,
                   ResourceKind, ResourceState)
from .store import JournalStore, MemoryStore, open_store
from .audit import AuditReport, audit_events
from .http import CoordinatorClient, ServerThread, make_server

__all__ = [
    "DEFAULT_LEASE_SECONDS", "Coordinator", "Event", "Lease", "LeaseConfig", "Resource",
    "ResourceKind", "ResourceState", "JournalStore", "MemoryStore", "open_store",
    "AuditReport", "audit_events", "CoordinatorClient", "ServerThread", "make_server",
]
