import json
import threading

import pytest
from hypothesis import given, settings, strategies as st

from corpuscrawl.coordinator import (Coordinator, CoordinatorClient, JournalStore, LeaseConfig,
                                     ResourceKind, ResourceState, ServerThread, audit_events)
from corpuscrawl.coordinator.core import Event
from corpuscrawl.errors import InvalidStateError, NotFoundError, StaleLeaseError, ValidationError

K, C, V = ResourceKind.KEYWORD, ResourceKind.CHANNEL, ResourceKind.VIDEO


def make(clock, duration=10.0, **kw):
    return Coordinator(lease=LeaseConfig(duration, clock), **kw)


def test_add_is_idempotent(clock):
    c = make(clock)
    a, created_a = c.add_resource(K, "alpha")
    b, created_b = c.add_resource(K, "alpha")
    assert a == b and created_a and not created_b
    assert len(c) == 1


def test_uniqueness_is_per_kind(clock):
    c = make(clock)
    v, _ = c.add_resource(V, "v1")
    ch, _ = c.add_resource(C, "v1")
    assert v != ch and len(c) == 2


def test_thousand_adds_counted(clock):
    c = make(clock)
    for i in range(1000):
        c.add_resource(V, f"v{i}")
    assert c.stats()["video"] == {"not_started": 1000, "in_progress": 0, "done": 0}


@pytest.mark.parametrize("payload", ["", None])
def test_empty_payload_rejected(clock, payload):
    with pytest.raises(ValidationError):
        make(clock).add_resource(K, payload)


def test_unknown_kind_rejected(clock):
    with pytest.raises(ValidationError):
        make(clock).add_resource("playlist", "x")


def test_lease_duration_must_be_positive():
    with pytest.raises(ValidationError):
        LeaseConfig(0)


def test_acquire_empty_returns_none(clock):
    assert make(clock).acquire_next(K, "w") is None


def test_acquire_requires_worker(clock):
    with pytest.raises(ValidationError):
        make(clock).acquire_next(K, "")


def test_fifo_and_kind_isolation(clock):
    c = make(clock)
    for p in ("b", "a", "c"):
        c.add_resource(K, p)
    c.add_resource(V, "v")
    assert [c.acquire_next(K, "w").payload for _ in range(3)] == ["b", "a", "c"]
    assert c.acquire_next(K, "w") is None
    assert c.acquire_next(V, "w").payload == "v"


def test_lease_fields(clock):
    c = make(clock, duration=7.0)
    c.add_resource(K, "x")
    res = c.acquire_next(K, "w1")
    assert res.state is ResourceState.IN_PROGRESS
    assert res.lease.worker_id == "w1" and res.lease.expires_at == clock.now + 7.0


def test_two_workers_race_for_one_resource(clock):
    c = make(clock)
    c.add_resource(V, "only")
    barrier = threading.Barrier(2)
    got = []

    def grab(w):
        barrier.wait()
        got.append(c.acquire_next(V, w))

    threads = [threading.Thread(target=grab, args=(w,)) for w in ("w1", "w2")]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(r is None for r in got) == [False, True]


def test_complete_transitions(clock):
    c = make(clock)
    rid, _ = c.add_resource(K, "x")
    c.acquire_next(K, "w1")
    assert c.complete(rid, "w1", "3 videos")
    res = c.get(rid)
    assert res.state is ResourceState.DONE and res.lease is None and res.result == "3 videos"


def test_complete_twice_is_noop(clock):
    c = make(clock)
    rid, _ = c.add_resource(K, "x")
    c.acquire_next(K, "w1")
    c.complete(rid, "w1", "r")
    before = (c.get(rid), c.stats())
    assert c.complete(rid, "w1", "r")
    assert (c.get(rid), c.stats()) == before


def test_complete_errors(clock):
    c = make(clock)
    rid, _ = c.add_resource(K, "x")
    with pytest.raises(InvalidStateError):
        c.complete(rid, "w1")
    c.acquire_next(K, "w1")
    with pytest.raises(StaleLeaseError):
        c.complete(rid, "w2")
    c.complete(rid, "w1")
    with pytest.raises(StaleLeaseError):
        c.complete(rid, "w2")
    with pytest.raises(NotFoundError):
        c.complete("nope", "w1")


def test_expired_lease_reacquired_then_old_holder_is_stale(clock):
    c = make(clock, duration=5.0)
    rid, _ = c.add_resource(V, "v")
    c.acquire_next(V, "slow")
    clock.advance(6.0)
    assert c.acquire_next(V, "fast").id == rid
    with pytest.raises(StaleLeaseError):
        c.complete(rid, "slow")
    c.complete(rid, "fast")


def test_release_expired_no_leases(clock):
    assert make(clock).release_expired() == 0


def test_release_expired_boundary(clock):
    c = make(clock, duration=10.0, auto_expire=False)
    old, _ = c.add_resource(V, "old")
    c.acquire_next(V, "w")
    clock.advance(5.0)
    live, _ = c.add_resource(V, "live")
    c.acquire_next(V, "w")
    # old expires at t0+10, live at t0+15; at exactly t0+10 nothing is strictly past due
    assert c.release_expired(clock.now + 5.0) == 0
    assert c.release_expired(clock.now + 5.0 + 1e-6) == 1
    assert c.get(old).state is ResourceState.NOT_STARTED and c.get(old).lease is None
    assert c.get(live).state is ResourceState.IN_PROGRESS
    assert c.get(live).lease.expires_at == clock.now + 10.0


def test_released_resource_keeps_fifo_position(clock):
    c = make(clock, duration=1.0)
    for p in ("a", "b"):
        c.add_resource(K, p)
    c.acquire_next(K, "w")
    clock.advance(2.0)
    assert c.acquire_next(K, "w").payload == "a"


def test_stats_is_pure_and_conserves(clock):
    c = make(clock)
    for i in range(5):
        c.add_resource(V, f"v{i}")
    r = c.acquire_next(V, "w")
    c.acquire_next(V, "w")
    c.complete(r.id, "w")
    s1 = c.stats()
    assert s1 == c.stats()
    assert sum(s1["video"].values()) == 5
    assert s1["video"] == {"not_started": 3, "in_progress": 1, "done": 1}


# -- randomized schedule vs. a sequential model ----------------------------------

class Model:
    """Plain-list reimplementation of the lease rules."""

    def __init__(self, duration):
        self.duration = duration
        self.items = []  # dicts in insertion order

    def add(self, kind, payload):
        for it in self.items:
            if it["kind"] == kind and it["payload"] == payload:
                return False
        self.items.append({"kind": kind, "payload": payload, "state": "not_started",
                           "worker": None, "expires": None, "by": None})
        return True

    def expire(self, now):
        n = 0
        for it in self.items:
            if it["state"] == "in_progress" and it["expires"] < now:
                it.update(state="not_started", worker=None, expires=None)
                n += 1
        return n

    def acquire(self, kind, worker, now):
        self.expire(now)
        for it in self.items:
            if it["kind"] == kind and it["state"] == "not_started":
                it.update(state="in_progress", worker=worker, expires=now + self.duration)
                return it["payload"]
        return None

    def complete(self, idx, worker):
        it = self.items[idx]
        if it["state"] == "done":
            return "ok" if it["by"] == worker else "stale"
        if it["state"] == "not_started":
            return "invalid"
        if it["worker"] != worker:
            return "stale"
        it.update(state="done", worker=None, expires=None, by=worker)
        return "ok"


ops = st.lists(st.one_of(
    st.tuples(st.just("add"), st.sampled_from([K, V]), st.sampled_from("abcdef")),
    st.tuples(st.just("acquire"), st.sampled_from([K, V]), st.sampled_from(["w1", "w2", "w3"])),
    st.tuples(st.just("complete"), st.integers(0, 11), st.sampled_from(["w1", "w2", "w3"])),
    st.tuples(st.just("tick"), st.sampled_from([0.5, 1.0, 3.0, 7.0])),
    st.tuples(st.just("expire")),
), max_size=60)


@settings(max_examples=200, deadline=None)
@given(ops)
def test_random_schedule_matches_sequential_model(schedule):
    from conftest import FakeClock
    clock = FakeClock()
    c = make(clock, duration=5.0, audit=True)
    m = Model(5.0)
    ids = []
    for op in schedule:
        if op[0] == "add":
            rid, created = c.add_resource(op[1], op[2])
            assert created == m.add(op[1], op[2])
            if created:
                ids.append(rid)
        elif op[0] == "acquire":
            res = c.acquire_next(op[1], op[2])
            assert (res.payload if res else None) == m.acquire(op[1], op[2], clock.now)
        elif op[0] == "complete":
            if op[1] >= len(ids):
                continue
            expected = m.complete(op[1], op[2])
            try:
                c.complete(ids[op[1]], op[2])
                got = "ok"
            except StaleLeaseError:
                got = "stale"
            except InvalidStateError:
                got = "invalid"
            assert got == expected
        elif op[0] == "tick":
            clock.advance(op[1])
        else:
            assert c.release_expired() == m.expire(clock.now)
    final = [(r.kind, r.payload, r.state.value, r.lease.worker_id if r.lease else None)
             for r in c.resources()]
    assert final == [(it["kind"], it["payload"], it["state"], it["worker"]) for it in m.items]
    for r in c.resources():
        assert (r.state is ResourceState.IN_PROGRESS) == (r.lease is not None)
    assert audit_events(c.events).ok


# -- audit --------------------------------------------------------------------------

def test_audit_flags_overlapping_leases():
    events = [Event(0, 0.0, "add", "r"), Event(1, 1.0, "acquire", "r", "w1", 10.0),
              Event(2, 2.0, "acquire", "r", "w2", 12.0)]
    report = audit_events(events)
    assert not report.ok and any("holds a lease" in v for v in report.violations)


def test_audit_flags_early_release_and_bad_transitions():
    events = [Event(0, 0.0, "add", "r"), Event(1, 1.0, "acquire", "r", "w1", 10.0),
              Event(2, 5.0, "release", "r"), Event(3, 6.0, "complete", "r")]
    report = audit_events(events)
    assert len(report.violations) == 2


def test_audit_clean_history(clock):
    c = make(clock, duration=2.0, audit=True)
    rid, _ = c.add_resource(V, "v")
    c.acquire_next(V, "w1")
    clock.advance(3.0)
    c.acquire_next(V, "w2")
    c.complete(rid, "w2")
    report = audit_events(c.events)
    assert report.ok and report.acquisitions[rid] == 2 and report.completed == {rid}


# -- journal --------------------------------------------------------------------------

def test_journal_recovery(tmp_path, clock):
    path = tmp_path / "state.journal"
    c = Coordinator(store=JournalStore(path), lease=LeaseConfig(10.0, clock))
    done, _ = c.add_resource(K, "done")
    busy, _ = c.add_resource(K, "busy")
    idle, _ = c.add_resource(K, "idle")
    c.acquire_next(K, "w1")
    c.complete(done, "w1", "ok")
    c.acquire_next(K, "w2")
    c.store.close()

    clock.advance(1000.0)
    r = Coordinator(store=JournalStore(path), lease=LeaseConfig(10.0, clock))
    assert r.get(done).state is ResourceState.DONE and r.get(done).result == "ok"
    assert r.get(busy).lease.worker_id == "w2"
    # restored leases get a full fresh term
    assert r.get(busy).lease.expires_at == clock.now + 10.0
    assert r.acquire_next(K, "w3").id == idle
    assert r.add_resource(K, "done") == (done, False)
    new, created = r.add_resource(K, "later")
    assert created and r.get(new).seq > r.get(idle).seq


def test_journal_skips_torn_tail(tmp_path, clock):
    path = tmp_path / "state.journal"
    c = Coordinator(store=JournalStore(path), lease=LeaseConfig(10.0, clock))
    c.add_resource(V, "a")
    c.add_resource(V, "b")
    c.store.close()
    with open(path, "a", encoding="utf-8") as fh:
        fh.write('{"op": "add", "resource": {"id": "tr')
    r = Coordinator(store=JournalStore(path), lease=LeaseConfig(10.0, clock))
    assert [x.payload for x in r.resources()] == ["a", "b"]


def test_journal_compacts_to_snapshot(tmp_path, clock):
    path = tmp_path / "state.journal"
    c = Coordinator(store=JournalStore(path, compact_every=5), lease=LeaseConfig(10.0, clock))
    for i in range(12):
        c.add_resource(V, f"v{i}")
    c.store.close()
    lines = path.read_text(encoding="utf-8").splitlines()
    assert json.loads(lines[0])["op"] == "snapshot" and len(lines) < 12
    r = Coordinator(store=JournalStore(path), lease=LeaseConfig(10.0, clock))
    assert len(r) == 12


# -- HTTP surface ---------------------------------------------------------------------

def test_http_round_trip(clock):
    c = make(clock)
    with ServerThread(c) as srv:
        client = CoordinatorClient(srv.url)
        rid, created = client.add_resource(K, "héllo")
        assert created and client.add_resource(K, "héllo") == (rid, False)
        res = client.acquire_next(K, "w1")
        assert res.id == rid and res.payload == "héllo" and res.state is ResourceState.IN_PROGRESS
        assert client.acquire_next(K, "w2") is None
        with pytest.raises(StaleLeaseError):
            client.complete(rid, "w2")
        assert client.complete(rid, "w1", "done")
        assert client.stats()["keyword"] == {"not_started": 0, "in_progress": 0, "done": 1}
        other, _ = client.add_resource(V, "v")
        with pytest.raises(InvalidStateError):
            client.complete(other, "w1")
        with pytest.raises(NotFoundError):
            client.complete("missing", "w1")
        with pytest.raises(ValidationError):
            client.add_resource(K, "")


def test_http_wire_has_no_timestamps(clock):
    import urllib.request
    c = make(clock)
    c.add_resource(V, "v")
    with ServerThread(c) as srv:
        req = urllib.request.Request(srv.url + "/resources/next", method="POST",
                                     data=json.dumps({"kind": "video", "worker_id": "w"}).encode())
        body = json.loads(urllib.request.urlopen(req).read())
    assert set(body["resource"]) == {"id", "kind", "payload", "state", "worker_id", "result"}
