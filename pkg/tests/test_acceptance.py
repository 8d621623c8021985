"""Acceptance suite: nine end-to-end criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` (or plain ``python
tests/test_acceptance.py``) to see the summary lines.
"""
import filecmp
import itertools
import math
import random
import sys
import threading
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from corpuscrawl import cli  # noqa: E402
from corpuscrawl.audio import TARGET_RATE, normalize_audio, resampled_length  # noqa: E402
from corpuscrawl.coordinator import (Coordinator, LeaseConfig, ResourceKind,  # noqa: E402
                                     audit_events)
from corpuscrawl.crawl import discovery_loop  # noqa: E402
from corpuscrawl.curation import (ReferenceScorer, SWEEP_THRESHOLDS, UtterancePair,  # noqa: E402
                                  ctc_log_loss, duration_stats, filter_by_threshold, sample_splits,
                                  score_corpus, stats_table, text_length_stats, threshold_sweep)
from corpuscrawl.curation.stats import ROW_LABELS  # noqa: E402
from corpuscrawl.download import resolve_subtitles  # noqa: E402
from corpuscrawl.errors import StaleLeaseError  # noqa: E402
from corpuscrawl.models import RawMedia, SubtitleDescriptor, SubtitleKind  # noqa: E402
from corpuscrawl.platform import SimPlatform  # noqa: E402
from corpuscrawl.platform.sim import WORLDS_DIR  # noqa: E402


_capsys = None


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    # the summary lines should reach the terminal even without -s
    global _capsys
    _capsys = capsys
    yield
    _capsys = None


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
    with _capsys.disabled():
        print("\n" + line, flush=True)
    assert ok, line


# 1 -----------------------------------------------------------------------------------------

def test_criterion_1_coordinator_safety():
    n_workers, n_resources, crash_rate = 8, 1000, 0.10
    c = Coordinator(lease=LeaseConfig(0.05), audit=True)
    for i in range(n_resources):
        c.add_resource(ResourceKind.VIDEO, f"v{i:04d}")
    crashes = [0] * n_workers
    stale = [0] * n_workers

    def worker(k):
        rng = random.Random(k)
        generation = 0
        while True:
            wid = f"w{k}.{generation}"
            res = c.acquire_next(ResourceKind.VIDEO, wid)
            if res is None:
                s = c.stats()["video"]
                if s["done"] == n_resources:
                    return
                time.sleep(0.005)
                continue
            time.sleep(rng.uniform(0, 0.002))
            if rng.random() < crash_rate:
                # the worker dies holding the lease and comes back under a new identity
                crashes[k] += 1
                generation += 1
                continue
            try:
                c.complete(res.id, wid, "ok")
            except StaleLeaseError:
                stale[k] += 1

    start = time.monotonic()
    threads = [threading.Thread(target=worker, args=(k,)) for k in range(n_workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(60)
    elapsed = time.monotonic() - start
    audit = audit_events(c.events)
    done = c.stats()["video"]["done"]
    retried = sum(1 for n in audit.acquisitions.values() if n > 1)
    ok = audit.ok and done == n_resources and elapsed < 30 and sum(crashes) > 0
    report(1, "coordinator safety", ok,
           f"{len(audit.violations)} audit violations, {done}/{n_resources} done, "
           f"{sum(crashes)} crashes, {retried} retried, {elapsed:.2f}s")


# 2 -----------------------------------------------------------------------------------------

def discover(world_path):
    p = SimPlatform.from_file(world_path)
    c = Coordinator()
    for q in p.world.queries:
        c.add_resource(ResourceKind.KEYWORD, q)
    roles = [(ResourceKind.KEYWORD,), (ResourceKind.KEYWORD,), (ResourceKind.CHANNEL,),
             (ResourceKind.CHANNEL,), (ResourceKind.KEYWORD, ResourceKind.CHANNEL)]
    threads = [threading.Thread(target=discovery_loop, args=(c, p, f"d{i}", kinds),
                                kwargs={"idle_polls": 3, "poll_interval": 0.001})
               for i, kinds in enumerate(roles)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(120)
    return {r.payload for r in c.resources(ResourceKind.VIDEO)}


def test_criterion_2_discovery_closure():
    details = []
    ok = True
    for name in ("demo12", "world60", "world500"):
        path = WORLDS_DIR / f"{name}.json"
        got, want = discover(path), oracles.closure_oracle(path)
        ok &= got == want
        details.append(f"{name}: {len(got)}/{len(want)}")
    report(2, "discovery closure", ok, ", ".join(details))


# 3 -----------------------------------------------------------------------------------------

def test_criterion_3_classification_oracle():
    atoms = ["M:en", "A:en", "M:fr", "A:fr"]
    multisets = [oracles.table_key(m) for n in range(4)
                 for m in itertools.combinations_with_replacement(atoms, n)]
    kinds = {"M": SubtitleKind.MANUAL, "A": SubtitleKind.AUTOMATIC}
    mismatches = []
    checked = 0
    for key in multisets:
        expected, _ = oracles.RULE_TABLE[key]
        for order in set(itertools.permutations(key)):
            got = resolve_subtitles([SubtitleDescriptor(a.split(":")[1], kinds[a[0]]) for a in order])
            checked += 1
            if (got.subset.value, got.language) != expected:
                mismatches.append(order)
    ok = not mismatches and len(multisets) == len(oracles.RULE_TABLE) == 35
    report(3, "classification oracle", ok,
           f"{len(multisets)} multisets, {checked} orderings, {len(mismatches)} mismatches")


# 4 -----------------------------------------------------------------------------------------

def test_criterion_4_ctc_correctness():
    worst = 0.0
    bad = []
    timing = 0.0
    start = time.monotonic()
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        T, V = int(rng.integers(1, 7)), int(rng.integers(2, 5))
        labels = [int(x) for x in rng.integers(1, V, size=int(rng.integers(1, 4)))]
        post = oracles.random_posteriors(rng, T, V)
        t0 = time.perf_counter()
        got = ctc_log_loss(post, labels)
        timing += time.perf_counter() - t0
        want = oracles.brute_force_ctc_loss_fast(post, labels)
        if math.isinf(want) or math.isinf(got):
            if got != want:
                bad.append(seed)
            continue
        err = abs(got - want)
        worst = max(worst, err)
        if err > 1e-9:
            bad.append(seed)
    elapsed = time.monotonic() - start
    ok = not bad and elapsed < 10
    report(4, "CTC correctness", ok,
           f"1000 seeds, max |error| {worst:.2e}, {len(bad)} mismatches, "
           f"{elapsed:.2f}s total ({timing:.3f}s in ctc_log_loss)")


# 5 -----------------------------------------------------------------------------------------

def synthetic_utterances(p):
    return [UtterancePair(v.id, i, p.cue_duration(v, i), text)
            for v in p.world.videos for i, text in enumerate(v.spoken_text)]


def test_criterion_5_threshold_semantics():
    p = SimPlatform.from_file(WORLDS_DIR / "world500.json")
    pairs = synthetic_utterances(p)
    clean = score_corpus(pairs, ReferenceScorer(p, corruption=0.0))
    noisy = score_corpus(pairs, ReferenceScorer(p, corruption=0.9))
    kept_clean = len(filter_by_threshold(clean, 2.0)) / len(pairs)
    excluded_noisy = 1 - len(filter_by_threshold(noisy, 2.0)) / len(pairs)
    mixed = clean[: len(clean) // 2] + noisy[len(noisy) // 2:]
    sweep = threshold_sweep(mixed, SWEEP_THRESHOLDS, cap=16)
    monotone = all(b >= a for a, b in zip(sweep.kept_counts, sweep.kept_counts[1:]))
    capped_all = sweep.kept_counts[-1] == sum(1 for x in mixed if x.scored)
    ok = (kept_clean >= 0.99 and excluded_noisy >= 0.90 and monotone and capped_all
          and sweep.thresholds == [float(t) for t in range(1, 17)]
          and sweep.to_csv().startswith("# cap=16\n"))
    report(5, "threshold semantics", ok,
           f"{len(pairs)} utterances, kept at c=0: {kept_clean:.2%}, excluded at c=0.9: "
           f"{excluded_noisy:.2%}, sweep 1..16 {sweep.kept_counts[0]}->{sweep.kept_counts[-1]} "
           f"monotone={monotone}")


# 6 -----------------------------------------------------------------------------------------

def test_criterion_6_statistics_fidelity():
    rng = np.random.default_rng(6)
    values = rng.lognormal(1.0, 1.2, 10_000).tolist()
    s = duration_stats(values)
    mean, std, lo, hi, n = oracles.two_pass_stats(values)
    err_d = max(abs(s.mean - mean), abs(s.std - std), abs(s.min - lo), abs(s.max - hi))
    alphabet = "abcdé日本語 Жж"
    texts = ["".join(rng.choice(list(alphabet), size=int(k))) for k in rng.integers(1, 120, 10_000)]
    t = text_length_stats(texts)
    mean, std, lo, hi, n2 = oracles.two_pass_stats([len(x) for x in texts])
    err_t = max(abs(t.mean - mean), abs(t.std - std), abs(t.min - lo), abs(t.max - hi))
    table = stats_table({"Manual": s, "Automatic": t, "Unlabeled": None})
    rows = [line.split("\t")[0] for line in table.splitlines()[1:]]
    ok = err_d <= 1e-9 and err_t <= 1e-9 and n == s.count and n2 == t.count \
        and rows == ["Mean", "Std", "Min", "Max"] and tuple(rows) == ROW_LABELS
    report(6, "statistics fidelity", ok,
           f"duration max error {err_d:.1e}, text length max error {err_t:.1e}, rows {rows}")


# 7 -----------------------------------------------------------------------------------------

def test_criterion_7_audio_contract():
    rng = np.random.default_rng(7)
    failures = []
    cases = 0
    for rate in (8000, 16000, 44100, 48000):
        for n in list(rng.integers(1, 50_000, 20)) + [rate, rate - 1, 1, 2, 3]:
            n = int(n)
            channels = int(rng.integers(1, 3))
            x = rng.integers(-30000, 30000, size=(n, channels)).astype(np.int16)
            out = normalize_audio(RawMedia(x, rate))
            again = normalize_audio(RawMedia(out.samples[:, None], out.sample_rate))
            cases += 1
            if out.sample_rate != TARGET_RATE or out.samples.ndim != 1 or out.samples.dtype != np.int16:
                failures.append((rate, n, "format"))
            if len(out.samples) != oracles.expected_length(n, rate) or \
                    len(out.samples) != resampled_length(n, rate):
                failures.append((rate, n, "length"))
            if np.max(np.abs(again.samples.astype(int) - out.samples.astype(int))) > 1:
                failures.append((rate, n, "idempotency"))
    report(7, "audio contract", not failures, f"{cases} inputs, {len(failures)} failures")


# 8 -----------------------------------------------------------------------------------------

def test_criterion_8_determinism(tmp_path):
    outs = []
    codes = []
    for run in ("a", "b"):
        out = tmp_path / run
        codes.append(cli.main(["pipeline", "--world", "world60", "--out", str(out), "--seed", "11",
                               "--download-workers", "3", "--test-size", "5"]))
        outs.append(out)
    a, b = outs
    same_manifest = (a / "manifest.jsonl").read_bytes() == (b / "manifest.jsonl").read_bytes()
    names = sorted(p.relative_to(a / "curation") for p in (a / "curation").rglob("*") if p.is_file())
    names_b = sorted(p.relative_to(b / "curation") for p in (b / "curation").rglob("*") if p.is_file())
    _, mismatch, errors = filecmp.cmpfiles(a / "curation", b / "curation", [str(n) for n in names],
                                           shallow=False)
    stats_same = all((a / "stats" / f).read_bytes() == (b / "stats" / f).read_bytes()
                     for f in ("video_duration_hours.tsv", "stats.json", "scripts.tsv"))
    records = len((a / "manifest.jsonl").read_text().splitlines())
    ok = codes == [0, 0] and same_manifest and names == names_b and not mismatch and not errors \
        and stats_same and records > 0
    report(8, "end-to-end determinism", ok,
           f"{records} manifest records, {len(names)} curation files, "
           f"manifest identical={same_manifest}, differing reports={len(mismatch) + len(errors)}")


# 9 -----------------------------------------------------------------------------------------

def test_criterion_9_sampling_contract():
    pairs = [UtterancePair(f"v{i // 7:05d}", i % 7, 1.0 + (i % 13), "x", score=1.0) for i in range(5000)]
    s1 = sample_splits(pairs, train_max=1_000_000, test_size=1000, seed=0)
    shuffled = list(pairs)
    random.Random(99).shuffle(shuffled)
    s2 = sample_splits(shuffled, train_max=1_000_000, test_size=1000, seed=0)
    train, test = {p.key for p in s1.train}, {p.key for p in s1.test}
    ok = len(s1.test) == 1000 and len(s1.train) == 4000 and not train & test and s1 == s2 \
        and len(train | test) == 5000
    report(9, "sampling contract", ok,
           f"|test|={len(s1.test)}, |train|={len(s1.train)}, overlap={len(train & test)}, "
           f"seed-stable={s1 == s2}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
