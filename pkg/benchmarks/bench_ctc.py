"""Time the compiled CTC forward kernel against the numpy fallback.

    python benchmarks/bench_ctc.py --repeats 20 --frames 50 200 800
"""
import argparse
import sys
import timeit

import numpy as np

from corpuscrawl.curation import _kernels_py

try:
    from corpuscrawl.curation import _kernels
except ImportError:
    _kernels = None


def make_case(rng, frames, vocab, n_labels):
    logits = rng.normal(size=(frames, vocab))
    post = np.exp(logits - logits.max(axis=1, keepdims=True))
    post /= post.sum(axis=1, keepdims=True)
    labels = rng.integers(1, vocab, size=n_labels).astype(np.int64)
    return np.ascontiguousarray(np.log(post)), labels


def best_of(fn, repeats):
    return min(timeit.repeat(fn, number=1, repeat=repeats))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, nargs="+", default=[50, 200, 800, 3200])
    ap.add_argument("--vocab", type=int, default=40)
    ap.add_argument("--label-ratio", type=float, default=0.3,
                    help="transcript length as a fraction of the frame count")
    ap.add_argument("--repeats", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if _kernels is None:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation` first",
              file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    print(f"{'frames':>8} {'labels':>7} {'compiled ms':>12} {'python ms':>10} {'speedup':>8} {'|diff|':>9}")
    for frames in args.frames:
        n_labels = max(1, int(frames * args.label_ratio))
        lp, labels = make_case(rng, frames, args.vocab, n_labels)
        fast = _kernels.ctc_forward(lp, labels, 0)
        slow = _kernels_py.ctc_forward(lp, labels, 0)
        t_fast = best_of(lambda: _kernels.ctc_forward(lp, labels, 0), args.repeats)
        t_slow = best_of(lambda: _kernels_py.ctc_forward(lp, labels, 0), args.repeats)
        print(f"{frames:>8} {n_labels:>7} {t_fast * 1e3:>12.3f} {t_slow * 1e3:>10.3f} "
              f"{t_slow / t_fast:>7.1f}x {abs(fast - slow):>9.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
