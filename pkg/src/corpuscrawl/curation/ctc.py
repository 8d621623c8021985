"""CTC alignment score: per-label negative log likelihood of a transcript.

The forward recursion runs in a compiled extension when one was built and
falls back to numpy otherwise.  Set ``CORPUSCRAWL_PURE_PYTHON=1`` to force
the fallback.
"""
from __future__ import annotations

import math
import os
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from . import _kernels_py

BLANK = 0
ROW_SUM_TOLERANCE = 1e-6

if os.environ.get("CORPUSCRAWL_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"


def min_frames(labels: Sequence[int]) -> int:
    """Fewest frames that can emit ``labels``: one per label plus a blank between repeats."""
    labels = list(labels)
    return len(labels) + sum(1 for a, b in zip(labels, labels[1:]) if a == b)


def _check(posteriors, labels, blank):
    post = np.ascontiguousarray(posteriors, dtype=np.float64)
    if post.ndim != 2 or post.shape[0] < 1 or post.shape[1] < 2:
        raise ValidationError(f"posteriors must be a T x V matrix with V >= 2, got {post.shape}")
    if not np.all(np.isfinite(post)) or np.any(post < 0):
        raise ValidationError("posteriors must be finite and non-negative")
    if np.max(np.abs(post.sum(axis=1) - 1.0)) > ROW_SUM_TOLERANCE:
        raise ValidationError("posterior rows must sum to 1")
    labs = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labs.size < 1:
        raise ValidationError("labels must be non-empty")
    if not 0 <= blank < post.shape[1]:
        raise ValidationError(f"blank index {blank} outside vocabulary")
    if np.any(labs < 0) or np.any(labs >= post.shape[1]) or np.any(labs == blank):
        raise ValidationError("labels must be non-blank symbols inside the vocabulary")
    return post, np.ascontiguousarray(labs)


def ctc_log_likelihood(posteriors, labels: Sequence[int], blank: int = BLANK) -> float:
    """log p(labels | posteriors); ``-inf`` when no alignment fits in T frames."""
    post, labs = _check(posteriors, labels, blank)
    if post.shape[0] < min_frames(labs):
        return -math.inf
    with np.errstate(divide="ignore"):
        log_probs = np.log(post)
    return float(_impl.ctc_forward(log_probs, labs, blank))


def ctc_log_loss(posteriors, labels: Sequence[int], blank: int = BLANK) -> float:
    """Alignment score: ``-log p(labels | posteriors) / len(labels)``; lower is better.

    Returns ``inf`` when the transcript cannot be aligned (too few frames, or
    zero probability on every path).
    """
    ll = ctc_log_likelihood(posteriors, labels, blank)
    if ll == -math.inf:
        return math.inf
    # clamp tiny negative values from rounding when a path is certain
    return max(0.0, -ll / len(labels))
