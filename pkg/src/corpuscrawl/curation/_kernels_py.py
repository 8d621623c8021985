"""Pure-Python/numpy CTC forward pass, used when the compiled kernel is unavailable."""
import numpy as np

NEG_INF = -np.inf


def ctc_forward(log_probs, labels, blank):
    """log p(labels | log_probs) summed over every CTC alignment.

    ``log_probs`` is (T, V) float64, ``labels`` a 1-D int64 array without blanks.
    """
    T = log_probs.shape[0]
    L = labels.shape[0]
    S = 2 * L + 1
    ext = np.full(S, blank, dtype=np.int64)
    ext[1::2] = labels
    # skipping the blank between two labels is only allowed when they differ
    skip = np.zeros(S, dtype=bool)
    skip[3::2] = labels[1:] != labels[:-1]

    alpha = np.full(S, NEG_INF)
    alpha[0] = log_probs[0, blank]
    if S > 1:
        alpha[1] = log_probs[0, ext[1]]
    prev1 = np.empty(S)
    prev2 = np.empty(S)
    with np.errstate(invalid="ignore"):
        for t in range(1, T):
            prev1[0] = NEG_INF
            prev1[1:] = alpha[:-1]
            prev2[:2] = NEG_INF
            prev2[2:] = alpha[:-2]
            prev2[~skip] = NEG_INF
            acc = np.logaddexp(alpha, prev1)
            acc = np.logaddexp(acc, prev2)
            alpha = acc + log_probs[t, ext]
    if S == 1:
        return float(alpha[0])
    return float(np.logaddexp(alpha[S - 1], alpha[S - 2]))
