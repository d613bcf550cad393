"""Dynamic-programming kernels in two flavours.

``*_loop`` functions are scalar loops compiled by numba (they still run, slowly,
as plain Python when numba is absent). ``*_np`` functions vectorise across
lattice states / matrix columns with numpy. The public names at the bottom are
bound according to ``CTCFUSE_BACKEND``.

All CTC kernels take float64 log-probabilities ``logp`` of shape (T, V) and an
extended label sequence ``ext`` = [blank, y1, blank, y2, ..., yL, blank].
"""

import numpy as np

from ._accel import BACKEND, njit

NEG_INF = -np.inf


def extend_labels(ref, blank=0):
    L = len(ref)
    ext = np.full(2 * L + 1, blank, dtype=np.int64)
    if L:
        ext[1::2] = np.asarray(ref, dtype=np.int64)
    return ext


# ---------------------------------------------------------------- numba loops


@njit
def _lse(a, b):
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + np.log1p(np.exp(b - a))
    return b + np.log1p(np.exp(a - b))


@njit
def ctc_forward_loop(logp, ext):
    T = logp.shape[0]
    S = ext.shape[0]
    if T == 0:
        return 0.0 if S == 1 else NEG_INF
    prev = np.full(S, NEG_INF)
    cur = np.full(S, NEG_INF)
    prev[0] = logp[0, ext[0]]
    if S > 1:
        prev[1] = logp[0, ext[1]]
    for t in range(1, T):
        for s in range(S):
            a = prev[s]
            if s >= 1:
                a = _lse(a, prev[s - 1])
            if s >= 2 and ext[s] != ext[s - 2]:
                a = _lse(a, prev[s - 2])
            cur[s] = a + logp[t, ext[s]] if a != NEG_INF else NEG_INF
        for s in range(S):
            prev[s] = cur[s]
    if S == 1:
        return prev[0]
    return _lse(prev[S - 1], prev[S - 2])


@njit
def ctc_viterbi_loop(logp, ext):
    """Best path through the lattice. Returns (score, state path of length T).

    Ties prefer the predecessor with the higher lattice index (staying put
    over advancing), so the backtrace keeps the path as far along the label
    sequence as possible at every frame, i.e. tokens are emitted early. The
    trailing blank wins ties for the final state.
    """
    T = logp.shape[0]
    S = ext.shape[0]
    states = np.zeros(T, dtype=np.int64)
    if T == 0:
        return (0.0 if S == 1 else NEG_INF), states
    delta = np.full((T, S), NEG_INF)
    bp = np.zeros((T, S), dtype=np.int64)
    delta[0, 0] = logp[0, ext[0]]
    if S > 1:
        delta[0, 1] = logp[0, ext[1]]
    for t in range(1, T):
        for s in range(S):
            best = delta[t - 1, s]
            arg = s
            if s >= 1 and delta[t - 1, s - 1] > best:
                best = delta[t - 1, s - 1]
                arg = s - 1
            if s >= 2 and ext[s] != ext[s - 2] and delta[t - 1, s - 2] > best:
                best = delta[t - 1, s - 2]
                arg = s - 2
            bp[t, s] = arg
            if best != NEG_INF:
                delta[t, s] = best + logp[t, ext[s]]
    last = S - 1
    if S > 1 and delta[T - 1, S - 2] > delta[T - 1, S - 1]:
        last = S - 2
    score = delta[T - 1, last]
    states[T - 1] = last
    for t in range(T - 1, 0, -1):
        states[t - 1] = bp[t, states[t]]
    return score, states


@njit
def edit_ops_loop(ref, hyp):
    """Unit-cost Levenshtein alignment counts (subs, dels, ins).

    Backtrace prefers substitution/match, then insertion, then deletion.
    """
    n = ref.shape[0]
    m = hyp.shape[0]
    d = np.zeros((n + 1, m + 1), dtype=np.int64)
    for i in range(n + 1):
        d[i, 0] = i
    for j in range(m + 1):
        d[0, j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            c = d[i - 1, j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1)
            if d[i - 1, j] + 1 < c:
                c = d[i - 1, j] + 1
            if d[i, j - 1] + 1 < c:
                c = d[i, j - 1] + 1
            d[i, j] = c
    return _backtrace(d, ref, hyp)


@njit
def _backtrace(d, ref, hyp):
    i = ref.shape[0]
    j = hyp.shape[0]
    subs = 0
    dels = 0
    ins = 0
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            diff = 0 if ref[i - 1] == hyp[j - 1] else 1
            if d[i, j] == d[i - 1, j - 1] + diff:
                subs += diff
                i -= 1
                j -= 1
                continue
        if j > 0 and d[i, j] == d[i, j - 1] + 1:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return subs, dels, ins


# ---------------------------------------------------------------- numpy paths


def _shift(x, k):
    out = np.full_like(x, NEG_INF)
    if k < x.shape[0]:
        out[k:] = x[: x.shape[0] - k]
    return out


def _skip_mask(ext):
    S = ext.shape[0]
    mask = np.zeros(S, dtype=bool)
    if S > 2:
        mask[2:] = ext[2:] != ext[:-2]
    return mask


def ctc_forward_np(logp, ext):
    T = logp.shape[0]
    S = ext.shape[0]
    if T == 0:
        return 0.0 if S == 1 else NEG_INF
    skip = _skip_mask(ext)
    emit = logp[:, ext]
    prev = np.full(S, NEG_INF)
    prev[: min(S, 2)] = emit[0, : min(S, 2)]
    for t in range(1, T):
        a = np.logaddexp(prev, _shift(prev, 1))
        a = np.logaddexp(a, np.where(skip, _shift(prev, 2), NEG_INF))
        prev = a + emit[t]
    if S == 1:
        return float(prev[0])
    return float(np.logaddexp(prev[S - 1], prev[S - 2]))


def ctc_viterbi_np(logp, ext):
    T = logp.shape[0]
    S = ext.shape[0]
    states = np.zeros(T, dtype=np.int64)
    if T == 0:
        return (0.0 if S == 1 else NEG_INF), states
    skip = _skip_mask(ext)
    emit = logp[:, ext]
    idx = np.arange(S)
    bp = np.zeros((T, S), dtype=np.int64)
    prev = np.full(S, NEG_INF)
    prev[: min(S, 2)] = emit[0, : min(S, 2)]
    for t in range(1, T):
        # candidate order s, s-1, s-2: argmax keeps the first maximum
        cand = np.stack([prev, _shift(prev, 1), np.where(skip, _shift(prev, 2), NEG_INF)])
        choice = np.argmax(cand, axis=0)
        best = cand[choice, idx]
        bp[t] = idx - choice
        prev = best + emit[t]
    last = S - 1
    if S > 1 and prev[S - 2] > prev[S - 1]:
        last = S - 2
    score = float(prev[last])
    states[T - 1] = last
    for t in range(T - 1, 0, -1):
        states[t - 1] = bp[t, states[t]]
    return score, states


def edit_ops_np(ref, hyp):
    n = ref.shape[0]
    m = hyp.shape[0]
    d = np.zeros((n + 1, m + 1), dtype=np.int64)
    d[0] = np.arange(m + 1)
    cols = np.arange(m + 1)
    for i in range(1, n + 1):
        c = np.empty(m + 1, dtype=np.int64)
        c[0] = i
        c[1:] = np.minimum(d[i - 1, 1:] + 1, d[i - 1, :-1] + (hyp != ref[i - 1]))
        # insertions chain left-to-right: d[i, j] = min_k c[k] + (j - k)
        d[i] = np.minimum.accumulate(c - cols) + cols
    return _backtrace_py(d, ref, hyp)


def _backtrace_py(d, ref, hyp):
    i, j = ref.shape[0], hyp.shape[0]
    subs = dels = ins = 0
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            diff = int(ref[i - 1] != hyp[j - 1])
            if d[i, j] == d[i - 1, j - 1] + diff:
                subs += diff
                i -= 1
                j -= 1
                continue
        if j > 0 and d[i, j] == d[i, j - 1] + 1:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return subs, dels, ins


if BACKEND == "numba":
    ctc_forward = ctc_forward_loop
    ctc_viterbi = ctc_viterbi_loop
    edit_ops = edit_ops_loop
else:
    ctc_forward = ctc_forward_np
    ctc_viterbi = ctc_viterbi_np
    edit_ops = edit_ops_np
