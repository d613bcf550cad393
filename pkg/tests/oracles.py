"""Brute-force reference computations. Deliberately share no code with ctcfuse's DP paths."""

import itertools
import math
from collections import defaultdict
from functools import lru_cache

import numpy as np


def collapse_py(path, blank=0):
    out = []
    prev = None
    for x in path:
        if x != prev and x != blank:
            out.append(x)
        prev = x
    return tuple(out)


def path_mass(probs, blank=0):
    """Map each label sequence to its total path probability (enumerates V**T paths)."""
    T, V = probs.shape
    mass = defaultdict(float)
    for path in itertools.product(range(V), repeat=T):
        p = 1.0
        for t, v in enumerate(path):
            p *= float(probs[t, v])
        mass[collapse_py(path, blank)] += p
    return mass


def brute_log_marginal(probs, ref, blank=0):
    m = path_mass(probs, blank).get(tuple(ref), 0.0)
    return math.log(m) if m > 0 else -math.inf


def brute_best_path(logp, ref, blank=0):
    """(score, path) of the best path collapsing to ref, scores summed left to right."""
    T, V = logp.shape
    best, arg = -math.inf, None
    for path in itertools.product(range(V), repeat=T):
        if collapse_py(path, blank) != tuple(ref):
            continue
        s = 0.0
        for t, v in enumerate(path):
            s += float(logp[t, v])
        if s > best:
            best, arg = s, path
    return best, arg


def direct_fusion(starts, W, weights, posts, T):
    """Fused rows by scanning every window for coverage of every frame.

    starts: window start per window, posts: list of (W, V) probability arrays.
    """
    V = posts[0].shape[1]
    out = np.zeros((T, V))
    for t in range(T):
        cover = [k for k, b in enumerate(starts) if b <= t < b + W]
        raw = [weights[t - starts[k]] for k in cover]
        z = sum(raw)
        for k, r in zip(cover, raw):
            out[t] += (r / z) * posts[k][t - starts[k]]
    return out


def exhaustive_decode(probs, lm, lm_weight, bonus, blank=0):
    """Argmax over every label sequence of log P_ctc + lm_weight * log P_lm + bonus * L."""
    mass = path_mass(probs, blank)
    best_key = None
    best = None
    for seq, p in mass.items():
        if p <= 0:
            continue
        score = math.log(p) + bonus * len(seq)
        if lm is not None and lm_weight != 0:
            ctx = list(lm.initial_context())
            lm_s = 0.0
            for tok in seq:
                lm_s += lm.logprob(tok, ctx)
                ctx.append(tok)
            lm_s += lm.eos_logprob(ctx)
            score += lm_weight * lm_s
        key = (-score, seq)
        if best_key is None or key < best_key:
            best_key, best = key, seq
    return list(best)


@lru_cache(maxsize=None)
def all_paths(T, V, blank=0):
    """Every length-T path as a (V**T, T) array, plus each path's collapsed label tuple."""
    paths = np.array(list(itertools.product(range(V), repeat=T)), dtype=np.int64).reshape(-1, T)
    return paths, [collapse_py(p, blank) for p in paths.tolist()]


def enumerate_scores(logp, ref, blank=0):
    """(log marginal, best path score) of ``ref`` by scoring every path.

    Path scores are summed frame by frame left to right, the same order a
    Viterbi recursion uses, so the max is reproducible bit for bit.
    """
    T, V = logp.shape
    paths, labels = all_paths(T, V, blank)
    score = np.zeros(len(paths))
    for t in range(T):
        score = score + logp[t, paths[:, t]]
    hit = np.array([lab == tuple(ref) for lab in labels], dtype=bool)
    if not hit.any():
        return -math.inf, -math.inf
    s = score[hit]
    top = s.max()
    if top == -math.inf:
        return -math.inf, -math.inf
    return float(top + math.log(np.exp(s - top).sum())), float(top)
