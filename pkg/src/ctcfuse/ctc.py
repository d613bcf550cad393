"""CTC algorithms over posterior matrices.

Everything here works in natural-log space on the standard blank-interleaved
label lattice. Infeasible references (too long for the number of frames)
score ``-inf`` in :func:`ctc_forward` and raise in :func:`forced_align`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .core import BLANK_ID, PosteriorMatrix, Vocab, to_log_probs

NEG_INF = -math.inf


class AlignmentError(ValueError):
    pass


def collapse(labels: Sequence[int], blank_id: int = BLANK_ID) -> list[int]:
    """Merge adjacent repeats, then drop blanks."""
    out = []
    prev = None
    for lab in labels:
        lab = int(lab)
        if lab != prev and lab != blank_id:
            out.append(lab)
        prev = lab
    return out


def min_frames(ref: Sequence[int]) -> int:
    """Fewest frames that can emit ``ref`` (repeats need a blank between them)."""
    repeats = sum(1 for a, b in zip(ref, ref[1:]) if a == b)
    return len(ref) + repeats


def greedy_decode(post: PosteriorMatrix, vocab: Vocab | None = None) -> list[int]:
    """Per-frame argmax (ties to the lowest id) followed by :func:`collapse`."""
    blank = vocab.blank_id if vocab is not None else BLANK_ID
    if post.frames == 0:
        return []
    return collapse(np.argmax(post.values, axis=1), blank)


def ctc_forward(post: PosteriorMatrix, ref: Sequence[int], blank_id: int = BLANK_ID) -> float:
    """Log of the total probability of all frame paths collapsing to ``ref``."""
    if min_frames(ref) > post.frames:
        return NEG_INF
    logp = to_log_probs(post)
    return float(kernels.ctc_forward(logp, kernels.extend_labels(ref, blank_id)))


@dataclass(frozen=True)
class CtcLoss:
    ctc: float
    reg: float
    total: float
    lam: float


def symmetric_kl(p_log: np.ndarray, q_log: np.ndarray) -> float:
    """Sum over frames of KL(p||q) + KL(q||p), given row-wise log-probabilities."""
    p = np.exp(p_log)
    q = np.exp(q_log)
    with np.errstate(invalid="ignore"):
        pq = np.where(p > 0, p * (p_log - q_log), 0.0)
        qp = np.where(q > 0, q * (q_log - p_log), 0.0)
    return float(pq.sum() + qp.sum())


def cr_ctc_loss(
    view1: PosteriorMatrix, view2: PosteriorMatrix, ref: Sequence[int], lam: float = 0.2, blank_id: int = BLANK_ID
) -> CtcLoss:
    """Two-view CTC loss with a symmetric-KL consistency term, for one sequence."""
    if view1.values.shape != view2.values.shape:
        raise ValueError(f"view shapes differ: {view1.values.shape} vs {view2.values.shape}")
    if lam < 0:
        raise ValueError("regularisation weight must be nonnegative")
    ctc = 0.5 * (-ctc_forward(view1, ref, blank_id) - ctc_forward(view2, ref, blank_id))
    reg = symmetric_kl(to_log_probs(view1), to_log_probs(view2))
    return CtcLoss(ctc=ctc, reg=reg, total=ctc + lam * reg, lam=lam)


@dataclass(frozen=True)
class Span:
    token: int
    emit_frame: int
    start: int
    end: int


@dataclass(frozen=True)
class Alignment:
    spans: tuple[Span, ...]
    path: tuple[int, ...]
    score: float


def forced_align(post: PosteriorMatrix, ref: Sequence[int], blank_id: int = BLANK_ID) -> Alignment:
    """Viterbi path through the lattice of ``ref``; ties favour earlier emission."""
    ref = [int(r) for r in ref]
    if min_frames(ref) > post.frames:
        raise AlignmentError(f"reference of {len(ref)} tokens cannot fit in {post.frames} frames")
    ext = kernels.extend_labels(ref, blank_id)
    score, states = kernels.ctc_viterbi(to_log_probs(post), ext)
    if score == NEG_INF:
        raise AlignmentError("reference has zero probability under the posteriors")
    path = tuple(int(ext[s]) for s in states)
    spans = []
    t = 0
    T = len(states)
    while t < T:
        s = int(states[t])
        u = t
        while u < T and states[u] == s:
            u += 1
        if s % 2 == 1:
            spans.append(Span(ref[(s - 1) // 2], t, t, u))
        t = u
    return Alignment(tuple(spans), path, float(score))


def alignment_tsv(alignment: Alignment, vocab: Vocab) -> str:
    lines = ["token_id\ttoken_text\temit_frame\tstart\tend"]
    for sp in alignment.spans:
        lines.append(f"{sp.token}\t{vocab.tokens[sp.token]}\t{sp.emit_frame}\t{sp.start}\t{sp.end}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BeamConfig:
    """Prefix beam search settings.

    ``prune_logp`` optionally skips tokens whose frame log-probability falls
    below it; ``None`` expands every token (exact up to beam pruning).
    """

    beam_width: int
    lm_weight: float
    token_insertion_bonus: float
    prune_logp: float | None = None

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.lm_weight < 0:
            raise ValueError("lm_weight must be >= 0")


def _lae(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def beam_decode(post: PosteriorMatrix, vocab: Vocab | None, lm, cfg: BeamConfig) -> list[int]:
    """CTC prefix beam search with optional n-gram shallow fusion.

    A prefix scores ``log P_ctc(prefix) + lm_weight * log P_lm(prefix) +
    bonus * len(prefix)``; the LM end-of-sentence term is added only when
    ranking the final beam. Exact ties go to the lexicographically smallest
    prefix.
    """
    blank = vocab.blank_id if vocab is not None else BLANK_ID
    logp = to_log_probs(post)
    T, V = logp.shape
    use_lm = lm is not None and cfg.lm_weight != 0.0
    ctx0 = lm.initial_context() if use_lm else ()
    tokens = [v for v in range(V) if v != blank]

    # prefix -> accumulated LM + insertion-bonus score
    ext_score: dict[tuple, float] = {(): 0.0}

    def extend(prefix: tuple, c: int) -> tuple:
        new = prefix + (c,)
        if new not in ext_score:
            s = ext_score[prefix] + cfg.token_insertion_bonus
            if use_lm:
                s += cfg.lm_weight * lm.logprob(c, ctx0 + prefix)
            ext_score[new] = s
        return new

    beams: dict[tuple, list[float]] = {(): [0.0, NEG_INF]}  # prefix -> [log p_blank, log p_nonblank]
    for t in range(T):
        row = logp[t]
        lp_blank = row[blank]
        cands = tokens if cfg.prune_logp is None else [c for c in tokens if row[c] >= cfg.prune_logp]
        nxt: dict[tuple, list[float]] = {}
        for prefix, (pb, pnb) in beams.items():
            ptot = _lae(pb, pnb)
            entry = nxt.setdefault(prefix, [NEG_INF, NEG_INF])
            entry[0] = _lae(entry[0], ptot + lp_blank)
            last = prefix[-1] if prefix else None
            if last is not None:
                entry[1] = _lae(entry[1], pnb + row[last])
            for c in cands:
                lc = row[c]
                if lc == NEG_INF:
                    continue
                new = extend(prefix, c)
                e = nxt.setdefault(new, [NEG_INF, NEG_INF])
                e[1] = _lae(e[1], (pb if c == last else ptot) + lc)
        ranked = sorted(nxt.items(), key=lambda kv: (-(_lae(*kv[1]) + ext_score[kv[0]]), kv[0]))
        beams = dict(ranked[: cfg.beam_width])

    def final(kv):
        prefix, (pb, pnb) = kv
        s = _lae(pb, pnb) + ext_score[prefix]
        if use_lm:
            s += cfg.lm_weight * lm.eos_logprob(ctx0 + prefix)
        return (-s, prefix)

    best = min(beams.items(), key=final)
    return list(best[0])
