"""Cut long utterances into fixed-length training chunks using a fused alignment.

The reference is force-aligned against the fused posteriors, and every token
goes to the chunk that contains the first frame of its emission. Chunk edges
fall at multiples of ``chunk_frames`` regardless of word boundaries.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import Vocab
from .ctc import AlignmentError, forced_align
from .fusion import FusionWeights
from .pipeline import WindowSource, run_fusion
from .windowing import WindowConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Segment:
    chunk_index: int
    frame_start: int
    frame_end: int
    token_ids: tuple[int, ...]
    token_texts: tuple[str, ...]


@dataclass(frozen=True)
class SegmentManifest:
    source_id: str
    segments: tuple[Segment, ...]

    def lines(self) -> list[str]:
        return [
            f"{self.source_id} {s.chunk_index} {s.frame_start} {s.frame_end}\t{' '.join(s.token_texts)}"
            for s in self.segments
        ]

    def tokens(self) -> list[int]:
        return [t for s in self.segments for t in s.token_ids]


def chunk_tokens(emit_frames: Sequence[int], tokens: Sequence[int], total_frames: int, chunk_frames: int) -> list[tuple[int, int, list[int]]]:
    """Group tokens into ``[i*chunk, (i+1)*chunk)`` bins by emission frame."""
    if chunk_frames <= 0:
        raise ValueError("chunk_frames must be positive")
    n_chunks = max(1, -(-total_frames // chunk_frames))
    bins: list[list[int]] = [[] for _ in range(n_chunks)]
    for f, tok in zip(emit_frames, tokens):
        bins[f // chunk_frames].append(tok)
    return [
        (i, i * chunk_frames, min((i + 1) * chunk_frames, total_frames), b)
        for i, b in enumerate(bins)
    ]


def segment(
    source: WindowSource,
    config: WindowConfig,
    weights: FusionWeights,
    ref: Sequence[int],
    total_frames: int,
    vocab: Vocab,
    chunk_frames: int = 500,
    source_id: str = "utt",
    jobs: int = 1,
) -> SegmentManifest:
    """Fuse, align ``ref`` and split it into chunks. Raises :class:`AlignmentError`."""
    state = run_fusion(source, config, weights, total_frames, len(vocab), jobs=jobs)
    alignment = forced_align(state.fused_matrix(), ref, vocab.blank_id)
    bins = chunk_tokens(
        [s.emit_frame for s in alignment.spans], [s.token for s in alignment.spans], total_frames, chunk_frames
    )
    segs = tuple(Segment(i, a, b, tuple(toks), tuple(vocab.texts(toks))) for i, a, b, toks in bins)
    return SegmentManifest(source_id, segs)


def segment_many(
    jobs_spec: Iterable[tuple[str, WindowSource, Sequence[int], int]],
    config: WindowConfig,
    weights: FusionWeights,
    vocab: Vocab,
    chunk_frames: int = 500,
    jobs: int = 1,
) -> tuple[list[SegmentManifest], dict[str, str]]:
    """Segment independent utterances ``(id, source, ref, total_frames)``.

    Alignment failures are collected per utterance instead of aborting the
    batch. Output order follows input order.
    """

    def one(item):
        utt, source, ref, T = item
        try:
            return segment(source, config, weights, ref, T, vocab, chunk_frames, utt), None
        except AlignmentError as e:
            log.warning("%s: alignment failed: %s", utt, e)
            return None, (utt, str(e))

    items = list(jobs_spec)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(it) for it in items]
    manifests = [m for m, _ in results if m is not None]
    failures = dict(f for _, f in results if f is not None)
    return manifests, failures
