"""Posterior sources and the plan -> fuse -> decode pipeline."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from . import synth as _synth
from .core import BLANK_ID, Kind, PosteriorMatrix, read_pfm, to_probs
from .ctc import BeamConfig, beam_decode, greedy_decode
from .fusion import FusionState, FusionWeights
from .windowing import Window, WindowConfig, covering_range, plan

WindowSource = Callable[[Window], PosteriorMatrix]


def synth_source(spec: _synth.SynthSpec) -> WindowSource:
    return lambda window: _synth.window_logits(spec, window)


def slice_source(long: PosteriorMatrix, blank_id: int = BLANK_ID) -> WindowSource:
    """Cut windows out of one long matrix; frames outside it become blank one-hots."""
    probs = to_probs(long).values
    T, V = probs.shape
    pad = np.zeros(V)
    pad[blank_id] = 1.0

    def get(window: Window) -> PosteriorMatrix:
        out = np.tile(pad, (window.end - window.start, 1))
        t0, t1 = max(window.start, 0), min(window.end, T)
        if t1 > t0:
            out[t0 - window.start : t1 - window.start] = probs[t0:t1]
        return PosteriorMatrix(out, Kind.PROBS)

    return get


def directory_source(directory) -> tuple[WindowSource, int]:
    """One PFM file per window, taken in sorted filename order."""
    files = sorted(p for p in Path(directory).iterdir() if p.suffix == ".pfm")
    if not files:
        raise FileNotFoundError(f"no .pfm files in {directory}")

    def get(window: Window) -> PosteriorMatrix:
        if window.index > len(files):
            raise IndexError(f"plan needs window {window.index} but only {len(files)} files exist")
        return read_pfm(files[window.index - 1])

    return get, len(files)


def window_posteriors(source: WindowSource, windows: list[Window], jobs: int = 1) -> Iterator[tuple[Window, PosteriorMatrix]]:
    """Yield ``(window, posterior)`` in window order, computing up to ``jobs`` at a time."""
    if jobs <= 1:
        for w in windows:
            yield w, source(w)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        yield from zip(windows, pool.map(source, windows))


def run_fusion(
    source: WindowSource,
    config: WindowConfig,
    weights: FusionWeights,
    total_frames: int,
    vocab_size: int,
    jobs: int = 1,
    on_window: Callable[[FusionState], None] | None = None,
) -> FusionState:
    state = FusionState(config, weights, total_frames, vocab_size)
    for window, post in window_posteriors(source, state.windows, jobs):
        state.ingest(window, post)
        if on_window is not None:
            on_window(state)
    return state


def decode(fused: PosteriorMatrix, beam: BeamConfig | None = None, lm=None, vocab=None) -> list[int]:
    if beam is None:
        return greedy_decode(fused, vocab)
    return beam_decode(fused, vocab, lm, beam)


def convergence_log(config: WindowConfig, total_frames: int) -> list[tuple[int, int, int]]:
    """Per frame: (t, frames until first estimate, frames until converged).

    Counted as the input frames that must arrive from ``t`` onward (inclusive)
    before the first / last covering window is complete.
    """
    windows = plan(config, total_frames)
    rows = []
    for t in range(total_frames):
        k_min, k_max = covering_range(config, t)
        k_max = min(k_max, len(windows))
        rows.append((t, windows[k_min - 1].end - t, windows[k_max - 1].end - t))
    return rows
