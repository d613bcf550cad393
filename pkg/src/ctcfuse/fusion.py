"""Temporal posterior fusion.

Each frame's fused distribution is the weighted mean of the softmaxed
posteriors of every window covering it, where a window's weight depends only
on the frame's position inside that window. :class:`FusionState` accumulates
windows one at a time, so partial estimates are available as soon as the
first covering window arrives and become final once the last one has.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import Kind, PosteriorMatrix, to_probs
from .windowing import Coverage, Window, WindowConfig, covering_range, plan


class FusionError(ValueError):
    pass


@dataclass(frozen=True)
class FusionWeights:
    shape: str
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.any(~np.isfinite(w)) or np.any(w < 0) or not np.any(w > 0):
            raise ValueError("weights must be finite, nonnegative and not all zero")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    def __len__(self) -> int:
        return self.w.size


def hann_weights(W: int) -> FusionWeights:
    """Length-``W`` Hann taper: the ``W + 2`` point window minus its zero ends."""
    if W < 1:
        raise ValueError("window length must be >= 1")
    n = np.arange(1, W + 1, dtype=np.float64)
    w = 0.5 * (1.0 - np.cos(2.0 * np.pi * n / (W + 1)))
    # enforce exact symmetry against cos rounding
    w = 0.5 * (w + w[::-1])
    return FusionWeights("hann", w)


def uniform_weights(W: int) -> FusionWeights:
    if W < 1:
        raise ValueError("window length must be >= 1")
    return FusionWeights("uniform", np.ones(W))


def make_weights(shape: str, W: int) -> FusionWeights:
    if shape == "hann":
        return hann_weights(W)
    if shape == "uniform":
        return uniform_weights(W)
    raise ValueError(f"unknown weight shape {shape!r}")


def alpha(weights: FusionWeights, cov: Coverage, observed: int) -> list[float]:
    """Normalised weights of the covering windows observed so far (index <= ``observed``)."""
    raw = [weights.w[r] for k, r in zip(cov.windows, cov.rels) if k <= observed]
    if not raw:
        raise FusionError(f"frame {cov.frame} has no observed covering window")
    total = float(np.sum(raw))
    if total <= 0:
        raise FusionError(f"frame {cov.frame} has zero total weight")
    return [x / total for x in raw]


class FusionState:
    """Incremental weighted-sum accumulators over a fixed window plan."""

    def __init__(self, config: WindowConfig, weights: FusionWeights, total_frames: int, vocab_size: int):
        if len(weights) != config.window_len:
            raise ValueError(f"weights have length {len(weights)}, window length is {config.window_len}")
        self.config = config
        self.weights = weights
        self.total_frames = total_frames
        self.vocab_size = vocab_size
        self.windows = plan(config, total_frames)
        self.observed = 0
        self._acc = np.zeros((total_frames, vocab_size))
        self._tot = np.zeros(total_frames)

    @property
    def complete(self) -> bool:
        return self.observed == len(self.windows)

    @property
    def converged_end(self) -> int:
        """Frames ``t < converged_end`` will not change with further windows."""
        if self.complete:
            return self.total_frames
        return min(max(self.windows[self.observed].start, 0), self.total_frames)

    @property
    def converged_up_to(self) -> int:
        return self.converged_end - 1

    def ingest(self, window: Window, post: PosteriorMatrix) -> "FusionState":
        if window.index != self.observed + 1:
            raise FusionError(f"expected window {self.observed + 1}, got {window.index}")
        if window != self.windows[window.index - 1]:
            raise FusionError(f"window {window} does not match the plan")
        W = self.config.window_len
        if post.frames != W:
            raise FusionError(f"window {window.index} has {post.frames} frames, expected {W}")
        if post.vocab_size != self.vocab_size:
            raise FusionError(f"window {window.index} has vocab size {post.vocab_size}, expected {self.vocab_size}")
        p = to_probs(post).values
        t0 = max(window.start, 0)
        t1 = min(window.end, self.total_frames)
        if t1 > t0:
            rel = slice(t0 - window.start, t1 - window.start)
            w = self.weights.w[rel]
            self._acc[t0:t1] += w[:, None] * p[rel]
            self._tot[t0:t1] += w
        self.observed += 1
        return self

    def is_converged(self, t: int) -> bool:
        _, k_max = covering_range(self.config, t)
        return min(k_max, len(self.windows)) <= self.observed

    def fused(self, t: int) -> tuple[np.ndarray, bool]:
        if not 0 <= t < self.total_frames:
            raise IndexError(f"frame {t} outside [0, {self.total_frames})")
        tot = self._tot[t]
        if tot <= 0:
            raise FusionError(f"frame {t} not yet covered by an observed window")
        return self._acc[t] / tot, self.is_converged(t)

    def fused_rows(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        stop = self.total_frames if stop is None else stop
        tot = self._tot[start:stop]
        if np.any(tot <= 0):
            bad = start + int(np.argmax(tot <= 0))
            raise FusionError(f"frame {bad} not yet covered by an observed window")
        return self._acc[start:stop] / tot[:, None]

    def fused_matrix(self) -> PosteriorMatrix:
        return PosteriorMatrix(self.fused_rows(), Kind.PROBS)


def fuse(
    config: WindowConfig,
    weights: FusionWeights,
    total_frames: int,
    posteriors: Iterable[tuple[Window, PosteriorMatrix]],
    vocab_size: int,
) -> FusionState:
    """Ingest ``(window, posterior)`` pairs in order and return the final state."""
    state = FusionState(config, weights, total_frames, vocab_size)
    for window, post in posteriors:
        state.ingest(window, post)
    if not state.complete:
        raise FusionError(f"only {state.observed} of {len(state.windows)} windows supplied")
    return state
