"""Synthetic per-window logits with a planted frame-label track.

Each window sees the true label of every frame boosted by ``peak`` plus
Gaussian noise whose scale grows toward the window edges, mimicking a model
that has less context near a window boundary. Frames outside ``[0, T)``
(start padding in streaming mode, tail overhang offline) see blank.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import BLANK_ID, Kind, PosteriorMatrix
from .fusion import hann_weights
from .windowing import Window


@dataclass(frozen=True)
class SynthSpec:
    track: np.ndarray
    vocab_size: int
    peak: float = 4.0
    sigma: float = 0.0
    gamma: float = 3.0
    seed: int = 0

    def __post_init__(self):
        track = np.asarray(self.track, dtype=np.int64)
        if track.ndim != 1:
            raise ValueError("track must be 1-D")
        if track.size and (track.min() < 0 or track.max() >= self.vocab_size):
            raise ValueError("track labels out of vocabulary range")
        if self.peak <= 0 or self.sigma < 0 or self.gamma < 0:
            raise ValueError("peak must be > 0, sigma and gamma >= 0")
        track.flags.writeable = False
        object.__setattr__(self, "track", track)

    @property
    def frames(self) -> int:
        return self.track.size


def edge_profile(W: int, gamma: float) -> np.ndarray:
    """Noise multiplier per relative position: ``1 + gamma * (1 - hann)``."""
    return 1.0 + gamma * (1.0 - hann_weights(W).w)


def _window_rng(seed: int, start: int) -> np.random.Generator:
    # keyed by window start so a given window draws the same noise in any plan
    return np.random.default_rng([seed, int(start < 0), abs(start)])


def window_logits(spec: SynthSpec, window: Window) -> PosteriorMatrix:
    W = window.end - window.start
    t = np.arange(window.start, window.end)
    inside = (t >= 0) & (t < spec.frames)
    labels = np.full(W, BLANK_ID, dtype=np.int64)
    labels[inside] = spec.track[t[inside]]
    logits = np.zeros((W, spec.vocab_size))
    logits[np.arange(W), labels] = spec.peak
    if spec.sigma > 0:
        noise = _window_rng(spec.seed, window.start).standard_normal((W, spec.vocab_size))
        logits += noise * (spec.sigma * edge_profile(W, spec.gamma))[:, None]
    return PosteriorMatrix(logits, Kind.LOGITS)


def random_track(
    n_frames: int,
    vocab_size: int,
    rng: np.random.Generator,
    run: tuple[int, int] = (2, 5),
    gap: tuple[int, int] = (1, 3),
) -> np.ndarray:
    """Alternating blank gaps and single-token runs; lengths uniform in the given ranges."""
    out = np.zeros(n_frames, dtype=np.int64)
    t = int(rng.integers(gap[0], gap[1] + 1))
    while t < n_frames:
        n = int(rng.integers(run[0], run[1] + 1))
        out[t : t + n] = rng.integers(1, vocab_size)
        t += n + int(rng.integers(gap[0], gap[1] + 1))
    return out


def load_track(path) -> np.ndarray:
    ids = [int(ln) for ln in Path(path).read_text().split()]
    return np.asarray(ids, dtype=np.int64)


def write_track(track, path) -> None:
    Path(path).write_text("".join(f"{int(x)}\n" for x in track))


_SPEC_KEYS = {"peak": float, "sigma": float, "gamma": float, "seed": int, "vocab_size": int}


def load_spec(path, track) -> SynthSpec:
    """Read ``key=value`` lines (peak, sigma, gamma, seed, vocab_size; ``#`` comments)."""
    kw = {}
    for lineno, ln in enumerate(Path(path).read_text().splitlines(), 1):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        key, sep, val = ln.partition("=")
        key = key.strip()
        if not sep or key not in _SPEC_KEYS:
            raise ValueError(f"{path}:{lineno}: expected one of {sorted(_SPEC_KEYS)} as key=value")
        kw[key] = _SPEC_KEYS[key](val.strip())
    if "vocab_size" not in kw:
        raise ValueError(f"{path}: vocab_size is required")
    return SynthSpec(track=track, **kw)


def dump_spec(spec: SynthSpec) -> str:
    return "".join(f"{k}={getattr(spec, k)}\n" for k in _SPEC_KEYS)
