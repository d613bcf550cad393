"""Sliding-window plans: boundaries, coverage sets and relative positions.

Frames are the only unit here. Window ``k`` (1-based) starts at
``(k - 1) * stride`` offline; streaming mode shifts every start left by the
window length, so the first window ends exactly at frame 0 as if the input had
been prefixed with a window's worth of silence.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Mode(str, enum.Enum):
    OFFLINE = "offline"
    STREAMING = "streaming"


@dataclass(frozen=True)
class WindowConfig:
    window_len: int
    stride: int
    mode: Mode = Mode.OFFLINE

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.window_len <= 0 or self.stride <= 0:
            raise ValueError("window length and stride must be positive")
        if self.stride > self.window_len:
            raise ValueError(f"stride {self.stride} exceeds window length {self.window_len}")

    @property
    def offset(self) -> int:
        return -self.window_len if self.mode is Mode.STREAMING else 0

    def start(self, k: int) -> int:
        return (k - 1) * self.stride + self.offset


@dataclass(frozen=True)
class Window:
    index: int
    start: int
    end: int

    def rel(self, t: int) -> int:
        return t - self.start


@dataclass(frozen=True)
class Coverage:
    frame: int
    windows: tuple[int, ...]
    rels: tuple[int, ...]


def plan(config: WindowConfig, total_frames: int) -> list[Window]:
    """Enumerate windows in index order.

    Enumeration stops at the first window starting at or after
    ``total_frames``; the last window may overhang the end (callers pad). In
    streaming mode the first window is ``[-W, 0)``.
    """
    if total_frames < 0:
        raise ValueError("total_frames must be >= 0")
    W = config.window_len
    out = []
    k = 1
    while config.start(k) < total_frames:
        b = config.start(k)
        out.append(Window(k, b, b + W))
        k += 1
    return out


def covering_range(config: WindowConfig, t: int) -> tuple[int, int]:
    """Inclusive 1-based range ``(k_min, k_max)`` of windows containing frame ``t``."""
    S, W = config.stride, config.window_len
    u = t - config.offset  # position on the unshifted grid
    k_max = u // S + 1
    k_min = max(1, (u - W) // S + 2)  # smallest k with (k-1)S > u - W
    return k_min, k_max


def coverage(config: WindowConfig, windows: list[Window], t: int) -> Coverage:
    if t < 0:
        raise ValueError("frame index must be >= 0")
    k_min, k_max = covering_range(config, t)
    k_max = min(k_max, len(windows))
    ks = tuple(range(k_min, k_max + 1))
    rels = tuple(t - windows[k - 1].start for k in ks)
    return Coverage(t, ks, rels)
