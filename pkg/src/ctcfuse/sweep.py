"""Stride / weight-shape sweeps on synthetic posteriors."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .ctc import collapse, greedy_decode
from .fusion import make_weights
from .pipeline import run_fusion, synth_source
from .synth import SynthSpec
from .textnorm import WerReport, word_errors
from .windowing import Mode, WindowConfig


@dataclass(frozen=True)
class SweepRecord:
    stride: int
    weights: str
    report: WerReport


def synth_trial(spec: SynthSpec, config: WindowConfig, shape: str = "hann") -> WerReport:
    """Greedy-decode fused synthetic posteriors and score against the planted track."""
    state = run_fusion(synth_source(spec), config, make_weights(shape, config.window_len), spec.frames, spec.vocab_size)
    hyp = greedy_decode(state.fused_matrix())
    return word_errors(collapse(spec.track), hyp)


def stride_sweep(
    spec: SynthSpec,
    window_len: int,
    strides: Sequence[int],
    shape: str = "hann",
    mode: Mode = Mode.OFFLINE,
    seeds: Sequence[int] | None = None,
) -> list[SweepRecord]:
    """One record per stride; errors are pooled over ``seeds`` (default: the one in ``spec``)."""
    seeds = [spec.seed] if seeds is None else list(seeds)
    out = []
    for stride in strides:
        config = WindowConfig(window_len, stride, mode)
        total = WerReport(0, 0, 0, 0)
        for seed in seeds:
            total = total + synth_trial(replace(spec, seed=seed), config, shape)
        out.append(SweepRecord(stride, shape, total))
    return out
