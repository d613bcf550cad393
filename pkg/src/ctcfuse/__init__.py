"""Long-form CTC inference: sliding-window posterior fusion, decoding, alignment and scoring."""

from ._accel import BACKEND
from .core import Kind, PosteriorMatrix, Vocab, load_vocab, read_pfm, to_probs, write_pfm
from .ctc import (
    Alignment,
    BeamConfig,
    CtcLoss,
    beam_decode,
    collapse,
    cr_ctc_loss,
    ctc_forward,
    forced_align,
    greedy_decode,
)
from .fusion import FusionState, FusionWeights, alpha, hann_weights, uniform_weights
from .lm import NgramModel, load_arpa
from .windowing import Mode, Window, WindowConfig, coverage, plan

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "BeamConfig",
    "CtcLoss",
    "beam_decode",
    "collapse",
    "cr_ctc_loss",
    "ctc_forward",
    "forced_align",
    "greedy_decode",
    "BACKEND",
    "Kind",
    "PosteriorMatrix",
    "Vocab",
    "load_vocab",
    "read_pfm",
    "to_probs",
    "write_pfm",
    "FusionState",
    "FusionWeights",
    "alpha",
    "hann_weights",
    "uniform_weights",
    "NgramModel",
    "load_arpa",
    "Mode",
    "Window",
    "WindowConfig",
    "coverage",
    "plan",
    "__version__",
]
