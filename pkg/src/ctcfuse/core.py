"""Shared types and file formats: vocabularies, posterior matrices, PFM1 files."""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

BLANK_ID = 0
PFM_MAGIC = b"PFM1"
_PFM_HEADER = struct.Struct("<4sBII")  # 13 bytes


class FormatError(ValueError):
    """Malformed vocabulary, posterior or alignment file."""


class Kind(enum.IntEnum):
    LOGITS = 0
    LOG_PROBS = 1
    PROBS = 2


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]
    blank_id: int = BLANK_ID
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        object.__setattr__(self, "tokens", tokens)
        if len(tokens) < 2:
            raise FormatError(f"vocabulary needs at least 2 tokens, got {len(tokens)}")
        if self.blank_id != BLANK_ID:
            raise FormatError("blank_id must be 0")
        index = {}
        for i, tok in enumerate(tokens):
            if tok in index:
                raise FormatError(f"duplicate token {tok!r} at lines {index[tok]} and {i}")
            index[tok] = i
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.tokens)

    def id(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise KeyError(f"unknown token {token!r}") from None

    def encode(self, text: str) -> list[int]:
        """Map whitespace-separated token strings to ids (blank not allowed)."""
        ids = [self.id(t) for t in text.split()]
        if self.blank_id in ids:
            raise ValueError("reference contains the blank token")
        return ids

    def texts(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]

    def detokenize(self, ids: Sequence[int]) -> str:
        """Join token texts; SentencePiece '▁' markers become word boundaries."""
        toks = self.texts(ids)
        if any("▁" in t for t in toks):
            return " ".join("".join(toks).replace("▁", " ").split())
        return " ".join(toks)


def load_vocab(path) -> Vocab:
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError(f"{path}: not valid UTF-8 ({e})") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln.rstrip("\r") for ln in lines]
    if not lines:
        raise FormatError(f"{path}: empty vocabulary file")
    return Vocab(tuple(lines))


@dataclass(frozen=True)
class PosteriorMatrix:
    """T x V frame scores of a given :class:`Kind`, read-only once built."""

    values: np.ndarray
    kind: Kind = Kind.PROBS

    def __post_init__(self):
        vals = np.array(self.values, copy=True)
        if vals.dtype not in (np.float32, np.float64):
            vals = vals.astype(np.float64)
        if vals.ndim != 2:
            raise ValueError(f"posterior must be 2-D, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)) and self.kind != Kind.LOG_PROBS:
            raise ValueError("posterior contains non-finite values")
        kind = Kind(self.kind)
        if vals.shape[0]:
            if kind == Kind.PROBS:
                if np.any(vals < 0):
                    raise ValueError("probs contain negative entries")
                if np.max(np.abs(vals.sum(axis=1, dtype=np.float64) - 1.0)) > 1e-5:
                    raise ValueError("probs rows do not sum to 1")
            elif kind == Kind.LOG_PROBS:
                if np.any(np.isnan(vals)) or np.any(vals == np.inf):
                    raise ValueError("log_probs contain NaN or +inf")
                s = np.exp(vals.astype(np.float64)).sum(axis=1)
                if np.max(np.abs(s - 1.0)) > 1e-5:
                    raise ValueError("log_probs rows do not exponentiate to a distribution")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "kind", kind)

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.values.shape[1]

    def slice(self, start: int, stop: int) -> "PosteriorMatrix":
        return PosteriorMatrix(self.values[start:stop], self.kind)


def to_probs(m: PosteriorMatrix) -> PosteriorMatrix:
    """Row-wise softmax / exp / renormalisation into float64 probabilities."""
    x = m.values.astype(np.float64)
    if m.kind == Kind.PROBS:
        if m.values.dtype == np.float64 and (
            x.shape[0] == 0 or np.max(np.abs(x.sum(axis=1) - 1.0)) <= 1e-12
        ):
            return m
        p = x
    elif m.kind == Kind.LOG_PROBS:
        p = np.exp(x)
    else:
        if x.shape[0] == 0:
            return PosteriorMatrix(x, Kind.PROBS)
        p = np.exp(x - x.max(axis=1, keepdims=True))
    if p.shape[0]:
        p = p / p.sum(axis=1, keepdims=True)
    return PosteriorMatrix(p, Kind.PROBS)


def to_log_probs(m: PosteriorMatrix) -> np.ndarray:
    """Float64 log-probabilities (``-inf`` for zero mass)."""
    if m.kind == Kind.LOG_PROBS:
        return m.values.astype(np.float64)
    if m.kind == Kind.LOGITS:
        x = m.values.astype(np.float64)
        if x.shape[0] == 0:
            return x
        x = x - x.max(axis=1, keepdims=True)
        return x - np.log(np.exp(x).sum(axis=1, keepdims=True))
    with np.errstate(divide="ignore"):
        return np.log(m.values.astype(np.float64))


def write_pfm(m: PosteriorMatrix, path) -> None:
    T, V = m.values.shape
    header = _PFM_HEADER.pack(PFM_MAGIC, int(m.kind), T, V)
    payload = np.ascontiguousarray(m.values, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_pfm(path) -> PosteriorMatrix:
    data = Path(path).read_bytes()
    if len(data) < _PFM_HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, kind, T, V = _PFM_HEADER.unpack_from(data)
    if magic != PFM_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if kind not in (0, 1, 2):
        raise FormatError(f"{path}: unknown kind byte {kind}")
    expected = _PFM_HEADER.size + 4 * T * V
    if len(data) != expected:
        raise FormatError(f"{path}: payload is {len(data) - _PFM_HEADER.size} bytes, header implies {4 * T * V}")
    vals = np.frombuffer(data, dtype="<f4", offset=_PFM_HEADER.size).reshape(T, V).astype(np.float32)
    if not np.all(np.isfinite(vals)):
        raise FormatError(f"{path}: non-finite values in payload")
    try:
        return PosteriorMatrix(vals, Kind(kind))
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None
