"""Backoff n-gram language model over token ids, read from ARPA text files."""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Sequence

from .core import FormatError, Vocab

LN10 = math.log(10.0)
BOS, EOS, UNK = -1, -2, -3
_SPECIALS = {"<s>": BOS, "</s>": EOS, "<unk>": UNK}
# log10 probability used for tokens the model has never seen (ARPA convention)
FLOOR_LOG10 = -99.0

_COUNT_RE = re.compile(r"^ngram\s+(\d+)\s*=\s*(\d+)$")
_SECTION_RE = re.compile(r"^\\(\d+)-grams:$")


class NgramModel:
    """Katz-style backoff lookup. Stored values are log10; queries return natural log."""

    def __init__(self, order: int, probs: dict, backoffs: dict):
        self.order = order
        self.probs = probs
        self.backoffs = backoffs

    @property
    def has_bos(self) -> bool:
        return (BOS,) in self.probs or (BOS,) in self.backoffs

    @property
    def has_eos(self) -> bool:
        return (EOS,) in self.probs

    def initial_context(self) -> tuple:
        return (BOS,) if self.has_bos else ()

    def _log10(self, token: int, ctx: tuple) -> float:
        # iterative form of: p(w|ctx) if seen else bo(ctx) + p(w|ctx[1:])
        penalty = 0.0
        while True:
            hit = self.probs.get(ctx + (token,))
            if hit is not None:
                return penalty + hit
            if not ctx:
                unk = self.probs.get((UNK,))
                return penalty + (unk if unk is not None else FLOOR_LOG10)
            penalty += self.backoffs.get(ctx, 0.0)
            ctx = ctx[1:]

    def logprob(self, token: int, context: Sequence[int] = ()) -> float:
        ctx = tuple(context)
        n = self.order - 1
        ctx = ctx[len(ctx) - n :] if n > 0 else ()
        return self._log10(token, ctx) * LN10

    def eos_logprob(self, context: Sequence[int]) -> float:
        """Natural-log end-of-sentence score, 0 when the model has no ``</s>``."""
        if not self.has_eos:
            return 0.0
        return self.logprob(EOS, context)


def load_arpa(path, vocab: Vocab) -> NgramModel:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln.strip() for ln in text.splitlines()]
    counts: dict[int, int] = {}
    probs: dict[tuple, float] = {}
    backoffs: dict[tuple, float] = {}
    parsed: dict[int, int] = {}

    def resolve(tok: str, lineno: int) -> int:
        if tok in _SPECIALS:
            return _SPECIALS[tok]
        try:
            return vocab.id(tok)
        except KeyError:
            raise FormatError(f"{path}:{lineno}: unknown token {tok!r}") from None

    section = None  # None (preamble), "data", or an n-gram order
    ended = False
    for lineno, ln in enumerate(lines, 1):
        if not ln:
            continue
        if ended:
            raise FormatError(f"{path}:{lineno}: content after \\end\\")
        if ln == "\\data\\":
            section = "data"
            continue
        if ln == "\\end\\":
            ended = True
            continue
        m = _SECTION_RE.match(ln)
        if m:
            section = int(m.group(1))
            if section not in counts:
                raise FormatError(f"{path}:{lineno}: section for undeclared order {section}")
            parsed[section] = 0
            continue
        if section is None:
            continue  # free text before \data\ is allowed
        if section == "data":
            m = _COUNT_RE.match(ln)
            if not m:
                raise FormatError(f"{path}:{lineno}: malformed count line {ln!r}")
            counts[int(m.group(1))] = int(m.group(2))
            continue
        fields = ln.split()
        n = section
        if len(fields) not in (n + 1, n + 2):
            raise FormatError(f"{path}:{lineno}: expected {n} tokens in {ln!r}")
        try:
            lp = float(fields[0])
            bo = float(fields[n + 1]) if len(fields) == n + 2 else None
        except ValueError:
            raise FormatError(f"{path}:{lineno}: malformed number in {ln!r}") from None
        key = tuple(resolve(t, lineno) for t in fields[1 : n + 1])
        probs[key] = lp
        if bo is not None:
            backoffs[key] = bo
        parsed[n] += 1

    if not counts:
        raise FormatError(f"{path}: missing \\data\\ section")
    if not ended:
        raise FormatError(f"{path}: missing \\end\\ marker")
    for n, c in sorted(counts.items()):
        if parsed.get(n, 0) != c:
            raise FormatError(f"{path}: declared {c} {n}-grams, found {parsed.get(n, 0)}")
    return NgramModel(max(counts), probs, backoffs)
