"""Transcript normalisation for scoring, and word error rate."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels

DEFAULT_TAG_PATTERNS = (r"\[[^\]]*\]",)
DEFAULT_FILLERS = frozenset({"uh", "oh", "unintelligible"})
DEFAULT_COMMANDS = (
    "new paragraph",
    "next paragraph",
    "new line",
    "newline",
    "next line",
    "full stop",
    "period",
    "comma",
    "semicolon",
    "question mark",
    "exclamation mark",
    "exclamation point",
    "open parenthesis",
    "close parenthesis",
    "open bracket",
    "close bracket",
)
DEFAULT_UNITS = {
    "millimeters": "mm",
    "millimeter": "mm",
    "millimetres": "mm",
    "millimetre": "mm",
    "centimeters": "cm",
    "centimeter": "cm",
    "centimetres": "cm",
    "centimetre": "cm",
    "milligrams": "mg",
    "milligram": "mg",
    "micrograms": "mcg",
    "microgram": "mcg",
    "kilograms": "kg",
    "kilogram": "kg",
    "milliliters": "ml",
    "milliliter": "ml",
    "millilitres": "ml",
    "millilitre": "ml",
    "millimeters of mercury": "mmhg",
}
# a digit word next to these is part of a larger number ("one hundred", "twenty two")
_MAGNITUDES = frozenset({"hundred", "thousand", "million", "billion"})
_TENS = frozenset({"twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"})
DEFAULT_DIGITS = {
    w: str(i)
    for i, w in enumerate(["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"])
}


@dataclass(frozen=True)
class NormRules:
    deid_tag_patterns: tuple[str, ...] = DEFAULT_TAG_PATTERNS
    filler_words: frozenset = DEFAULT_FILLERS
    command_phrases: tuple[str, ...] = DEFAULT_COMMANDS
    unit_map: dict = field(default_factory=lambda: dict(DEFAULT_UNITS))
    digit_map: dict = field(default_factory=lambda: dict(DEFAULT_DIGITS))

    def __post_init__(self):
        lower = lambda m: {k.lower(): v for k, v in m.items()}  # noqa: E731
        object.__setattr__(self, "filler_words", frozenset(w.lower() for w in self.filler_words))
        cmds = sorted({c.lower() for c in self.command_phrases}, key=lambda c: (-len(c.split()), -len(c), c))
        object.__setattr__(self, "command_phrases", tuple(cmds))
        object.__setattr__(self, "unit_map", lower(self.unit_map))
        object.__setattr__(self, "digit_map", lower(self.digit_map))


_KINDS = ("tag", "command", "filler", "unit", "digit")


def load_rules(path, base: NormRules | None = None) -> NormRules:
    """Extend ``base`` (defaults if omitted) with ``kind<TAB>pattern<TAB>replacement`` lines.

    ``kind`` is one of tag, command, filler, unit, digit; replacement is only
    read for unit and digit. Blank lines and ``#`` comments are skipped.
    """
    base = base or NormRules()
    tags = list(base.deid_tag_patterns)
    fillers = set(base.filler_words)
    cmds = list(base.command_phrases)
    units = dict(base.unit_map)
    digits = dict(base.digit_map)
    for lineno, ln in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not ln.strip() or ln.lstrip().startswith("#"):
            continue
        parts = ln.split("\t")
        kind = parts[0].strip()
        if kind not in _KINDS or len(parts) < 2:
            raise ValueError(f"{path}:{lineno}: expected kind<TAB>pattern[<TAB>replacement]")
        pattern = parts[1]
        if kind in ("unit", "digit"):
            if len(parts) < 3:
                raise ValueError(f"{path}:{lineno}: {kind} rule needs a replacement")
            (units if kind == "unit" else digits)[pattern.lower()] = parts[2]
        elif kind == "tag":
            re.compile(pattern)
            tags.append(pattern)
        elif kind == "command":
            cmds.append(pattern)
        else:
            fillers.add(pattern)
    return replace(
        base,
        deid_tag_patterns=tuple(tags),
        filler_words=frozenset(fillers),
        command_phrases=tuple(cmds),
        unit_map=units,
        digit_map=digits,
    )


def _phrase_regex(phrase: str) -> str:
    # words may be separated by any run of non-word characters ("new-line", "new, paragraph")
    words = [re.escape(w) for w in phrase.split()]
    return r"(?<![\w])" + r"[\W_]+".join(words) + r"(?![\w])"


def _strip_punct(text: str) -> str:
    text = re.sub(r"(?<=\d),(?=\d{3}\b)", "", text)  # 1,000 -> 1000
    text = re.sub(r"(?<=\w)['’](?=\w)", "", text)  # patient's -> patients
    # keep decimal points between digits, everything else non-word becomes space
    text = re.sub(r"(?!(?<=\d)\.(?=\d))[^\w\s]|_", " ", text)
    return text


def _map_phrases(words: list[str], mapping: dict) -> list[str]:
    if not mapping:
        return words
    longest = max(len(k.split()) for k in mapping)
    out = []
    i = 0
    while i < len(words):
        for n in range(min(longest, len(words) - i), 0, -1):
            key = " ".join(words[i : i + n])
            if key in mapping:
                out.extend(mapping[key].split())
                i += n
                break
        else:
            out.append(words[i])
            i += 1
    return out


def _normalize_once(text: str, rules: NormRules) -> str:
    for pat in rules.deid_tag_patterns:
        text = re.sub(pat, " ", text)
    for cmd in rules.command_phrases:
        text = re.sub(_phrase_regex(cmd), " ", text, flags=re.IGNORECASE)
    text = text.lower()
    text = _strip_punct(text)
    words = [w for w in text.split() if w not in rules.filler_words]
    words = _map_phrases(words, rules.unit_map)
    words = _map_digits(words, rules.digit_map)
    return " ".join(words)


def _map_digits(words: list[str], mapping: dict) -> list[str]:
    out = []
    for i, w in enumerate(words):
        nxt = words[i + 1] if i + 1 < len(words) else ""
        prev = words[i - 1] if i else ""
        if w in mapping and nxt not in _MAGNITUDES and prev not in _TENS:
            out.append(mapping[w])
        else:
            out.append(w)
    return out


def normalize(text: str, rules: NormRules | None = None) -> str:
    """Apply the scoring normalisation until it reaches a fixed point.

    One pass removes de-identification tags, voice-command phrases, casing,
    punctuation and fillers, then abbreviates units and writes single-digit
    number words as digits. Repeating the pass makes the result idempotent
    when a removal exposes a new match (e.g. "new uh line").
    """
    rules = rules or NormRules()
    for _ in range(8):
        nxt = _normalize_once(text, rules)
        if nxt == text:
            break
        text = nxt
    return text


@dataclass(frozen=True)
class WerReport:
    substitutions: int
    deletions: int
    insertions: int
    ref_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        if self.ref_words == 0:
            return 0.0 if self.errors == 0 else math.inf
        return self.errors / self.ref_words

    def __add__(self, other: "WerReport") -> "WerReport":
        return WerReport(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.ref_words + other.ref_words,
        )


def _encode(ref_words, hyp_words):
    index = {}
    ref = np.array([index.setdefault(w, len(index)) for w in ref_words], dtype=np.int64)
    hyp = np.array([index.setdefault(w, len(index)) for w in hyp_words], dtype=np.int64)
    return ref, hyp


def word_errors(ref_words, hyp_words) -> WerReport:
    ref, hyp = _encode(list(ref_words), list(hyp_words))
    s, d, i = kernels.edit_ops(ref, hyp)
    return WerReport(int(s), int(d), int(i), len(ref))


def wer(ref: str, hyp: str, rules: NormRules | None = None, apply_norm: bool = True) -> WerReport:
    if apply_norm:
        rules = rules or NormRules()
        ref, hyp = normalize(ref, rules), normalize(hyp, rules)
    return word_errors(ref.split(), hyp.split())
