"""Flesch-Kincaid Grade Level with a vowel-group syllable heuristic."""

from __future__ import annotations

import re
from typing import List, Sequence

from ..errors import MetricError

_VOWEL_GROUP = re.compile(r"[aeiouy]+")
_VOWELS = set("aeiouy")


def is_word(token: str) -> bool:
    return any(c.isalpha() for c in token)


def count_syllables(word: str) -> int:
    """Count maximal vowel groups, minus a silent final 'e'.

    A final consonant+"le" ("simple", "table") keeps its syllable.
    """
    letters = "".join(c for c in word.lower() if c.isalpha())
    if not letters:
        raise MetricError(f"{word!r} has no alphabetic character")
    count = len(_VOWEL_GROUP.findall(letters))
    if count > 1 and letters.endswith("e"):
        consonant_le = (
            letters.endswith("le") and len(letters) > 2 and letters[-3] not in _VOWELS
        )
        if not consonant_le:
            count -= 1
    return max(count, 1)


def split_sentences(tokens: Sequence[str]) -> List[List[str]]:
    """Split a token sequence at full stops into its nonempty sentences."""
    out: List[List[str]] = [[]]
    for tok in tokens:
        out[-1].append(tok)
        if tok == ".":
            out.append([])
    return [s for s in out if s]


def fkgl(sentences: Sequence[Sequence[str]], split_full_stops: bool = False) -> float:
    """0.39·words/sentences + 11.8·syllables/words − 15.59.

    Each sequence counts as one sentence, wordless ones included, unless
    *split_full_stops* is set.
    """
    if split_full_stops:
        sentences = [s for seq in sentences for s in split_sentences(seq)]
    n_sentences = len(sentences)
    n_words = n_syllables = 0
    for seq in sentences:
        words = [t for t in seq if is_word(t)]
        n_words += len(words)
        n_syllables += sum(count_syllables(w) for w in words)
    if n_words == 0:
        raise MetricError("FKGL needs at least one word")
    return 0.39 * (n_words / n_sentences) + 11.8 * (n_syllables / n_words) - 15.59
