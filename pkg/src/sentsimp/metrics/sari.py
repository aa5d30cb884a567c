"""SARI: scores additions, kept n-grams and deletions against source and references.

Per n-gram order the three operations are scored on n-gram *types*:
addition and keep by F1, deletion by precision only.  References are
counted by how many of them contain an n-gram, so a single reference
reduces to plain set arithmetic.  An operation whose candidate and
reference sets are both empty at some order scores 1 there.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Sequence, Tuple

from ..errors import MetricError

MAX_ORDER = 4

Gram = Tuple[str, ...]


@dataclass(frozen=True)
class SariScore:
    """Total and per-operation SARI, all on a 0–100 scale."""

    total: float
    add_score: float
    keep_score: float
    del_score: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "total": self.total,
            "add": self.add_score,
            "keep": self.keep_score,
            "del": self.del_score,
        }


def ngram_set(tokens: Sequence[str], n: int) -> FrozenSet[Gram]:
    return frozenset(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _keep_score(src: FrozenSet[Gram], out: FrozenSet[Gram], refs: Counter, numref: int) -> float:
    cand = src & out
    wanted = {g for g in src if refs[g] > 0}
    if not cand and not wanted:
        return 1.0
    precision = sum(refs[g] / numref for g in cand) / len(cand) if cand else 0.0
    recall = sum(1.0 for g in wanted if g in out) / len(wanted) if wanted else 0.0
    return _f1(precision, recall)


def _del_score(src: FrozenSet[Gram], out: FrozenSet[Gram], refs: Counter, numref: int) -> float:
    cand = src - out
    wanted = {g for g in src if refs[g] < numref}
    if not cand and not wanted:
        return 1.0
    if not cand:
        return 0.0
    return sum((numref - refs[g]) / numref for g in cand) / len(cand)


def _add_score(src: FrozenSet[Gram], out: FrozenSet[Gram], refs: Counter) -> float:
    cand = out - src
    wanted = {g for g in refs if g not in src}
    if not cand and not wanted:
        return 1.0
    good = sum(1 for g in cand if refs[g] > 0)
    precision = good / len(cand) if cand else 0.0
    recall = good / len(wanted) if wanted else 0.0
    return _f1(precision, recall)


def sari_order(
    source: Sequence[str],
    output: Sequence[str],
    references: Sequence[Sequence[str]],
    n: int,
) -> Tuple[float, float, float]:
    """Return (add, keep, delete) scores in [0, 1] for n-gram order *n*."""
    src = ngram_set(source, n)
    out = ngram_set(output, n)
    refs: Counter = Counter()
    for ref in references:
        refs.update(ngram_set(ref, n))
    numref = len(references)
    return (
        _add_score(src, out, refs),
        _keep_score(src, out, refs, numref),
        _del_score(src, out, refs, numref),
    )


def sari(
    source: Sequence[str],
    output: Sequence[str],
    references: Sequence[Sequence[str]],
) -> SariScore:
    """Sentence SARI of *output* given its *source* and *references*."""
    if not references:
        raise MetricError("SARI needs at least one reference")
    if not source and not output:
        raise MetricError("SARI is undefined when source and output are both empty")
    add = keep = dele = 0.0
    for n in range(1, MAX_ORDER + 1):
        a, k, d = sari_order(source, output, references, n)
        add += a
        keep += k
        dele += d
    add, keep, dele = (100.0 * v / MAX_ORDER for v in (add, keep, dele))
    return SariScore((add + keep + dele) / 3, add, keep, dele)


def reverse_sari(
    source: Sequence[str],
    output: Sequence[str],
    reference: Sequence[str],
) -> SariScore:
    """SARI with output and reference swapped: how good the reference looks from the output."""
    return sari(source, reference, [output])


def corpus_sari(
    sources: Sequence[Sequence[str]],
    outputs: Sequence[Sequence[str]],
    references: Sequence[Sequence[Sequence[str]]],
) -> SariScore:
    """Corpus SARI: per-operation sentence scores averaged over the corpus."""
    if not (len(sources) == len(outputs) == len(references)):
        raise MetricError(
            f"corpus SARI needs aligned lists, got {len(sources)} sources, "
            f"{len(outputs)} outputs, {len(references)} reference sets"
        )
    if not sources:
        raise MetricError("corpus SARI needs at least one sentence")
    scores: List[SariScore] = [
        sari(s, o, r) for s, o, r in zip(sources, outputs, references)
    ]
    n = len(scores)
    add = sum(s.add_score for s in scores) / n
    keep = sum(s.keep_score for s in scores) / n
    dele = sum(s.del_score for s in scores) / n
    return SariScore((add + keep + dele) / 3, add, keep, dele)
