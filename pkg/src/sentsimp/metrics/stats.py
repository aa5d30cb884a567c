"""Output statistics: corpus TER with edit types, output length and copy rate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence

from ..errors import MetricError
from .ter import EditBreakdown, count_edits


@dataclass(frozen=True)
class CorpusStats:
    edits: EditBreakdown
    copy_rate: float

    def to_dict(self) -> Dict[str, float]:
        d = self.edits.to_dict()
        d["copy_rate"] = self.copy_rate
        return d


def copy_rate(sources: Sequence[Sequence[str]], outputs: Sequence[Sequence[str]]) -> float:
    """Fraction of output tokens that also occur in the paired source."""
    if len(sources) != len(outputs):
        raise MetricError(f"{len(sources)} sources but {len(outputs)} outputs")
    copied = total = 0
    for src, out in zip(sources, outputs):
        vocab = set(src)
        copied += sum(1 for t in out if t in vocab)
        total += len(out)
    if total == 0:
        raise MetricError("copy rate needs at least one output token")
    return copied / total


def corpus_stats(
    sources: Sequence[Sequence[str]], outputs: Sequence[Sequence[str]]
) -> CorpusStats:
    """Edits needed to turn each source into its output, averaged over the corpus.

    TER pools edits over all pairs and divides by the total output length;
    edit counts and length are per-sentence means.
    """
    if len(sources) != len(outputs):
        raise MetricError(f"{len(sources)} sources but {len(outputs)} outputs")
    if not sources:
        raise MetricError("corpus statistics need at least one pair")
    ins = dels = subs = shifts = length = 0
    for src, out in zip(sources, outputs):
        e = count_edits(src, out)
        ins += e.insertions
        dels += e.deletions
        subs += e.substitutions
        shifts += e.shifts
        length += len(out)
    if length == 0:
        raise MetricError("all outputs are empty")
    n = len(sources)
    edits = EditBreakdown(
        ter=(ins + dels + subs + shifts) / length,
        insertions=ins / n,
        deletions=dels / n,
        substitutions=subs / n,
        shifts=shifts / n,
        mean_length=length / n,
    )
    return CorpusStats(edits, copy_rate(sources, outputs))
