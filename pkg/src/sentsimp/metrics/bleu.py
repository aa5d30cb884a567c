"""Corpus-level BLEU with mteval-v13a defaults: no smoothing, closest-length brevity penalty."""

from __future__ import annotations

from typing import List, Sequence

from sacrebleu.metrics import BLEU

from ..errors import MetricError

MAX_ORDER = 4

# Inputs are already tokenized; sacrebleu only splits on whitespace.
_SCORER = BLEU(lowercase=False, force=True, tokenize="none", smooth_method="none", max_ngram_order=MAX_ORDER)


def _reference_streams(references: Sequence[Sequence[Sequence[str]]]) -> List[List[str]]:
    """Transpose per-sentence reference sets into sacrebleu's per-reference streams.

    Sentences with fewer references repeat their first one, which leaves
    clipped counts and the closest reference length unchanged.
    """
    width = max(len(refs) for refs in references)
    return [
        [" ".join(refs[k] if k < len(refs) else refs[0]) for refs in references]
        for k in range(width)
    ]


def bleu_corpus(
    outputs: Sequence[Sequence[str]],
    references: Sequence[Sequence[Sequence[str]]],
) -> float:
    """BLEU on a 0–100 scale; any zero n-gram precision yields 0."""
    if len(outputs) != len(references):
        raise MetricError(
            f"BLEU needs one reference set per output, got {len(outputs)} outputs "
            f"and {len(references)} reference sets"
        )
    if not outputs:
        raise MetricError("BLEU needs at least one sentence")
    if any(not refs for refs in references):
        raise MetricError("every output needs at least one reference")
    if not any(outputs):
        return 0.0
    result = _SCORER.corpus_score([" ".join(out) for out in outputs], _reference_streams(references))
    if any(count == 0 for count in result.counts):
        return 0.0
    return float(result.score)
