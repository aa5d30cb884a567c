"""Automatic evaluation: SARI, BLEU, FKGL, TER and output statistics."""

from .bleu import bleu_corpus
from .readability import count_syllables, fkgl
from .sari import SariScore, corpus_sari, reverse_sari, sari
from .stats import CorpusStats, copy_rate, corpus_stats
from .ter import EditBreakdown, EditCounts, count_edits, edit_distance, ter_with_edits

__all__ = [
    "CorpusStats",
    "EditBreakdown",
    "EditCounts",
    "SariScore",
    "bleu_corpus",
    "copy_rate",
    "corpus_sari",
    "corpus_stats",
    "count_edits",
    "count_syllables",
    "edit_distance",
    "fkgl",
    "reverse_sari",
    "sari",
    "ter_with_edits",
]
