"""Synthetic complex/simple corpora with a ground-truth edit log.

Complex sentences are assembled from common filler words, named entities,
rare words, optional parenthetical spans and optional clause-joining
trigger words.  The simple side replaces every rare word by its simple
counterpart, drops parenthetical spans and, for split sentences, turns
the trigger into a full stop.

Rare words, their replacements, span tokens and full stops never occur as
filler, so the logged substitutions and deletions are exactly the
substitutions and deletions a minimal edit alignment finds.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from .errors import ConfigError
from .textproc import Gazetteer, ParallelCorpus, TokenSeq

logger = logging.getLogger(__name__)

T = TypeVar("T")

FULL_STOP = "."

DEFAULT_SUBSTITUTIONS: Dict[str, str] = {
    "utilize": "use", "commence": "start", "approximately": "about",
    "purchase": "buy", "assist": "help", "residence": "home",
    "numerous": "many", "terminate": "end", "inquire": "ask",
    "sufficient": "enough", "obtain": "get", "demonstrate": "show",
    "endeavour": "try", "beverage": "drink", "automobile": "car",
    "physician": "doctor", "additional": "more", "construct": "build",
    "comprehend": "understand", "observe": "see", "inform": "tell",
    "reside": "live", "vessel": "ship", "consume": "eat",
    "modification": "change", "subsequently": "later", "prior": "before",
    "individuals": "people", "adjacent": "near", "initiate": "begin",
    "facilitate": "ease", "remuneration": "pay", "frequently": "often",
    "magnitude": "size", "participate": "join", "proceed": "go",
    "acquire": "gain", "contemporary": "modern", "sorrowful": "sad",
    "velocity": "speed",
}

DEFAULT_FILLER: Tuple[str, ...] = (
    "the", "a", "of", "in", "on", "to", "with", "for", "at", "from",
    "city", "town", "river", "school", "market", "house", "garden", "road",
    "team", "family", "story", "letter", "plan", "project", "report", "game",
    "book", "song", "bridge", "village", "council", "station", "museum",
    "small", "large", "old", "new", "quiet", "busy", "green", "bright",
    "early", "local", "famous", "strong", "young", "simple", "long",
    "walked", "worked", "visited", "wrote", "opened", "closed", "found",
    "played", "moved", "watched", "painted", "carried", "called", "kept",
    "year", "day", "night", "week", "morning", "summer", "winter",
    "people", "children", "friends", "workers", "students", "farmers",
    "was", "were", "has", "had", "is", "will", "would", "could",
    "very", "still", "also", "then", "there", "here", "now", "again",
    "his", "her", "their", "its", "our", "this", "that", "these",
    "two", "three", "four", "five", "first", "second", "last", "next",
)

DEFAULT_SPANS: Tuple[Tuple[str, ...], ...] = (
    ("(", "born", "in", "spring", ")"),
    ("(", "shown", "below", ")"),
    ("(", "formerly", "known", "otherwise", ")"),
    ("(", "as", "reported", "earlier", ")"),
    ("(", "according", "to", "records", ")"),
    ("(", "now", "closed", ")"),
)

DEFAULT_TRIGGERS: Tuple[str, ...] = ("and", "while", "because")

DEFAULT_ENTITIES: Dict[str, List[str]] = {
    "PER": ["John", "Mary", "Bob", "Alice Brown", "Peter Smith", "Anna"],
    "LOC": ["Paris", "London", "New York", "Berlin", "Lake Tana"],
    "ORG": ["Acme Corp", "City Council", "Red Cross"],
    "MISC": ["English", "Olympic Games"],
}


@dataclass
class SyntheticRuleSet:
    """Rewrite rules and word pools for the generator."""

    substitutions: Dict[str, str] = field(default_factory=dict)
    spans: List[Tuple[str, ...]] = field(default_factory=list)
    triggers: List[str] = field(default_factory=list)
    entities: Dict[str, List[str]] = field(default_factory=dict)
    filler: List[str] = field(default_factory=lambda: list(DEFAULT_FILLER))

    def __post_init__(self) -> None:
        if not self.substitutions and not self.spans and not self.triggers:
            raise ConfigError("synthetic ruleset has no substitutions, spans or split triggers")
        rare, simple = set(self.substitutions), set(self.substitutions.values())
        if rare & simple:
            raise ConfigError(f"words are both rare and simple: {sorted(rare & simple)}")
        triggers = set(self.triggers)
        clashes = triggers & (rare | simple | {FULL_STOP})
        if clashes:
            raise ConfigError(f"split triggers reuse rewrite words: {sorted(clashes)}")
        span_tokens = {t for span in self.spans for t in span}
        clashes = span_tokens & (rare | simple | triggers | {FULL_STOP})
        if clashes:
            raise ConfigError(f"span tokens reuse rewrite or trigger words: {sorted(clashes)}")
        reserved = rare | simple | triggers | span_tokens | {FULL_STOP}
        self.filler = [w for w in self.filler if w not in reserved]
        if not self.filler:
            raise ConfigError("synthetic ruleset leaves no filler words")

    @classmethod
    def default(cls) -> "SyntheticRuleSet":
        return cls(
            substitutions=dict(DEFAULT_SUBSTITUTIONS),
            spans=list(DEFAULT_SPANS),
            triggers=list(DEFAULT_TRIGGERS),
            entities={k: list(v) for k, v in DEFAULT_ENTITIES.items()},
        )

    @classmethod
    def from_file(cls, path: Path) -> "SyntheticRuleSet":
        """Load a JSON ruleset (keys as the dataclass fields; all optional)."""
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        kwargs = {
            "substitutions": dict(data.get("substitutions", {})),
            "spans": [tuple(s.split()) if isinstance(s, str) else tuple(s) for s in data.get("spans", [])],
            "triggers": list(data.get("triggers", [])),
            "entities": {k: list(v) for k, v in data.get("entities", {}).items()},
        }
        if "filler" in data:
            kwargs["filler"] = list(data["filler"])
        return cls(**kwargs)  # type: ignore[arg-type]

    def gazetteer(self) -> Gazetteer:
        return Gazetteer.from_lists(self.entities)


@dataclass
class EditRecord:
    """What the generator did to one pair."""

    substitutions: List[Tuple[str, str]] = field(default_factory=list)
    deleted_spans: List[Tuple[str, ...]] = field(default_factory=list)
    split: Optional[str] = None

    @property
    def n_substitutions(self) -> int:
        """Token substitutions, the split's trigger-to-full-stop included."""
        return len(self.substitutions) + (1 if self.split else 0)

    @property
    def n_deletions(self) -> int:
        return sum(len(s) for s in self.deleted_spans)

    def to_dict(self) -> Dict[str, object]:
        return {
            "substitutions": [list(p) for p in self.substitutions],
            "deleted_spans": [" ".join(s) for s in self.deleted_spans],
            "split": self.split,
            "sub": self.n_substitutions,
            "del": self.n_deletions,
        }


@dataclass
class SyntheticCorpus:
    corpus: ParallelCorpus
    log: List[EditRecord]

    def totals(self) -> Dict[str, int]:
        return {
            "sub": sum(r.n_substitutions for r in self.log),
            "del": sum(r.n_deletions for r in self.log),
            "split": sum(1 for r in self.log if r.split),
        }

    def save(self, out_dir: Path, ruleset: SyntheticRuleSet) -> Dict[str, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "complex": out_dir / "complex.txt",
            "simple": out_dir / "simple.txt",
            "edits": out_dir / "edits.jsonl",
            "gazetteer": out_dir / "gazetteer",
        }
        self.corpus.save(paths["complex"], paths["simple"])
        paths["edits"].write_text(
            "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in self.log),
            encoding="utf-8",
        )
        ruleset.gazetteer().save(paths["gazetteer"])
        return paths


class SyntheticGenerator:
    """Seeded sampler of (complex, simple) pairs."""

    def __init__(
        self,
        ruleset: SyntheticRuleSet,
        rng: np.random.Generator,
        span_prob: float = 0.35,
        split_prob: float = 0.3,
        entity_prob: float = 0.6,
        max_rare: int = 2,
    ) -> None:
        self.rules = ruleset
        self.rng = rng
        self.span_prob = span_prob if ruleset.spans else 0.0
        self.split_prob = split_prob if ruleset.triggers else 0.0
        self.entity_prob = entity_prob
        self.max_rare = max_rare
        self._rare = sorted(ruleset.substitutions)
        self._entities = [e.split() for label in sorted(ruleset.entities) for e in ruleset.entities[label]]

    def _pick(self, items: Sequence[T]) -> T:
        return items[int(self.rng.integers(len(items)))]

    def _clause(self, record: EditRecord) -> Tuple[List[str], List[str]]:
        """One clause as (complex tokens, simple tokens)."""
        words: List[List[str]] = [[self._pick(self.rules.filler)] for _ in range(int(self.rng.integers(3, 7)))]
        if self._entities and self.rng.random() < self.entity_prob:
            words.insert(int(self.rng.integers(len(words) + 1)), list(self._pick(self._entities)))
        simple_words = [list(w) for w in words]
        if self._rare:
            k = int(self.rng.integers(1, min(self.max_rare, len(self._rare)) + 1))
            chosen = [self._rare[i] for i in self.rng.choice(len(self._rare), size=k, replace=False)]
            for rare in chosen:
                # insert between words so multi-token entities stay intact
                pos = int(self.rng.integers(len(words) + 1))
                simple = self.rules.substitutions[rare]
                words.insert(pos, [rare])
                simple_words.insert(pos, [simple])
                record.substitutions.append((rare, simple))
        return [t for w in words for t in w], [t for w in simple_words for t in w]

    def pair(self) -> Tuple[TokenSeq, TokenSeq, EditRecord]:
        record = EditRecord()
        c1, s1 = self._clause(record)
        if self.rng.random() < self.span_prob:
            span = tuple(self._pick(self.rules.spans))
            c1 = c1 + list(span)
            record.deleted_spans.append(span)
        if self.rng.random() < self.split_prob:
            trigger = self._pick(self.rules.triggers)
            c2, s2 = self._clause(record)
            record.split = trigger
            complex_side = c1 + [trigger] + c2 + [FULL_STOP]
            simple_side = s1 + [FULL_STOP] + s2 + [FULL_STOP]
        else:
            complex_side = c1 + [FULL_STOP]
            simple_side = s1 + [FULL_STOP]
        return TokenSeq(complex_side), TokenSeq(simple_side), record

    def generate(self, n_pairs: int) -> SyntheticCorpus:
        if n_pairs < 1:
            raise ConfigError(f"n_pairs must be >= 1, got {n_pairs}")
        pairs, log = [], []
        for _ in range(n_pairs):
            c, s, r = self.pair()
            pairs.append((c, s))
            log.append(r)
        logger.info("Generated %d synthetic pairs", n_pairs)
        return SyntheticCorpus(ParallelCorpus(pairs), log)


def generate_corpus(ruleset: SyntheticRuleSet, n_pairs: int, rng: np.random.Generator) -> SyntheticCorpus:
    return SyntheticGenerator(ruleset, rng).generate(n_pairs)
