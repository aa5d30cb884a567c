"""Tokenization, named-entity anonymization, vocabularies and corpus I/O.

Corpora are distributed pre-tokenized, so tokenization is whitespace
splitting.  Named entities are found with a deterministic gazetteer
(longest match, case-sensitive) and replaced by typed placeholders such
as ``PER@1`` whose numbering restarts for every sentence pair.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import (
    Dict,
    Iterable,
    Iterator,
    List,
    Optional,
    Protocol,
    Sequence,
    Tuple,
    Union,
    runtime_checkable,
)

from .errors import AlignmentError, CorpusError, VocabError

logger = logging.getLogger(__name__)

ENTITY_TYPES: Tuple[str, ...] = ("PER", "LOC", "ORG", "MISC")
PLACEHOLDER_RE = re.compile(r"^(PER|LOC|ORG|MISC)@([1-9][0-9]*)$")

PAD, UNK, BOS, EOS = 0, 1, 2, 3
RESERVED_TOKENS: Tuple[str, ...] = ("<pad>", "<unk>", "<s>", "</s>")
UNK_TOKEN = RESERVED_TOKENS[UNK]
EOS_TOKEN = RESERVED_TOKENS[EOS]

DEFAULT_MIN_COUNT = 3


# ------------------------------------------------------------------
# Token sequences
# ------------------------------------------------------------------

class TokenSeq(tuple):  # type: ignore[type-arg]
    """An immutable sequence of nonempty, whitespace-free tokens."""

    def __new__(cls, tokens: Iterable[str] = ()) -> "TokenSeq":
        items = tuple(tokens)
        for tok in items:
            if not isinstance(tok, str) or not tok or any(c.isspace() for c in tok):
                raise CorpusError(f"invalid token {tok!r}")
        return super().__new__(cls, items)

    @classmethod
    def from_line(cls, line: str) -> "TokenSeq":
        return cls(line.split())

    def to_line(self) -> str:
        return " ".join(self)

    def __repr__(self) -> str:
        return f"TokenSeq({self.to_line()!r})"


def tokenize(raw: Union[str, bytes]) -> TokenSeq:
    """Split a raw line on whitespace.

    Bytes are decoded as strict UTF-8, so malformed input raises
    :class:`UnicodeDecodeError`.
    """
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    return TokenSeq(raw.split())


# ------------------------------------------------------------------
# Named entities
# ------------------------------------------------------------------

@dataclass(frozen=True)
class EntitySpan:
    """A tagged token span ``[start, end)`` with its entity type."""

    start: int
    end: int
    label: str


@runtime_checkable
class EntityTagger(Protocol):
    """Anything that can tag entity spans in a token sequence."""

    def tag(self, tokens: Sequence[str]) -> List[EntitySpan]: ...


@dataclass
class Gazetteer:
    """Word-list entity tagger.

    Spans are matched case-sensitively, longest first, scanning left to
    right.  A span listed under several types takes the first type in
    :data:`ENTITY_TYPES` order.
    """

    entries: Dict[str, set] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._index: Dict[Tuple[str, ...], str] = {}
        self._max_len = 0
        for label in reversed(ENTITY_TYPES):
            for span in self.entries.get(label, ()):
                key = tuple(span)
                if not key:
                    continue
                self._index[key] = label
                self._max_len = max(self._max_len, len(key))

    @classmethod
    def from_lists(cls, lists: Dict[str, Iterable[str]]) -> "Gazetteer":
        entries: Dict[str, set] = {}
        for label, spans in lists.items():
            if label not in ENTITY_TYPES:
                raise CorpusError(f"unknown entity type '{label}'")
            entries[label] = {tuple(s.split()) for s in spans if s.strip()}
        return cls(entries)

    @classmethod
    def from_dir(cls, path: Path) -> "Gazetteer":
        """Load ``PER.txt``, ``LOC.txt``, ``ORG.txt``, ``MISC.txt`` from *path*.

        Missing files simply contribute no entries.
        """
        lists: Dict[str, List[str]] = {}
        for label in ENTITY_TYPES:
            f = Path(path) / f"{label}.txt"
            if f.is_file():
                lists[label] = f.read_text(encoding="utf-8").splitlines()
        gaz = cls.from_lists(lists)
        logger.debug("Loaded gazetteer from %s (%d spans)", path, len(gaz._index))
        return gaz

    def save(self, path: Path) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        for label in ENTITY_TYPES:
            spans = sorted(" ".join(s) for s in self.entries.get(label, ()))
            (path / f"{label}.txt").write_text(
                "".join(f"{s}\n" for s in spans), encoding="utf-8"
            )

    def tag(self, tokens: Sequence[str]) -> List[EntitySpan]:
        spans: List[EntitySpan] = []
        i = 0
        n = len(tokens)
        while i < n:
            found: Optional[EntitySpan] = None
            m = PLACEHOLDER_RE.match(tokens[i])
            if m:
                # literal placeholders are protected as single-token entities
                found = EntitySpan(i, i + 1, m.group(1))
            else:
                for length in range(min(self._max_len, n - i), 0, -1):
                    label = self._index.get(tuple(tokens[i:i + length]))
                    if label is not None:
                        found = EntitySpan(i, i + length, label)
                        break
            if found is None:
                i += 1
            else:
                spans.append(found)
                i = found.end
        return spans


@dataclass
class EntityMap:
    """Placeholder token → original span."""

    entries: Dict[str, TokenSeq] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, placeholder: object) -> bool:
        return placeholder in self.entries

    def get(self, placeholder: str) -> Optional[TokenSeq]:
        return self.entries.get(placeholder)

    def placeholder_for(self, label: str, span: TokenSeq) -> str:
        """Return the placeholder for *span*, allocating the next index."""
        for ph, existing in self.entries.items():
            if existing == span and ph.startswith(f"{label}@"):
                return ph
        n = 1 + sum(1 for ph in self.entries if ph.startswith(f"{label}@"))
        ph = f"{label}@{n}"
        self.entries[ph] = span
        return ph

    def to_dict(self) -> Dict[str, str]:
        return {ph: span.to_line() for ph, span in self.entries.items()}

    @classmethod
    def from_dict(cls, data: Dict[str, str]) -> "EntityMap":
        return cls({ph: TokenSeq.from_line(s) for ph, s in data.items()})


def anonymize(
    seq: Sequence[str],
    tagger: EntityTagger,
    entities: Optional[EntityMap] = None,
) -> Tuple[TokenSeq, EntityMap]:
    """Replace each tagged span with its ``NE@N`` placeholder.

    Passing an existing *entities* map continues its numbering, which is
    how the simple side of a pair reuses the complex side's placeholders.
    """
    entities = entities if entities is not None else EntityMap()
    out: List[str] = []
    pos = 0
    for span in tagger.tag(seq):
        out.extend(seq[pos:span.start])
        out.append(entities.placeholder_for(span.label, TokenSeq(seq[span.start:span.end])))
        pos = span.end
    out.extend(seq[pos:])
    return TokenSeq(out), entities


def deanonymize(seq: Sequence[str], entities: EntityMap) -> TokenSeq:
    """Put original spans back; unknown placeholders stay verbatim."""
    out: List[str] = []
    misses = 0
    for tok in seq:
        span = entities.get(tok)
        if span is None:
            if PLACEHOLDER_RE.match(tok):
                misses += 1
            out.append(tok)
        else:
            out.extend(span)
    if misses:
        logger.debug("De-anonymization left %d placeholder(s) unresolved", misses)
    return TokenSeq(out)


# ------------------------------------------------------------------
# Vocabulary
# ------------------------------------------------------------------

@dataclass
class Vocab:
    """Bidirectional token ↔ id mapping with fixed reserved ids."""

    token_of: List[str]
    min_count: int = DEFAULT_MIN_COUNT
    id_of: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if tuple(self.token_of[:len(RESERVED_TOKENS)]) != RESERVED_TOKENS:
            raise VocabError("vocabulary must start with the reserved tokens")
        self.id_of = {tok: i for i, tok in enumerate(self.token_of)}
        if len(self.id_of) != len(self.token_of):
            raise VocabError("vocabulary contains duplicate tokens")

    def __len__(self) -> int:
        return len(self.token_of)

    def __contains__(self, token: object) -> bool:
        return token in self.id_of

    def id(self, token: str) -> int:
        return self.id_of.get(token, UNK)

    def token(self, idx: int) -> str:
        if not 0 <= idx < len(self.token_of):
            raise VocabError(f"id {idx} outside vocabulary of size {len(self)}")
        return self.token_of[idx]

    def encode(self, tokens: Sequence[str], add_eos: bool = False) -> List[int]:
        ids = [self.id(t) for t in tokens]
        if add_eos:
            ids.append(EOS)
        return ids

    def decode(self, ids: Iterable[int]) -> TokenSeq:
        """Map ids back to tokens, stopping at EOS and skipping PAD/BOS."""
        out: List[str] = []
        for i in ids:
            if i == EOS:
                break
            if i in (PAD, BOS):
                continue
            out.append(self.token(i))
        return TokenSeq(out)

    def to_dict(self) -> Dict[str, object]:
        return {"min_count": self.min_count, "tokens": list(self.token_of)}

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "Vocab":
        tokens = data.get("tokens")
        if not isinstance(tokens, list):
            raise VocabError("vocabulary file has no token list")
        return cls([str(t) for t in tokens], min_count=int(data.get("min_count", DEFAULT_MIN_COUNT)))  # type: ignore[arg-type]

    def save(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "Vocab":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def count_tokens(corpus: "ParallelCorpus") -> Counter:
    counts: Counter = Counter()
    for src, tgt in corpus:
        counts.update(src)
        counts.update(tgt)
    return counts


def build_vocab(corpus: "ParallelCorpus", min_count: int = DEFAULT_MIN_COUNT) -> Vocab:
    """Keep tokens seen more than *min_count* times over both sides.

    Ids follow descending count, ties broken lexicographically.
    """
    if min_count < 0:
        raise VocabError("min_count must be >= 0")
    if len(corpus) == 0:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    counts = count_tokens(corpus)
    for tok in RESERVED_TOKENS:
        counts.pop(tok, None)
    kept = sorted(
        (tok for tok, c in counts.items() if c > min_count),
        key=lambda tok: (-counts[tok], tok),
    )
    vocab = Vocab(list(RESERVED_TOKENS) + kept, min_count=min_count)
    logger.info(
        "Vocabulary: %d tokens kept of %d types (min_count=%d)",
        len(kept), len(counts), min_count,
    )
    return vocab


# ------------------------------------------------------------------
# Parallel corpora
# ------------------------------------------------------------------

@dataclass
class ParallelCorpus:
    """Aligned (complex, simple) sentence pairs."""

    pairs: List[Tuple[TokenSeq, TokenSeq]] = field(default_factory=list)

    def __post_init__(self) -> None:
        for i, (src, tgt) in enumerate(self.pairs):
            if not src or not tgt:
                raise CorpusError(f"pair {i + 1} has an empty side")

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[Tuple[TokenSeq, TokenSeq]]:
        return iter(self.pairs)

    def __getitem__(self, i: int) -> Tuple[TokenSeq, TokenSeq]:
        return self.pairs[i]

    @property
    def complex_side(self) -> List[TokenSeq]:
        return [src for src, _ in self.pairs]

    @property
    def simple_side(self) -> List[TokenSeq]:
        return [tgt for _, tgt in self.pairs]

    def split(self, n_heldout: int) -> Tuple["ParallelCorpus", "ParallelCorpus"]:
        """Return (train, held-out) with the last *n_heldout* pairs held out."""
        n_heldout = max(0, min(n_heldout, len(self.pairs) - 1))
        cut = len(self.pairs) - n_heldout
        return ParallelCorpus(self.pairs[:cut]), ParallelCorpus(self.pairs[cut:])

    def save(self, complex_path: Path, simple_path: Path) -> None:
        write_lines(complex_path, self.complex_side)
        write_lines(simple_path, self.simple_side)


def read_lines(path: Path) -> List[TokenSeq]:
    """Read one tokenized sentence per line; a trailing empty line is ignored."""
    lines = Path(path).read_bytes().decode("utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [tokenize(line) for line in lines]


def write_lines(path: Path, seqs: Iterable[Sequence[str]]) -> None:
    Path(path).write_text("".join(" ".join(s) + "\n" for s in seqs), encoding="utf-8")


def load_corpus(complex_path: Path, simple_path: Path) -> ParallelCorpus:
    """Pair line *i* of the complex file with line *i* of the simple file."""
    complex_side = read_lines(complex_path)
    simple_side = read_lines(simple_path)
    if len(complex_side) != len(simple_side):
        raise AlignmentError(
            f"{complex_path} has {len(complex_side)} lines but "
            f"{simple_path} has {len(simple_side)}"
        )
    for i, (src, tgt) in enumerate(zip(complex_side, simple_side)):
        if not src or not tgt:
            raise CorpusError(f"line {i + 1} is empty in {complex_path if not src else simple_path}")
    logger.debug("Loaded %d pairs from %s", len(complex_side), complex_path)
    return ParallelCorpus(list(zip(complex_side, simple_side)))


def anonymize_corpus(
    corpus: ParallelCorpus, tagger: EntityTagger
) -> Tuple[ParallelCorpus, List[EntityMap]]:
    """Anonymize every pair, sharing placeholders between its two sides."""
    pairs: List[Tuple[TokenSeq, TokenSeq]] = []
    maps: List[EntityMap] = []
    for src, tgt in corpus:
        a_src, entities = anonymize(src, tagger)
        a_tgt, entities = anonymize(tgt, tagger, entities)
        pairs.append((a_src, a_tgt))
        maps.append(entities)
    return ParallelCorpus(pairs), maps
