"""Translation edit rate with typed edit counts.

Edits transform the *from* sentence into the *to* sentence: unit-cost
insertions, deletions and substitutions from a Levenshtein alignment,
plus unit-cost block shifts found greedily.  A shift moves a contiguous
block of *from* that occurs verbatim in *to*, and is taken only when it
lowers the total edit count (shift included).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from ..errors import MetricError

MAX_SHIFTS = 10
MAX_BLOCK = 10


@dataclass(frozen=True)
class EditCounts:
    """Raw edit counts for one sentence pair."""

    insertions: int = 0
    deletions: int = 0
    substitutions: int = 0
    shifts: int = 0

    @property
    def total(self) -> int:
        return self.insertions + self.deletions + self.substitutions + self.shifts


@dataclass(frozen=True)
class EditBreakdown:
    """TER and mean per-sentence edit counts."""

    ter: float
    insertions: float
    deletions: float
    substitutions: float
    shifts: float
    mean_length: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "ter": self.ter,
            "ins": self.insertions,
            "del": self.deletions,
            "sub": self.substitutions,
            "shift": self.shifts,
            "mean_len": self.mean_length,
        }


def edit_distance(hyp: Sequence[str], ref: Sequence[str]) -> int:
    prev = list(range(len(ref) + 1))
    for i, h in enumerate(hyp, 1):
        cur = [i] + [0] * len(ref)
        for j, r in enumerate(ref, 1):
            cur[j] = min(prev[j - 1] + (h != r), prev[j] + 1, cur[j - 1] + 1)
        prev = cur
    return prev[-1]


def align_counts(hyp: Sequence[str], ref: Sequence[str]) -> Tuple[int, int, int]:
    """(insertions, deletions, substitutions) along one optimal alignment.

    The backtrace prefers match/substitution, then deletion, then insertion.
    """
    n, m = len(hyp), len(ref)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d[i][j] = min(
                d[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]),
                d[i - 1][j] + 1,
                d[i][j - 1] + 1,
            )
    ins = dels = subs = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]):
            subs += hyp[i - 1] != ref[j - 1]
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return ins, dels, subs


def _best_shift(hyp: List[str], ref: Sequence[str], cost: int) -> Optional[Tuple[List[str], int]]:
    """Find the shift with the lowest resulting edit distance, if it pays for itself."""
    ref_blocks = {
        tuple(ref[j:j + k])
        for k in range(1, MAX_BLOCK + 1)
        for j in range(len(ref) - k + 1)
    }
    best: Optional[Tuple[List[str], int]] = None
    best_cost = cost
    for i in range(len(hyp)):
        for k in range(min(MAX_BLOCK, len(hyp) - i), 0, -1):
            block = hyp[i:i + k]
            if tuple(block) not in ref_blocks:
                continue
            rest = hyp[:i] + hyp[i + k:]
            for p in range(len(rest) + 1):
                if p == i:
                    continue
                moved = rest[:p] + block + rest[p:]
                new_cost = edit_distance(moved, ref) + 1
                if new_cost < best_cost:
                    best, best_cost = (moved, new_cost - 1), new_cost
    return best


def count_edits(hyp: Sequence[str], ref: Sequence[str]) -> EditCounts:
    """Greedy-shift TER edit counts turning *hyp* into *ref* (either may be empty)."""
    current = list(hyp)
    distance = edit_distance(current, ref)
    shifts = 0
    while shifts < MAX_SHIFTS and distance > 0:
        found = _best_shift(current, ref, distance)
        if found is None:
            break
        current, distance = found
        shifts += 1
    ins, dels, subs = align_counts(current, ref)
    return EditCounts(ins, dels, subs, shifts)


def ter_with_edits(source: Sequence[str], target: Sequence[str]) -> EditBreakdown:
    """TER of rewriting *source* into *target*, normalized by ``len(target)``."""
    if not target:
        raise MetricError("TER needs a nonempty target")
    e = count_edits(source, target)
    return EditBreakdown(
        ter=e.total / len(target),
        insertions=float(e.insertions),
        deletions=float(e.deletions),
        substitutions=float(e.substitutions),
        shifts=float(e.shifts),
        mean_length=float(len(target)),
    )
