"""Needleman-Wunsch global alignment and Levenshtein distance.

Both run a full dynamic-programming matrix. Rows are filled with numpy: the
diagonal and vertical moves are elementwise, and the horizontal (gap) move
along a row is a running max/min, which is exact for linear gap costs:

    H[i, j] = max_k<=j (C[k] + (j - k) * gap) = j * gap + cummax(C[k] - k * gap)

Symbols may be characters or whole words; they are mapped to integer codes
before the DP.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, NamedTuple, Sequence

import numpy as np

from .errors import AlignmentTooLarge

DEFAULT_MAX_CELLS = 10**8


@dataclass(frozen=True)
class Scoring:
    match: int = 0
    mismatch: int = -1
    gap: int = -1

    def __post_init__(self):
        if not (self.match > self.mismatch and self.match > self.gap):
            raise ValueError("scoring must satisfy match > mismatch and match > gap")


DEFAULT_SCORING = Scoring()


class Op(str, enum.Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    DELETE = "delete"  # symbol only in the left sequence
    INSERT = "insert"  # symbol only in the right sequence


class Column(NamedTuple):
    op: Op
    left: Hashable | None
    right: Hashable | None


@dataclass(frozen=True)
class Alignment:
    columns: tuple[Column, ...]
    score: int

    def left(self) -> list:
        return [c.left for c in self.columns if c.op is not Op.INSERT]

    def right(self) -> list:
        return [c.right for c in self.columns if c.op is not Op.DELETE]

    def count(self, op: Op) -> int:
        return sum(1 for c in self.columns if c.op is op)


def _encode(a: Sequence, b: Sequence) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(a, str) and isinstance(b, str):
        return (np.frombuffer(a.encode("utf-32-le"), dtype=np.uint32),
                np.frombuffer(b.encode("utf-32-le"), dtype=np.uint32))
    codes: dict = {}
    ea = np.fromiter((codes.setdefault(s, len(codes)) for s in a), dtype=np.int64, count=len(a))
    eb = np.fromiter((codes.setdefault(s, len(codes)) for s in b), dtype=np.int64, count=len(b))
    return ea, eb


def _guard(n: int, m: int, max_cells: int) -> None:
    if (n + 1) * (m + 1) > max_cells:
        raise AlignmentTooLarge(
            f"alignment of {n} x {m} symbols exceeds the {max_cells}-cell limit; align line by line"
        )


# below this many cells a plain loop beats numpy's per-call overhead
_SMALL_CELLS = 256


def _levenshtein_small(a: Sequence, b: Sequence) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j - 1] + (ca != cb), prev[j] + 1, cur[j - 1] + 1))
        prev = cur
    return prev[-1]


def levenshtein(a: Sequence, b: Sequence, max_cells: int = DEFAULT_MAX_CELLS) -> int:
    """Unit-cost edit distance between two symbol sequences.

    >>> levenshtein("kitten", "sitting")
    3
    """
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return n + m
    if n < m:
        a, b, n, m = b, a, m, n
    _guard(n, m, max_cells)
    if n * m <= _SMALL_CELLS:
        return _levenshtein_small(a, b)
    ea, eb = _encode(a, b)
    ks = np.arange(m + 1, dtype=np.int64)
    prev = ks.copy()
    cand = np.empty(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        cand[0] = i
        np.minimum(prev[:-1] + (eb != ea[i - 1]), prev[1:] + 1, out=cand[1:])
        prev = np.minimum.accumulate(cand - ks) + ks
    return int(prev[m])


def nw_align(a: Sequence, b: Sequence, scoring: Scoring = DEFAULT_SCORING,
             max_cells: int = DEFAULT_MAX_CELLS) -> Alignment:
    """Optimal global alignment of ``a`` (left) against ``b`` (right).

    Traceback runs from the bottom-right corner and, among moves that
    reproduce the optimal score, prefers diagonal, then Delete, then Insert.
    """
    n, m = len(a), len(b)
    if n == m and list(a) == list(b):
        # all-Match is the unique optimum when match beats both alternatives
        return Alignment(tuple(Column(Op.MATCH, x, x) for x in a), n * scoring.match)
    _guard(n, m, max_cells)
    match, mismatch, gap = scoring.match, scoring.mismatch, scoring.gap

    ea, eb = _encode(a, b)
    H = np.empty((n + 1, m + 1), dtype=np.int64)
    ks = np.arange(m + 1, dtype=np.int64)
    H[0] = ks * gap
    cand = np.empty(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        prev = H[i - 1]
        cand[0] = i * gap
        diag = prev[:-1] + np.where(eb == ea[i - 1], match, mismatch)
        np.maximum(diag, prev[1:] + gap, out=cand[1:])
        H[i] = np.maximum.accumulate(cand - ks * gap) + ks * gap

    rows = H.tolist()
    cols: list[Column] = []
    i, j = n, m
    while i > 0 or j > 0:
        here = rows[i][j]
        if i > 0 and j > 0:
            x, y = a[i - 1], b[j - 1]
            same = x == y
            if here == rows[i - 1][j - 1] + (match if same else mismatch):
                cols.append(Column(Op.MATCH if same else Op.SUBSTITUTE, x, y))
                i -= 1
                j -= 1
                continue
        if i > 0 and here == rows[i - 1][j] + gap:
            cols.append(Column(Op.DELETE, a[i - 1], None))
            i -= 1
        else:
            cols.append(Column(Op.INSERT, None, b[j - 1]))
            j -= 1
    cols.reverse()
    return Alignment(tuple(cols), int(rows[n][m]))


def word_align(a: Sequence[str], b: Sequence[str], scoring: Scoring = DEFAULT_SCORING,
               max_cells: int = DEFAULT_MAX_CELLS) -> Alignment:
    """:func:`nw_align` over whole-word symbols (exact string equality)."""
    return nw_align(list(a), list(b), scoring, max_cells)


def align_texts(a: str, b: str, scoring: Scoring = DEFAULT_SCORING,
                max_cells: int = DEFAULT_MAX_CELLS) -> list[Alignment]:
    """Character alignment of two texts, line by line when line counts agree.

    With differing line counts the whole texts (newlines included) are
    aligned in one matrix.
    """
    la, lb = a.split("\n"), b.split("\n")
    if len(la) == len(lb):
        return [nw_align(x, y, scoring, max_cells) for x, y in zip(la, lb)]
    return [nw_align(a, b, scoring, max_cells)]
