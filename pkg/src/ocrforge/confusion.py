"""Character confusion statistics learned from aligned (OCRed, golden) pairs.

A substitution ``(source, target)`` means the OCR engine produced ``source``
where the true character was ``target`` (the "Character / Fix" orientation).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .align import DEFAULT_SCORING, Op, Scoring, align_texts
from .errors import OcrForgeError, TableFormatError
from .parallel import parallel_map
from .rng import shuffle
from .text import ParallelPair, escape_field, read_utf8, unescape_field, write_utf8


@dataclass
class ConfusionTable:
    substitutions: Counter = field(default_factory=Counter)
    deletions: Counter = field(default_factory=Counter)
    insertions: Counter = field(default_factory=Counter)
    skipped: int = field(default=0, compare=False)

    def __post_init__(self):
        self.substitutions = Counter(self.substitutions)
        self.deletions = Counter(self.deletions)
        self.insertions = Counter(self.insertions)
        self.check()

    def check(self) -> None:
        for (src, tgt), n in self.substitutions.items():
            if src == tgt:
                raise ValueError(f"identity pair {src!r}->{tgt!r} is not a confusion")
            if n < 1:
                raise ValueError(f"count for {src!r}->{tgt!r} must be >= 1, got {n}")
        for name, table in (("deletion", self.deletions), ("insertion", self.insertions)):
            for ch, n in table.items():
                if n < 1:
                    raise ValueError(f"{name} count for {ch!r} must be >= 1, got {n}")

    @property
    def total_substitutions(self) -> int:
        return sum(self.substitutions.values())

    def __bool__(self) -> bool:
        return bool(self.substitutions)

    def relative_frequency(self, source: str, target: str) -> float:
        total = self.total_substitutions
        return self.substitutions.get((source, target), 0) / total if total else 0.0

    def sources_by_target(self) -> dict[str, list[tuple[str, int]]]:
        """target -> [(source, count), ...] with sources in code-point order."""
        out: dict[str, list[tuple[str, int]]] = {}
        for (src, tgt), n in sorted(self.substitutions.items()):
            out.setdefault(tgt, []).append((src, n))
        return out

    def merge(self, other: "ConfusionTable") -> None:
        self.substitutions.update(other.substitutions)
        self.deletions.update(other.deletions)
        self.insertions.update(other.insertions)
        self.skipped += other.skipped


def _count_pair(args) -> ConfusionTable:
    pair, scoring = args
    table = ConfusionTable()
    if not pair.ocred or not pair.golden:
        table.skipped = 1
        return table
    for al in align_texts(pair.ocred, pair.golden, scoring):
        for col in al.columns:
            if col.op is Op.SUBSTITUTE:
                table.substitutions[(col.left, col.right)] += 1
            elif col.op is Op.DELETE:
                table.deletions[col.left] += 1
            elif col.op is Op.INSERT:
                table.insertions[col.right] += 1
    return table


def learn_count(n: int, fraction: float) -> int:
    """ceil(fraction * n) computed on the decimal value of ``fraction``."""
    return math.ceil(Fraction(repr(float(fraction))) * n)


def learn_confusions(pairs: Sequence[ParallelPair], learn_fraction: float = 0.7, seed: int = 0,
                     scoring: Scoring = DEFAULT_SCORING, jobs: int = 1) -> ConfusionTable:
    """Align a seeded ``learn_fraction`` of the pairs and count non-Match columns.

    Pairs with an empty side are skipped and counted in ``table.skipped``.
    """
    if not pairs:
        raise OcrForgeError("cannot learn confusions from an empty corpus")
    if not 0 < learn_fraction <= 1:
        raise OcrForgeError(f"learn fraction must be in (0, 1], got {learn_fraction}")
    order = shuffle(list(range(len(pairs))), seed)
    chosen = order[:learn_count(len(pairs), learn_fraction)]
    table = ConfusionTable()
    for part in parallel_map(_count_pair, [(pairs[i], scoring) for i in chosen], jobs):
        table.merge(part)
    return table


def top_k(table: ConfusionTable, k: int) -> list[tuple[str, str, int]]:
    """Most frequent substitutions; equal counts fall back to code-point order of (source, target)."""
    if k < 1:
        raise ValueError("k must be positive")
    ranked = sorted(table.substitutions.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(s, t, n) for (s, t), n in ranked[:k]]


# ---------------------------------------------------------------------------
# TSV persistence

def dumps_table(table: ConfusionTable) -> str:
    ranked = sorted(table.substitutions.items(), key=lambda kv: (-kv[1], kv[0]))
    rows = [f"{escape_field(s)}\t{escape_field(t)}\t{n}" for (s, t), n in ranked]
    for header, counts in (("#DELETIONS", table.deletions), ("#INSERTIONS", table.insertions)):
        if counts:
            rows.append(header)
            rows.extend(f"{escape_field(ch)}\t{n}" for ch, n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
    return "".join(r + "\n" for r in rows)


def loads_table(content: str, source: str = "<string>") -> ConfusionTable:
    subs: Counter = Counter()
    dels: Counter = Counter()
    ins: Counter = Counter()
    section = subs
    rows = content.split("\n")
    if rows and rows[-1] == "":
        rows.pop()
    for lineno, row in enumerate(rows, start=1):
        where = f"{source}:{lineno}: "
        if row == "#DELETIONS":
            section = dels
            continue
        if row == "#INSERTIONS":
            section = ins
            continue
        cols = row.split("\t")
        width = 3 if section is subs else 2
        if len(cols) != width:
            raise TableFormatError(f"{where}expected {width} tab-separated fields, got {len(cols)}")
        try:
            count = int(cols[-1])
        except ValueError:
            raise TableFormatError(f"{where}count {cols[-1]!r} is not an integer") from None
        if count < 1:
            raise TableFormatError(f"{where}count must be >= 1, got {count}")
        try:
            chars = tuple(unescape_field(c, where) for c in cols[:-1])
        except OcrForgeError as exc:
            raise TableFormatError(str(exc)) from None
        if any(len(c) != 1 for c in chars):
            raise TableFormatError(f"{where}expected single characters")
        key = chars if section is subs else chars[0]
        if section is subs and chars[0] == chars[1]:
            raise TableFormatError(f"{where}identity pair is not a confusion")
        if key in section:
            raise TableFormatError(f"{where}duplicate entry")
        section[key] = count
    return ConfusionTable(subs, dels, ins)


def save_table(table: ConfusionTable, path) -> None:
    write_utf8(Path(path), dumps_table(table))


def load_table(path) -> ConfusionTable:
    return loads_table(read_utf8(Path(path)), str(path))
