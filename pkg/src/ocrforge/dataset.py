"""Line-pair training data: build, split by document, export for seq2seq trainers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .errors import CorpusError, OcrForgeError
from .rng import shuffle
from .text import ParallelPair, escape_field, read_utf8, unescape_field, write_utf8

SPLITS = ("train", "validation")
EXPORT_FORMATS = ("jsonl", "parallel-txt", "tsv")


@dataclass(frozen=True)
class LineRecord:
    input: str
    target: str
    doc_id: str
    line_index: int
    split: str = "unassigned"


@dataclass
class LinePairDataset:
    records: list[LineRecord]
    rejected: list[str] = field(default_factory=list)

    def doc_ids(self) -> list[str]:
        return list(dict.fromkeys(r.doc_id for r in self.records))

    def by_split(self, name: str) -> list[LineRecord]:
        return [r for r in self.records if r.split == name]


def build_line_pairs(pairs: Sequence[ParallelPair]) -> LinePairDataset:
    """One record per line; pairs whose line counts differ go to ``rejected``."""
    records, rejected = [], []
    for p in pairs:
        ocr_lines, gold_lines = p.ocred.split("\n"), p.golden.split("\n")
        if len(ocr_lines) != len(gold_lines):
            rejected.append(p.doc_id)
            continue
        for k, (x, y) in enumerate(zip(ocr_lines, gold_lines)):
            if x or y:
                records.append(LineRecord(x, y, p.doc_id, k))
    return LinePairDataset(records, rejected)


def train_doc_count(n_docs: int, train_fraction: float) -> int:
    n = math.ceil(Fraction(repr(float(train_fraction))) * n_docs)
    return min(max(n, 1), n_docs - 1)


def split(ds: LinePairDataset, train_fraction: float = 0.8, seed: int = 0) -> LinePairDataset:
    """Assign whole documents to train/validation after a seeded Fisher-Yates shuffle.

    The first ceil(fraction * n_docs) shuffled documents train; the count is
    kept within [1, n_docs - 1] so both subsets exist.
    """
    if not 0 < train_fraction < 1:
        raise OcrForgeError(f"train fraction must be strictly between 0 and 1, got {train_fraction}")
    docs = ds.doc_ids()
    if len(docs) < 2:
        raise OcrForgeError(f"need at least 2 documents to split, got {len(docs)}")
    order = shuffle(list(docs), seed)
    train = set(order[:train_doc_count(len(docs), train_fraction)])
    records = [replace(r, split="train" if r.doc_id in train else "validation") for r in ds.records]
    return LinePairDataset(records, list(ds.rejected))


# ---------------------------------------------------------------------------
# persistence

def dump_split(ds: LinePairDataset) -> str:
    return "".join(json.dumps({"doc_id": r.doc_id, "line": r.line_index, "split": r.split,
                               "input": r.input, "target": r.target}, ensure_ascii=False) + "\n"
                   for r in ds.records)


def load_split(path) -> LinePairDataset:
    records = []
    for k, row in enumerate(r for r in read_utf8(Path(path)).split("\n") if r):
        try:
            rec = json.loads(row)
            records.append(LineRecord(rec["input"], rec["target"], str(rec["doc_id"]), int(rec["line"]),
                                      rec["split"]))
        except (ValueError, KeyError, TypeError) as exc:
            raise CorpusError(f"{path}: record {k}: {exc}") from None
    return LinePairDataset(records)


def export(ds: LinePairDataset, fmt: str, out_dir) -> list[Path]:
    """Write train/validation files; returns the paths written.

    jsonl: ``<split>.jsonl`` with ``{"input", "target"}`` per line.
    parallel-txt: ``<split>.input.txt`` / ``<split>.target.txt``, line i paired.
    tsv: ``<split>.tsv`` with escaped ``input<TAB>target`` rows.
    """
    if fmt not in EXPORT_FORMATS:
        raise OcrForgeError(f"unknown export format {fmt!r}")
    if any(r.split not in SPLITS for r in ds.records):
        raise OcrForgeError("dataset must be split before export")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OcrForgeError(f"cannot create {out_dir}: {exc}") from None
    written = []
    for name in SPLITS:
        recs = ds.by_split(name)
        if fmt == "jsonl":
            files = {f"{name}.jsonl": "".join(
                json.dumps({"input": r.input, "target": r.target}, ensure_ascii=False) + "\n" for r in recs)}
        elif fmt == "parallel-txt":
            files = {f"{name}.input.txt": "".join(r.input + "\n" for r in recs),
                     f"{name}.target.txt": "".join(r.target + "\n" for r in recs)}
        else:
            files = {f"{name}.tsv": "".join(f"{escape_field(r.input)}\t{escape_field(r.target)}\n" for r in recs)}
        for fname, body in files.items():
            try:
                write_utf8(out_dir / fname, body)
            except OSError as exc:
                raise OcrForgeError(f"cannot write {out_dir / fname}: {exc}") from None
            written.append(out_dir / fname)
    return written


def _rows(content: str) -> list[str]:
    rows = content.split("\n")
    if rows and rows[-1] == "":
        rows.pop()
    return rows


def read_export(out_dir, fmt: str) -> dict[str, list[tuple[str, str]]]:
    """Read exported files back into ``{split: [(input, target), ...]}``."""
    out_dir = Path(out_dir)
    result = {}
    for name in SPLITS:
        if fmt == "jsonl":
            result[name] = [(rec["input"], rec["target"])
                            for rec in map(json.loads, _rows(read_utf8(out_dir / f"{name}.jsonl")))]
        elif fmt == "parallel-txt":
            inputs = _rows(read_utf8(out_dir / f"{name}.input.txt"))
            targets = _rows(read_utf8(out_dir / f"{name}.target.txt"))
            if len(inputs) != len(targets):
                raise CorpusError(f"{out_dir}: {name} input/target line counts differ")
            result[name] = list(zip(inputs, targets))
        elif fmt == "tsv":
            pairs = []
            for k, row in enumerate(_rows(read_utf8(out_dir / f"{name}.tsv"))):
                cols = row.split("\t")
                if len(cols) != 2:
                    raise CorpusError(f"{out_dir / (name + '.tsv')}: record {k}: expected 2 columns")
                pairs.append((unescape_field(cols[0]), unescape_field(cols[1])))
            result[name] = pairs
        else:
            raise OcrForgeError(f"unknown export format {fmt!r}")
    return result
