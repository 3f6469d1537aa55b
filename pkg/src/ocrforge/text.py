"""Text representation, tokenization and corpus I/O.

Texts are plain ``str`` values: Python strings index by code point, which is
exactly the unit every other module works in. Nothing here normalizes
Unicode unless asked to; Hebrew final forms (ך ם ן ף ץ) are distinct code
points and the confusion statistics depend on keeping them that way.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CorpusError

DEFAULT_DELIMITERS = frozenset(" \t\n\r.,;:!?\"'()[]-\u2014")

FORMATS = ("plain-dir", "jsonl", "tsv")

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


@dataclass(frozen=True)
class ParallelPair:
    ocred: str
    golden: str
    doc_id: str


@dataclass(frozen=True)
class Document:
    """A single-sided corpus entry (clean text, corrector output, ...)."""

    text: str
    doc_id: str


@dataclass(frozen=True)
class DelimiterSet:
    delimiters: frozenset = DEFAULT_DELIMITERS

    def __post_init__(self):
        if not self.delimiters:
            raise ValueError("delimiter set must not be empty")
        object.__setattr__(self, "delimiters", frozenset(self.delimiters))

    def __contains__(self, ch: str) -> bool:
        return ch in self.delimiters


DEFAULT_DELIMITER_SET = DelimiterSet()


def tokenize(text: str, delims: DelimiterSet = DEFAULT_DELIMITER_SET) -> list[str]:
    """Maximal runs of non-delimiter characters, empty runs dropped.

    >>> tokenize("the cat.")
    ['the', 'cat']
    >>> tokenize("a--b")
    ['a', 'b']
    """
    words = []
    start = None
    d = delims.delimiters
    for i, ch in enumerate(text):
        if ch in d:
            if start is not None:
                words.append(text[start:i])
                start = None
        elif start is None:
            start = i
    if start is not None:
        words.append(text[start:])
    return words


def lines_of(text: str) -> list[str]:
    return text.split("\n")


# ---------------------------------------------------------------------------
# escaping for single-line container formats

def escape_field(value: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in value)


def unescape_field(value: str, where: str = "") -> str:
    out = []
    i = 0
    n = len(value)
    while i < n:
        ch = value[i]
        if ch == "\\":
            if i + 1 >= n or value[i + 1] not in _UNESCAPES:
                raise CorpusError(f"{where}bad escape sequence at column {i}")
            out.append(_UNESCAPES[value[i + 1]])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


# ---------------------------------------------------------------------------
# raw file access

def read_utf8(path: Path) -> str:
    data = Path(path).read_bytes()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusError(f"{path}: malformed UTF-8 at byte offset {exc.start}") from None


def write_utf8(path: Path, content: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(content)


def _records(content: str) -> list[str]:
    """Split container content into records on LF; a trailing LF ends the last record."""
    if not content:
        return []
    rows = content.split("\n")
    if rows[-1] == "":
        rows.pop()
    return rows


def _json_line(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False)


def _nfc(s: str, normalize: bool) -> str:
    return unicodedata.normalize("NFC", s) if normalize else s


def guess_format(path: Path) -> str:
    path = Path(path)
    if path.is_dir():
        return "plain-dir"
    suffix = path.suffix.lower()
    if suffix == ".jsonl":
        return "jsonl"
    if suffix == ".tsv":
        return "tsv"
    return "plain-dir"


def _check_format(fmt: str) -> None:
    if fmt not in FORMATS:
        raise CorpusError(f"unknown corpus format {fmt!r} (expected one of {', '.join(FORMATS)})")


def _ids_unique(ids: Iterable[str], path) -> None:
    seen = set()
    for doc_id in ids:
        if doc_id in seen:
            raise CorpusError(f"{path}: duplicate document id {doc_id!r}")
        seen.add(doc_id)


# ---------------------------------------------------------------------------
# parallel corpora

def ingest_corpus(path, fmt: str | None = None, normalize: bool = False) -> list[ParallelPair]:
    """Read a parallel (OCRed, golden) corpus.

    ``plain-dir`` expects ``<path>/ocr/<name>`` and ``<path>/gold/<name>``
    file pairs matched by relative path; the relative path is the doc id.
    ``jsonl`` records carry ``ocr``, ``gold`` and optionally ``id``.
    ``tsv`` rows are ``ocr<TAB>gold`` with escaped fields. Missing ids become
    the zero-based record ordinal.
    """
    path = Path(path)
    fmt = fmt or guess_format(path)
    _check_format(fmt)
    if fmt == "plain-dir":
        pairs = _ingest_dir(path, normalize)
    elif fmt == "jsonl":
        pairs = []
        for idx, row in enumerate(_records(read_utf8(path))):
            try:
                rec = json.loads(row)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: record {idx}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise CorpusError(f"{path}: record {idx}: expected an object")
            for side in ("ocr", "gold"):
                if not isinstance(rec.get(side), str):
                    raise CorpusError(f"{path}: record {idx}: missing '{side}' side")
            doc_id = rec.get("id", str(idx))
            pairs.append(ParallelPair(_nfc(rec["ocr"], normalize), _nfc(rec["gold"], normalize), str(doc_id)))
    else:
        pairs = []
        for idx, row in enumerate(_records(read_utf8(path))):
            cols = row.split("\t")
            if len(cols) != 2:
                raise CorpusError(f"{path}: record {idx}: missing side (expected 2 tab-separated columns, got {len(cols)})")
            where = f"{path}: record {idx}: "
            pairs.append(ParallelPair(
                _nfc(unescape_field(cols[0], where), normalize),
                _nfc(unescape_field(cols[1], where), normalize),
                str(idx),
            ))
    _ids_unique((p.doc_id for p in pairs), path)
    return pairs


def _ingest_dir(path: Path, normalize: bool) -> list[ParallelPair]:
    ocr_root, gold_root = path / "ocr", path / "gold"
    if not ocr_root.is_dir() or not gold_root.is_dir():
        raise CorpusError(f"{path}: plain-dir corpus needs 'ocr/' and 'gold/' subdirectories")
    ocr_files = {p.relative_to(ocr_root).as_posix() for p in ocr_root.rglob("*") if p.is_file()}
    gold_files = {p.relative_to(gold_root).as_posix() for p in gold_root.rglob("*") if p.is_file()}
    names = sorted(ocr_files | gold_files)
    pairs = []
    for idx, name in enumerate(names):
        if name not in ocr_files or name not in gold_files:
            side = "ocr" if name not in ocr_files else "gold"
            raise CorpusError(f"{path}: record {idx} ({name}): missing '{side}' side")
        pairs.append(ParallelPair(
            _nfc(read_utf8(ocr_root / name), normalize),
            _nfc(read_utf8(gold_root / name), normalize),
            name,
        ))
    return pairs


def serialize_corpus(pairs: Sequence[ParallelPair], path, fmt: str | None = None) -> None:
    """Write a parallel corpus so that :func:`ingest_corpus` reads it back unchanged.

    TSV has no id column, so ids survive a TSV round trip only when they are
    already the record ordinals.
    """
    path = Path(path)
    fmt = fmt or guess_format(path)
    _check_format(fmt)
    if fmt == "plain-dir":
        for p in pairs:
            write_utf8(path / "ocr" / p.doc_id, p.ocred)
            write_utf8(path / "gold" / p.doc_id, p.golden)
    elif fmt == "jsonl":
        body = "".join(_json_line({"ocr": p.ocred, "gold": p.golden, "id": p.doc_id}) + "\n" for p in pairs)
        write_utf8(path, body)
    else:
        body = "".join(f"{escape_field(p.ocred)}\t{escape_field(p.golden)}\n" for p in pairs)
        write_utf8(path, body)


# ---------------------------------------------------------------------------
# single-sided corpora

def read_texts(path, fmt: str | None = None, field: str = "text", normalize: bool = False) -> list[Document]:
    """Read a single-sided corpus.

    ``plain-dir``: a directory (every file, recursively, sorted by relative
    path) or a single file. ``jsonl``: string field ``field`` per record,
    optional ``id``. ``tsv``: one escaped column per row.
    """
    path = Path(path)
    fmt = fmt or guess_format(path)
    _check_format(fmt)
    docs: list[Document] = []
    if fmt == "plain-dir":
        if path.is_file():
            docs.append(Document(_nfc(read_utf8(path), normalize), path.name))
        elif path.is_dir():
            for p in sorted(q for q in path.rglob("*") if q.is_file()):
                docs.append(Document(_nfc(read_utf8(p), normalize), p.relative_to(path).as_posix()))
        else:
            raise CorpusError(f"{path}: no such file or directory")
    elif fmt == "jsonl":
        for idx, row in enumerate(_records(read_utf8(path))):
            try:
                rec = json.loads(row)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: record {idx}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or not isinstance(rec.get(field), str):
                raise CorpusError(f"{path}: record {idx}: missing '{field}' field")
            docs.append(Document(_nfc(rec[field], normalize), str(rec.get("id", idx))))
    else:
        for idx, row in enumerate(_records(read_utf8(path))):
            if "\t" in row:
                raise CorpusError(f"{path}: record {idx}: expected a single column")
            docs.append(Document(_nfc(unescape_field(row, f"{path}: record {idx}: "), normalize), str(idx)))
    _ids_unique((d.doc_id for d in docs), path)
    return docs


def write_texts(docs: Sequence[Document], path, fmt: str) -> None:
    path = Path(path)
    _check_format(fmt)
    if fmt == "plain-dir":
        for d in docs:
            write_utf8(path / d.doc_id, d.text)
    elif fmt == "jsonl":
        write_utf8(path, "".join(_json_line({"text": d.text, "id": d.doc_id}) + "\n" for d in docs))
    else:
        write_utf8(path, "".join(escape_field(d.text) + "\n" for d in docs))
