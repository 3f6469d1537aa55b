"""Synthetic OCR error injection.

Each line is corrupted independently, left to right, with its own SplitMix64
stream. For every clean character, in this order:

1. delete it (``p_delete``);
2. otherwise, if it is a target ("Fix") character of the confusion table,
   replace it with one of its observed misreadings, sampled in proportion to
   the table counts (``p_confusion``);
3. otherwise replace it with a different character drawn uniformly from the
   alphabet (``p_substitute``, off by default);
4. otherwise, if the next character exists and differs, swap the two and
   skip the next one (``p_swap``).

After each processed character (or swapped pair) a uniformly drawn alphabet
character may be inserted (``p_insert``). A step whose probability is zero,
or whose precondition fails, consumes no random draw.
"""

from __future__ import annotations

import bisect
import enum
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

from .confusion import ConfusionTable
from .errors import CorpusError, OcrForgeError
from .parallel import parallel_map
from .rng import MASK64, SplitMix64, derive_seed
from .text import Document, ParallelPair


class ErrorKind(str, enum.Enum):
    DELETE = "delete"
    INSERT = "insert"
    SWAP = "swap"
    CONFUSE = "confuse"
    SUBSTITUTE = "substitute"


class ErrorEntry(NamedTuple):
    line: int
    index: int  # position in the clean line; for inserts, the clean position the new char precedes
    kind: ErrorKind
    original: str
    replacement: str


@dataclass(frozen=True)
class InjectionConfig:
    p_delete: float = 0.01
    p_insert: float = 0.01
    p_swap: float = 0.005
    p_confusion: float = 0.06
    p_substitute: float = 0.0
    alphabet: str | None = None
    seed: int = 0

    def __post_init__(self):
        for name in ("p_delete", "p_insert", "p_swap", "p_confusion", "p_substitute"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise OcrForgeError(f"{name} must be in [0, 1], got {p}")
        if self.p_delete + self.p_confusion > 1.0:
            raise OcrForgeError("p_delete + p_confusion must not exceed 1")
        if not 0 <= self.seed <= MASK64:
            raise OcrForgeError("seed must be an unsigned 64-bit integer")
        if self.alphabet is not None and "\n" in self.alphabet:
            raise OcrForgeError("the insertion alphabet must not contain a line feed")

    @classmethod
    def zero(cls, **overrides) -> "InjectionConfig":
        base = dict(p_delete=0.0, p_insert=0.0, p_swap=0.0, p_confusion=0.0, p_substitute=0.0)
        base.update(overrides)
        return cls(**base)


def corpus_alphabet(texts: Sequence[str]) -> str:
    chars = set()
    for t in texts:
        chars.update(t)
    chars.discard("\n")
    return "".join(sorted(chars))


class _Sampler:
    """Per-target cumulative counts for proportional source sampling."""

    def __init__(self, table: ConfusionTable | None):
        self.by_target = {}
        if table:
            for tgt, sources in table.sources_by_target().items():
                cum, total = [], 0
                for _, n in sources:
                    total += n
                    cum.append(total)
                self.by_target[tgt] = ([s for s, _ in sources], cum, total)

    def __contains__(self, ch: str) -> bool:
        return ch in self.by_target

    def draw(self, ch: str, rng: SplitMix64) -> str:
        sources, cum, total = self.by_target[ch]
        return sources[bisect.bisect_right(cum, rng.next_below(total))]


def _corrupt_line(line: str, line_no: int, cfg: InjectionConfig, sampler: _Sampler,
                  alphabet: str, rng: SplitMix64) -> tuple[str, list[ErrorEntry]]:
    out: list[str] = []
    log: list[ErrorEntry] = []
    p_del, p_conf, p_sub, p_swap, p_ins = cfg.p_delete, cfg.p_confusion, cfg.p_substitute, cfg.p_swap, cfg.p_insert
    a_index = {ch: k for k, ch in enumerate(alphabet)}
    n = len(line)
    i = 0
    while i < n:
        c = line[i]
        step = 1
        if p_del > 0 and rng.next_float() < p_del:
            log.append(ErrorEntry(line_no, i, ErrorKind.DELETE, c, ""))
        elif p_conf > 0 and c in sampler and rng.next_float() < p_conf:
            src = sampler.draw(c, rng)
            out.append(src)
            log.append(ErrorEntry(line_no, i, ErrorKind.CONFUSE, c, src))
        elif p_sub > 0 and len(alphabet) - (c in a_index) > 0 and rng.next_float() < p_sub:
            k = rng.next_below(len(alphabet) - (c in a_index))
            if c in a_index and k >= a_index[c]:
                k += 1
            out.append(alphabet[k])
            log.append(ErrorEntry(line_no, i, ErrorKind.SUBSTITUTE, c, alphabet[k]))
        elif p_swap > 0 and i + 1 < n and line[i + 1] != c and rng.next_float() < p_swap:
            nxt = line[i + 1]
            out.append(nxt)
            out.append(c)
            log.append(ErrorEntry(line_no, i, ErrorKind.SWAP, c + nxt, nxt + c))
            step = 2
        else:
            out.append(c)
        i += step
        if p_ins > 0 and alphabet and rng.next_float() < p_ins:
            ch = alphabet[rng.next_below(len(alphabet))]
            out.append(ch)
            log.append(ErrorEntry(line_no, i, ErrorKind.INSERT, "", ch))
    return "".join(out), log


def inject_errors(clean: str, cfg: InjectionConfig, table: ConfusionTable | None = None,
                  ) -> tuple[str, list[ErrorEntry]]:
    """Corrupt ``clean`` line by line; returns the corrupted text and its error log.

    Line ``k`` draws from SplitMix64(derive_seed(cfg.seed, k)). Without a
    table (or with an empty one) only the random error kinds occur.
    """
    alphabet = cfg.alphabet if cfg.alphabet is not None else corpus_alphabet([clean])
    sampler = _Sampler(table)
    out_lines, log = [], []
    for k, line in enumerate(clean.split("\n")):
        rng = SplitMix64(derive_seed(cfg.seed, k))
        corrupted, entries = _corrupt_line(line, k, cfg, sampler, alphabet, rng)
        out_lines.append(corrupted)
        log.extend(entries)
    return "\n".join(out_lines), log


def replay_log(clean: str, log: Sequence[ErrorEntry]) -> str:
    """Apply an error log to the clean text it was generated from."""
    by_line: dict[int, list[ErrorEntry]] = {}
    for e in log:
        by_line.setdefault(e.line, []).append(e)
    lines = clean.split("\n")
    result = []
    for k, line in enumerate(lines):
        entries = by_line.pop(k, [])
        fate: dict[int, ErrorEntry] = {}
        inserts: dict[int, list[str]] = {}
        for e in entries:
            if e.kind is ErrorKind.INSERT:
                inserts.setdefault(e.index, []).append(e.replacement)
            else:
                if e.index in fate or line[e.index:e.index + len(e.original)] != e.original:
                    raise CorpusError(f"log entry {e} does not match line {k}")
                fate[e.index] = e
        out = []
        i = 0
        while i <= len(line):
            out.extend(inserts.get(i, ()))
            if i == len(line):
                break
            e = fate.get(i)
            if e is None:
                out.append(line[i])
                i += 1
            else:
                out.append(e.replacement)
                i += len(e.original)
        result.append("".join(out))
    if by_line:
        raise CorpusError(f"log refers to lines {sorted(by_line)} beyond the text")
    return "\n".join(result)


# ---------------------------------------------------------------------------
# corpus-level generation

@dataclass
class GeneratedDataset:
    pairs: list[ParallelPair]
    logs: list[list[ErrorEntry]]
    stats: Counter = field(default_factory=Counter)


def _generate_one(args):
    text, cfg, table = args
    return inject_errors(text, cfg, table)


def generate_dataset(clean_corpus: Sequence[Document | str], cfg: InjectionConfig,
                     table: ConfusionTable | None = None, jobs: int = 1) -> GeneratedDataset:
    """Corrupt every document; document ``d`` uses seed derive_seed(cfg.seed, d).

    The default alphabet is every character of the whole corpus except LF,
    so it does not depend on how documents are distributed over workers.
    """
    if not clean_corpus:
        raise OcrForgeError("cannot generate a dataset from an empty corpus")
    docs = [d if isinstance(d, Document) else Document(d, str(k)) for k, d in enumerate(clean_corpus)]
    alphabet = cfg.alphabet if cfg.alphabet is not None else corpus_alphabet([d.text for d in docs])
    tasks = [(d.text, replace(cfg, seed=derive_seed(cfg.seed, k), alphabet=alphabet), table)
             for k, d in enumerate(docs)]
    results = parallel_map(_generate_one, tasks, jobs)
    stats: Counter = Counter()
    pairs, logs = [], []
    for d, (corrupted, log) in zip(docs, results):
        pairs.append(ParallelPair(corrupted, d.text, d.doc_id))
        logs.append(log)
        stats.update(e.kind.value for e in log)
    return GeneratedDataset(pairs, logs, stats)


def log_to_jsonl(doc_ids: Sequence[str], logs: Sequence[Sequence[ErrorEntry]]) -> str:
    rows = []
    for doc_id, log in zip(doc_ids, logs):
        for e in log:
            rows.append(json.dumps({"doc": doc_id, "line": e.line, "index": e.index, "kind": e.kind.value,
                                    "original": e.original, "replacement": e.replacement},
                                   ensure_ascii=False))
    return "".join(r + "\n" for r in rows)


def log_from_jsonl(content: str) -> dict[str, list[ErrorEntry]]:
    out: dict[str, list[ErrorEntry]] = {}
    for k, row in enumerate(r for r in content.split("\n") if r):
        try:
            rec = json.loads(row)
            entry = ErrorEntry(int(rec["line"]), int(rec["index"]), ErrorKind(rec["kind"]),
                               rec["original"], rec["replacement"])
        except (ValueError, KeyError, TypeError) as exc:
            raise CorpusError(f"error log record {k}: {exc}") from None
        out.setdefault(str(rec["doc"]), []).append(entry)
    return out
