"""Character-based accuracy increase and word accuracy, plus a comparison report."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Sequence

from .align import Op, levenshtein, word_align
from .errors import OcrForgeError
from .text import DEFAULT_DELIMITER_SET, DelimiterSet, tokenize


def acc_increase_from_distances(lev_ocred: int, lev_fixed: int) -> Fraction:
    """Percentage of OCR errors removed; 0 when the fix made things worse.

    With a perfect input (``lev_ocred == 0``) the ratio is undefined: keeping
    it perfect scores 100, damaging it scores 0.
    """
    if lev_ocred == 0:
        return Fraction(100) if lev_fixed == 0 else Fraction(0)
    if lev_fixed > lev_ocred:
        return Fraction(0)
    return Fraction(lev_ocred - lev_fixed, lev_ocred) * 100


def acc_increase(golden: str, ocred: str, fixed: str) -> float:
    return float(acc_increase_from_distances(levenshtein(golden, ocred), levenshtein(golden, fixed)))


@dataclass(frozen=True)
class WordCounts:
    n_w: int
    s_w: int
    d_w: int
    i_w: int

    @property
    def w_acc(self) -> float:
        return float(self.w_acc_exact)

    @property
    def w_acc_exact(self) -> Fraction:
        if self.n_w == 0:
            raise OcrForgeError("word accuracy is undefined for a text with no words")
        return Fraction(self.n_w - self.s_w - self.d_w - self.i_w, self.n_w) * 100

    def __add__(self, other: "WordCounts") -> "WordCounts":
        return WordCounts(self.n_w + other.n_w, self.s_w + other.s_w,
                          self.d_w + other.d_w, self.i_w + other.i_w)


def word_accuracy(evaluated: str, golden: str, delims: DelimiterSet = DEFAULT_DELIMITER_SET) -> WordCounts:
    """Word-alignment error counts of ``evaluated`` against ``golden``.

    D_w counts words only in the evaluated text, I_w words only in the golden text.
    """
    ev, gs = tokenize(evaluated, delims), tokenize(golden, delims)
    if not ev:
        raise OcrForgeError("evaluated text contains no words; word accuracy is undefined")
    al = word_align(ev, gs)
    return WordCounts(len(ev), al.count(Op.SUBSTITUTE), al.count(Op.DELETE), al.count(Op.INSERT))


@dataclass(frozen=True)
class AccuracyReport:
    lev_gs_ocred: int
    lev_gs_fixed: int
    acc_increase: float
    n_w: int
    s_w: int
    d_w: int
    i_w: int
    w_acc: float


def accuracy_report(golden: str, ocred: str, fixed: str,
                    delims: DelimiterSet = DEFAULT_DELIMITER_SET) -> AccuracyReport:
    lo, lf = levenshtein(golden, ocred), levenshtein(golden, fixed)
    wc = word_accuracy(fixed, golden, delims)
    return AccuracyReport(lo, lf, float(acc_increase_from_distances(lo, lf)),
                          wc.n_w, wc.s_w, wc.d_w, wc.i_w, wc.w_acc)


# ---------------------------------------------------------------------------
# corpus evaluation

@dataclass
class EvaluationSummary:
    name: str
    documents: int
    skipped: int
    acc_increase: float  # macro average over documents
    ocred_w_acc: float   # micro average (corpus totals)
    fixed_w_acc: float
    ocred_counts: WordCounts
    fixed_counts: WordCounts

    def rows(self) -> list[dict]:
        return [
            {"name": "OCRed input", "acc_increase": 0.0, "word_accuracy": self.ocred_w_acc},
            {"name": self.name, "acc_increase": self.acc_increase, "word_accuracy": self.fixed_w_acc},
        ]

    def to_jsonl(self) -> str:
        """One ``{"name", "acc_increase", "word_accuracy"}`` object per row, rounded to 3 places."""
        return "".join(json.dumps({k: (round(v, 3) if isinstance(v, float) else v) for k, v in r.items()},
                                  ensure_ascii=False) + "\n" for r in self.rows())

    def details(self) -> dict:
        return {"documents": self.documents, "skipped": self.skipped,
                "ocred_counts": asdict(self.ocred_counts), "fixed_counts": asdict(self.fixed_counts)}

    def to_table(self) -> str:
        return render_table(self.rows())


def pct(value: float) -> str:
    return f"{value:.3f}%"


def render_table(rows: Sequence[dict]) -> str:
    header = ("Corrector", "Character-based Accuracy Increase", "Word Accuracy")
    body = [(r["name"], pct(r["acc_increase"]), pct(r["word_accuracy"])) for r in rows]
    widths = [max(len(h), *(len(b[k]) for b in body)) for k, h in enumerate(header)]

    def fmt(cells):
        return "  ".join(c.ljust(w) if k == 0 else c.rjust(w) for k, (c, w) in enumerate(zip(cells, widths))).rstrip()

    lines = [fmt(header), fmt(tuple("-" * w for w in widths))]
    lines.extend(fmt(b) for b in body)
    return "\n".join(lines) + "\n"


def evaluate_corrector(triples: Sequence[tuple[str, str, str]], name: str = "corrector",
                       delims: DelimiterSet = DEFAULT_DELIMITER_SET) -> EvaluationSummary:
    """Score ``(golden, ocred, fixed)`` triples.

    Documents whose OCRed or fixed side has no words are skipped and counted.
    """
    if not triples:
        raise OcrForgeError("nothing to evaluate")
    acc_total = Fraction(0)
    ocred_total = WordCounts(0, 0, 0, 0)
    fixed_total = WordCounts(0, 0, 0, 0)
    used = skipped = 0
    for golden, ocred, fixed in triples:
        try:
            wo = word_accuracy(ocred, golden, delims)
            wf = word_accuracy(fixed, golden, delims)
        except OcrForgeError:
            skipped += 1
            continue
        acc_total += acc_increase_from_distances(levenshtein(golden, ocred), levenshtein(golden, fixed))
        ocred_total += wo
        fixed_total += wf
        used += 1
    if not used:
        raise OcrForgeError(f"all {skipped} documents were skipped (no words to score)")
    return EvaluationSummary(name, used, skipped, float(acc_total / used),
                             ocred_total.w_acc, fixed_total.w_acc, ocred_total, fixed_total)
