"""Noisy-channel baseline corrector.

A character n-gram language model (add-k smoothed) supplies the prior over
clean text and a channel model derived from a ConfusionTable supplies
P(observed | true). Decoding is a left-to-right beam search over
substitution hypotheses only: every observed character either stays, or is
read as a true character whose confusion sources include it.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .confusion import ConfusionTable
from .errors import OcrForgeError, TableFormatError
from .parallel import parallel_map
from .text import escape_field, read_utf8, unescape_field, write_utf8

BOS = "\x02"
EOS = "\x03"
UNK = "\x1a"
_RESERVED = frozenset((BOS, EOS, UNK))

DEFAULT_ORDER = 4
DEFAULT_K = 0.01
DEFAULT_BEAM = 16

# Hypothesis scores are sums of float log-probabilities kept exactly, as
# integers in units of 2**-1074 (the smallest float spacing). Float addition
# is not associative, so two readings with the same multiset of terms could
# otherwise compare unequal depending on where their paths merged.
_UNIT_BITS = 1074


def exact_units(x: float) -> int:
    """``x`` as an exact integer multiple of 2**-1074 (x must be finite)."""
    num, den = x.as_integer_ratio()
    return num << (_UNIT_BITS - den.bit_length() + 1)


@dataclass
class CharLM:
    order: int = DEFAULT_ORDER
    k: float = DEFAULT_K
    counts: dict[str, Counter] = field(default_factory=dict)
    vocab: frozenset = frozenset((EOS, UNK))

    def __post_init__(self):
        if self.order < 2:
            raise OcrForgeError(f"language model order must be >= 2, got {self.order}")
        self._totals = {ctx: sum(c.values()) for ctx, c in self.counts.items()}
        self._cache: dict[tuple[str, str], float] = {}
        self._units: dict[tuple[str, str], int] = {}
        self._next_ctx: dict[tuple[str, str], str] = {}

    @property
    def start(self) -> str:
        return BOS * (self.order - 1)

    def symbol(self, ch: str) -> str:
        if ch == EOS:
            return EOS
        return ch if ch in self.vocab and ch not in _RESERVED else UNK

    def prob(self, nxt: str, ctx: str) -> float:
        c = self.counts.get(ctx)
        seen = c.get(self.symbol(nxt), 0) if c else 0
        return (seen + self.k) / (self._totals.get(ctx, 0) + self.k * len(self.vocab))

    def log_prob(self, nxt: str, ctx: str) -> float:
        key = (nxt, ctx)
        lp = self._cache.get(key)
        if lp is None:
            lp = self._cache[key] = math.log(self.prob(nxt, ctx))
        return lp

    def log_units(self, nxt: str, ctx: str) -> int:
        """log_prob as exact units, for order-independent score sums."""
        key = (nxt, ctx)
        u = self._units.get(key)
        if u is None:
            u = self._units[key] = exact_units(self.log_prob(nxt, ctx))
        return u

    def advance(self, ctx: str, ch: str) -> str:
        key = (ctx, ch)
        nctx = self._next_ctx.get(key)
        if nctx is None:
            nctx = self._next_ctx[key] = (ctx + self.symbol(ch))[1:]
        return nctx

    def line_log_prob(self, line: str) -> float:
        ctx, total = self.start, 0.0
        for ch in line:
            total += self.log_prob(ch, ctx)
            ctx = self.advance(ctx, ch)
        return total + self.log_prob(EOS, ctx)


def train_lm(clean_corpus: Iterable[str], n: int = DEFAULT_ORDER, k: float = DEFAULT_K) -> CharLM:
    """Count n-grams line by line, padding each line with begin/end sentinels."""
    if n < 2:
        raise OcrForgeError(f"language model order must be >= 2, got {n}")
    texts = list(clean_corpus)
    if not texts:
        raise OcrForgeError("cannot train a language model on an empty corpus")
    chars = {ch for t in texts for ch in t if ch != "\n" and ch not in _RESERVED}
    vocab = frozenset(chars | {EOS, UNK})
    counts: dict[str, Counter] = {}
    for text in texts:
        for line in text.split("\n"):
            syms = BOS * (n - 1) + "".join(ch if ch not in _RESERVED else UNK for ch in line) + EOS
            for j in range(n - 1, len(syms)):
                counts.setdefault(syms[j - n + 1:j], Counter())[syms[j]] += 1
    return CharLM(n, k, counts, vocab)


def dumps_lm(lm: CharLM) -> str:
    rows = [f"#order\t{lm.order}", f"#k\t{lm.k!r}"]
    for ctx in sorted(lm.counts):
        for nxt, c in sorted(lm.counts[ctx].items()):
            rows.append(f"{escape_field(ctx)}\t{escape_field(nxt)}\t{c}")
    return "".join(r + "\n" for r in rows)


def loads_lm(content: str, source: str = "<string>") -> CharLM:
    order, k = None, None
    counts: dict[str, Counter] = {}
    for lineno, row in enumerate((r for r in content.split("\n") if r), start=1):
        where = f"{source}:{lineno}: "
        cols = row.split("\t")
        try:
            if cols[0] == "#order" and len(cols) == 2:
                order = int(cols[1])
                continue
            if cols[0] == "#k" and len(cols) == 2:
                k = float(cols[1])
                continue
            if len(cols) != 3:
                raise ValueError("expected context<TAB>next<TAB>count")
            ctx, nxt, c = unescape_field(cols[0], where), unescape_field(cols[1], where), int(cols[2])
        except (ValueError, OcrForgeError) as exc:
            raise TableFormatError(f"{where}{exc}") from None
        if order is None or k is None:
            raise TableFormatError(f"{where}#order and #k headers must come first")
        if len(ctx) != order - 1 or len(nxt) != 1 or c < 1:
            raise TableFormatError(f"{where}malformed n-gram row")
        counts.setdefault(ctx, Counter())[nxt] = c
    if order is None or k is None:
        raise TableFormatError(f"{source}: missing #order/#k headers")
    vocab = frozenset({nxt for c in counts.values() for nxt in c} | {EOS, UNK})
    return CharLM(order, k, counts, vocab)


def save_lm(lm: CharLM, path) -> None:
    write_utf8(Path(path), dumps_lm(lm))


def load_lm(path) -> CharLM:
    return loads_lm(read_utf8(Path(path)), str(path))


class ChannelModel:
    """P(observed a | true b) from confusion counts with add-one identity mass.

    For a true character b with sources S(b): P(a | b) = count(a, b) / D(b)
    and P(b | b) = |S(b)| / D(b), where D(b) = sum of counts(., b) + |S(b)|.
    Characters that are never a confusion target are always read correctly.
    """

    k_channel = 1

    def __init__(self, table: ConfusionTable | None = None):
        self.identity: dict[str, float] = {}
        self.prob: dict[tuple[str, str], float] = {}
        candidates: dict[str, list[str]] = {}
        if table:
            for tgt, sources in table.sources_by_target().items():
                denom = sum(n for _, n in sources) + len(sources) * self.k_channel
                self.identity[tgt] = len(sources) * self.k_channel / denom
                for src, n in sources:
                    self.prob[(src, tgt)] = n / denom
                    candidates.setdefault(src, []).append(tgt)
        self._expansions: dict[str, list[tuple[str, int]]] = {}
        self._candidates = {a: sorted(bs) for a, bs in candidates.items()}

    def log_prob(self, observed: str, true: str) -> float:
        if observed == true:
            return math.log(self.identity.get(true, 1.0))
        p = self.prob.get((observed, true), 0.0)
        return math.log(p) if p > 0 else -math.inf

    def expansions(self, observed: str) -> list[tuple[str, int]]:
        """(true char, log P(observed | true) in exact units): keep-as-is first, then candidates by code point."""
        out = self._expansions.get(observed)
        if out is None:
            # every listed reading has positive probability, so its log is finite
            trues = [observed, *self._candidates.get(observed, ())]
            out = [(b, exact_units(self.log_prob(observed, b))) for b in trues]
            self._expansions[observed] = out
        return out


def correct_line(line: str, lm: CharLM, channel: ChannelModel, beam_width: int = DEFAULT_BEAM) -> str:
    """Highest-scoring reading of ``line`` under channel x language model.

    Hypotheses sharing a language-model context are merged (keeping the
    better one), so a beam at least as wide as the number of distinct
    contexts is exact. Equal scores go to the code-point-smaller output.
    """
    if beam_width < 1:
        raise OcrForgeError("beam width must be positive")
    if not line:
        return line
    log_units, advance = lm.log_units, lm.advance
    beam: dict[str, tuple[int, str]] = {lm.start: (0, "")}
    for a in line:
        nxt: dict[str, tuple[int, str]] = {}
        exps = channel.expansions(a)
        for ctx, (score, out) in beam.items():
            for b, ch_lp in exps:
                s = score + ch_lp + log_units(b, ctx)
                nctx = advance(ctx, b)
                cur = nxt.get(nctx)
                if cur is None or s > cur[0] or (s == cur[0] and out + b < cur[1]):
                    nxt[nctx] = (s, out + b)
        if len(nxt) > beam_width:
            kept = sorted(nxt.items(), key=lambda kv: (-kv[1][0], kv[1][1]))[:beam_width]
            nxt = dict(kept)
        beam = nxt
    best = min(((score + log_units(EOS, ctx), out) for ctx, (score, out) in beam.items()),
               key=lambda so: (-so[0], so[1]))
    return best[1]


def correct_text(text: str, lm: CharLM, channel: ChannelModel, beam_width: int = DEFAULT_BEAM) -> str:
    return "\n".join(correct_line(line, lm, channel, beam_width) for line in text.split("\n"))


def _correct_one(args):
    text, lm, channel, beam_width = args
    return correct_text(text, lm, channel, beam_width)


def correct_corpus(texts: Sequence[str], lm: CharLM, table: ConfusionTable | None,
                   beam_width: int = DEFAULT_BEAM, jobs: int = 1) -> list[str]:
    channel = ChannelModel(table)
    return parallel_map(_correct_one, [(t, lm, channel, beam_width) for t in texts], jobs)
