"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python tests/test_acceptance.py``.
"""

import itertools
import math
import random
import time
from collections import Counter
from fractions import Fraction

import pytest
from scipy.stats import spearmanr

from conftest import iid_corpus, markov_lines, word_corpus
from oracles import lev_recursive

from ocrforge import cli
from ocrforge.align import levenshtein, nw_align
from ocrforge.confusion import ConfusionTable, learn_confusions
from ocrforge.corrector import EOS, ChannelModel, correct_corpus, correct_line, train_lm
from ocrforge.dataset import build_line_pairs, split
from ocrforge.errorgen import InjectionConfig, generate_dataset, replay_log
from ocrforge.metrics import acc_increase_from_distances, evaluate_corrector, word_accuracy
from ocrforge.text import Document, ParallelPair, write_texts


@pytest.fixture
def verdict(capsys):
    def report(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {title}" + (f" ({detail})" if detail else ""))
        assert ok, detail
    return report


def test_criterion_01_edit_distance_oracle(verdict):
    strings = ["".join(p) for n in range(6) for p in itertools.product("abc", repeat=n)]
    start = time.perf_counter()
    got = [levenshtein(a, b) for a in strings for b in strings]
    elapsed = time.perf_counter() - start
    mismatches = sum(g != lev_recursive(a, b) for g, (a, b) in zip(got, itertools.product(strings, strings)))
    verdict(1, "levenshtein equals recursive oracle on all pairs, length <= 5, 3 symbols",
            mismatches == 0 and elapsed < 10,
            f"{len(strings) ** 2} pairs, {mismatches} mismatches, levenshtein {elapsed:.1f}s")


def test_criterion_02_alignment_distance_duality(verdict):
    rng = random.Random(2)
    bad = 0
    for _ in range(1000):
        a = "".join(rng.choice("abcd") for _ in range(rng.randint(0, 40)))
        b = "".join(rng.choice("abcd") for _ in range(rng.randint(0, 40)))
        al = nw_align(a, b)
        d = levenshtein(a, b)
        if -al.score != d or d != lev_recursive(a, b) or "".join(al.left()) != a or "".join(al.right()) != b:
            bad += 1
    verdict(2, "-nw_align score equals levenshtein and alignments reconstruct inputs", bad == 0,
            f"1000 pairs, {bad} failures")


def test_criterion_03_acc_increase_exact(verdict):
    checks = [float(acc_increase_from_distances(10, 5)) - 50.0]
    checks += [float(acc_increase_from_distances(k, 0)) - 100.0 for k in range(1, 50)]
    checks += [float(acc_increase_from_distances(lo, lf)) for lo in range(1, 30) for lf in range(lo + 1, 40)]
    worst = max(abs(c) for c in checks)
    verdict(3, "acc_increase hand values 50 / 100 / 0-otherwise", worst <= 1e-9, f"max error {worst:.1e}")


def test_criterion_04_word_accuracy_exact(verdict):
    hand = [
        (("the cat sat", "the cat sat"), (3, 0, 0, 0), 100.0),
        (("teh cat", "the cat"), (2, 1, 0, 0), 50.0),
        (("the cat", "the black cat"), (2, 0, 0, 1), 50.0),
    ]
    hand_ok = all((wc.n_w, wc.s_w, wc.d_w, wc.i_w) == counts and abs(wc.w_acc - acc) <= 1e-9
                  for (ev, gs), counts, acc in hand for wc in [word_accuracy(ev, gs)])
    rng = random.Random(4)
    vocab = ["a", "b", "c", "ab", "ba"]
    bad = 0
    for _ in range(1000):
        ev = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
        gs = [rng.choice(vocab) for _ in range(rng.randint(0, 12))]
        wc = word_accuracy(" ".join(ev), " ".join(gs))
        if wc.s_w + wc.d_w + wc.i_w != lev_recursive(ev, gs) or wc.n_w != len(ev):
            bad += 1
    verdict(4, "word_accuracy hand counts and S+D+I equals word-level distance", hand_ok and bad == 0,
            f"hand examples {'ok' if hand_ok else 'wrong'}, 1000 random pairs, {bad} failures")


CONFUSIONS = {("0", "a"): 100, ("1", "a"): 80, ("2", "b"): 60, ("3", "b"): 50, ("4", "c"): 40,
              ("5", "d"): 30, ("6", "e"): 20, ("7", "f"): 15, ("8", "g"): 10, ("9", "h"): 5}


def test_criterion_05_confusion_self_consistency(verdict):
    # Sources never occur in the clean text, so every confusion is an
    # unambiguous diagonal column. Clean characters are drawn in proportion to
    # each target's total count, which makes the expected learned relative
    # frequencies equal to the table's.
    start = time.perf_counter()
    table = ConfusionTable(CONFUSIONS)
    weights = Counter()
    for (_, tgt), n in CONFUSIONS.items():
        weights[tgt] += n
    weights[" "] = 50
    docs = iid_corpus(5, 1_000_000, dict(weights))
    n_chars = sum(len(d) for d in docs)
    pairs = generate_dataset(docs, InjectionConfig.zero(p_confusion=0.05, seed=2024), table).pairs
    learned = learn_confusions(pairs, 1.0)
    elapsed = time.perf_counter() - start

    total = learned.total_substitutions
    expected_total = sum(CONFUSIONS.values())
    worst_z = 0.0
    for pair, n in CONFUSIONS.items():
        p = n / expected_total
        se = math.sqrt(p * (1 - p) / total)
        worst_z = max(worst_z, abs(learned.relative_frequency(*pair) - p) / se)
    keys = sorted(CONFUSIONS)
    rho = spearmanr([CONFUSIONS[k] for k in keys], [learned.substitutions[k] for k in keys]).statistic
    support_ok = set(learned.substitutions) == set(CONFUSIONS)
    verdict(5, "learned table recovers injected support, frequencies and ranking",
            n_chars >= 10**6 and support_ok and worst_z <= 3 and rho >= 0.9 and elapsed < 60,
            f"{n_chars} chars, {total} substitutions, support {'exact' if support_ok else 'wrong'}, "
            f"max |z| {worst_z:.2f}, spearman {rho:.3f}, {elapsed:.1f}s")


def _swap_opportunities(clean_lines, logs_by_line):
    """Positions that reached the swap draw: visited, with a different successor."""
    n = 0
    for line_no, line in enumerate(clean_lines):
        swapped = {e.index for e in logs_by_line.get(line_no, ())}
        i = 0
        while i < len(line):
            if i + 1 < len(line) and line[i + 1] != line[i]:
                n += 1
            i += 2 if i in swapped else 1
    return n


def test_criterion_06_rate_fidelity_and_replay(verdict):
    p = 0.01
    # 60-char lines lose one swap position each, so pad the corpus past 10**6 opportunities
    docs = iid_corpus(6, 1_050_000, {c: 1 for c in "abcdefghijklmnop "}, no_repeats=True)
    details, ok = [], True
    for kind, cfg in (("delete", InjectionConfig.zero(p_delete=p, seed=61)),
                      ("insert", InjectionConfig.zero(p_insert=p, seed=62)),
                      ("swap", InjectionConfig.zero(p_swap=p, seed=63))):
        res = generate_dataset(docs, cfg)
        if kind == "swap":
            opportunities = 0
            for d, log in zip(docs, res.logs):
                by_line = {}
                for e in log:
                    by_line.setdefault(e.line, []).append(e)
                opportunities += _swap_opportunities(d.split("\n"), by_line)
        else:
            opportunities = sum(len(d) - d.count("\n") for d in docs)
        observed = res.stats[kind]
        sigma = math.sqrt(opportunities * p * (1 - p))
        z = (observed - opportunities * p) / sigma
        replay_ok = all(replay_log(pair.golden, log) == pair.ocred for pair, log in zip(res.pairs, res.logs))
        ok &= opportunities >= 10**6 and abs(z) <= 3 and replay_ok
        details.append(f"{kind}: {observed}/{opportunities} z={z:+.2f} replay {'ok' if replay_ok else 'broken'}")
    verdict(6, "delete/insert/swap counts inside 3 sigma bands, log replay exact", ok, "; ".join(details))


def _tree(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.is_file() and p.name != "manifest.json"}


def test_criterion_07_cli_determinism(verdict, tmp_path):
    clean = tmp_path / "clean.jsonl"
    write_texts([Document(t, f"doc{i:02d}") for i, t in enumerate(word_corpus(7, 40, 15))], clean, "jsonl")

    def pipeline(tag, jobs):
        root = tmp_path / tag
        codes = [cli.main(["inject", str(clean), "--out", str(root / "inject"), "--seed", "31",
                           "--p-substitute", "0.01", "--jobs", jobs])]
        codes.append(cli.main(["split", str(root / "inject" / "corrupted.jsonl"), "--out", str(root / "split"),
                               "--seed", "31", "--jobs", jobs]))
        for fmt in ("jsonl", "parallel-txt", "tsv"):
            codes.append(cli.main(["export", str(root / "split" / "split.jsonl"), "--to", fmt,
                                   "--out", str(root / "export" / fmt), "--jobs", jobs]))
        return codes, _tree(root)

    c1, run1 = pipeline("run1", "1")
    c2, run2 = pipeline("run2", "1")
    c8, run8 = pipeline("run8", "8")
    ok = set(c1 + c2 + c8) == {0} and run1 == run2 == run8 and len(run1) >= 10
    verdict(7, "inject/split/export outputs byte-identical across runs and --jobs 1 vs 8", ok,
            f"{len(run1)} files compared, exit codes {sorted(set(c1 + c2 + c8))}")


E2E_TABLE = {("c", "e"): 40, ("l", "i"): 30, ("0", "o"): 25, ("h", "b"): 20, ("u", "n"): 15,
             ("5", "s"): 10, ("1", "l"): 10, ("a", "o"): 8, ("v", "u"): 6, ("8", "b"): 4}


def test_criterion_08_end_to_end_improvement(verdict):
    table = ConfusionTable(E2E_TABLE)
    lm = train_lm(word_corpus(101, 300, 20), 5)  # disjoint clean documents from the same vocabulary
    clean = word_corpus(202, 20, 20)
    pairs = generate_dataset(clean, InjectionConfig.zero(p_confusion=0.05, seed=77), table).pairs
    fixed = correct_corpus([p.ocred for p in pairs], lm, table)
    s = evaluate_corrector([(p.golden, p.ocred, f) for p, f in zip(pairs, fixed)])
    ok = s.acc_increase > 0 and s.fixed_w_acc > s.ocred_w_acc
    verdict(8, "noisy-channel baseline improves character and word accuracy", ok,
            f"mean acc_increase {s.acc_increase:.3f}%, word accuracy {s.ocred_w_acc:.3f}% -> {s.fixed_w_acc:.3f}%, "
            f"stretch goal >= 20% {'met' if s.acc_increase >= 20 else 'not met'}")


def _all_argmaxes(alphabet, max_len, lm, table):
    """Exhaustive argmax reading for every line up to max_len.

    Walks the tree of input lines, carrying every reading of the current
    prefix with its exact rational score (scaled to an integer); nothing is
    pruned or merged.
    """
    scale = 1 << 1074
    lp_cache = {}

    def exact(x):
        return int(Fraction(x) * scale)

    def lm_term(b, ctx):
        key = (b, ctx)
        if key not in lp_cache:
            lp_cache[key] = exact(lm.log_prob(b, ctx))
        return lp_cache[key]

    targets = {}
    for (src, tgt), n in table.substitutions.items():
        targets.setdefault(src, {})[tgt] = n
    readings = {}
    for a in alphabet:
        cands = targets.get(a, {})
        readings[a] = [(a, exact(ChannelModel(table).log_prob(a, a)))]
        readings[a] += [(b, exact(ChannelModel(table).log_prob(a, b))) for b in sorted(cands)]

    best = {}
    stack = [("", [(0, lm.start, "")])]
    while stack:
        line, hyps = stack.pop()
        top = max(hyps, key=lambda h: (h[0] + lm_term(EOS, h[1]), [-ord(c) for c in h[2]]))
        best[line] = top[2]
        if len(line) < max_len:
            for a in alphabet:
                stack.append((line + a, [(s + ch + lm_term(b, ctx), lm.advance(ctx, b), t + b)
                                         for s, ctx, t in hyps for b, ch in readings[a]]))
    return best


@pytest.mark.slow
def test_criterion_09_beam_equals_exhaustive(verdict):
    alphabet = "abcdef"
    table = ConfusionTable({("a", "b"): 3, ("c", "d"): 2})
    lm = train_lm(["\n".join(markov_lines(9, alphabet, 400))], 3)
    channel = ChannelModel(table)
    start = time.perf_counter()
    oracle = _all_argmaxes(alphabet, 8, lm, table)
    # at most 2**8 readings per line, so this width never prunes
    mismatches = [line for line, want in oracle.items() if correct_line(line, lm, channel, 256) != want]
    changed = sum(want != line for line, want in oracle.items())
    elapsed = time.perf_counter() - start
    verdict(9, "beam search equals exhaustive argmax on all lines <= 8 over 6 symbols", not mismatches,
            f"{len(oracle)} lines, {changed} corrected, {len(mismatches)} mismatches"
            + (f" e.g. {mismatches[:3]}" if mismatches else "") + f", {elapsed:.0f}s")


def test_criterion_10_document_split(verdict):
    docs = [ParallelPair(f"o{d}a\no{d}b", f"g{d}a\ng{d}b", f"doc{d}") for d in range(10)]
    ds = build_line_pairs(docs)
    results = []
    for seed in (0, 1, 12345):
        a, b = split(ds, 0.8, seed), split(ds, 0.8, seed)
        train = {r.doc_id for r in a.by_split("train")}
        val = {r.doc_id for r in a.by_split("validation")}
        results.append(a.records == b.records and len(train) == 8 and len(val) == 2
                       and not train & val and train | val == {p.doc_id for p in docs}
                       and len(a.records) == len(ds.records))
    verdict(10, "split(0.8) on 10 documents: 8/2, disjoint, exhaustive, stable", all(results),
            f"seeds checked: {len(results)}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
