import random

import pytest
from hypothesis import settings

from ocrforge.confusion import ConfusionTable

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def make_vocabulary(seed: int, size: int = 300) -> list[str]:
    rng = random.Random(seed)
    consonants, vowels = "bcdfghklmnprstvz", "aeiou"
    words = set()
    while len(words) < size:
        n = rng.randint(1, 4)
        words.add("".join(rng.choice(consonants) + rng.choice(vowels) for _ in range(n)) + rng.choice(["", "n", "s", "t"]))
    return sorted(words)


def word_corpus(seed: int, n_docs: int, lines_per_doc: int, vocab_seed: int = 7) -> list[str]:
    """Documents of Zipf-weighted pseudo-words: enough n-gram structure for a character LM."""
    vocab = make_vocabulary(vocab_seed)
    weights = [1.0 / (r + 1) for r in range(len(vocab))]
    rng = random.Random(seed)
    docs = []
    for _ in range(n_docs):
        lines = []
        for _ in range(lines_per_doc):
            words = rng.choices(vocab, weights, k=rng.randint(4, 10))
            lines.append(" ".join(words) + rng.choice([".", ",", ""]))
        docs.append("\n".join(lines))
    return docs


def iid_corpus(seed: int, n_chars: int, weights: dict[str, float], line_len: int = 60,
               doc_lines: int = 200, no_repeats: bool = False) -> list[str]:
    """i.i.d. characters from ``weights`` chopped into lines and documents."""
    rng = random.Random(seed)
    chars, w = list(weights), list(weights.values())
    stream = rng.choices(chars, w, k=n_chars)
    if no_repeats:
        for i in range(1, len(stream)):
            while stream[i] == stream[i - 1]:
                stream[i] = rng.choices(chars, w)[0]
    lines = ["".join(stream[i:i + line_len]) for i in range(0, n_chars, line_len)]
    return ["\n".join(lines[i:i + doc_lines]) for i in range(0, len(lines), doc_lines)]


def markov_lines(seed: int, alphabet: str, n_lines: int, max_len: int = 13) -> list[str]:
    """Lines from a random first-order Markov chain with skewed transitions."""
    rng = random.Random(seed)
    trans = {c: [rng.random() ** 3 for _ in alphabet] for c in alphabet}
    lines = []
    for _ in range(n_lines):
        c = rng.choice(alphabet)
        chars = [c]
        for _ in range(rng.randint(0, max_len - 1)):
            c = rng.choices(alphabet, trans[c])[0]
            chars.append(c)
        lines.append("".join(chars))
    return lines


@pytest.fixture
def small_table() -> ConfusionTable:
    return ConfusionTable({("c", "e"): 4, ("l", "i"): 3, ("0", "o"): 2, ("Q", "o"): 1})
