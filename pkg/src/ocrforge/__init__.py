"""Learn OCR confusion statistics, synthesize corrupted training corpora, score corrections."""

__version__ = "0.1.0"

from .align import Alignment, Column, Op, Scoring, align_texts, levenshtein, nw_align, word_align
from .confusion import ConfusionTable, learn_confusions, load_table, save_table, top_k
from .corrector import ChannelModel, CharLM, correct_line, correct_text, train_lm
from .dataset import LinePairDataset, build_line_pairs, export, split
from .errorgen import ErrorEntry, ErrorKind, InjectionConfig, generate_dataset, inject_errors, replay_log
from .errors import OcrForgeError
from .metrics import AccuracyReport, acc_increase, evaluate_corrector, word_accuracy
from .rng import SplitMix64
from .text import DelimiterSet, Document, ParallelPair, ingest_corpus, tokenize

__all__ = [
    "Alignment", "Column", "Op", "Scoring", "align_texts", "levenshtein", "nw_align", "word_align",
    "ConfusionTable", "learn_confusions", "load_table", "save_table", "top_k",
    "ChannelModel", "CharLM", "correct_line", "correct_text", "train_lm",
    "LinePairDataset", "build_line_pairs", "export", "split",
    "ErrorEntry", "ErrorKind", "InjectionConfig", "generate_dataset", "inject_errors", "replay_log",
    "OcrForgeError", "AccuracyReport", "acc_increase", "evaluate_corrector", "word_accuracy",
    "SplitMix64", "DelimiterSet", "Document", "ParallelPair", "ingest_corpus", "tokenize",
]
