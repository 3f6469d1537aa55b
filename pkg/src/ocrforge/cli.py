"""Command-line pipeline: learn -> inject -> split/export, lm-train -> correct -> eval.

Every subcommand writes its outputs plus ``manifest.json`` under ``--out``.
Exit status: 0 success, 1 bad input or usage, 2 internal invariant failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .confusion import learn_confusions, load_table, save_table, top_k
from .corrector import DEFAULT_BEAM, DEFAULT_K, DEFAULT_ORDER, correct_corpus, load_lm, save_lm, train_lm
from .dataset import EXPORT_FORMATS, build_line_pairs, dump_split, export, load_split, split
from .errorgen import InjectionConfig, generate_dataset, log_to_jsonl
from .errors import InvariantViolation, OcrForgeError
from .metrics import evaluate_corrector
from .text import (FORMATS, Document, guess_format, ingest_corpus, read_texts, serialize_corpus,
                   write_texts, write_utf8)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("ocrforge")

_EXT = {"jsonl": ".jsonl", "tsv": ".tsv", "plain-dir": ""}


class UsageError(OcrForgeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    g.add_argument("--format", choices=FORMATS, default=None, help="input corpus format (default: from path)")
    g.add_argument("--out", default=None, help="output directory")
    g.add_argument("--config", default=None, help="TOML file of option defaults; command-line flags override it")
    g.add_argument("--jobs", type=int, default=1, help="worker processes for per-document work")
    g.add_argument("--nfc", action="store_true", help="NFC-normalize input text")
    g.add_argument("--field", default="text", help="JSONL field holding the text of single-sided corpora")
    return p


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="ocrforge", description="OCR confusion learning, error synthesis and evaluation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    common = _common()
    subs = {}

    p = sub.add_parser("learn", parents=[common], help="parallel corpus -> confusion table TSV")
    p.add_argument("corpus")
    p.add_argument("--fraction", type=float, default=0.7, help="share of pairs used for learning")
    p.add_argument("--top", type=int, default=20, help="rows printed to standard output")
    subs["learn"] = p

    p = sub.add_parser("inject", parents=[common], help="clean corpus -> corrupted parallel corpus + error log")
    p.add_argument("corpus")
    p.add_argument("--table", default=None, help="confusion table TSV (omit for random errors only)")
    defaults = InjectionConfig()
    for name, unit in (("p_delete", "character"), ("p_insert", "position"), ("p_swap", "adjacent pair"),
                       ("p_confusion", "confusion-target character"), ("p_substitute", "character")):
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=float, default=getattr(defaults, name),
                       metavar="P", help=f"probability per {unit} (default {getattr(defaults, name)})")
    p.add_argument("--alphabet", default=None, help="insertion/substitution characters (default: corpus characters)")
    subs["inject"] = p

    p = sub.add_parser("split", parents=[common], help="parallel corpus -> document-level train/validation split")
    p.add_argument("corpus")
    p.add_argument("--train-fraction", type=float, default=0.8)
    subs["split"] = p

    p = sub.add_parser("export", parents=[common], help="split file -> trainer files")
    p.add_argument("split_file")
    p.add_argument("--to", choices=EXPORT_FORMATS, default="jsonl")
    subs["export"] = p

    p = sub.add_parser("eval", parents=[common], help="golden + OCRed + fixed -> accuracy report")
    p.add_argument("--golden", default=None)
    p.add_argument("--ocred", default=None)
    p.add_argument("--pairs", default=None, help="parallel corpus supplying both golden and OCRed sides")
    p.add_argument("--fixed", default=None)
    p.add_argument("--name", default="corrector", help="row label for the fixed text")
    subs["eval"] = p

    p = sub.add_parser("lm-train", parents=[common], help="clean corpus -> character n-gram model TSV")
    p.add_argument("corpus")
    p.add_argument("--order", type=int, default=DEFAULT_ORDER)
    p.add_argument("--k", type=float, default=DEFAULT_K, help="add-k smoothing constant")
    subs["lm-train"] = p

    p = sub.add_parser("correct", parents=[common], help="corpus + model + table -> fixed corpus")
    p.add_argument("corpus")
    p.add_argument("--lm", default=None)
    p.add_argument("--table", default=None)
    p.add_argument("--beam", type=int, default=DEFAULT_BEAM)
    subs["correct"] = p

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="output directory (default: the recorded one)")
    subs["replay"] = p
    return parser, subs


# ---------------------------------------------------------------------------
# helpers

def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s): " +
                         ", ".join("--" + n.replace("_", "-") for n in missing))


def _out(args) -> Path:
    _require(args, "out")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _texts(path, args) -> list[Document]:
    return read_texts(path, args.format, field=args.field, normalize=args.nfc)


def _fmt(path, args) -> str:
    return args.format or guess_format(Path(path))


# ---------------------------------------------------------------------------
# subcommands; each returns the list of output paths it wrote

def cmd_learn(args) -> list[Path]:
    out = _out(args)
    pairs = ingest_corpus(args.corpus, args.format, normalize=args.nfc)
    table = learn_confusions(pairs, args.fraction, seed=args.seed, jobs=args.jobs)
    if any(s == t for s, t in table.substitutions):
        raise InvariantViolation("identity pair in learned table")
    path = out / "confusions.tsv"
    save_table(table, path)
    if table.skipped:
        log.warning("skipped %d pair(s) with an empty side", table.skipped)
    total = table.total_substitutions
    for s, t, n in top_k(table, args.top) if table.substitutions else []:
        print(f"{s}\t{t}\t{n}\t{n / total:.3f}")
    return [path]


def cmd_inject(args) -> list[Path]:
    out = _out(args)
    docs = _texts(args.corpus, args)
    table = load_table(args.table) if args.table else None
    cfg = InjectionConfig(args.p_delete, args.p_insert, args.p_swap, args.p_confusion, args.p_substitute,
                          args.alphabet, args.seed)
    result = generate_dataset(docs, cfg, table, jobs=args.jobs)
    fmt = _fmt(args.corpus, args)
    corpus_path = out / ("corrupted" + _EXT[fmt])
    serialize_corpus(result.pairs, corpus_path, fmt)
    log_path = out / "errors.jsonl"
    write_utf8(log_path, log_to_jsonl([p.doc_id for p in result.pairs], result.logs))
    log.info("injected %s", dict(sorted(result.stats.items())))
    return [corpus_path, log_path]


def cmd_split(args) -> list[Path]:
    out = _out(args)
    ds = build_line_pairs(ingest_corpus(args.corpus, args.format, normalize=args.nfc))
    if ds.rejected:
        log.warning("rejected %d pair(s) with unequal line counts: %s", len(ds.rejected), ", ".join(ds.rejected))
    ds = split(ds, args.train_fraction, args.seed)
    path = out / "split.jsonl"
    write_utf8(path, dump_split(ds))
    log.info("train: %d lines, validation: %d lines", len(ds.by_split("train")), len(ds.by_split("validation")))
    return [path]


def cmd_export(args) -> list[Path]:
    out = _out(args)
    return export(load_split(args.split_file), args.to, out)


def cmd_eval(args) -> list[Path]:
    _require(args, "fixed")
    if args.pairs:
        pairs = ingest_corpus(args.pairs, args.format, normalize=args.nfc)
        golden, ocred = [p.golden for p in pairs], [p.ocred for p in pairs]
    else:
        _require(args, "golden", "ocred")
        golden = [d.text for d in _texts(args.golden, args)]
        ocred = [d.text for d in _texts(args.ocred, args)]
    fixed = [d.text for d in _texts(args.fixed, args)]
    if not len(golden) == len(ocred) == len(fixed):
        raise OcrForgeError(f"corpus sizes differ: golden {len(golden)}, ocred {len(ocred)}, fixed {len(fixed)}")
    summary = evaluate_corrector(list(zip(golden, ocred, fixed)), name=args.name)
    if summary.skipped:
        log.warning("skipped %d document(s) without words", summary.skipped)
    table = summary.to_table()
    sys.stdout.write(table)
    if not args.out:
        return []
    out = _out(args)
    paths = [out / "report.txt", out / "report.jsonl", out / "report-details.json"]
    write_utf8(paths[0], table)
    write_utf8(paths[1], summary.to_jsonl())
    write_utf8(paths[2], json.dumps(summary.details(), indent=2) + "\n")
    return paths


def cmd_lm_train(args) -> list[Path]:
    out = _out(args)
    lm = train_lm([d.text for d in _texts(args.corpus, args)], args.order, args.k)
    path = out / "lm.tsv"
    save_lm(lm, path)
    return [path]


def cmd_correct(args) -> list[Path]:
    _require(args, "lm")
    out = _out(args)
    docs = _texts(args.corpus, args)
    table = load_table(args.table) if args.table else None
    fixed = correct_corpus([d.text for d in docs], load_lm(args.lm), table, args.beam, args.jobs)
    fmt = _fmt(args.corpus, args)
    path = out / ("fixed" + _EXT[fmt])
    write_texts([Document(t, d.doc_id) for t, d in zip(fixed, docs)], path, fmt)
    return [path]


COMMANDS = {
    "learn": cmd_learn, "inject": cmd_inject, "split": cmd_split, "export": cmd_export,
    "eval": cmd_eval, "lm-train": cmd_lm_train, "correct": cmd_correct,
}

_PATH_ARGS = ("corpus", "table", "split_file", "golden", "ocred", "pairs", "fixed", "lm", "out")


def _load_config(path: str, subparser: argparse.ArgumentParser) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    known = {a.dest for a in subparser._actions if a.option_strings}
    cfg = {}
    for key, value in raw.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise UsageError(f"config {path}: unknown key {key!r}")
        cfg[dest] = value
    return cfg


def _write_manifest(args, outputs: list[Path], started: str) -> None:
    params = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    for k in _PATH_ARGS:
        if params.get(k):
            params[k] = str(Path(params[k]).resolve())
    manifest = {
        "subcommand": args.command,
        "parameters": params,
        "seed": args.seed,
        "outputs": sorted(str(p.resolve()) for p in outputs),
        "version": __version__,
        "started": started,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    write_utf8(Path(args.out) / "manifest.json", json.dumps(manifest, ensure_ascii=False, indent=2) + "\n")


def run(args) -> None:
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    outputs = COMMANDS[args.command](args)
    if args.out:
        _write_manifest(args, outputs, started)


def replay(manifest_path: str, out: str | None) -> None:
    try:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
        params = dict(manifest["parameters"])
        command = manifest["subcommand"]
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read manifest {manifest_path}: {exc}") from None
    if command not in COMMANDS:
        raise UsageError(f"manifest names unknown subcommand {command!r}")
    if out:
        params["out"] = out
    run(argparse.Namespace(command=command, config=None, **params))


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(levelname)s: %(message)s", stream=sys.stderr)
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        if args.command == "replay":
            replay(args.manifest, args.out)
            return 0
        if args.config:
            subs[args.command].set_defaults(**_load_config(args.config, subs[args.command]))
            args = parser.parse_args(argv)
        run(args)
    except SystemExit as exc:  # --help / --version
        return 0 if exc.code in (0, None) else 1
    except (InvariantViolation, AssertionError) as exc:
        log.error("internal invariant violated: %s", exc)
        return 2
    except (OcrForgeError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
