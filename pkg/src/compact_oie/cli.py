"""Command-line entry point: ``compact-oie <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 model error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .config import PipelineConfig, from_dict, load_config, to_dict
from .core import Example, Sentence, example_from_json, read_jsonl, write_examples
from .errors import BackendError, CompactOIEError, DataError, ModelError

log = logging.getLogger("compact_oie")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 0, 1, 2, 3
CACHE_ENV = "COMPACT_OIE_HOME"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def checkpoint_dir(name: str) -> Path:
    """Use ``name`` as given if it exists, else look it up under ``$COMPACT_OIE_HOME``."""
    p = Path(name)
    if p.exists() or p.is_absolute():
        return p
    home = Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "compact_oie"))
    return home / name


def read_sentences(path) -> List[Example]:
    """Records from a JSONL file, or one raw sentence per line of a text file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    first = next((ln for ln in text.splitlines() if ln.strip()), "")
    if path.suffix == ".jsonl" or first.lstrip().startswith("{"):
        out = []
        for lineno, d in read_jsonl(path):
            try:
                ex = example_from_json(d)
            except (DataError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            ex.id = ex.id or str(lineno)
            out.append(ex)
        return out
    return [Example(str(i), Sentence.from_text(ln.strip()))
            for i, ln in enumerate(text.splitlines(), 1) if ln.strip()]


def write_meta(output: Path, cfg: PipelineConfig, command: str, extra: Optional[dict] = None) -> None:
    meta = {"version": __version__, "command": command, "config": to_dict(cfg)}
    meta.update(extra or {})
    Path(str(output) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


# -- commands --

def cmd_preprocess(args, cfg: PipelineConfig) -> int:
    from .pipeline import CommandSplitter, preprocess

    examples = read_sentences(args.input)
    command = args.splitter_cmd or cfg.splitter_cmd
    splitter = CommandSplitter(command) if command else None
    try:
        out = preprocess(examples, splitter)
    finally:
        if splitter is not None:
            splitter.close()
    for ex in out:
        ex.triples = []
    write_examples(args.output, out)
    write_meta(Path(args.output), cfg, "preprocess", {"mode": "command" if splitter else "identity"})
    log.info("%d sentences -> %d", len(examples), len(out))
    return EXIT_OK


def cmd_build_benchmark(args, cfg: PipelineConfig) -> int:
    from .bench import CommandBackend, StubBackend, create_benchmark
    from .conll import read_conllu

    sentences = read_conllu(args.conllu)
    command = args.backend_cmd or cfg.backend_cmd
    if args.stub_backend:
        backend = StubBackend()
    elif command:
        backend = CommandBackend(command, args.concurrency or cfg.backend_concurrency)
    else:
        raise UsageError("build-benchmark needs --backend-cmd (or --stub-backend)")
    relations = args.relations.split(",") if args.relations else cfg.clause_relations
    try:
        bench = create_benchmark(sentences, backend, relations, workers=args.concurrency or cfg.backend_concurrency)
    finally:
        if hasattr(backend, "close"):
            backend.close()
    write_examples(args.output, bench.records)
    stats = bench.stats_dict()
    write_meta(Path(args.output), cfg, "build-benchmark",
               {"stats": stats, "failures": [f.__dict__ for f in bench.failures]})
    print(json.dumps(stats, indent=2))
    return EXIT_OK


def _train_overrides(section, args):
    for key in ("epochs", "lr", "batch_size", "patience"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(section, key, value)
    if args.encoder_name:
        section.encoder.encoder_name = args.encoder_name
    if args.seed is not None:
        section.seed = args.seed
    return section


def cmd_train(args, cfg: PipelineConfig, kind: str) -> int:
    from .core import read_examples

    train = read_examples(args.train)
    dev = read_examples(args.dev) if args.dev else None
    out = checkpoint_dir(args.out)
    if kind == "extractor":
        from .extractor import train_extractor as train_fn
        section = _train_overrides(cfg.extractor, args)
    else:
        from .linker import train_linker as train_fn
        section = _train_overrides(cfg.linker, args)
    result = train_fn(train, section, dev=dev, out_dir=out)
    h = result.history
    print(json.dumps({"checkpoint": str(out), "epochs": len(h.epochs), "best_epoch": h.best_epoch,
                      "best_val_loss": h.best_val_loss, "skipped": h.skipped}, indent=2))
    return EXIT_OK


def cmd_extract(args, cfg: PipelineConfig) -> int:
    import torch

    from .evaluation import export_extractions
    from .extractor import ExtractorModel
    from .linker import LinkerModel
    from .pipeline import Pipeline

    torch.manual_seed(cfg.seed)
    extractor = ExtractorModel.load(checkpoint_dir(args.extractor))
    linker = LinkerModel.load(checkpoint_dir(args.linker))
    if extractor.encoder.spec().get("type") != linker.encoder.spec().get("type"):
        log.info("extractor and linker use different encoder types")
    examples = read_sentences(args.input)
    alpha = args.alpha if args.alpha is not None else cfg.alpha
    pipe = Pipeline(extractor, linker, alpha=alpha, allow_missing_object=cfg.allow_missing_object)
    out = pipe.extract(examples)
    export_extractions(out, args.output, args.format)
    write_meta(Path(args.output), cfg, "extract", {
        "extractor": str(args.extractor), "linker": str(args.linker), "alpha": alpha,
        "sentences": pipe.stats.sentences, "triples": pipe.stats.triples,
        "length_errors": pipe.stats.length_errors})
    return EXIT_OK


def cmd_evaluate(args, cfg: PipelineConfig, with_gold: bool = True) -> int:
    from .conll import read_conllu
    from .core import read_examples
    from .evaluation import evaluate, read_synsets

    extractions = read_examples(args.extractions)
    synsets = read_synsets(args.gold) if with_gold and args.gold else None
    parses = read_conllu(args.parses) if args.parses else None
    report = evaluate(extractions, synsets, parses, args.rpa_mode or cfg.rpa_mode)
    print(report.render())
    if args.report:
        payload = {"version": __version__, "config": to_dict(cfg), "metrics": report.to_dict()}
        Path(args.report).write_text(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="compact-oie", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="YAML or JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    # same flags after the command name; SUPPRESS keeps them from clobbering earlier values
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("preprocess", parents=[common], help="split sentences into conjunction-free parts")
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--splitter-cmd")

    sp = sub.add_parser("build-benchmark", parents=[common], help="clause-wise compact triple extraction")
    sp.add_argument("--conllu", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--backend-cmd")
    sp.add_argument("--stub-backend", action="store_true", help="use the built-in rule stub")
    sp.add_argument("--concurrency", type=int)
    sp.add_argument("--relations", help="comma-separated clausal dependency relations")

    for name in ("train-extractor", "train-linker"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--train", required=True)
        sp.add_argument("--dev")
        sp.add_argument("--out", required=True)
        sp.add_argument("--epochs", type=int)
        sp.add_argument("--lr", type=float)
        sp.add_argument("--batch-size", type=int)
        sp.add_argument("--patience", type=int)
        sp.add_argument("--encoder-name")

    sp = sub.add_parser("extract", parents=[common], help="run the trained pipeline")
    sp.add_argument("--input", required=True)
    sp.add_argument("--extractor", required=True)
    sp.add_argument("--linker", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--format", choices=("jsonl", "carb_tsv"), default="jsonl")
    sp.add_argument("--allow-missing-object", action=argparse.BooleanOptionalAction, default=None)

    for name in ("evaluate", "analyze"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--extractions", required=True)
        if name == "evaluate":
            sp.add_argument("--gold", help="fact synset JSONL")
        sp.add_argument("--parses", help="CoNLL-U parses keyed by sentence id")
        sp.add_argument("--rpa-mode", choices=("sentence", "global"))
        sp.add_argument("--report")
    return p


def _resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "alpha", None) is not None:
        if not args.alpha > 0:
            raise UsageError("--alpha must be positive")
        cfg.alpha = args.alpha
    if getattr(args, "allow_missing_object", None) is not None:
        cfg.allow_missing_object = args.allow_missing_object
    if getattr(args, "backend_cmd", None):
        cfg.backend_cmd = args.backend_cmd
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = _resolve_config(args)
        handlers = {
            "preprocess": lambda: cmd_preprocess(args, cfg),
            "build-benchmark": lambda: cmd_build_benchmark(args, cfg),
            "train-extractor": lambda: cmd_train(args, cfg, "extractor"),
            "train-linker": lambda: cmd_train(args, cfg, "linker"),
            "extract": lambda: cmd_extract(args, cfg),
            "evaluate": lambda: cmd_evaluate(args, cfg),
            "analyze": lambda: cmd_evaluate(args, cfg, with_gold=False),
        }
        return handlers[args.command]()
    except UsageError as exc:
        print(f"compact-oie: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as exc:
        print(f"compact-oie: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (DataError, BackendError, OSError, CompactOIEError) as exc:
        print(f"compact-oie: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
