"""End-to-end extraction and the conjunction-splitting pre-processing hook."""
from __future__ import annotations

import json
import logging
import shlex
import subprocess
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .core import Constituent, Example, Label, Sentence
from .decoder import DecoderConfig, decode
from .errors import BackendError, LengthError
from .linker import assemble_triples, insert_markers

log = logging.getLogger(__name__)


# -- pre-processing --

class CommandSplitter:
    """External sentence splitter: one sentence per stdin line, a JSON list of strings back."""

    def __init__(self, command: str | Sequence[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self.proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                         text=True, bufsize=1)
        except OSError as exc:
            raise BackendError(f"cannot start splitter {argv!r}: {exc}") from exc

    def __call__(self, text: str) -> List[str]:
        self.proc.stdin.write(text.replace("\n", " ") + "\n")
        self.proc.stdin.flush()
        line = self.proc.stdout.readline()
        if not line:
            raise BackendError(f"splitter exited with code {self.proc.poll()}")
        try:
            parts = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BackendError(f"splitter sent invalid JSON: {line[:80]!r}") from exc
        if not isinstance(parts, list) or not all(isinstance(p, str) for p in parts):
            raise BackendError("splitter must answer with a JSON list of strings")
        return parts

    def close(self):
        self.proc.stdin.close()
        self.proc.wait(timeout=10)


def preprocess(examples: Sequence[Example], splitter=None) -> List[Example]:
    """Split each sentence into conjunction-free parts with a back-link to the source.

    Without a splitter the input passes through unchanged.
    """
    if splitter is None:
        return list(examples)
    out = []
    for ex in examples:
        parts = [p for p in splitter(ex.sentence.text) if p.strip()] or [ex.sentence.text]
        for k, part in enumerate(parts):
            out.append(Example(f"{ex.id}.{k}", Sentence.from_text(part), [], source_id=ex.id))
    return out


def regroup(examples: Sequence[Example]) -> "OrderedDict[str, List[Example]]":
    """Group (split) extraction records under their original sentence id."""
    groups: "OrderedDict[str, List[Example]]" = OrderedDict()
    for ex in examples:
        groups.setdefault(ex.source_id or ex.id, []).append(ex)
    return groups


# -- extraction --

@dataclass
class ExtractionStats:
    sentences: int = 0
    triples: int = 0
    length_errors: List[str] = field(default_factory=list)


class Pipeline:
    """Extractor probabilities -> decoded constituents -> per-predicate linking -> triples.

    ``extractor`` needs ``probabilities(sentences)``; ``linker`` needs
    ``classify(marked_sequences)``.  Trained models and test oracles both fit.
    """

    def __init__(self, extractor, linker, alpha: float = 1.2, allow_missing_object: bool = True,
                 batch_size: int = 32):
        self.extractor = extractor
        self.linker = linker
        self.decoder_cfg = DecoderConfig(alpha)
        self.allow_missing_object = allow_missing_object
        self.batch_size = batch_size
        self.stats = ExtractionStats()

    def _probabilities(self, chunk: Sequence[Example]):
        try:
            return self.extractor.probabilities([ex.sentence for ex in chunk])
        except LengthError:
            probs = []
            for ex in chunk:
                try:
                    probs.append(self.extractor.probabilities([ex.sentence])[0])
                except LengthError as exc:
                    log.warning("sentence %s skipped: %s", ex.id, exc)
                    self.stats.length_errors.append(ex.id)
                    probs.append(None)
            return probs

    def link(self, sentence: Sentence, constituents: Sequence[Constituent]):
        preds = [c for c in constituents if c.ctype == Label.PREDICATE]
        args = [c for c in constituents if c.ctype == Label.ARGUMENT]
        if not preds or not args:
            return []
        seqs = [insert_markers(sentence, p, args) for p in preds]
        predictions = [lp for group in self.linker.classify(seqs) for lp in group]
        return assemble_triples(preds, args, predictions, self.allow_missing_object)

    def extract(self, examples: Sequence[Example]) -> List[Example]:
        out = []
        for i in range(0, len(examples), self.batch_size):
            chunk = examples[i:i + self.batch_size]
            for ex, P in zip(chunk, self._probabilities(chunk)):
                triples = []
                if P is not None:
                    constituents = decode(P, self.decoder_cfg)
                    try:
                        triples = self.link(ex.sentence, constituents)
                    except LengthError as exc:
                        log.warning("sentence %s skipped: %s", ex.id, exc)
                        self.stats.length_errors.append(ex.id)
                out.append(Example(ex.id, ex.sentence, triples, ex.source_id))
                self.stats.sentences += 1
                self.stats.triples += len(triples)
        return out
