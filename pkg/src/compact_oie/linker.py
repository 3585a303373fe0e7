"""Constituent linking: typed markers around one predicate and all arguments,
a classifier over the two opening-marker vectors, and triple assembly."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from .config import LinkerConfig, from_dict
from .core import Constituent, Example, Label, Sentence, Triple
from .encoder import MARKERS, Encoder, build_encoder, load_encoder
from .errors import DataError, OverlapError
from .training import History, fit, load_weights, mean_loss, read_checkpoint, save_checkpoint, split_dev

log = logging.getLogger(__name__)

PR_OPEN, PR_CLOSE, ARG_OPEN, ARG_CLOSE = MARKERS
LINK_LABELS = (Label.SUBJECT, Label.OBJECT, Label.NONE)
LINK_INDEX = {lab: i for i, lab in enumerate(LINK_LABELS)}


@dataclass(frozen=True)
class MarkedSequence:
    tokens: Tuple[str, ...]
    predicate: Constituent
    arguments: Tuple[Constituent, ...]
    marker_positions: Dict[Constituent, int]
    word_index: Tuple[Optional[int], ...]   # original word index per token, None for markers

    def strip(self) -> List[str]:
        return [t for t, w in zip(self.tokens, self.word_index) if w is not None]

    def render(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class LinkPrediction:
    predicate: Constituent
    argument: Constituent
    label: Label
    probs: Tuple[float, float, float]   # Subject, Object, None

    def prob(self, lab: Label) -> float:
        return self.probs[LINK_INDEX[lab]]


def insert_markers(s: Sentence | Sequence[str], predicate: Constituent,
                   arguments: Sequence[Constituent]) -> MarkedSequence:
    words = list(s.tokens) if isinstance(s, Sentence) else list(s)
    marked = sorted([predicate, *arguments], key=lambda c: c.span.start)
    for a, b in zip(marked, marked[1:]):
        if a.span.overlaps(b.span):
            raise OverlapError(f"spans {a.span} and {b.span} overlap")
    if marked and marked[-1].span.end >= len(words):
        raise OverlapError("span outside sentence")
    opens = {c.span.start: c for c in marked}
    closes = {c.span.end: c for c in marked}
    tokens, index, positions = [], [], {}
    for i, w in enumerate(words):
        if i in opens:
            c = opens[i]
            positions[c] = len(tokens)
            tokens.append(PR_OPEN if c == predicate else ARG_OPEN)
            index.append(None)
        tokens.append(w)
        index.append(i)
        if i in closes:
            tokens.append(PR_CLOSE if closes[i] == predicate else ARG_CLOSE)
            index.append(None)
    return MarkedSequence(tuple(tokens), predicate, tuple(arguments), positions, tuple(index))


class LinkHead(nn.Module):
    def __init__(self, d: int, hidden: int = 150, dropout: float = 0.1):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(2 * d, hidden), nn.GELU(), nn.Dropout(dropout),
                                 nn.Linear(hidden, len(LINK_LABELS)))

    def forward(self, x):
        return self.net(x)


class LinkerModel(nn.Module):
    def __init__(self, encoder: Encoder, cfg: LinkerConfig):
        super().__init__()
        self.encoder = encoder
        self.cfg = cfg
        self.head = LinkHead(encoder.hidden_size, cfg.hidden, cfg.mlp_dropout)

    def pair_logits(self, seqs: Sequence[MarkedSequence]) -> List[torch.Tensor]:
        """One ``(n_args, 3)`` logit matrix per marked sequence."""
        H, _ = self.encoder.encode([list(m.tokens) for m in seqs])
        out = []
        for b, m in enumerate(seqs):
            if not m.arguments:
                out.append(H.new_zeros((0, len(LINK_LABELS))))
                continue
            p = H[b, m.marker_positions[m.predicate]]
            a = H[b, [m.marker_positions[arg] for arg in m.arguments]]
            x = torch.cat([p.expand_as(a), a], dim=-1)
            out.append(self.head(x))
        return out

    @torch.no_grad()
    def classify(self, seqs: Sequence[MarkedSequence]) -> List[List[LinkPrediction]]:
        self.eval()
        if not seqs:
            return []
        results = []
        for m, logits in zip(seqs, self.pair_logits(seqs)):
            probs = torch.softmax(logits.double(), dim=-1).cpu().numpy()
            results.append([
                LinkPrediction(m.predicate, arg, LINK_LABELS[int(np.argmax(p))], tuple(float(x) for x in p))
                for arg, p in zip(m.arguments, probs)
            ])
        return results

    def save(self, path, history: Optional[History] = None) -> Path:
        return save_checkpoint(path, "linker", self, self.cfg, history, [lab.name.title() for lab in LINK_LABELS])

    @classmethod
    def load(cls, path) -> "LinkerModel":
        meta = read_checkpoint(path, "linker")
        cfg = from_dict(LinkerConfig, meta["config"])
        model = cls(load_encoder(path, meta["encoder"]), cfg)
        load_weights(model, path)
        return model


def classify_links(m: MarkedSequence, model: LinkerModel) -> List[LinkPrediction]:
    return model.classify([m])[0]


def assemble_triples(predicates: Sequence[Constituent], arguments: Sequence[Constituent],
                     predictions: Sequence[LinkPrediction], allow_missing_object: bool = True) -> List[Triple]:
    """Pick the most probable Subject and Object argument per predicate and build triples."""
    by_pred: Dict[Constituent, List[LinkPrediction]] = {}
    for lp in predictions:
        by_pred.setdefault(lp.predicate, []).append(lp)
    allowed = set(arguments)

    def best(cands, lab):
        cands = [lp for lp in cands if lp.label == lab and lp.argument in allowed]
        if not cands:
            return None
        return min(cands, key=lambda lp: (-lp.prob(lab), lp.argument.span.start))

    triples = []
    for pred in sorted(predicates, key=lambda c: c.span.start):
        cands = by_pred.get(pred, [])
        subj = best(cands, Label.SUBJECT)
        if subj is None:
            continue
        obj = best(cands, Label.OBJECT)
        if obj is None and not allow_missing_object:
            continue
        conf = subj.prob(Label.SUBJECT) * (obj.prob(Label.OBJECT) if obj is not None else 1.0)
        triples.append(Triple(subj.argument, pred, obj.argument if obj is not None else None, conf))
    return triples


# -- training --

@dataclass
class _Item:
    seq: MarkedSequence
    labels: List[int]


def pair_items(examples: Sequence[Example]) -> List[_Item]:
    """One marked sequence per gold predicate; all sentence arguments are candidates."""
    items = []
    for ex in examples:
        consts = ex.constituents()
        args = [c for c in consts if c.ctype == Label.ARGUMENT]
        preds = [c for c in consts if c.ctype == Label.PREDICATE]
        roles = {}
        for t in ex.triples:
            roles[(t.predicate, t.subject)] = Label.SUBJECT
            if t.object is not None:
                roles[(t.predicate, t.object)] = Label.OBJECT
        for p in preds:
            if not args:
                continue
            try:
                seq = insert_markers(ex.sentence, p, args)
            except OverlapError as exc:
                log.warning("skipping record %s: %s", ex.id, exc)
                continue
            labels = [LINK_INDEX[roles.get((p, a), Label.NONE)] for a in args]
            items.append(_Item(seq, labels))
    return items


def _batch_loss(model: LinkerModel, batch: List[_Item]):
    logits = torch.cat(model.pair_logits([it.seq for it in batch]))
    gold = torch.tensor([lab for it in batch for lab in it.labels], device=logits.device)
    return nn.functional.cross_entropy(logits, gold), len(gold)


@dataclass
class TrainResult:
    model: LinkerModel
    history: History
    path: Optional[Path] = None


def train_linker(train: Sequence[Example], cfg: LinkerConfig, dev: Optional[Sequence[Example]] = None,
                 out_dir=None, encoder: Optional[Encoder] = None) -> TrainResult:
    items = pair_items(train)
    if not items:
        raise DataError("no trainable pairs")
    torch.manual_seed(cfg.seed)
    if encoder is None:
        encoder = build_encoder(cfg.encoder, [list(ex.sentence.tokens) + list(MARKERS) for ex in train])
    max_len = encoder.max_seq_len
    kept = [it for it in items if len(encoder.subword_ids(it.seq.tokens)[0]) <= max_len]
    skipped = len(items) - len(kept)
    if not kept:
        raise DataError("no trainable pairs")
    model = LinkerModel(encoder, cfg)
    if dev is None:
        kept, dev_items = split_dev(kept, cfg.val_fraction, cfg.seed)
    else:
        dev_items = pair_items(dev) or kept
    hist = fit(model, kept, dev_items, _batch_loss, cfg)
    hist.skipped = skipped
    path = model.save(out_dir, hist) if out_dir is not None else None
    return TrainResult(model, hist, path)


def linker_loss(model: LinkerModel, examples: Sequence[Example]) -> float:
    return mean_loss(model, pair_items(examples), _batch_loss, model.cfg.batch_size)


def pair_accuracy(model: LinkerModel, examples: Sequence[Example]) -> float:
    items = pair_items(examples)
    correct = total = 0
    for i in range(0, len(items), 64):
        chunk = items[i:i + 64]
        for it, preds in zip(chunk, model.classify([it.seq for it in chunk])):
            for lab, lp in zip(it.labels, preds):
                correct += LINK_INDEX[lp.label] == lab
                total += 1
    return correct / total if total else 0.0
