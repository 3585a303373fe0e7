"""Constituent extraction: biaffine table filling over a contextual encoder."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import torch
from torch import nn

from .config import ExtractorConfig, from_dict
from .core import NUM_LABELS, Example, Label, Sentence
from .decoder import DecoderConfig, decode
from .encoder import Encoder, build_encoder, load_encoder
from .errors import ConflictError, DataError, LengthError, OverlapError
from .grid import build_gold_grid, predicate_words
from .scoring import LossWeights, cell_probabilities, score_pairs, total_loss
from .training import History, fit, load_weights, mean_loss, read_checkpoint, save_checkpoint, split_dev

log = logging.getLogger(__name__)

LABELS = [lab.name.title() for lab in Label]


class Biaffine(nn.Module):
    def __init__(self, d: int, proj_dim: int = 150, n_labels: int = NUM_LABELS, dropout: float = 0.1):
        super().__init__()
        self.mlp_head = nn.Sequential(nn.Linear(d, proj_dim), nn.GELU(), nn.Dropout(dropout))
        self.mlp_tail = nn.Sequential(nn.Linear(d, proj_dim), nn.GELU(), nn.Dropout(dropout))
        self.U1 = nn.Parameter(torch.randn(proj_dim, n_labels, proj_dim) / proj_dim)
        self.U2 = nn.Parameter(torch.randn(2 * proj_dim, n_labels) / (2 * proj_dim) ** 0.5)
        self.b = nn.Parameter(torch.zeros(n_labels))

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        return score_pairs(self.mlp_head(h), self.mlp_tail(h), self.U1, self.U2, self.b)


class ExtractorModel(nn.Module):
    def __init__(self, encoder: Encoder, cfg: ExtractorConfig):
        super().__init__()
        self.encoder = encoder
        self.cfg = cfg
        self.biaffine = Biaffine(encoder.hidden_size, cfg.proj_dim, NUM_LABELS, cfg.mlp_dropout)

    def forward(self, batch_words: Sequence[Sequence[str]]):
        H, mask = self.encoder.encode(batch_words)
        return self.biaffine(H), mask

    @torch.no_grad()
    def probabilities(self, sentences: Sequence[Sentence | Sequence[str]]) -> List[np.ndarray]:
        """Per-sentence ``n x n x |Y|`` probability tensors (float64 numpy)."""
        self.eval()
        words = [list(s.tokens) if isinstance(s, Sentence) else list(s) for s in sentences]
        if not words:
            return []
        logits, _ = self(words)
        P = cell_probabilities(logits.double())
        return [P[b, :len(w), :len(w)].cpu().numpy() for b, w in enumerate(words)]

    def predict(self, sentence: Sentence, alpha: Optional[float] = None):
        P = self.probabilities([sentence])[0]
        return decode(P, DecoderConfig(alpha if alpha is not None else self.cfg.alpha))

    def save(self, path, history: Optional[History] = None) -> Path:
        return save_checkpoint(path, "extractor", self, self.cfg, history, LABELS)

    @classmethod
    def load(cls, path) -> "ExtractorModel":
        meta = read_checkpoint(path, "extractor")
        cfg = from_dict(ExtractorConfig, meta["config"])
        model = cls(load_encoder(path, meta["encoder"]), cfg)
        load_weights(model, path)
        return model


@dataclass
class _Item:
    words: List[str]
    grid: np.ndarray
    ps: List[int]


def _batch_loss(model: ExtractorModel, batch: List[_Item]):
    logits, _ = model([it.words for it in batch])
    P = cell_probabilities(logits)
    w = LossWeights(model.cfg.w_sym, model.cfg.w_imp, model.cfg.w_triple)
    losses = []
    for b, it in enumerate(batch):
        n = len(it.words)
        losses.append(total_loss(P[b, :n, :n], torch.as_tensor(it.grid, dtype=torch.long), it.ps, w))
    return torch.stack(losses).mean(), len(batch)


def prepare_items(examples: Sequence[Example], encoder: Encoder):
    items, skipped = [], 0
    for ex in examples:
        try:
            grid = build_gold_grid(ex.sentence, ex.triples)
        except (OverlapError, ConflictError) as exc:
            log.warning("skipping record %s: %s", ex.id, exc)
            skipped += 1
            continue
        if len(encoder.subword_ids(ex.sentence.tokens)[0]) > encoder.max_seq_len:
            log.warning("skipping record %s: longer than max_seq_len", ex.id)
            skipped += 1
            continue
        items.append(_Item(list(ex.sentence.tokens), grid, predicate_words(ex.triples)))
    return items, skipped


@dataclass
class TrainResult:
    model: nn.Module
    history: History
    path: Optional[Path] = None


def train_extractor(train: Sequence[Example], cfg: ExtractorConfig, dev: Optional[Sequence[Example]] = None,
                    out_dir=None, encoder: Optional[Encoder] = None) -> TrainResult:
    if not train:
        raise DataError("no trainable records")
    torch.manual_seed(cfg.seed)
    if encoder is None:
        encoder = build_encoder(cfg.encoder, [ex.sentence.tokens for ex in train])
    model = ExtractorModel(encoder, cfg)
    items, skipped = prepare_items(train, encoder)
    if not items:
        raise DataError("no trainable records")
    if dev is None:
        items, dev_items = split_dev(items, cfg.val_fraction, cfg.seed)
    else:
        dev_items, dev_skipped = prepare_items(dev, encoder)
        skipped += dev_skipped
    hist = fit(model, items, dev_items or items, _batch_loss, cfg)
    hist.skipped = skipped
    path = model.save(out_dir, hist) if out_dir is not None else None
    return TrainResult(model, hist, path)


def extractor_loss(model: ExtractorModel, examples: Sequence[Example]) -> float:
    """Mean total loss of ``model`` on ``examples`` with dropout disabled."""
    items, _ = prepare_items(examples, model.encoder)
    return mean_loss(model, items, _batch_loss, model.cfg.batch_size)


def constituent_f1(model: ExtractorModel, examples: Sequence[Example], alpha: Optional[float] = None) -> float:
    """Micro F1 of exactly matching (span, type) constituents."""
    tp = n_pred = n_gold = 0
    alpha = model.cfg.alpha if alpha is None else alpha
    for i in range(0, len(examples), 64):
        chunk = examples[i:i + 64]
        try:
            probs = model.probabilities([ex.sentence for ex in chunk])
        except LengthError:
            continue
        for ex, P in zip(chunk, probs):
            pred = set(decode(P, DecoderConfig(alpha)))
            gold = set(ex.constituents())
            tp += len(pred & gold)
            n_pred += len(pred)
            n_gold += len(gold)
    if tp == 0:
        return 0.0
    p, r = tp / n_pred, tp / n_gold
    return 2 * p * r / (p + r)
