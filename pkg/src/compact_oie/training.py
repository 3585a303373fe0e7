"""Shared training loop, early stopping and checkpoint persistence."""
from __future__ import annotations

import copy
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np
import torch

from . import __version__
from .config import TrainConfig, to_dict
from .errors import ModelError

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 1


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


@dataclass
class History:
    epochs: List[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = float("inf")
    stopped_early: bool = False
    skipped: int = 0

    def train_losses(self) -> List[float]:
        return [e["train_loss"] for e in self.epochs]


def batches(items: Sequence, size: int, generator: Optional[torch.Generator] = None):
    order = list(range(len(items)))
    if generator is not None:
        order = torch.randperm(len(items), generator=generator).tolist()
    for i in range(0, len(order), size):
        yield [items[j] for j in order[i:i + size]]


def mean_loss(model, items, batch_loss: Callable, batch_size: int) -> float:
    """Item-weighted mean of ``batch_loss`` over ``items`` in a fixed order, without dropout."""
    was_training = model.training
    model.eval()
    total, count = 0.0, 0
    with torch.no_grad():
        for batch in batches(items, batch_size):
            loss, n = batch_loss(model, batch)
            total += float(loss) * n
            count += n
    model.train(was_training)
    return total / max(count, 1)


def fit(model: torch.nn.Module, train_items: Sequence, dev_items: Sequence,
        batch_loss: Callable, cfg: TrainConfig, on_epoch: Optional[Callable] = None) -> History:
    """Train with AdamW and early stopping on validation loss; restores the best weights.

    ``batch_loss(model, batch)`` returns ``(mean loss tensor, item count)``.
    """
    seed_everything(cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed)
    opt = torch.optim.AdamW(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    hist = History()
    best_state = copy.deepcopy(model.state_dict())
    stale = 0
    for epoch in range(1, cfg.epochs + 1):
        model.train()
        total, count = 0.0, 0
        for batch in batches(train_items, cfg.batch_size, gen):
            loss, n = batch_loss(model, batch)
            opt.zero_grad()
            loss.backward()
            if cfg.grad_clip:
                torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
            opt.step()
            total += float(loss.detach()) * n
            count += n
        val = mean_loss(model, dev_items, batch_loss, cfg.batch_size)
        rec = {"epoch": epoch, "train_loss": total / max(count, 1), "val_loss": val}
        if on_epoch is not None:
            rec.update(on_epoch(model, epoch) or {})
        hist.epochs.append(rec)
        log.info("epoch %d train %.5f val %.5f", epoch, rec["train_loss"], val)
        if val < hist.best_val_loss:
            hist.best_val_loss, hist.best_epoch, stale = val, epoch, 0
            best_state = copy.deepcopy(model.state_dict())
        else:
            stale += 1
            if stale >= cfg.patience:
                hist.stopped_early = True
                break
    model.load_state_dict(best_state)
    model.eval()
    return hist


def split_dev(items: list, fraction: float, seed: int):
    """Hold out ``fraction`` of items; with fraction 0 the training items double as dev."""
    if fraction <= 0 or len(items) < 2:
        return items, items
    k = max(1, int(round(len(items) * fraction)))
    order = np.random.RandomState(seed).permutation(len(items))
    dev = [items[i] for i in sorted(order[:k])]
    train = [items[i] for i in sorted(order[k:])]
    return train, dev


def save_checkpoint(path, kind: str, model, cfg, history: Optional[History], labels: Sequence[str]) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "format": CHECKPOINT_FORMAT,
        "kind": kind,
        "version": __version__,
        "labels": list(labels),
        "encoder": model.encoder.spec(),
        "config": to_dict(cfg),
    }
    (path / "config.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    if history is not None:
        (path / "history.json").write_text(json.dumps(history.__dict__, indent=2))
    model.encoder.save_assets(path)
    torch.save(model.state_dict(), path / "weights.pt")
    return path


def read_checkpoint(path, kind: str) -> dict:
    path = Path(path)
    meta_file = path / "config.json"
    if not meta_file.exists():
        raise ModelError(f"{path} is not a checkpoint directory")
    meta = json.loads(meta_file.read_text())
    if meta.get("kind") != kind:
        raise ModelError(f"{path} holds a {meta.get('kind')!r} checkpoint, expected {kind!r}")
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise ModelError(f"checkpoint format {meta.get('format')} unsupported (need {CHECKPOINT_FORMAT})")
    return meta


def load_weights(model, path) -> None:
    state = torch.load(Path(path) / "weights.pt", map_location="cpu", weights_only=True)
    try:
        model.load_state_dict(state)
    except RuntimeError as exc:
        raise ModelError(f"weights in {path} do not match the configured model: {exc}") from exc
    model.eval()
