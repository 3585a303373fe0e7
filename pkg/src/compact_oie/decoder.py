"""Two-step table decoding: split the sentence into spans, then type each span."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .core import Constituent, Label, Span

# Tie-break order for span typing: earlier wins on equal averages.
TYPE_PRIORITY = (Label.PREDICATE, Label.ARGUMENT, Label.NONE)


@dataclass(frozen=True)
class DecoderConfig:
    alpha: float = 1.2

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


def adjacent_distances(P) -> np.ndarray:
    """Mean of the row-wise and column-wise Euclidean distances between neighbouring words."""
    P = np.asarray(P, dtype=np.float64)
    n = P.shape[0]
    if n < 2:
        return np.zeros(0)
    rows = P.reshape(n, -1)
    cols = P.transpose(1, 0, 2).reshape(n, -1)
    d_row = np.linalg.norm(rows[1:] - rows[:-1], axis=1)
    d_col = np.linalg.norm(cols[1:] - cols[:-1], axis=1)
    return (d_row + d_col) / 2.0


def split_spans(distances: Sequence[float], cfg: DecoderConfig = DecoderConfig()) -> List[Span]:
    n = len(distances) + 1
    spans, start = [], 0
    for k, d in enumerate(distances):
        if d > cfg.alpha:
            spans.append(Span(start, k))
            start = k + 1
    spans.append(Span(start, n - 1))
    return spans


def assign_types(P, spans: Sequence[Span]) -> List[Constituent]:
    P = np.asarray(P, dtype=np.float64)
    out = []
    for sp in spans:
        square = P[sp.start:sp.end + 1, sp.start:sp.end + 1]
        avg = square.reshape(-1, P.shape[-1]).mean(axis=0)
        best = TYPE_PRIORITY[0]
        for lab in TYPE_PRIORITY[1:]:
            if avg[lab] > avg[best]:
                best = lab
        if best != Label.NONE:
            out.append(Constituent(sp, best))
    return out


def decode(P, cfg: DecoderConfig = DecoderConfig()) -> List[Constituent]:
    spans = split_spans(adjacent_distances(P), cfg)
    return sorted(assign_types(P, spans), key=lambda c: c.span.start)
