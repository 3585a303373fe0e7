"""Biaffine pair scoring and the table-filling training objectives.

All functions take a single sentence (no batch axis) unless noted; the
batch axis, when present, is leading and handled by ``...`` broadcasting.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import torch
import torch.nn.functional as F

from .core import Label

PROB_FLOOR = 1e-12

_A, _P, _S, _O, _N = (int(x) for x in Label)


def score_pairs(head: torch.Tensor, tail: torch.Tensor, U1: torch.Tensor,
                U2: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Biaffine logits ``t[i, j] = head_i^T U1 tail_j + (head_i ++ tail_j)^T U2 + b``.

    head, tail: ``(..., n, d')``; U1: ``(d', |Y|, d')``; U2: ``(2d', |Y|)``; b: ``(|Y|,)``.
    Returns ``(..., n, n, |Y|)`` with the row index taking the head role.
    """
    dp = head.shape[-1]
    if tail.shape[-1] != dp or U1.shape[0] != dp or U1.shape[2] != dp or U2.shape[0] != 2 * dp:
        raise ValueError("score_pairs: inconsistent shapes "
                         f"head={tuple(head.shape)} tail={tuple(tail.shape)} "
                         f"U1={tuple(U1.shape)} U2={tuple(U2.shape)}")
    bilinear = torch.einsum("...ip,ptq,...jq->...ijt", head, U1, tail)
    lin_head = head @ U2[:dp]          # (..., n, |Y|)
    lin_tail = tail @ U2[dp:]
    return bilinear + lin_head.unsqueeze(-2) + lin_tail.unsqueeze(-3) + b


def cell_probabilities(t: torch.Tensor) -> torch.Tensor:
    return torch.softmax(t, dim=-1)


def _as_tensor(x, like: Optional[torch.Tensor] = None) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    dtype = like.dtype if like is not None else torch.float64
    return torch.as_tensor(x, dtype=dtype)


def loss_entry(P, gold) -> torch.Tensor:
    P = _as_tensor(P)
    gold = torch.as_tensor(gold, dtype=torch.long, device=P.device)
    p_gold = P.gather(-1, gold.unsqueeze(-1)).squeeze(-1)
    return -torch.log(p_gold.clamp_min(PROB_FLOOR)).mean()


def loss_symmetry(P) -> torch.Tensor:
    """Mean absolute mirror difference over the constituent and relation channels."""
    P = _as_tensor(P)
    n = P.shape[0]
    Q = P[..., :_N]
    return (Q - Q.transpose(0, 1)).abs().sum() / (n * n)


def loss_implication(P) -> torch.Tensor:
    """Hinge on relation mass exceeding the diagonal constituent mass, per word."""
    P = _as_tensor(P)
    rel = P[..., _S:_O + 1]
    row_max = rel.amax(dim=(1, 2))
    col_max = rel.amax(dim=(0, 2))
    rel_max = torch.maximum(row_max, col_max)
    diag = torch.diagonal(P, dim1=0, dim2=1)        # (|Y|, n)
    con_max = diag[_A:_P + 1].amax(dim=0)
    return F.relu(rel_max - con_max).mean()


def loss_triple(P, predicate_words: Iterable[int]) -> torch.Tensor:
    """Hinge on Object mass exceeding Subject mass in predicate rows and columns."""
    P = _as_tensor(P)
    ps = sorted(set(int(i) for i in predicate_words))
    n = P.shape[0]
    if not ps or n < 2:
        return P.new_zeros(())
    idx = torch.as_tensor(ps, device=P.device)
    off = ~torch.eye(n, dtype=torch.bool, device=P.device)[idx]      # (|ps|, n)
    neg = torch.finfo(P.dtype).min

    def hinge(block):  # block: (|ps|, n, |Y|) rows of the predicate words
        s = block[..., _S].masked_fill(~off, neg).amax(dim=1)
        o = block[..., _O].masked_fill(~off, neg).amax(dim=1)
        return F.relu(o - s)

    rows = P[idx]
    cols = P[:, idx].transpose(0, 1)
    return (hinge(rows) + hinge(cols)).sum() / (2 * len(ps))


@dataclass(frozen=True)
class LossWeights:
    symmetry: float = 1.0
    implication: float = 1.0
    triple: float = 1.0


def loss_components(P, gold, predicate_words, compute_triple: bool = True) -> dict:
    return {
        "entry": loss_entry(P, gold),
        "symmetry": loss_symmetry(P),
        "implication": loss_implication(P),
        "triple": loss_triple(P, predicate_words) if compute_triple else _as_tensor(P).new_zeros(()),
    }


def total_loss(P, gold, predicate_words, weights: LossWeights = LossWeights()) -> torch.Tensor:
    parts = loss_components(P, gold, predicate_words)
    return (parts["entry"] + weights.symmetry * parts["symmetry"]
            + weights.implication * parts["implication"] + weights.triple * parts["triple"])
