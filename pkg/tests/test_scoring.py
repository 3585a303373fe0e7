import math

import pytest
import torch

from compact_oie.core import Label
from compact_oie.grid import build_gold_grid, one_hot, predicate_words
from compact_oie.scoring import (LossWeights, cell_probabilities, loss_components, loss_entry,
                                 loss_implication, loss_symmetry, loss_triple, score_pairs, total_loss)

A, P, S, O, N = (int(x) for x in Label)


def _f64(fn):
    def make(*args, **kw):
        kw.setdefault("dtype", torch.float64)
        return fn(*args, **kw)
    return make


zeros, full, rand, randn, arange, tensor = map(_f64, (torch.zeros, torch.full, torch.rand, torch.randn,
                                                       torch.arange, torch.tensor))


def _params(dp, seed=0):
    g = torch.Generator().manual_seed(seed)
    return (randn(dp, 5, dp, generator=g), randn(2 * dp, 5, generator=g),
            randn(5, generator=g))


def test_zero_weights_give_bias():
    h = randn(3, 4)
    b = arange(5.0)
    t = score_pairs(h, h, zeros(4, 5, 4), zeros(8, 5), b)
    assert t.shape == (3, 3, 5)
    assert torch.equal(t, b.expand(3, 3, 5))


def test_scalar_hand_value():
    head = tensor([[1.0], [2.0]])
    tail = tensor([[3.0], [4.0]])
    t = score_pairs(head, tail, tensor(1.0).expand(1, 5, 1), zeros(2, 5), zeros(5))
    assert torch.allclose(t[0, 1], full((5,), 4.0))


def test_score_pairs_matches_formula():
    dp, n = 3, 4
    U1, U2, b = _params(dp)
    head, tail = randn(n, dp), randn(n, dp)
    t = score_pairs(head, tail, U1, U2, b)
    for i in range(n):
        for j in range(n):
            for y in range(5):
                expect = head[i] @ U1[:, y, :] @ tail[j] + torch.cat([head[i], tail[j]]) @ U2[:, y] + b[y]
                assert t[i, j, y].item() == pytest.approx(expect.item(), abs=1e-10)
    assert not torch.allclose(t[0, 1], t[1, 0])


def test_score_pairs_shape_error():
    with pytest.raises(ValueError):
        score_pairs(zeros(2, 3), zeros(2, 4), zeros(3, 5, 3), zeros(6, 5), zeros(5))


def test_softmax_values():
    assert torch.allclose(cell_probabilities(zeros(2, 2, 5)), full((2, 2, 5), 0.2))
    p = cell_probabilities(tensor([math.log(2), 0, 0, 0, 0]))
    assert torch.allclose(p, tensor([2, 1, 1, 1, 1]) / 6)
    x = randn(5)
    assert torch.allclose(cell_probabilities(x), cell_probabilities(x + 7.0))


def entry_case():
    gold = full((2, 2), N)
    P_ = zeros(2, 2, 5)
    P_[0, 0, N] = P_[1, 1, N] = 1.0
    P_[0, 1, N] = P_[1, 0, N] = 0.5
    P_[0, 1, A] = P_[1, 0, A] = 0.5
    return P_, gold


def sym_case():
    P_ = zeros(2, 2, 5)
    P_[..., N] = 1.0
    P_[0, 1, S], P_[0, 1, N] = 0.8, 0.2
    P_[1, 0, S], P_[1, 0, N] = 0.6, 0.4
    return P_


def imp_case():
    P_ = zeros(2, 2, 5)
    P_[0, 0, A], P_[0, 0, N] = 0.3, 0.7
    P_[1, 1, A], P_[1, 1, N] = 0.9, 0.1
    P_[0, 1, S], P_[0, 1, N] = 0.5, 0.5
    P_[1, 0, S], P_[1, 0, N] = 0.5, 0.5
    return P_


def triple_case():
    P_ = zeros(3, 3, 5)
    P_[..., N] = 1.0
    for i, j in ((1, 0), (0, 1)):
        P_[i, j] = tensor([0, 0, 0.4, 0.1, 0.5])
    for i, j in ((1, 2), (2, 1)):
        P_[i, j] = tensor([0, 0, 0.1, 0.7, 0.2])
    return P_, [1]


def test_hand_values():
    P_, gold = entry_case()
    assert loss_entry(P_, gold).item() == pytest.approx(0.3466, abs=1e-4)
    assert loss_symmetry(sym_case()).item() == pytest.approx(0.1, abs=1e-12)
    assert loss_implication(imp_case()).item() == pytest.approx(0.1, abs=1e-12)
    assert loss_triple(*triple_case()).item() == pytest.approx(0.3, abs=1e-12)


def test_entry_closed_forms():
    assert loss_entry(full((1, 1, 5), 0.2), zeros(1, 1, dtype=torch.long)).item() == \
        pytest.approx(-math.log(0.2))
    gold = tensor([[A, S], [S, P]])
    assert loss_entry(one_hot(gold.numpy()), gold).item() == 0.0
    # zero probability is floored rather than producing inf
    assert math.isfinite(loss_entry(zeros(1, 1, 5), zeros(1, 1, dtype=torch.long)).item())


def test_constraints_vanish_on_gold(beth_sentence, beth_triples):
    g = build_gold_grid(beth_sentence, beth_triples)
    P_ = torch.as_tensor(one_hot(g))
    parts = loss_components(P_, torch.as_tensor(g), predicate_words(beth_triples))
    assert parts["symmetry"].item() == 0.0
    assert parts["implication"].item() == 0.0
    assert parts["triple"].item() == 0.0
    assert total_loss(P_, torch.as_tensor(g), predicate_words(beth_triples)).item() == 0.0


def test_symmetry_ignores_none_channel():
    P_ = rand(3, 3, 5)
    P_ = (P_ + P_.transpose(0, 1)) / 2
    assert loss_symmetry(P_).item() == pytest.approx(0.0, abs=1e-15)
    Q = P_.clone()
    Q[..., N] = rand(3, 3)
    assert loss_symmetry(Q).item() == loss_symmetry(P_).item()


def test_implication_all_none_is_zero():
    P_ = zeros(3, 3, 5)
    P_[..., N] = 1.0
    assert loss_implication(P_).item() == 0.0


def test_triple_edge_cases():
    P_, _ = triple_case()
    assert loss_triple(P_, []).item() == 0.0
    Q = P_.clone()
    Q[..., S], Q[..., O] = P_[..., O], P_[..., S]
    Q[1, 1] = tensor([0, 1.0, 0, 0, 0])
    assert loss_triple(Q, [1]).item() == 0.0
    # the diagonal cell is excluded even with a large Object value
    R = Q.clone()
    R[1, 1, O] = 5.0
    assert loss_triple(R, [1]).item() == 0.0


def test_total_loss_weights():
    P_, gold = entry_case()
    zero = LossWeights(0.0, 0.0, 0.0)
    assert total_loss(P_, gold, [], zero).item() == loss_entry(P_, gold).item()
    parts = [loss_entry(*entry_case()).item(), loss_symmetry(sym_case()).item(),
             loss_implication(imp_case()).item(), loss_triple(*triple_case()).item()]
    assert sum(parts) == pytest.approx(0.8466, abs=1e-4)
    R = rand(3, 3, 5)
    comps = loss_components(R, zeros(3, 3, dtype=torch.long), [1])
    w = LossWeights(0.5, 2.0, 3.0)
    expect = comps["entry"] + 0.5 * comps["symmetry"] + 2.0 * comps["implication"] + 3.0 * comps["triple"]
    assert total_loss(R, zeros(3, 3, dtype=torch.long), [1], w).item() == pytest.approx(expect.item())
