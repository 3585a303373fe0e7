import random

import pytest
import torch

from compact_oie.core import Label, Sentence, Span, Constituent, validate_triple
from compact_oie.errors import DataError, OverlapError
from compact_oie.linker import (LINK_INDEX, LinkPrediction, LinkerModel, assemble_triples, classify_links,
                                insert_markers, pair_accuracy, train_linker)
from compact_oie.encoder import HashingTokenizer, MARKERS, TinyEncoder
from compact_oie.synthetic import synthetic_corpus

from conftest import BETH_TOKENS, arg, pred, tiny_config


def test_markers_beth(beth_sentence):
    m = insert_markers(beth_sentence, pred(1), [arg(0), arg(2, 6), arg(9, 10)])
    assert m.render() == ("<Arg> Beth </Arg> <Pr> was </Pr> <Arg> the second child of Henry </Arg> "
                          ", born <Arg> in wedlock </Arg> .")
    assert m.marker_positions[pred(1)] == 3
    assert m.tokens[m.marker_positions[arg(9, 10)]] == "<Arg>"
    assert m.strip() == BETH_TOKENS


def test_markers_without_arguments(beth_sentence):
    m = insert_markers(beth_sentence, pred(8), [])
    assert m.render().count("<") == 2 and "<Pr> born </Pr>" in m.render()


def test_markers_reject_overlap(beth_sentence):
    with pytest.raises(OverlapError):
        insert_markers(beth_sentence, pred(1), [arg(0, 1)])


def test_strip_round_trip_random():
    rng = random.Random(7)
    for _ in range(200):
        n = rng.randint(1, 12)
        words = [f"w{i}" for i in range(n)]
        cuts = sorted(rng.sample(range(1, n), rng.randint(0, n - 1))) if n > 1 else []
        bounds = [0, *cuts, n]
        segs = [Span(bounds[k], bounds[k + 1] - 1) for k in range(len(bounds) - 1)]
        chosen = [s for s in segs if rng.random() < 0.7] or segs[:1]
        p = Constituent(chosen[0], Label.PREDICATE)
        args = [Constituent(s, Label.ARGUMENT) for s in chosen[1:]]
        m = insert_markers(words, p, args)
        assert m.strip() == words
        assert len(m.tokens) == n + 2 * len(chosen)


def _model(seed=0):
    torch.manual_seed(seed)
    enc = TinyEncoder(HashingTokenizer.build([BETH_TOKENS + list(MARKERS)]), d_model=16, layers=1,
                      heads=2, ff=32, dropout=0.0)
    return LinkerModel(enc, tiny_config("linker", hidden=8))


def test_zero_head_is_uniform(beth_sentence):
    model = _model()
    for p in model.head.parameters():
        torch.nn.init.zeros_(p)
    m = insert_markers(beth_sentence, pred(1), [arg(0), arg(2, 6), arg(9, 10)])
    preds = classify_links(m, model)
    assert len(preds) == 3
    for lp in preds:
        assert lp.probs == pytest.approx((1 / 3, 1 / 3, 1 / 3))


def test_hand_set_head_logits(beth_sentence):
    model = _model()
    for p in model.head.parameters():
        torch.nn.init.zeros_(p)
    with torch.no_grad():
        model.head.net[-1].bias.copy_(torch.tensor([1.0, 0.0, 0.0]))
    m = insert_markers(beth_sentence, pred(1), [arg(0)])
    [lp] = classify_links(m, model)
    assert lp.probs == pytest.approx((0.576, 0.212, 0.212), abs=1e-3)
    assert lp.label == Label.SUBJECT


def _lp(p, a, lab, prob):
    probs = [0.0, 0.0, 0.0]
    probs[LINK_INDEX[lab]] = prob
    rest = (1 - prob) / 2
    probs = [x if x else rest for x in probs]
    return LinkPrediction(p, a, lab, tuple(probs))


def test_assemble_beth():
    args = [arg(0), arg(2, 6), arg(9, 10)]
    preds = [pred(1), pred(8)]
    lps = [_lp(pred(1), arg(0), Label.SUBJECT, 0.9), _lp(pred(1), arg(2, 6), Label.OBJECT, 0.8),
           _lp(pred(1), arg(9, 10), Label.NONE, 0.9),
           _lp(pred(8), arg(0), Label.NONE, 0.9), _lp(pred(8), arg(2, 6), Label.SUBJECT, 0.7),
           _lp(pred(8), arg(9, 10), Label.OBJECT, 0.6)]
    triples = assemble_triples(preds, args, lps)
    assert [t.key() for t in triples] == [(Span(0, 0), Span(1, 1), Span(2, 6)),
                                          (Span(2, 6), Span(8, 8), Span(9, 10))]
    assert triples[0].confidence == pytest.approx(0.72)
    assert all(validate_triple(t) is None for t in triples)


def test_assemble_all_none():
    lps = [_lp(pred(1), arg(0), Label.NONE, 0.9)]
    assert assemble_triples([pred(1)], [arg(0)], lps) == []


def test_assemble_picks_best_subject_and_leftmost_tie():
    lps = [_lp(pred(2), arg(0), Label.SUBJECT, 0.7), _lp(pred(2), arg(4), Label.SUBJECT, 0.9)]
    [t] = assemble_triples([pred(2)], [arg(0), arg(4)], lps)
    assert t.subject == arg(4) and t.object is None
    assert t.confidence == pytest.approx(0.9)
    tie = [_lp(pred(2), arg(4), Label.SUBJECT, 0.8), _lp(pred(2), arg(0), Label.SUBJECT, 0.8)]
    [t] = assemble_triples([pred(2)], [arg(0), arg(4)], tie)
    assert t.subject == arg(0)
    assert assemble_triples([pred(2)], [arg(0), arg(4)], tie, allow_missing_object=False) == []


def test_train_linker_no_pairs():
    from compact_oie.core import Example

    with pytest.raises(DataError, match="no trainable pairs"):
        train_linker([Example("x", Sentence.from_tokens(["hello"]))], tiny_config("linker"))


def test_linker_loss_decreases_and_memorizes():
    data = synthetic_corpus(10, seed=3)
    res = train_linker(data, tiny_config("linker", lr=1e-3, epochs=5, patience=5))
    losses = res.history.train_losses()
    assert all(b < a for a, b in zip(losses, losses[1:])), losses
    five = synthetic_corpus(5, seed=11)
    res = train_linker(five, tiny_config("linker", epochs=60, patience=60))
    assert pair_accuracy(res.model, five) == 1.0


def test_linker_checkpoint_round_trip(tmp_path, beth_sentence):
    data = synthetic_corpus(5, seed=1)
    res = train_linker(data, tiny_config("linker", epochs=2), out_dir=tmp_path / "lnk")
    loaded = LinkerModel.load(tmp_path / "lnk")
    m = insert_markers(beth_sentence, pred(1), [arg(0), arg(2, 6)])
    assert classify_links(m, loaded) == classify_links(m, res.model)
