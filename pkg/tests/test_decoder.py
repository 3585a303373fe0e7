import math

import numpy as np
import pytest

from compact_oie.core import Label, Span
from compact_oie.decoder import DecoderConfig, adjacent_distances, assign_types, decode, split_spans
from compact_oie.grid import build_gold_grid, one_hot

A, P, S, O, N = (int(x) for x in Label)


def test_config_rejects_nonpositive_alpha():
    with pytest.raises(ValueError):
        DecoderConfig(0.0)
    assert DecoderConfig().alpha == 1.2


def test_identical_rows_give_zero_distance():
    P_ = np.full((4, 4, 5), 0.2)
    assert np.allclose(adjacent_distances(P_), 0.0)
    assert adjacent_distances(np.full((1, 1, 5), 0.2)).size == 0


def test_two_cell_row_difference():
    # rows 0 and 1 differ in two entries by 1.0; columns are identical
    P_ = np.zeros((2, 2, 5))
    P_[0, :, 0] = 1.0
    P_[1, :, 1] = 1.0
    # column vectors P[:, 0] and P[:, 1] are equal by construction
    assert np.allclose(P_[:, 0], P_[:, 1])
    row = math.sqrt(((P_[0] - P_[1]) ** 2).sum())
    assert adjacent_distances(P_)[0] == pytest.approx((row + 0.0) / 2)
    # the hand case in the text: two cells differing by 1.0 each
    Q = np.zeros((2, 2, 5))
    Q[0, 0, 0] = 1.0
    Q[0, 1, 0] = 1.0
    Q[:, 0] = Q[:, 1]
    assert adjacent_distances(Q)[0] == pytest.approx(math.sqrt(2) / 2, abs=1e-9)


def test_beth_boundaries(beth_sentence, beth_triples):
    d = adjacent_distances(one_hot(build_gold_grid(beth_sentence, beth_triples)))
    assert d[0] > 1.2                      # Beth | was
    assert np.allclose(d[2:6], 0.0)        # inside "the second child of Henry"


def test_split_spans():
    cfg = DecoderConfig(1.2)
    assert split_spans([2.0, 0.1, 1.5], cfg) == [Span(0, 0), Span(1, 2), Span(3, 3)]
    assert split_spans([0.1, 0.2], cfg) == [Span(0, 2)]
    assert split_spans([5.0, 5.0], cfg) == [Span(0, 0), Span(1, 1), Span(2, 2)]
    assert split_spans([], cfg) == [Span(0, 0)]


def test_assign_types_ties_and_none():
    uniform = np.full((3, 3, 5), 0.2)
    [c] = assign_types(uniform, [Span(0, 2)])
    assert c.ctype == Label.PREDICATE
    mostly_none = np.zeros((2, 2, 5))
    mostly_none[..., N] = 0.6
    mostly_none[..., A] = 0.4
    assert assign_types(mostly_none, [Span(0, 1)]) == []


def test_decode_beth(beth_sentence, beth_triples):
    consts = decode(one_hot(build_gold_grid(beth_sentence, beth_triples)))
    assert sorted(consts) == sorted({c for t in beth_triples for c in t.constituents()})
    assert sum(c.ctype == Label.PREDICATE for c in consts) == 2
    assert sum(c.ctype == Label.ARGUMENT for c in consts) == 3


def test_decode_all_none():
    assert decode(one_hot(np.full((5, 5), N))) == []


def test_decode_is_deterministic():
    rng = np.random.default_rng(0)
    P_ = rng.dirichlet(np.ones(5), size=(6, 6))
    assert decode(P_, DecoderConfig(0.3)) == decode(P_, DecoderConfig(0.3))
    spans = [c.span for c in decode(P_, DecoderConfig(0.3))]
    for a, b in zip(spans, spans[1:]):
        assert a.end < b.start
