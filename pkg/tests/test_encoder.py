import pytest
import torch

from compact_oie.encoder import MARKERS, EncoderConfig, HashingTokenizer, TinyEncoder, build_encoder, encode_words
from compact_oie.errors import LengthError, ModelError


def _tiny(words=("beth", "was", "born"), **kw):
    torch.manual_seed(0)
    tok = HashingTokenizer.build([list(words)])
    enc = TinyEncoder(tok, d_model=16, layers=1, heads=2, ff=32, dropout=0.0, **kw)
    return enc.eval()


def test_one_vector_per_word(beth_sentence):
    enc = _tiny()
    out = encode_words(beth_sentence, enc)
    assert out.h.shape == (12, 16)
    assert encode_words(["Beth"], enc).h.shape == (1, 16)


def test_unknown_word_pieces():
    tok = HashingTokenizer.build([["the"]])
    pieces = tok.pieces("crocodile")          # cro / ##cod / ##ile
    assert len(pieces) == 3
    assert all(p >= len(tok.vocab) for p in pieces)
    assert tok.pieces("The") == [tok.vocab["the"]]
    assert [tok.pieces(m)[0] for m in MARKERS] == [4, 5, 6, 7]
    assert HashingTokenizer.from_dict(tok.to_dict()).pieces("crocodile") == pieces


def test_three_piece_word_is_mean_pooled():
    enc = _tiny()
    words = ["beth", "crocodile", "was"]
    ids, owner = enc.subword_ids(words)
    assert owner.count(1) == 3
    with torch.no_grad():
        sub = enc.forward_subwords(torch.tensor([ids]), torch.ones(1, len(ids), dtype=torch.bool))[0]
        h = encode_words(words, enc).h
    manual = sub[[k for k, w in enumerate(owner) if w == 1]].mean(0)
    assert torch.allclose(h[1], manual, atol=1e-6)
    assert torch.allclose(h[0], sub[owner.index(0)], atol=1e-6)


def test_padding_does_not_change_vectors():
    enc = _tiny()
    with torch.no_grad():
        alone, _ = enc.encode([["beth", "was"]])
        batched, mask = enc.encode([["beth", "was"], ["beth", "was", "born", "crocodile"]])
    assert torch.allclose(alone[0], batched[0, :2], atol=1e-5)
    assert mask.tolist() == [[True, True, False, False], [True, True, True, True]]


def test_length_error():
    enc = _tiny(max_seq_len=5)
    with pytest.raises(LengthError):
        encode_words(["beth"] * 4, enc)


def test_special_ids_are_enforced():
    with pytest.raises(ModelError):
        HashingTokenizer({"[PAD]": 1})


def test_hf_encoder_pooling_and_markers(tmp_path):
    transformers = pytest.importorskip("transformers")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "the", "cro", "##co", "##dile", "slept", "."]
    (tmp_path / "vocab.txt").write_text("\n".join(vocab) + "\n")
    tok = transformers.BertTokenizer(str(tmp_path / "vocab.txt"))
    cfg = transformers.BertConfig(vocab_size=len(vocab), hidden_size=16, num_hidden_layers=1,
                                  num_attention_heads=2, intermediate_size=32)
    torch.manual_seed(0)
    from compact_oie.encoder import HFEncoder

    enc = HFEncoder("local-tiny-bert", model=transformers.BertModel(cfg), tokenizer=tok).eval()
    assert all(m in enc.tokenizer.get_vocab() for m in MARKERS)
    words = ["the", "crocodile", "slept", "."]
    ids, owner = enc.subword_ids(words)
    assert owner.count(1) == 3
    with torch.no_grad():
        sub = enc.forward_subwords(torch.tensor([ids]), torch.ones(1, len(ids), dtype=torch.bool))[0]
        h = encode_words(words, enc).h
    manual = sub[[k for k, w in enumerate(owner) if w == 1]].mean(0)
    assert h.shape == (4, 16)
    assert torch.allclose(h[1], manual, atol=1e-5)
    marked = enc.subword_ids(["<Pr>", "slept", "</Pr>"])[0]
    assert len(marked) == 5          # [CLS] marker word marker [SEP]


def test_build_encoder_tiny_from_config():
    cfg = EncoderConfig(encoder_name="tiny", d_model=8, layers=1, heads=2, ff=16)
    enc = build_encoder(cfg, [["a", "b"]])
    assert isinstance(enc, TinyEncoder) and enc.hidden_size == 8
