"""Word-level contextual encoders.

Encoders run over subword pieces and return one vector per word by
averaging the pieces of each word.  Two backends are provided:

``TinyEncoder``
    a small randomly initialised transformer with a hashing subword
    tokenizer; needs no downloads and is what the tests train.
``HFEncoder``
    any Hugging Face encoder (``bert-base-uncased`` by default) loaded
    through ``transformers``.
"""
from __future__ import annotations

import json
import zlib
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import torch
from torch import nn

from .core import Sentence
from .errors import LengthError, ModelError

MARKERS = ("<Pr>", "</Pr>", "<Arg>", "</Arg>")
SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]") + MARKERS


@dataclass
class EncoderOutput:
    h: torch.Tensor     # (n_words, d)


class Encoder(nn.Module):
    """Base class: subclasses provide tokenisation and a subword forward pass."""

    hidden_size: int
    max_seq_len: int

    def subword_ids(self, words: Sequence[str]) -> Tuple[List[int], List[int]]:
        """Return piece ids and, per piece, the index of its word (-1 for framing tokens)."""
        raise NotImplementedError

    def forward_subwords(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def spec(self) -> dict:
        raise NotImplementedError

    def save_assets(self, path: Path) -> None:
        raise NotImplementedError

    def encode(self, batch: Sequence[Sequence[str]]) -> Tuple[torch.Tensor, torch.Tensor]:
        """Encode a batch of word lists; returns ``(H, word_mask)`` of shapes (B, W, d), (B, W)."""
        pieces = []
        for words in batch:
            ids, owner = self.subword_ids(words)
            if len(ids) > self.max_seq_len:
                raise LengthError(f"{len(ids)} subword pieces exceed max_seq_len={self.max_seq_len}")
            pieces.append((ids, owner))
        device = next(self.parameters()).device
        B = len(batch)
        S = max(len(ids) for ids, _ in pieces)
        W = max(len(words) for words in batch)
        ids_t = torch.zeros(B, S, dtype=torch.long)
        mask = torch.zeros(B, S, dtype=torch.bool)
        pool = torch.zeros(B, W, S)
        for b, (ids, owner) in enumerate(pieces):
            ids_t[b, :len(ids)] = torch.tensor(ids)
            mask[b, :len(ids)] = True
            for s, w in enumerate(owner):
                if w >= 0:
                    pool[b, w, s] = 1.0
        counts = pool.sum(-1, keepdim=True)
        if torch.any(counts[..., 0][_word_mask(batch, W)] == 0):
            raise ModelError("tokenizer produced a word without pieces")
        pool = pool / counts.clamp_min(1.0)
        sub = self.forward_subwords(ids_t.to(device), mask.to(device))
        H = torch.bmm(pool.to(device, sub.dtype), sub)
        return H, _word_mask(batch, W).to(device)


def _word_mask(batch, W):
    m = torch.zeros(len(batch), W, dtype=torch.bool)
    for b, words in enumerate(batch):
        m[b, :len(words)] = True
    return m


def encode_words(s: Sentence | Sequence[str], encoder: Encoder) -> EncoderOutput:
    words = list(s.tokens) if isinstance(s, Sentence) else list(s)
    H, _ = encoder.encode([words])
    return EncoderOutput(H[0, :len(words)])


class HashingTokenizer:
    """Whole-word vocabulary with hashed fixed-length pieces for unknown words."""

    def __init__(self, vocab: Dict[str, int], piece_len: int = 3, n_buckets: int = 512,
                 lowercase: bool = True):
        self.vocab = dict(vocab)
        self.piece_len = piece_len
        self.n_buckets = n_buckets
        self.lowercase = lowercase
        for i, tok in enumerate(SPECIALS):
            if self.vocab.get(tok) != i:
                raise ModelError("special tokens must occupy the first vocabulary ids")

    @classmethod
    def build(cls, sentences: Iterable[Sequence[str]], min_count: int = 1, max_size: int = 20000,
              piece_len: int = 3, n_buckets: int = 512, lowercase: bool = True) -> "HashingTokenizer":
        counts = Counter(w.lower() if lowercase else w for words in sentences for w in words)
        vocab = {tok: i for i, tok in enumerate(SPECIALS)}
        for w, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
            if c < min_count or len(vocab) >= max_size:
                break
            vocab.setdefault(w, len(vocab))
        return cls(vocab, piece_len, n_buckets, lowercase)

    @property
    def size(self) -> int:
        return len(self.vocab) + self.n_buckets

    def pieces(self, word: str) -> List[int]:
        if word in MARKERS:
            return [self.vocab[word]]
        key = word.lower() if self.lowercase else word
        if key in self.vocab:
            return [self.vocab[key]]
        chunks = [key[i:i + self.piece_len] for i in range(0, len(key), self.piece_len)] or [key]
        base = len(self.vocab)
        return [base + zlib.crc32((("##" if i else "") + c).encode("utf-8")) % self.n_buckets
                for i, c in enumerate(chunks)]

    def to_dict(self) -> dict:
        return {"vocab": self.vocab, "piece_len": self.piece_len,
                "n_buckets": self.n_buckets, "lowercase": self.lowercase}

    @classmethod
    def from_dict(cls, d: dict) -> "HashingTokenizer":
        return cls(d["vocab"], d["piece_len"], d["n_buckets"], d["lowercase"])


class TinyEncoder(Encoder):
    def __init__(self, tokenizer: HashingTokenizer, d_model: int = 32, layers: int = 2,
                 heads: int = 4, ff: int = 64, dropout: float = 0.1, max_seq_len: int = 512):
        super().__init__()
        self.tokenizer = tokenizer
        self.hidden_size = d_model
        self.max_seq_len = max_seq_len
        self._spec = dict(type="tiny", d_model=d_model, layers=layers, heads=heads, ff=ff,
                          dropout=dropout, max_seq_len=max_seq_len)
        self.embed = nn.Embedding(tokenizer.size, d_model, padding_idx=0)
        self.position = nn.Embedding(max_seq_len, d_model)
        self.norm = nn.LayerNorm(d_model)
        layer = nn.TransformerEncoderLayer(d_model, heads, ff, dropout, batch_first=True)
        self.layers = nn.TransformerEncoder(layer, layers, enable_nested_tensor=False)

    def subword_ids(self, words):
        cls_id, sep_id = self.tokenizer.vocab["[CLS]"], self.tokenizer.vocab["[SEP]"]
        ids, owner = [cls_id], [-1]
        for w_idx, w in enumerate(words):
            p = self.tokenizer.pieces(w)
            ids.extend(p)
            owner.extend([w_idx] * len(p))
        ids.append(sep_id)
        owner.append(-1)
        return ids, owner

    def forward_subwords(self, ids, mask):
        pos = torch.arange(ids.shape[1], device=ids.device)
        x = self.norm(self.embed(ids) + self.position(pos))
        return self.layers(x, src_key_padding_mask=~mask)

    def spec(self):
        return dict(self._spec)

    def save_assets(self, path):
        (Path(path) / "tokenizer.json").write_text(json.dumps(self.tokenizer.to_dict()))

    @classmethod
    def from_assets(cls, path, spec: dict) -> "TinyEncoder":
        tok = HashingTokenizer.from_dict(json.loads((Path(path) / "tokenizer.json").read_text()))
        kw = {k: v for k, v in spec.items() if k != "type"}
        return cls(tok, **kw)


class HFEncoder(Encoder):
    """Adapter around a ``transformers`` encoder; marker tokens are added as specials."""

    def __init__(self, name_or_path: str, max_seq_len: int = 512, model=None, tokenizer=None):
        super().__init__()
        from transformers import AutoModel, AutoTokenizer

        self.name = str(name_or_path)
        self.tokenizer = tokenizer or AutoTokenizer.from_pretrained(self.name)
        self.model = model or AutoModel.from_pretrained(self.name)
        missing = [m for m in MARKERS if m not in self.tokenizer.get_vocab()]
        if missing:
            self.tokenizer.add_special_tokens({"additional_special_tokens": list(MARKERS)})
            self.model.resize_token_embeddings(len(self.tokenizer))
        self.hidden_size = self.model.config.hidden_size
        self.max_seq_len = max_seq_len

    def subword_ids(self, words):
        enc = self.tokenizer(list(words), is_split_into_words=True, add_special_tokens=True)
        owner = [-1 if w is None else w for w in enc.word_ids()]
        return list(enc["input_ids"]), owner

    def forward_subwords(self, ids, mask):
        return self.model(input_ids=ids, attention_mask=mask.long()).last_hidden_state

    def spec(self):
        return dict(type="hf", name=self.name, max_seq_len=self.max_seq_len)

    def save_assets(self, path):
        target = Path(path) / "hf"
        self.tokenizer.save_pretrained(target)
        self.model.config.save_pretrained(target)

    @classmethod
    def from_assets(cls, path, spec: dict) -> "HFEncoder":
        from transformers import AutoConfig, AutoModel, AutoTokenizer

        target = Path(path) / "hf"
        tok = AutoTokenizer.from_pretrained(target)
        model = AutoModel.from_config(AutoConfig.from_pretrained(target))
        model.resize_token_embeddings(len(tok))
        enc = cls(spec["name"], spec.get("max_seq_len", 512), model=model, tokenizer=tok)
        return enc


@dataclass
class EncoderConfig:
    """``encoder_name`` ``"tiny"`` selects the built-in transformer; anything else is a HF id/path."""

    encoder_name: str = "bert-base-uncased"
    max_seq_len: int = 512
    d_model: int = 32
    layers: int = 2
    heads: int = 4
    ff: int = 64
    dropout: float = 0.1
    vocab_min_count: int = 1
    piece_len: int = 3
    n_buckets: int = 512


def build_encoder(cfg: EncoderConfig, corpus: Optional[Iterable[Sequence[str]]] = None) -> Encoder:
    if cfg.encoder_name == "tiny":
        tok = HashingTokenizer.build(corpus or [], min_count=cfg.vocab_min_count,
                                     piece_len=cfg.piece_len, n_buckets=cfg.n_buckets)
        return TinyEncoder(tok, cfg.d_model, cfg.layers, cfg.heads, cfg.ff, cfg.dropout, cfg.max_seq_len)
    try:
        return HFEncoder(cfg.encoder_name, cfg.max_seq_len)
    except OSError as exc:
        raise ModelError(f"cannot load encoder {cfg.encoder_name!r}: {exc}") from exc


def load_encoder(path, spec: dict) -> Encoder:
    kind = spec.get("type")
    if kind == "tiny":
        return TinyEncoder.from_assets(path, spec)
    if kind == "hf":
        return HFEncoder.from_assets(path, spec)
    raise ModelError(f"unknown encoder type {kind!r}")
