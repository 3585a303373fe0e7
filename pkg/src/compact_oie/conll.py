"""CoNLL-U input: dependency-parsed sentences."""
from __future__ import annotations

from typing import Dict, List

import conllu

from .core import DependencyParse, Sentence
from .errors import ParseError


def _sentence_from_tokenlist(tl: conllu.TokenList) -> Sentence:
    words = [t for t in tl if isinstance(t.get("id"), int)]
    if not words:
        raise ParseError("empty sentence")
    ids = [t["id"] for t in words]
    if ids != list(range(1, len(words) + 1)):
        raise ParseError(f"token ids are not 1..n: {ids}")
    heads, rels = [], []
    for t in words:
        if t.get("head") is None or t.get("form") is None:
            raise ParseError(f"token {t['id']} lacks a form or head column")
        heads.append(int(t["head"]) - 1)
        rels.append(t.get("deprel") or "_")
    try:
        parse = DependencyParse(
            tuple(heads), tuple(rels),
            upos=tuple(t.get("upos") or "_" for t in words),
            feats=tuple(dict(t.get("feats") or {}) for t in words),
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    tokens = [t["form"] for t in words]
    text = tl.metadata.get("text")
    if text:
        offsets, pos = [], 0
        for tok in tokens:
            start = text.find(tok, pos)
            if start < 0:
                break
            offsets.append((start, start + len(tok)))
            pos = start + len(tok)
        if len(offsets) == len(tokens):
            return Sentence(text, tuple(tokens), tuple(offsets), parse)
    return Sentence.from_tokens(tokens, parse)


def parse_conllu(text: str) -> List[Sentence]:
    try:
        token_lists = conllu.parse(text)
    except Exception as exc:  # conllu raises several exception types on malformed input
        raise ParseError(f"malformed CoNLL-U: {exc}") from exc
    return [_sentence_from_tokenlist(tl) for tl in token_lists]


def read_conllu(path) -> Dict[str, Sentence]:
    """Map ``sent_id`` (or the 1-based sentence position) to parsed sentences."""
    with open(path, encoding="utf-8") as f:
        text = f.read()
    try:
        token_lists = conllu.parse(text)
    except Exception as exc:
        raise ParseError(f"{path}: malformed CoNLL-U: {exc}") from exc
    out = {}
    for k, tl in enumerate(token_lists, 1):
        sid = tl.metadata.get("sent_id", str(k))
        try:
            out[sid] = _sentence_from_tokenlist(tl)
        except ParseError as exc:
            raise ParseError(f"{path}: sentence {sid}: {exc}") from exc
    return out
