"""Domain types shared across the pipeline.

Everything here is indexed by *word* position.  Spans are inclusive on both
ends, so ``Span(2, 6)`` covers five words.
"""
from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import DataError


class Label(enum.IntEnum):
    """Cell labels of the word-pair table.  The integer value is the channel index."""

    ARGUMENT = 0
    PREDICATE = 1
    SUBJECT = 2
    OBJECT = 3
    NONE = 4

    @property
    def letter(self) -> str:
        return "APSO·"[self.value]


CONSTITUENT_LABELS = (Label.ARGUMENT, Label.PREDICATE)
RELATION_LABELS = (Label.SUBJECT, Label.OBJECT)
NUM_LABELS = len(Label)


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"invalid span ({self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start + 1

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.start, self.end + 1))

    def overlaps(self, other: "Span") -> bool:
        return self.start <= other.end and other.start <= self.end

    def as_list(self) -> List[int]:
        return [self.start, self.end]


@dataclass(frozen=True, order=True)
class Constituent:
    span: Span
    ctype: Label

    def __post_init__(self):
        if self.ctype not in CONSTITUENT_LABELS:
            raise ValueError(f"constituent type must be Argument or Predicate, got {self.ctype!r}")

    @classmethod
    def arg(cls, start: int, end: Optional[int] = None) -> "Constituent":
        return cls(Span(start, start if end is None else end), Label.ARGUMENT)

    @classmethod
    def pred(cls, start: int, end: Optional[int] = None) -> "Constituent":
        return cls(Span(start, start if end is None else end), Label.PREDICATE)

    def text(self, tokens: Sequence[str]) -> str:
        return " ".join(tokens[self.span.start:self.span.end + 1])


def constituent_length(c: Constituent) -> int:
    return c.span.end - c.span.start + 1


@dataclass(frozen=True)
class Triple:
    subject: Constituent
    predicate: Constituent
    object: Optional[Constituent] = None
    confidence: float = 1.0

    def constituents(self) -> Tuple[Constituent, ...]:
        if self.object is None:
            return (self.subject, self.predicate)
        return (self.subject, self.predicate, self.object)

    def surface(self, tokens: Sequence[str]) -> Tuple[str, str, str]:
        obj = self.object.text(tokens) if self.object is not None else ""
        return (self.subject.text(tokens), self.predicate.text(tokens), obj)

    def is_compact(self, max_len: int = 10) -> bool:
        """True when no constituent exceeds ``max_len`` words (manual-evaluation rule)."""
        return all(constituent_length(c) <= max_len for c in self.constituents())

    def key(self) -> tuple:
        return (self.subject.span, self.predicate.span,
                self.object.span if self.object is not None else None)


def validate_triple(t: Triple) -> Optional[str]:
    """Return ``None`` when ``t`` is well formed, else the first violated rule."""
    if t.subject.ctype != Label.ARGUMENT:
        return "subject must be Argument"
    if t.predicate.ctype != Label.PREDICATE:
        return "predicate must be Predicate"
    if t.object is not None and t.object.ctype != Label.ARGUMENT:
        return "object must be Argument"
    spans = [c.span for c in t.constituents()]
    if len(set(spans)) != len(spans):
        return "duplicate constituent role"
    if not 0.0 <= t.confidence <= 1.0:
        return "confidence out of range"
    return None


@dataclass(frozen=True)
class DependencyParse:
    """Per-token head (0-based, ``-1`` for the root) and relation label."""

    heads: Tuple[int, ...]
    deprels: Tuple[str, ...]
    upos: Optional[Tuple[str, ...]] = None
    feats: Optional[Tuple[dict, ...]] = None

    def __post_init__(self):
        n = len(self.heads)
        if len(self.deprels) != n:
            raise ValueError("heads and deprels differ in length")
        if self.upos is not None and len(self.upos) != n:
            raise ValueError("upos length mismatch")
        if sum(1 for h in self.heads if h == -1) != 1:
            raise ValueError("parse must have exactly one root")
        if any(h < -1 or h >= n for h in self.heads):
            raise ValueError("head index out of range")

    def children(self, i: int) -> List[int]:
        return [j for j, h in enumerate(self.heads) if h == i]

    @property
    def root(self) -> int:
        return self.heads.index(-1)


_TOKEN_RE = re.compile(r"\w+(?:[-'’]\w+)*|[^\w\s]")


@dataclass(frozen=True)
class Sentence:
    text: str
    tokens: Tuple[str, ...]
    token_offsets: Tuple[Tuple[int, int], ...]
    parse: Optional[DependencyParse] = None

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("sentence has no tokens")
        if len(self.token_offsets) != len(self.tokens):
            raise ValueError("token_offsets length mismatch")
        prev = -1
        for s, e in self.token_offsets:
            if s <= prev or e < s or e > len(self.text):
                raise ValueError("token offsets must be increasing and within text")
            prev = s
        if self.parse is not None and len(self.parse.heads) != len(self.tokens):
            raise ValueError("parse length mismatch")

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_text(cls, text: str) -> "Sentence":
        matches = list(_TOKEN_RE.finditer(text))
        return cls(text, tuple(m.group() for m in matches), tuple(m.span() for m in matches))

    @classmethod
    def from_tokens(cls, tokens: Sequence[str], parse: Optional[DependencyParse] = None) -> "Sentence":
        offsets, pos = [], 0
        for tok in tokens:
            offsets.append((pos, pos + len(tok)))
            pos += len(tok) + 1
        return cls(" ".join(tokens), tuple(tokens), tuple(offsets), parse)

    def span_text(self, span: Span) -> str:
        return " ".join(self.tokens[span.start:span.end + 1])


@dataclass
class Example:
    """One dataset record: a sentence and the triples annotated (or extracted) on it."""

    id: str
    sentence: Sentence
    triples: List[Triple] = field(default_factory=list)
    source_id: Optional[str] = None

    def constituents(self) -> List[Constituent]:
        seen = {}
        for t in self.triples:
            for c in t.constituents():
                seen.setdefault(c, None)
        return sorted(seen)


# -- record I/O --

def _span_from_json(value) -> Span:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise DataError(f"span must be a [start, end] pair, got {value!r}")
    return Span(int(value[0]), int(value[1]))


def triple_to_json(t: Triple) -> dict:
    return {
        "subject": t.subject.span.as_list(),
        "predicate": t.predicate.span.as_list(),
        "object": t.object.span.as_list() if t.object is not None else None,
        "confidence": t.confidence,
    }


def triple_from_json(d: dict, n_tokens: int) -> Triple:
    try:
        obj = d.get("object")
        t = Triple(
            Constituent(_span_from_json(d["subject"]), Label.ARGUMENT),
            Constituent(_span_from_json(d["predicate"]), Label.PREDICATE),
            Constituent(_span_from_json(obj), Label.ARGUMENT) if obj is not None else None,
            float(d.get("confidence", 1.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad triple record {d!r}: {exc}") from exc
    if any(c.span.end >= n_tokens for c in t.constituents()):
        raise DataError(f"triple span out of range for {n_tokens} tokens: {d!r}")
    problem = validate_triple(t)
    if problem:
        raise DataError(problem)
    return t


def example_to_json(ex: Example) -> dict:
    d = {
        "id": ex.id,
        "text": ex.sentence.text,
        "tokens": list(ex.sentence.tokens),
        "triples": [triple_to_json(t) for t in ex.triples],
    }
    if ex.source_id is not None:
        d["source_id"] = ex.source_id
    return d


def example_from_json(d: dict) -> Example:
    if "tokens" in d and d["tokens"]:
        tokens = [str(t) for t in d["tokens"]]
        text = d.get("text")
        if text is None or " ".join(tokens) == text:
            sentence = Sentence.from_tokens(tokens)
        else:
            sentence = _align_tokens(text, tokens)
    elif d.get("text"):
        sentence = Sentence.from_text(d["text"])
    else:
        raise DataError("record needs 'tokens' or 'text'")
    triples = [triple_from_json(t, len(sentence)) for t in d.get("triples", [])]
    return Example(str(d.get("id", "")), sentence, triples, d.get("source_id"))


def _align_tokens(text: str, tokens: Sequence[str]) -> Sentence:
    offsets, pos = [], 0
    for tok in tokens:
        start = text.find(tok, pos)
        if start < 0:
            # Tokens are not a substring sequence of text; fall back to a joined text.
            return Sentence(text=" ".join(tokens), tokens=tuple(tokens),
                            token_offsets=Sentence.from_tokens(tokens).token_offsets)
        offsets.append((start, start + len(tok)))
        pos = start + len(tok)
    return Sentence(text, tuple(tokens), tuple(offsets))


def read_jsonl(path) -> Iterator[Tuple[int, dict]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc


def read_examples(path) -> List[Example]:
    out = []
    for lineno, d in read_jsonl(path):
        try:
            ex = example_from_json(d)
        except (DataError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if not ex.id:
            ex.id = str(lineno)
        out.append(ex)
    return out


def write_examples(path, examples: Iterable[Example]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for ex in examples:
            f.write(json.dumps(example_to_json(ex), ensure_ascii=False) + "\n")
