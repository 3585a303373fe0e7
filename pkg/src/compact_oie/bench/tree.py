"""Clause trees from dependency parses."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Set, Tuple

from ..core import Sentence
from ..errors import ParseError

# Relations whose dependent heads a clause of its own.  ``conj`` only counts
# when the conjunct is verbal or has its own subject.
DEFAULT_CLAUSE_RELATIONS = ("ccomp", "csubj", "advcl", "acl:relcl", "conj", "parataxis")
COORDINATE_RELATIONS = ("conj", "parataxis")
SUBORDINATOR_RELATIONS = ("mark", "cc")
WH_ADVERBS = frozenset({"where", "when", "why", "how", "whereby", "wherein", "whence", "whereupon"})
VERBAL_UPOS = ("VERB", "AUX")


@dataclass
class ClauseNode:
    head: int
    kind: str                       # main | complement | coordinate
    words: Tuple[int, ...] = ()
    children: List["ClauseNode"] = field(default_factory=list)

    def walk(self):
        for c in self.children:
            yield from c.walk()
        yield self

    @property
    def has_clausal_child(self) -> bool:
        return bool(self.children)


@dataclass
class SentenceTree:
    sentence: Sentence
    root: ClauseNode

    def clause_tokens(self, node: ClauseNode) -> List[str]:
        return [self.sentence.tokens[i] for i in node.words]

    def clause_text(self, node: ClauseNode) -> str:
        return " ".join(self.clause_tokens(node))


def _check_acyclic(heads: Sequence[int]) -> None:
    n = len(heads)
    for start in range(n):
        seen, i = set(), start
        while i != -1:
            if i in seen:
                raise ParseError(f"cycle through token {i}")
            seen.add(i)
            i = heads[i]
            if len(seen) > n:
                raise ParseError("malformed head chain")


def build_sentence_tree(s: Sentence, relations: Optional[Sequence[str]] = None) -> SentenceTree:
    if s.parse is None:
        raise ParseError("sentence has no dependency parse")
    parse = s.parse
    _check_acyclic(parse.heads)
    relations = tuple(relations or DEFAULT_CLAUSE_RELATIONS)
    children = [parse.children(i) for i in range(len(s))]
    upos = parse.upos or ("_",) * len(s)

    def has_subject(i):
        return any(parse.deprels[c].split(":")[0] in ("nsubj", "csubj") for c in children[i])

    def is_clausal(i):
        rel = parse.deprels[i]
        base = rel.split(":")[0]
        if rel not in relations and base not in relations:
            return False
        if base == "conj":
            return upos[i] in VERBAL_UPOS or has_subject(i)
        return True

    def subtree(i) -> Set[int]:
        out, stack = set(), [i]
        while stack:
            j = stack.pop()
            out.add(j)
            stack.extend(children[j])
        return out

    def build(head: int, kind: str) -> ClauseNode:
        node = ClauseNode(head, kind)
        stack = list(reversed(children[head]))
        while stack:
            j = stack.pop()
            if is_clausal(j):
                base = parse.deprels[j].split(":")[0]
                node.children.append(build(j, "coordinate" if base in COORDINATE_RELATIONS else "complement"))
            else:
                stack.extend(reversed(children[j]))
        node.children.sort(key=lambda c: c.head)
        words = subtree(head)
        for c in node.children:
            words -= subtree(c.head)
        if kind != "main":
            words -= {j for j in children[head] if _is_subordinator(s, j)}
        node.words = _strip_punct(s, sorted(words))
        return node

    return SentenceTree(s, build(parse.root, "main"))


def _is_subordinator(s: Sentence, j: int) -> bool:
    parse = s.parse
    base = parse.deprels[j].split(":")[0]
    if base in SUBORDINATOR_RELATIONS:
        return True
    if base == "advmod":
        feats = parse.feats[j] if parse.feats else {}
        return feats.get("PronType") in ("Rel", "Int") or s.tokens[j].lower() in WH_ADVERBS
    return False


def _is_punct(s: Sentence, j: int) -> bool:
    parse = s.parse
    if parse.upos is not None and parse.upos[j] == "PUNCT":
        return True
    return parse.deprels[j] == "punct"


def _strip_punct(s: Sentence, words: List[int]) -> Tuple[int, ...]:
    while words and _is_punct(s, words[0]):
        words = words[1:]
    while words and _is_punct(s, words[-1]):
        words = words[:-1]
    return tuple(words)
