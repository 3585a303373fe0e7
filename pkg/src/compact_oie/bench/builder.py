"""Compact-triple benchmark creation by clause-wise extraction."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

from ..core import Constituent, Example, Sentence, Span, Triple, constituent_length
from ..errors import BackendError, ParseError
from .backend import Backend, ClauseRequest, ground_triple
from .tree import ClauseNode, SentenceTree, build_sentence_tree

log = logging.getLogger(__name__)


@dataclass
class ClauseFailure:
    sentence_id: str
    clause_head: int
    clause: str
    error: str


def _to_sentence_span(node: ClauseNode, sp: Span) -> Span:
    words = node.words
    start, end = words[sp.start], words[sp.end]
    if end - start != sp.end - sp.start:
        raise BackendError(f"span {sp} crosses words removed from the clause")
    return Span(start, end)


def _lift(node: ClauseNode, t: Triple) -> Triple:
    def lift(c: Optional[Constituent]):
        return None if c is None else Constituent(_to_sentence_span(node, c.span), c.ctype)

    return Triple(lift(t.subject), lift(t.predicate), lift(t.object), t.confidence)


def _run_clause(tree: SentenceTree, node: ClauseNode, backend: Backend, sentence_id: str,
                failures: List[ClauseFailure]) -> List[Triple]:
    if not node.words:
        return []
    upos = tree.sentence.parse.upos if tree.sentence.parse is not None else None
    req = ClauseRequest(f"{sentence_id}/{node.head}", tuple(tree.clause_tokens(node)),
                        tuple(upos[i] for i in node.words) if upos else None)
    out = []
    try:
        raw = backend(req)
    except BackendError as exc:
        failures.append(ClauseFailure(sentence_id, node.head, req.text, str(exc)))
        return []
    for r in raw:
        try:
            out.append(_lift(node, ground_triple(r, req.tokens)))
        except BackendError as exc:
            failures.append(ClauseFailure(sentence_id, node.head, req.text, str(exc)))
    return out


def extract_triples(tree: SentenceTree, backend: Backend, node: Optional[ClauseNode] = None,
                    failures: Optional[List[ClauseFailure]] = None, sentence_id: str = "") -> List[Triple]:
    """Postfix clause traversal: clausal children first, then the node's own clause."""
    node = tree.root if node is None else node
    failures = [] if failures is None else failures
    found: List[Triple] = []
    for child in node.children:
        if not child.has_clausal_child:
            found += _run_clause(tree, child, backend, sentence_id, failures)
        else:
            found += extract_triples(tree, backend, child, failures, sentence_id)
    found += _run_clause(tree, node, backend, sentence_id, failures)
    unique = {}
    for t in found:
        unique.setdefault(t.key(), t)
    return list(unique.values())


@dataclass
class BenchmarkStats:
    sentences: int = 0
    triples: int = 0
    avg_triples_per_sentence: float = 0.0
    avg_constituent_length: float = 0.0
    failed_sentences: int = 0
    failed_clauses: int = 0


@dataclass
class Benchmark:
    records: List[Example] = field(default_factory=list)
    stats: BenchmarkStats = field(default_factory=BenchmarkStats)
    failures: List[ClauseFailure] = field(default_factory=list)

    def stats_dict(self) -> dict:
        return asdict(self.stats)


def create_benchmark(sentences: Dict[str, Sentence] | Sequence[Sentence], backend: Backend,
                     relations: Optional[Sequence[str]] = None, workers: int = 1) -> Benchmark:
    items = list(sentences.items()) if isinstance(sentences, dict) else \
        [(str(i), s) for i, s in enumerate(sentences, 1)]

    def one(item):
        sid, s = item
        failures: List[ClauseFailure] = []
        try:
            tree = build_sentence_tree(s, relations)
        except ParseError as exc:
            log.warning("sentence %s skipped: %s", sid, exc)
            return sid, None, failures
        triples = extract_triples(tree, backend, failures=failures, sentence_id=sid)
        return sid, Example(sid, s, triples), failures

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(it) for it in items]

    bench = Benchmark()
    for sid, ex, failures in results:
        bench.failures.extend(failures)
        if ex is None:
            bench.stats.failed_sentences += 1
        else:
            bench.records.append(ex)
    st = bench.stats
    st.sentences = len(bench.records)
    st.triples = sum(len(ex.triples) for ex in bench.records)
    st.failed_clauses = len(bench.failures)
    lengths = [constituent_length(c) for ex in bench.records for t in ex.triples for c in t.constituents()]
    st.avg_triples_per_sentence = st.triples / st.sentences if st.sentences else 0.0
    st.avg_constituent_length = sum(lengths) / len(lengths) if lengths else 0.0
    return bench
