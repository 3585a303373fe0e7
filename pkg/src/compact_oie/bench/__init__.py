from .backend import ClauseRequest, CommandBackend, StubBackend, ground_triple
from .builder import Benchmark, BenchmarkStats, create_benchmark, extract_triples
from .tree import ClauseNode, SentenceTree, build_sentence_tree

__all__ = [
    "ClauseRequest", "CommandBackend", "StubBackend", "ground_triple",
    "Benchmark", "BenchmarkStats", "create_benchmark", "extract_triples",
    "ClauseNode", "SentenceTree", "build_sentence_tree",
]
