"""Compact open information extraction: table-filling constituent extraction,
marker-based constituent linking, clause-level benchmark building and
compactness-aware evaluation."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Constituent,
    DependencyParse,
    Example,
    Label,
    Sentence,
    Span,
    Triple,
    constituent_length,
    validate_triple,
)
from .decoder import DecoderConfig, decode  # noqa: E402
from .grid import build_gold_grid, grid_to_constituents  # noqa: E402

__all__ = [
    "Constituent", "DependencyParse", "Example", "Label", "Sentence", "Span", "Triple",
    "constituent_length", "validate_triple", "DecoderConfig", "decode",
    "build_gold_grid", "grid_to_constituents",
]
