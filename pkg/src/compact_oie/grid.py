"""Gold label grids for the word-pair table.

Constituents occupy solid squares on the diagonal; a predicate-argument link
fills the rectangle ``predicate rows x argument columns`` and its mirror
with the link role (Subject or Object).
"""
from __future__ import annotations

from typing import Iterable, List, Sequence

import numpy as np

from .core import CONSTITUENT_LABELS, NUM_LABELS, Constituent, Label, Sentence, Span, Triple
from .errors import ConflictError, InvalidGrid, OverlapError

NONE = int(Label.NONE)


def _size(s) -> int:
    return s if isinstance(s, int) else len(s)


def check_constituents(constituents: Iterable[Constituent], n: int) -> List[Constituent]:
    """Sort and verify that distinct constituents never share a word."""
    cs = sorted(set(constituents))
    for c in cs:
        if c.span.end >= n:
            raise OverlapError(f"span {c.span} exceeds sentence length {n}")
    for a, b in zip(cs, cs[1:]):
        if a.span.overlaps(b.span):
            raise OverlapError(f"constituents {a.span} and {b.span} share words")
    return cs


def build_gold_grid(s: Sentence | int, triples: Sequence[Triple]) -> np.ndarray:
    """Return the ``n x n`` integer label grid for ``triples`` over sentence ``s``."""
    n = _size(s)
    grid = np.full((n, n), NONE, dtype=np.int8)
    constituents = check_constituents((c for t in triples for c in t.constituents()), n)
    for c in constituents:
        a, b = c.span.start, c.span.end + 1
        grid[a:b, a:b] = int(c.ctype)

    links = {}
    for t in triples:
        roles = [(t.subject, Label.SUBJECT)]
        if t.object is not None:
            roles.append((t.object, Label.OBJECT))
        for arg, role in roles:
            key = (t.predicate.span, arg.span)
            prev = links.setdefault(key, role)
            if prev != role:
                raise ConflictError(
                    f"predicate {t.predicate.span} links {arg.span} as both {prev.name} and {role.name}")
    for (p, a), role in links.items():
        rows = slice(p.start, p.end + 1)
        cols = slice(a.start, a.end + 1)
        block = grid[rows, cols]
        if np.any((block != NONE) & (block != int(role))):
            raise ConflictError(f"cells {p} x {a} already carry a different label")
        grid[rows, cols] = int(role)
        grid[cols, rows] = int(role)
    return grid


def grid_to_constituents(grid: np.ndarray) -> List[Constituent]:
    """Read the constituents off the diagonal of a label grid."""
    grid = np.asarray(grid)
    n = grid.shape[0]
    out = []
    i = 0
    while i < n:
        lab = int(grid[i, i])
        if lab not in (int(Label.ARGUMENT), int(Label.PREDICATE)):
            i += 1
            continue
        j = i
        while j + 1 < n and grid[i, j + 1] == lab and grid[j + 1, j + 1] == lab:
            j += 1
        if not np.all(grid[i:j + 1, i:j + 1] == lab):
            raise InvalidGrid(f"diagonal block ({i}, {j}) is not a solid square")
        out.append(Constituent(Span(i, j), Label(lab)))
        i = j + 1

    # Constituent labels may only appear inside the diagonal squares found above.
    inside = np.zeros_like(grid, dtype=bool)
    for c in out:
        a, b = c.span.start, c.span.end + 1
        inside[a:b, a:b] = True
    stray = np.isin(grid, [int(y) for y in CONSTITUENT_LABELS]) & ~inside
    if stray.any():
        i, j = map(int, np.argwhere(stray)[0])
        raise InvalidGrid(f"constituent label at off-block cell ({i}, {j})")
    return out


def one_hot(grid: np.ndarray) -> np.ndarray:
    """``n x n x |Y|`` float tensor with all mass on the gold label."""
    grid = np.asarray(grid, dtype=np.int64)
    return np.eye(NUM_LABELS)[grid]


def predicate_words(triples: Iterable[Triple]) -> List[int]:
    return sorted({i for t in triples for i in t.predicate.span})


def render_grid(grid: np.ndarray, tokens: Sequence[str] | None = None) -> str:
    """Text matrix with one letter per cell (A/P/S/O/·)."""
    grid = np.asarray(grid)
    n = grid.shape[0]
    names = list(tokens) if tokens is not None else [str(i) for i in range(n)]
    width = max(len(w) for w in names)
    lines = [" " * width + " " + " ".join(w[0] for w in names)]
    for i in range(n):
        row = " ".join(Label(int(v)).letter for v in grid[i])
        lines.append(names[i].rjust(width) + " " + row)
    return "\n".join(lines)
