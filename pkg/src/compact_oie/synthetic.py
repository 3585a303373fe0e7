"""Grammar-generated sentences with compact triple annotation.

Used for smoke training and scaled training checks where no annotated
corpus is at hand.  Templates cover shared constituents, missing objects,
multi-word predicates and words outside any constituent.
"""
from __future__ import annotations

import random
from typing import List, Optional, Tuple

from .core import Constituent, Example, Label, Sentence, Span, Triple

NAMES = ["Beth", "Henry", "Anna", "Marcus", "Julia", "Omar", "Priya", "Lucas", "Mei", "Tomas",
         "Sofia", "Ivan", "Nora", "Felix", "Clara", "Hugo", "Amara", "Kenji", "Lena", "Rafael"]
NOUNS = ["child", "shop", "wall", "group", "crocodile", "teacher", "city", "river", "book", "company",
         "painter", "village", "bridge", "song", "garden", "letter", "museum", "doctor", "farmer",
         "castle", "engineer", "school", "ship", "island", "poem"]
ADJS = ["small", "second", "old", "young", "famous", "quiet", "large", "first", "red", "local",
        "ancient", "new"]
TRANSITIVE = ["was", "reached", "broke", "founded", "visited", "wrote", "painted", "met", "built",
              "joined", "sold", "became", "loved", "studied", "designed"]
PREP_VERBS = [["lives"], ["worked"], ["died"], ["arrived"], ["stayed"], ["grew", "up"], ["travelled"]]
PARTICIPLES = ["born", "raised", "founded", "built", "buried", "married"]
INTRANSITIVE = ["slept", "laughed", "disappeared", "retired", "won", "collapsed"]
PREPS = ["in", "near", "through", "at", "during", "from", "with", "into"]
ADVERBS = ["Yesterday", "Reportedly", "Later", "Meanwhile", "Surprisingly"]


class _Builder:
    def __init__(self):
        self.tokens: List[str] = []

    def add(self, words) -> Span:
        words = [words] if isinstance(words, str) else list(words)
        start = len(self.tokens)
        self.tokens.extend(words)
        return Span(start, len(self.tokens) - 1)


def _np(rng: random.Random, allow_of: bool = True) -> List[str]:
    r = rng.random()
    if r < 0.3:
        return [rng.choice(NAMES)]
    words = [rng.choice(["the", "a"])]
    if rng.random() < 0.6:
        words.append(rng.choice(ADJS))
    words.append(rng.choice(NOUNS))
    if allow_of and r > 0.8:
        words += ["of", rng.choice(NAMES)]
    return words


def _pp(rng: random.Random) -> List[str]:
    return [rng.choice(PREPS)] + _np(rng, allow_of=False)


def _arg(sp: Span) -> Constituent:
    return Constituent(sp, Label.ARGUMENT)


def _pred(sp: Span) -> Constituent:
    return Constituent(sp, Label.PREDICATE)


def synthetic_example(rng: random.Random, idx: int = 0) -> Example:
    b = _Builder()
    triples: List[Tuple] = []
    kind = rng.randrange(8)
    if kind == 0:
        s = b.add(_np(rng)); p = b.add(rng.choice(TRANSITIVE)); o = b.add(_np(rng))
        triples.append((s, p, o))
    elif kind == 1:
        s = b.add(_np(rng)); p = b.add(rng.choice(TRANSITIVE)); o = b.add(_np(rng))
        b.add(","); p2 = b.add(rng.choice(PARTICIPLES)); o2 = b.add(_pp(rng))
        triples += [(s, p, o), (o, p2, o2)]
    elif kind == 2:
        s = b.add(_np(rng)); p = b.add(rng.choice(PREP_VERBS)); o = b.add(_pp(rng))
        triples.append((s, p, o))
    elif kind == 3:
        b.add([rng.choice(ADVERBS), ","])
        s = b.add(_np(rng)); p = b.add(rng.choice(TRANSITIVE)); o = b.add(_np(rng))
        triples.append((s, p, o))
    elif kind == 4:
        s = b.add(_np(rng)); p = b.add(rng.choice(INTRANSITIVE))
        triples.append((s, p, None))
    elif kind == 5:
        s = b.add(_np(rng)); p = b.add(rng.choice(TRANSITIVE)); o = b.add(_np(rng))
        b.add([",", "where"])
        s2 = b.add(_np(rng)); p2 = b.add(rng.choice(TRANSITIVE)); o2 = b.add(_np(rng))
        triples += [(s, p, o), (s2, p2, o2)]
    elif kind == 6:
        s = b.add(_np(rng)); b.add(",")
        p = b.add(rng.choice(PARTICIPLES)); o = b.add(_pp(rng)); b.add(",")
        p2 = b.add(rng.choice(TRANSITIVE)); o2 = b.add(_np(rng))
        triples += [(s, p, o), (s, p2, o2)]
    else:
        s = b.add(_np(rng)); p = b.add(["was", "born"]); o = b.add(_pp(rng))
        triples.append((s, p, o))
    b.add(".")
    sentence = Sentence.from_tokens(b.tokens)
    out = [Triple(_arg(s), _pred(p), _arg(o) if o is not None else None) for s, p, o in triples]
    return Example(f"syn-{idx}", sentence, out)


def synthetic_corpus(n: int, seed: int = 0, start: int = 0, rng: Optional[random.Random] = None) -> List[Example]:
    rng = rng or random.Random(seed)
    return [synthetic_example(rng, start + i) for i in range(n)]
