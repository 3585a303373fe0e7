"""Extraction scoring: exact-match fact-synset P/R/F1, compactness analytics
(ACL, NCC, RPA) and export to formats read by external token-level scorers."""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .core import Constituent, Example, Sentence, Triple, constituent_length, read_examples, read_jsonl, write_examples
from .errors import DataError, EmptyInput, ParseError

SurfaceTriple = Tuple[str, str, str]

SUBJECT_RELS = ("nsubj", "csubj")
VERBAL_UPOS = ("VERB", "AUX")


def normalize(text: str) -> str:
    return " ".join(text.casefold().split())


def normalize_triple(t: Sequence[str]) -> SurfaceTriple:
    subj, rel, obj = (list(t) + [""] * 3)[:3]
    return normalize(subj), normalize(rel), normalize(obj or "")


@dataclass
class FactSynset:
    sentence_id: str
    synset_id: str
    gold_variants: List[SurfaceTriple]

    def __post_init__(self):
        if not self.gold_variants:
            raise DataError(f"synset {self.synset_id} has no variants")
        if len(set(map(normalize_triple, self.gold_variants))) != len(self.gold_variants):
            raise DataError(f"synset {self.synset_id} repeats a variant")


@dataclass
class MetricsReport:
    acl: Optional[float] = None
    ncc: Optional[float] = None
    rpa: Optional[float] = None
    exact_p: Optional[float] = None
    exact_r: Optional[float] = None
    exact_f1: Optional[float] = None
    counts: Dict[str, int] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def render(self) -> str:
        def fmt(v):
            return "unavailable" if v is None else f"{v:.4f}"

        lines = [f"P    {fmt(self.exact_p)}", f"R    {fmt(self.exact_r)}", f"F1   {fmt(self.exact_f1)}",
                 f"ACL  {fmt(self.acl)}", f"NCC  {fmt(self.ncc)}", f"RPA  {fmt(self.rpa)}"]
        lines += [f"{k}: {v}" for k, v in sorted(self.counts.items())]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)


def _triples_of(extractions) -> List[Triple]:
    out = []
    for x in extractions:
        if isinstance(x, Example):
            out.extend(x.triples)
        else:
            out.append(x)
    return out


def avg_constituent_length(extractions: Iterable[Triple | Example]) -> float:
    """Mean word count over every filled constituent slot."""
    lengths = [constituent_length(c) for t in _triples_of(extractions) for c in t.constituents()]
    if not lengths:
        raise EmptyInput("no extractions to measure")
    return sum(lengths) / len(lengths)


def _arguments(ex: Example) -> List[str]:
    args = []
    for t in ex.triples:
        args.append(normalize(t.subject.text(ex.sentence.tokens)))
        if t.object is not None:
            args.append(normalize(t.object.text(ex.sentence.tokens)))
    return args


def repetitions_per_argument(extractions: Sequence[Example], mode: str = "sentence") -> float:
    """Total argument slots over distinct argument strings.

    ``mode="sentence"`` computes the ratio per sentence and averages over
    sentences that have any argument; ``mode="global"`` counts distinct
    strings across the whole corpus.
    """
    per_sentence = [a for a in (_arguments(ex) for ex in extractions) if a]
    if not per_sentence:
        raise EmptyInput("no argument slots")
    if mode == "global":
        pooled = [a for args in per_sentence for a in args]
        return len(pooled) / len(set(pooled))
    if mode != "sentence":
        raise ValueError(f"unknown RPA mode {mode!r}")
    return sum(len(a) / len(set(a)) for a in per_sentence) / len(per_sentence)


def clause_heads(sentence: Sentence, span) -> List[int]:
    """Words in ``span`` that head a clause with their own subject inside the span.

    A head qualifies when it has a subject dependent in the span and is either
    verbal or carries a copula in the span.
    """
    parse = sentence.parse
    if parse is None:
        raise ParseError("constituent clause count needs a dependency parse")
    inside = set(span)
    heads = []
    for v in sorted(inside):
        deps = [d for d in parse.children(v) if d in inside]
        has_subj = any(parse.deprels[d].split(":")[0] in SUBJECT_RELS for d in deps)
        if not has_subj:
            continue
        verbal = parse.upos is not None and parse.upos[v] in VERBAL_UPOS
        has_cop = any(parse.deprels[d].split(":")[0] == "cop" for d in deps)
        if verbal or has_cop:
            heads.append(v)
    return heads


def num_constituent_clauses(extractions: Sequence[Example], parses: Mapping[str, Sentence]) -> float:
    """Average number of embedded subject-bearing clauses per constituent."""
    counts = []
    for ex in extractions:
        if not ex.triples:
            continue
        parsed = parses.get(ex.id) or parses.get(ex.source_id or "")
        if parsed is None or parsed.parse is None:
            raise ParseError(f"no parse for sentence {ex.id}")
        if tuple(parsed.tokens) != tuple(ex.sentence.tokens):
            raise ParseError(f"parse tokens differ from extraction tokens for sentence {ex.id}")
        for t in ex.triples:
            for c in t.constituents():
                counts.append(len(clause_heads(parsed, c.span)))
    if not counts:
        raise EmptyInput("no constituents")
    return sum(counts) / len(counts)


def exact_match_score(system: Sequence[Tuple[str, Sequence[str]]] | Sequence[Example],
                      gold: Sequence[FactSynset]) -> Tuple[float, float, float]:
    """Exact-match precision/recall/F1 against fact synsets, matched within each sentence.

    ``system`` is either extraction records or ``(sentence_id, (subj, rel, obj))`` pairs.
    Duplicate system triples each count toward precision; a synset is recalled at most once.
    """
    pairs = []
    for x in system:
        if isinstance(x, Example):
            key = x.source_id or x.id
            pairs.extend((key, t.surface(x.sentence.tokens)) for t in x.triples)
        else:
            pairs.append((str(x[0]), tuple(x[1])))

    index: Dict[Tuple[str, SurfaceTriple], set] = defaultdict(set)
    for syn in gold:
        for v in syn.gold_variants:
            index[(syn.sentence_id, normalize_triple(v))].add((syn.sentence_id, syn.synset_id))

    correct = 0
    recalled = set()
    for sid, t in pairs:
        hits = index.get((sid, normalize_triple(t)))
        if hits:
            correct += 1
            recalled |= hits
    n_gold = len({(s.sentence_id, s.synset_id) for s in gold})
    p = correct / len(pairs) if pairs else 0.0
    r = len(recalled) / n_gold if n_gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def read_synsets(path) -> List[FactSynset]:
    """Line-delimited ``{"sentence_id", "synset_id", "variants": [[s, r, o], ...]}`` records."""
    out = []
    for lineno, d in read_jsonl(path):
        try:
            variants = [tuple(normalize_triple(v)) for v in d["variants"]]
            out.append(FactSynset(str(d["sentence_id"]), str(d["synset_id"]), variants))
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: bad synset record ({exc})") from exc
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_synsets(path, synsets: Iterable[FactSynset]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in synsets:
            f.write(json.dumps({"sentence_id": s.sentence_id, "synset_id": s.synset_id,
                                "variants": [list(v) for v in s.gold_variants]}) + "\n")


# -- export --

EXPORT_FORMATS = ("carb_tsv", "jsonl")


def _tsv_field(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ")


def carb_rows(extractions: Sequence[Example]) -> List[str]:
    rows = []
    for ex in extractions:
        for t in ex.triples:
            subj, rel, obj = t.surface(ex.sentence.tokens)
            fields = [ex.sentence.text, f"{t.confidence:.4f}", rel, subj, obj]
            rows.append("\t".join(_tsv_field(f) for f in fields))
    return rows


def export_extractions(extractions: Sequence[Example], path, fmt: str = "jsonl") -> Path:
    path = Path(path)
    if fmt == "jsonl":
        write_examples(path, extractions)
    elif fmt == "carb_tsv":
        path.parent.mkdir(parents=True, exist_ok=True)
        rows = carb_rows(extractions)
        with path.open("w", encoding="utf-8", newline="\n") as f:
            f.write("".join(r + "\n" for r in rows))
    else:
        raise ValueError(f"unknown export format {fmt!r}; expected one of {EXPORT_FORMATS}")
    return path


def import_extractions(path) -> List[Example]:
    return read_examples(path)


def evaluate(extractions: Sequence[Example], synsets: Optional[Sequence[FactSynset]] = None,
             parses: Optional[Mapping[str, Sentence]] = None, rpa_mode: str = "sentence") -> MetricsReport:
    rep = MetricsReport()
    n_triples = sum(len(ex.triples) for ex in extractions)
    rep.counts = {"sentences": len(extractions), "triples": n_triples}
    try:
        rep.acl = avg_constituent_length(extractions)
    except EmptyInput:
        rep.notes.append("ACL undefined: no extractions")
    try:
        rep.rpa = repetitions_per_argument(extractions, rpa_mode)
    except EmptyInput:
        rep.notes.append("RPA undefined: no arguments")
    if parses is None:
        rep.notes.append("NCC unavailable: no parses given")
    else:
        try:
            rep.ncc = num_constituent_clauses(extractions, parses)
        except EmptyInput:
            rep.notes.append("NCC undefined: no constituents")
    if synsets is not None:
        rep.exact_p, rep.exact_r, rep.exact_f1 = exact_match_score(extractions, synsets)
        rep.counts["synsets"] = len({(s.sentence_id, s.synset_id) for s in synsets})
    return rep


def synsets_from_examples(examples: Sequence[Example]) -> List[FactSynset]:
    """One single-variant synset per gold triple (for corpora without synset annotation)."""
    out = []
    for ex in examples:
        seen = set()
        for k, t in enumerate(ex.triples):
            v = normalize_triple(t.surface(ex.sentence.tokens))
            if v in seen:
                continue
            seen.add(v)
            out.append(FactSynset(ex.source_id or ex.id, f"{ex.id}-{k}", [v]))
    return out
