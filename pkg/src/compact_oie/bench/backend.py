"""Triple-extraction backends for simple clauses.

A backend is any callable taking a :class:`ClauseRequest` and returning a
list of raw triples.  A raw triple is a mapping with ``subject``,
``predicate`` and optional ``object`` entries, each either a
``[start, end]`` span over the clause tokens or a surface string that must
occur verbatim in the clause.

Out-of-process backends speak newline-delimited JSON::

    request:  {"id": "s1/3", "text": "...", "tokens": [...], "upos": [...]}
    response: {"id": "s1/3", "triples": [{"subject": ..., "predicate": ..., "object": ...}]}
"""
from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from ..core import Constituent, Label, Span, Triple, validate_triple
from ..errors import BackendError


@dataclass(frozen=True)
class ClauseRequest:
    id: str
    tokens: Tuple[str, ...]
    upos: Optional[Tuple[str, ...]] = None

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def to_json(self) -> dict:
        d = {"id": self.id, "text": self.text, "tokens": list(self.tokens)}
        if self.upos is not None:
            d["upos"] = list(self.upos)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ClauseRequest":
        tokens = tuple(d.get("tokens") or d["text"].split())
        upos = tuple(d["upos"]) if d.get("upos") else None
        return cls(str(d.get("id", "")), tokens, upos)


Backend = Callable[[ClauseRequest], List[dict]]


def _find(tokens: Sequence[str], phrase: str, taken: List[Span], after: Optional[int] = None) -> Span:
    words = phrase.split()
    if not words:
        raise BackendError("empty constituent")
    low = [t.lower() for t in tokens]
    target = [w.lower() for w in words]
    hits = []
    for i in range(len(tokens) - len(words) + 1):
        if low[i:i + len(words)] == target:
            sp = Span(i, i + len(words) - 1)
            if not any(sp.overlaps(t) for t in taken):
                hits.append(sp)
    if not hits:
        raise BackendError(f"constituent {phrase!r} is not grounded in the clause")
    if after is not None:
        later = [h for h in hits if h.start > after]
        if later:
            return later[0]
    return hits[0]


def _as_span(value, tokens, taken, after=None) -> Span:
    if isinstance(value, str):
        return _find(tokens, value, taken, after)
    try:
        sp = Span(int(value[0]), int(value[1]))
    except (TypeError, ValueError, IndexError) as exc:
        raise BackendError(f"bad span {value!r}") from exc
    if sp.end >= len(tokens):
        raise BackendError(f"span {value!r} outside clause of {len(tokens)} tokens")
    return sp


def ground_triple(raw, tokens: Sequence[str]) -> Triple:
    """Resolve a raw backend triple to spans over the clause tokens."""
    if isinstance(raw, Triple):
        t = raw
    else:
        try:
            pred = _as_span(raw["predicate"], tokens, [])
            subj = _as_span(raw["subject"], tokens, [pred])
            obj_raw = raw.get("object")
            obj = None
            if obj_raw not in (None, "", []):
                obj = _as_span(obj_raw, tokens, [pred, subj], after=pred.end)
        except KeyError as exc:
            raise BackendError(f"backend triple lacks {exc}") from exc
        t = Triple(Constituent(subj, Label.ARGUMENT), Constituent(pred, Label.PREDICATE),
                   Constituent(obj, Label.ARGUMENT) if obj is not None else None,
                   float(raw.get("confidence", 1.0)))
    problem = validate_triple(t)
    if problem:
        raise BackendError(problem)
    if any(c.span.end >= len(tokens) for c in t.constituents()):
        raise BackendError("triple outside clause")
    return t


class StubBackend:
    """Deterministic rule backend: subject before the first verb, object after it.

    Needs part-of-speech tags in the request.  Every call is appended to
    ``transcript`` (the clause texts, in call order).
    """

    def __init__(self, verb_tags: Sequence[str] = ("VERB", "AUX")):
        self.verb_tags = tuple(verb_tags)
        self.transcript: List[str] = []
        self._lock = threading.Lock()

    def __call__(self, req: ClauseRequest) -> List[dict]:
        with self._lock:
            self.transcript.append(req.text)
        return stub_extract(req, self.verb_tags)


def stub_extract(req: ClauseRequest, verb_tags=("VERB", "AUX")) -> List[dict]:
    if req.upos is None:
        return []
    verbs = [i for i, u in enumerate(req.upos) if u in verb_tags]
    if not verbs:
        return []
    v = verbs[0]
    if v == 0:
        return []
    out = {"subject": [0, v - 1], "predicate": [v, v], "object": None}
    end = len(req.tokens) - 1
    while end > v and req.upos[end] == "PUNCT":
        end -= 1
    if end > v:
        out["object"] = [v + 1, end]
    return [out]


class CommandBackend:
    """Run an external backend command as persistent worker processes.

    ``concurrency`` processes are started lazily; each request is served by
    whichever worker is free.
    """

    def __init__(self, command: str | Sequence[str], concurrency: int = 1, timeout: float = 120.0):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.concurrency = max(1, int(concurrency))
        self.timeout = timeout
        self._pool: "queue.Queue[subprocess.Popen]" = queue.Queue()
        self._started = 0
        self._lock = threading.Lock()

    def _acquire(self) -> subprocess.Popen:
        with self._lock:
            if self._pool.empty() and self._started < self.concurrency:
                self._started += 1
                try:
                    return subprocess.Popen(self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                            text=True, bufsize=1)
                except OSError as exc:
                    self._started -= 1
                    raise BackendError(f"cannot start backend {self.argv!r}: {exc}") from exc
        return self._pool.get(timeout=self.timeout)

    def __call__(self, req: ClauseRequest) -> List[dict]:
        proc = self._acquire()
        healthy = False
        try:
            proc.stdin.write(json.dumps(req.to_json()) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
            if not line:
                raise BackendError(f"backend exited with code {proc.poll()}")
            try:
                resp = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BackendError(f"backend sent invalid JSON: {line[:80]!r}") from exc
            if str(resp.get("id", req.id)) != req.id:
                raise BackendError(f"backend answered {resp.get('id')!r} to request {req.id!r}")
            if "error" in resp:
                healthy = True
                raise BackendError(str(resp["error"]))
            healthy = True
            return list(resp.get("triples", []))
        finally:
            if healthy:
                self._pool.put(proc)
            else:
                proc.kill()
                with self._lock:
                    self._started -= 1

    def close(self) -> None:
        while not self._pool.empty():
            proc = self._pool.get_nowait()
            proc.stdin.close()
            proc.wait(timeout=10)
        self._started = 0

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
