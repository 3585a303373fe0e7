from pathlib import Path

import numpy as np
import pytest

from compact_oie.config import ExtractorConfig, LinkerConfig
from compact_oie.conll import parse_conllu
from compact_oie.core import Constituent, Example, Label, Sentence, Triple
from compact_oie.grid import build_gold_grid, one_hot
from compact_oie.linker import LINK_INDEX, LINK_LABELS, LinkPrediction

DATA = Path(__file__).parent / "data"

BETH_TOKENS = "Beth was the second child of Henry , born in wedlock .".split()

CROCODILE_CONLLU = """\
# sent_id = fig4
# text = The group reach a small shop, where the crocodile breaks through a wall.
1	The	the	DET	_	_	2	det	_	_
2	group	group	NOUN	_	_	3	nsubj	_	_
3	reach	reach	VERB	_	_	0	root	_	_
4	a	a	DET	_	_	6	det	_	_
5	small	small	ADJ	_	_	6	amod	_	_
6	shop	shop	NOUN	_	_	3	obj	_	SpaceAfter=No
7	,	,	PUNCT	_	_	11	punct	_	_
8	where	where	ADV	_	PronType=Rel	11	advmod	_	_
9	the	the	DET	_	_	10	det	_	_
10	crocodile	crocodile	NOUN	_	_	11	nsubj	_	_
11	breaks	break	VERB	_	_	6	acl:relcl	_	_
12	through	through	ADP	_	_	14	case	_	_
13	a	a	DET	_	_	14	det	_	_
14	wall	wall	NOUN	_	_	11	obl	_	SpaceAfter=No
15	.	.	PUNCT	_	_	3	punct	_	_

"""

COMPLEMENT_COORD_CONLLU = """\
# sent_id = cc1
# text = She said that he left, and they stayed.
1	She	she	PRON	_	_	2	nsubj	_	_
2	said	say	VERB	_	_	0	root	_	_
3	that	that	SCONJ	_	_	5	mark	_	_
4	he	he	PRON	_	_	5	nsubj	_	_
5	left	leave	VERB	_	_	2	ccomp	_	SpaceAfter=No
6	,	,	PUNCT	_	_	9	punct	_	_
7	and	and	CCONJ	_	_	9	cc	_	_
8	they	they	PRON	_	_	9	nsubj	_	_
9	stayed	stay	VERB	_	_	2	conj	_	SpaceAfter=No
10	.	.	PUNCT	_	_	2	punct	_	_

"""


def tiny_config(kind, **overrides):
    """Small from-scratch encoder settings used by the training tests."""
    cls = ExtractorConfig if kind == "extractor" else LinkerConfig
    cfg = cls()
    cfg.encoder.encoder_name = "tiny"
    cfg.encoder.d_model, cfg.encoder.layers, cfg.encoder.heads, cfg.encoder.ff = 32, 2, 4, 64
    cfg.encoder.dropout = 0.0
    cfg.mlp_dropout = 0.0
    cfg.lr, cfg.batch_size, cfg.val_fraction = 3e-3, 10, 0.0
    if kind == "extractor":
        cfg.proj_dim = 64
    else:
        cfg.hidden = 64
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg


def arg(s, e=None):
    return Constituent.arg(s, e)


def pred(s, e=None):
    return Constituent.pred(s, e)


@pytest.fixture
def beth_sentence():
    return Sentence.from_tokens(BETH_TOKENS)


@pytest.fixture
def beth_triples():
    return [Triple(arg(0), pred(1), arg(2, 6)), Triple(arg(2, 6), pred(8), arg(9, 10))]


@pytest.fixture
def beth_example(beth_sentence, beth_triples):
    return Example("beth", beth_sentence, beth_triples)


@pytest.fixture
def crocodile():
    return parse_conllu(CROCODILE_CONLLU)[0]


@pytest.fixture
def complement_coord():
    return parse_conllu(COMPLEMENT_COORD_CONLLU)[0]


class OracleExtractor:
    """Returns the one-hot gold tensor for every sentence it knows."""

    def __init__(self, examples):
        self.gold = {ex.sentence.tokens: one_hot(build_gold_grid(ex.sentence, ex.triples)) for ex in examples}

    def probabilities(self, sentences):
        return [self.gold[s.tokens] for s in sentences]


class OracleLinker:
    """Classifies each (predicate, argument) pair with its gold role at probability 0.9."""

    def __init__(self, examples):
        self.roles = {}
        for ex in examples:
            for t in ex.triples:
                self.roles[(ex.sentence.tokens, t.predicate, t.subject)] = Label.SUBJECT
                if t.object is not None:
                    self.roles[(ex.sentence.tokens, t.predicate, t.object)] = Label.OBJECT

    def classify(self, seqs):
        out = []
        for m in seqs:
            words = tuple(m.strip())
            group = []
            for a in m.arguments:
                lab = self.roles.get((words, m.predicate, a), Label.NONE)
                probs = np.full(len(LINK_LABELS), 0.05)
                probs[LINK_INDEX[lab]] = 0.9
                group.append(LinkPrediction(m.predicate, a, lab, tuple(probs)))
            out.append(group)
        return out


# -- acceptance reporting --

def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, name): acceptance criterion")
    config._acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key = (mark.args[0], mark.args[1])
    results = item.config._acceptance
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = results.get(key, "PASS")
        results[key] = "PASS" if report.passed and prev == "PASS" else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), status in sorted(results.items()):
        terminalreporter.write_line(f"criterion {num}: {status}  {name}")
