import numpy as np
import pytest

from lexplain.corpus import Decision, Document
from lexplain.embedder import HashingEmbedder
from lexplain.synth import SynthConfig, generate


@pytest.fixture(scope="session")
def small_planted_corpus():
    """60 short synthetic documents with planted labels and cues."""
    return generate(SynthConfig(n_docs=60, seed=101, min_words=160, max_words=600))


def preprocess_planted(planted):
    """Run the ingestion pipeline over generated docs."""
    from lexplain.corpus import ExtractionReport, preprocess_case

    report = ExtractionReport()
    docs = [preprocess_case(p.raw, report=report) for p in planted]
    return docs, report


def make_separable_docs(n=200, seed=7, words=60):
    """Tiny linearly separable corpus: one class-word vocabulary per label."""
    rng = np.random.default_rng(seed)
    acc_words = ["grant", "uphold", "favor", "succeed"]
    rej_words = ["deny", "refuse", "reject", "fail"]
    neutral = ["court", "case", "matter", "record", "hearing", "counsel"]
    docs = []
    for i in range(n):
        label = Decision.ACCEPTED if i % 2 == 0 else Decision.REJECTED
        vocab = acc_words if label == Decision.ACCEPTED else rej_words
        toks = []
        for _ in range(words):
            pool = vocab if rng.random() < 0.4 else neutral
            toks.append(pool[int(rng.integers(0, len(pool)))])
        docs.append(Document(id=f"doc{i}", text=" ".join(toks) + ".", label=label))
    return docs


@pytest.fixture()
def embedder():
    return HashingEmbedder(dim=64, seed=3)
