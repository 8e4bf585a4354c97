import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexplain.corpus import GoldExplanation, GoldSpan
from lexplain.errors import (
    DocMismatch,
    EmptyInput,
    LengthMismatch,
    RaggedRows,
    TooFewRaters,
)
from lexplain.metrics import (
    OVERLAP_METRIC_NAMES,
    agreement_matrix,
    annotator_accuracy,
    bleu,
    classification_report,
    explanation_report,
    fleiss_kappa,
    jaccard,
    macro_f_score,
    meteor,
    overlap_max,
    overlap_min,
    pairwise_agreement,
    rouge_l,
    rouge_n,
    text_overlap_report,
)
from lexplain.occlusion import Explanation, SentenceScore


class TestClassification:
    def test_macro_f1_reproduces_published_pairs(self):
        assert macro_f_score(63.03, 61.00) == pytest.approx(62.00, abs=0.01)
        assert macro_f_score(77.80, 77.78) == pytest.approx(77.79, abs=0.01)

    def test_perfect_prediction(self):
        gold = [0, 1, 0, 1, 1]
        report = classification_report(gold, gold)
        assert report.accuracy == 1.0
        assert report.macro_precision == 1.0
        assert report.macro_recall == 1.0
        assert report.macro_f1 == 1.0

    def test_hand_computed_case(self):
        gold = [1, 1, 1, 0, 0, 0]
        pred = [1, 1, 0, 0, 1, 1]
        report = classification_report(gold, pred)
        # class 1: tp=2 fp=2 fn=1; class 0: tp=1 fp=1 fn=2
        assert report.per_class[1]["precision"] == pytest.approx(0.5)
        assert report.per_class[1]["recall"] == pytest.approx(2 / 3)
        assert report.per_class[0]["precision"] == pytest.approx(0.5)
        assert report.per_class[0]["recall"] == pytest.approx(1 / 3)
        assert report.accuracy == pytest.approx(0.5)
        assert report.macro_precision == pytest.approx(0.5)
        assert report.macro_recall == pytest.approx(0.5)
        assert report.confusion == {"tn": 1, "fp": 2, "fn": 1, "tp": 2}

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            classification_report([0, 1], [0])
        with pytest.raises(EmptyInput):
            classification_report([], [])


class TestPairwiseAgreement:
    def test_identity_is_100(self):
        assert pairwise_agreement([0, 1, 1], [0, 1, 1]) == 100.0

    def test_table_granularity_case(self):
        a = [0] * 56
        b = [0] * 53 + [1] * 3
        assert round(pairwise_agreement(a, b), 1) == 94.6

    def test_complementary_is_zero(self):
        assert pairwise_agreement([0, 1, 0], [1, 0, 1]) == 0.0

    def test_symmetric(self):
        a = [0, 1, 1, 0, 1]
        b = [1, 1, 0, 0, 1]
        assert pairwise_agreement(a, b) == pairwise_agreement(b, a)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            pairwise_agreement([1], [1, 0])


def fleiss_reference(counts):
    """Independent direct recomputation of the kappa terms."""
    counts = np.asarray(counts, dtype=float)
    N, k = counts.shape
    n = counts[0].sum()
    p_j = counts.sum(axis=0) / (N * n)
    p_e = sum(v * v for v in p_j)
    p_i = [(sum(c * c for c in row) - n) / (n * (n - 1)) for row in counts]
    p_bar = sum(p_i) / N
    return (p_bar - p_e) / (1 - p_e)


class TestFleissKappa:
    def test_unanimous_mixed_is_one(self):
        counts = [[5, 0], [0, 5], [5, 0], [0, 5]]
        assert fleiss_kappa(counts) == 1.0

    def test_single_category_everywhere_is_undefined(self):
        counts = [[5, 0], [5, 0], [5, 0]]
        assert math.isnan(fleiss_kappa(counts))

    def test_matches_independent_recomputation(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            N, k, n = 10, 5, 7
            counts = np.zeros((N, k), dtype=int)
            for i in range(N):
                for _ in range(n):
                    counts[i, rng.integers(0, k)] += 1
            assert fleiss_kappa(counts) == pytest.approx(fleiss_reference(counts), abs=1e-12)

    def test_relabeling_invariance(self):
        counts = np.array([[3, 1, 1], [0, 2, 3], [2, 2, 1], [5, 0, 0]])
        permuted = counts[:, [2, 0, 1]]
        assert fleiss_kappa(counts) == pytest.approx(fleiss_kappa(permuted), abs=1e-12)
        shuffled = counts[[3, 1, 0, 2]]
        assert fleiss_kappa(counts) == pytest.approx(fleiss_kappa(shuffled), abs=1e-12)

    def test_errors(self):
        with pytest.raises(RaggedRows):
            fleiss_kappa([[2, 1], [1, 1]])
        with pytest.raises(TooFewRaters):
            fleiss_kappa([[1, 0], [0, 1]])


class TestAgreementMatrix:
    def _labels(self):
        docs = [f"d{i}" for i in range(20)]
        rng = np.random.default_rng(3)
        base = {d: int(rng.integers(0, 2)) for d in docs}
        out = {}
        for a in ("E1", "E2", "E3"):
            flips = set(rng.choice(docs, size=3, replace=False))
            out[a] = {d: (1 - base[d] if d in flips else base[d]) for d in docs}
        return out

    def test_symmetric_with_unit_diagonal(self):
        m = agreement_matrix(self._labels())
        assert np.array_equal(m.matrix, m.matrix.T)
        assert np.all(np.diag(m.matrix) == 100.0)
        assert m.fleiss <= 1.0

    def test_accuracy_table(self):
        labels = self._labels()
        gold = {d: v for d, v in labels["E1"].items()}
        acc = annotator_accuracy(labels, gold)
        assert acc["E1"] == 100.0
        assert set(acc) == {"E1", "E2", "E3"}


class TestSetOverlap:
    def test_identity(self):
        s = frozenset({"a", "b"})
        assert jaccard(s, s) == overlap_min(s, s) == overlap_max(s, s) == 1.0

    def test_subset_arithmetic(self):
        a = frozenset({"x", "y"})
        b = frozenset({"x", "y", "z", "w"})
        assert overlap_min(a, b) == 1.0
        assert overlap_max(a, b) == 0.5
        assert jaccard(a, b) == 0.5

    def test_empty_conventions(self):
        assert jaccard(frozenset(), frozenset()) == 1.0
        assert overlap_min(frozenset(), frozenset()) == 1.0
        assert overlap_max(frozenset(), frozenset()) == 1.0
        assert jaccard(frozenset(), frozenset({"a"})) == 0.0
        assert overlap_min(frozenset(), frozenset({"a"})) == 0.0
        assert overlap_max(frozenset(), frozenset({"a"})) == 0.0

    @given(
        a=st.frozensets(st.integers(min_value=0, max_value=30), max_size=20),
        b=st.frozensets(st.integers(min_value=0, max_value=30), max_size=20),
    )
    @settings(max_examples=500, deadline=None)
    def test_ordering_property(self, a, b):
        assert jaccard(a, b) <= overlap_max(a, b) + 1e-15
        assert overlap_max(a, b) <= overlap_min(a, b) + 1e-15


class TestRouge:
    def test_identity(self):
        toks = "the appeal was heard".split()
        assert rouge_n(toks, toks, 1) == 1.0
        assert rouge_n(toks, toks, 2) == 1.0
        assert rouge_l(toks, toks) == 1.0

    def test_hand_enumerable(self):
        cand = "a b c".split()
        ref = "a c d".split()
        assert rouge_n(cand, ref, 1) == pytest.approx(2 / 3)
        assert rouge_l(cand, ref) == pytest.approx(2 / 3)  # LCS "a c"

    def test_disjoint(self):
        assert rouge_n("a b".split(), "c d".split(), 1) == 0.0
        assert rouge_l("a b".split(), "c d".split()) == 0.0

    def test_clipping(self):
        cand = "a a a".split()
        ref = "a b".split()
        # clipped unigram hits = 1; P = 1/3, R = 1/2
        assert rouge_n(cand, ref, 1) == pytest.approx(2 * (1 / 3) * 0.5 / (1 / 3 + 0.5))


class TestBleu:
    def test_identity(self):
        toks = "the appeal was heard at length".split()
        assert bleu(toks, toks) == pytest.approx(1.0)

    def test_single_token_identity(self):
        assert bleu(["word"], ["word"]) == pytest.approx(1.0)

    def test_longer_candidate_no_brevity_penalty(self):
        cand = "a b c d".split()
        ref = "a b c".split()
        p1 = 3 / 4
        p2 = 2 / 3
        assert bleu(cand, ref) == pytest.approx(math.sqrt(p1 * p2))

    def test_brevity_penalty_applies(self):
        cand = "a b".split()
        ref = "a b c d".split()
        p1 = 1.0
        p2 = 1.0
        bp = math.exp(1 - 4 / 2)
        assert bleu(cand, ref) == pytest.approx(bp * math.sqrt(p1 * p2))

    def test_direct_formula_recomputation(self):
        cand = "the appeal fails".split()
        ref = "the appeal is dismissed".split()
        # unigram hits: the, appeal -> 2/3; bigram hits: "the appeal" -> 1/2
        expected = 1.0 * math.sqrt((2 / 3) * (1 / 2)) * math.exp(1 - 4 / 3)
        assert bleu(cand, ref) == pytest.approx(expected, abs=1e-12)

    def test_zero_overlap_is_epsilon_scale(self):
        assert bleu("a b".split(), "c d".split()) < 1e-8


class TestMeteor:
    def test_identity(self):
        toks = "the appeal was heard".split()
        assert meteor(toks, toks) == pytest.approx(1.0)

    def test_no_match(self):
        assert meteor("a b".split(), "c d".split()) == 0.0

    def test_fragmented_alignment_penalized(self):
        ref = "a b c d".split()
        contiguous = meteor("a b".split(), ref)
        fragmented = meteor("a c".split(), ref)  # two chunks
        assert fragmented < contiguous

    def test_direct_formula_recomputation(self):
        cand = "a x b".split()
        ref = "a b y".split()
        # matches: a, b; alignment (0,0), (2,1): two chunks
        p, r = 2 / 3, 2 / 3
        f_mean = 10 * p * r / (r + 9 * p)
        penalty = 0.5 * (2 / 2) ** 3
        assert meteor(cand, ref) == pytest.approx(f_mean * (1 - penalty), abs=1e-12)


class TestExplanationReport:
    def _machine(self, sentences):
        return Explanation(
            doc_id="doc1",
            label=1,
            prob=0.9,
            selected=tuple(
                SentenceScore(text=t, char_span=(i * 100, i * 100 + len(t)), raw_delta=1.0, length=1)
                for i, t in enumerate(sentences)
            ),
            chunk_scores=(),
            top_fraction=0.4,
        )

    def _gold(self, sentences, doc_id="doc1"):
        return GoldExplanation(
            doc_id=doc_id,
            annotator_id="E1",
            spans=tuple(
                GoldSpan(text=t, char_span=(i * 100, i * 100 + len(t)), rank=1)
                for i, t in enumerate(sentences)
            ),
        )

    def test_identical_selection_is_all_ones(self):
        sents = ["The order cannot stand.", "The grievance has merit."]
        report = explanation_report(self._machine(sents), self._gold(sents))
        for name in OVERLAP_METRIC_NAMES:
            assert getattr(report, name) == pytest.approx(1.0), name

    def test_disjoint_selection_near_zero(self):
        report = explanation_report(
            self._machine(["alpha bravo charlie delta."]),
            self._gold(["echo foxtrot golf hotel."]),
        )
        assert report.jaccard == 0.0
        assert report.overlap_min == 0.0
        assert report.overlap_max == 0.0
        assert report.rouge_1 <= 0.3  # the shared period token is kept for ROUGE

    def test_half_overlap_set_oracle(self):
        machine = ["alpha bravo.", "charlie delta."]
        gold = ["charlie delta.", "echo foxtrot."]
        report = explanation_report(self._machine(machine), self._gold(gold))
        a = {"alpha", "bravo", "charlie", "delta"}
        b = {"charlie", "delta", "echo", "foxtrot"}
        assert report.overlap_min == pytest.approx(len(a & b) / min(len(a), len(b)))
        assert report.overlap_max == pytest.approx(len(a & b) / max(len(a), len(b)))
        assert report.jaccard == pytest.approx(len(a & b) / len(a | b))

    def test_doc_mismatch(self):
        with pytest.raises(DocMismatch):
            explanation_report(self._machine(["x."]), self._gold(["x."], doc_id="other"))

    def test_punctuation_dropped_for_sets_kept_for_ngrams(self):
        report = text_overlap_report("alpha .", "alpha !")
        assert report.jaccard == 1.0  # sets see only "alpha"
        assert report.rouge_1 < 1.0  # n-grams see the punctuation differ


class TestIdentityAcrossAllMetrics:
    def test_identity_on_text(self):
        report = text_overlap_report("The appeal fails today.", "The appeal fails today.")
        for name in OVERLAP_METRIC_NAMES:
            assert getattr(report, name) == pytest.approx(1.0), name
