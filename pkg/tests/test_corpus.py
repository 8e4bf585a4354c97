import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexplain.corpus import (
    DEFAULT_CLEANING_RULES,
    DEFAULT_DECISION_PATTERNS,
    Decision,
    Document,
    ExtractionReport,
    RawCase,
    Split,
    anonymize,
    clean_document,
    extract_decision,
    partition,
    preprocess_case,
    resolve_label,
)
from lexplain.errors import (
    ConflictingSameSentence,
    EmptyAfterCleaning,
    InsufficientClassSize,
    NoPetitions,
)
from lexplain.synth import SynthConfig, generate

from conftest import preprocess_planted


class TestClean:
    def test_header_removed(self):
        raw = RawCase(
            id="x",
            raw_text="IN THE SUPREME COURT OF RECORD\nCase No. 12\n\nThe appellant contends the point.",
        )
        assert clean_document(raw) == "The appellant contends the point."

    def test_no_rule_match_is_identity(self):
        raw = RawCase(id="x", raw_text="Plain body text without any header.")
        assert clean_document(raw) == raw.raw_text

    def test_idempotent(self):
        raw = RawCase(
            id="x",
            raw_text="IN THE SUPREME COURT OF RECORD\nBENCH: Varma\n\nBody stays.\nDATE OF JUDGMENT: 1955\nMore body.",
        )
        once = clean_document(raw)
        assert clean_document(RawCase(id="x", raw_text=once)) == once

    def test_empty_after_cleaning(self):
        raw = RawCase(id="x", raw_text="IN THE SUPREME COURT OF RECORD\nCASE NO. 1\n\n \n")
        with pytest.raises(EmptyAfterCleaning):
            clean_document(raw)

    def test_synthetic_headers_all_cleaned(self):
        planted = generate(SynthConfig(n_docs=50, seed=5, min_words=60, max_words=150))
        for p in planted:
            cleaned = clean_document(p.raw)
            assert "SUPREME COURT" not in cleaned
            assert "CASE NO." not in cleaned
            assert "BENCH:" not in cleaned
            assert "DATE OF JUDGMENT" not in cleaned


class TestExtract:
    def test_dismissed(self):
        text = "The arguments were heard at length. The appeal is dismissed with costs."
        truncated, labels = extract_decision(text)
        assert labels == [Decision.REJECTED]
        assert truncated == "The arguments were heard at length."

    def test_multi_petition(self):
        text = (
            "Both petitions were heard together over several days of argument. "
            "Appeal No. 1 is allowed. Appeal No. 2 is dismissed."
        )
        truncated, labels = extract_decision(text)
        assert labels == [Decision.ACCEPTED, Decision.REJECTED]
        assert truncated == "Both petitions were heard together over several days of argument."

    def test_no_match_identity(self):
        text = "Nothing here resembles a disposition of any kind."
        truncated, labels = extract_decision(text)
        assert truncated == text
        assert labels == []

    def test_conflict_in_one_sentence(self):
        text = (
            "The matter stood over for judgment until today. "
            "The appeal is allowed in part and the appeal is dismissed in part."
        )
        with pytest.raises(ConflictingSameSentence):
            extract_decision(text)

    def test_truncation_is_prefix(self):
        text = "Some filler sentences go here. In the result the appeal is allowed."
        truncated, _ = extract_decision(text)
        assert text.startswith(truncated)

    def test_match_outside_tail_window_ignored(self):
        early = "The appeal is dismissed by the tribunal below. " + " ".join(
            f"word{i}" for i in range(2000)
        )
        truncated, labels = extract_decision(early)
        assert labels == []
        assert truncated == early

    def test_planted_labels_recovered(self):
        planted = generate(SynthConfig(n_docs=500, seed=23, min_words=120, max_words=400))
        for p in planted:
            cleaned = clean_document(p.raw)
            _, labels = extract_decision(cleaned)
            assert tuple(labels) == p.petition_labels
            assert resolve_label(labels) == p.label

    def test_post_extraction_purity_on_synthetic(self):
        planted = generate(SynthConfig(n_docs=120, seed=29, min_words=120, max_words=400))
        for p in planted:
            truncated, _ = extract_decision(clean_document(p.raw))
            for pat in DEFAULT_DECISION_PATTERNS:
                assert not pat.regex().search(truncated)


class TestResolveLabel:
    def test_any_accepted_wins(self):
        assert resolve_label([Decision.ACCEPTED, Decision.REJECTED]) == Decision.ACCEPTED

    def test_singleton(self):
        assert resolve_label([Decision.REJECTED]) == Decision.REJECTED

    def test_all_rejected(self):
        labels = [Decision.REJECTED, Decision.REJECTED, Decision.REJECTED]
        assert resolve_label(labels) == Decision.REJECTED

    def test_empty_raises(self):
        with pytest.raises(NoPetitions):
            resolve_label([])


class TestAnonymize:
    def test_single_substitution(self):
        text, n = anonymize("Justice Rao observed", ["Rao"])
        assert text == "Justice <NAME> observed"
        assert n == 1

    def test_no_hits_identity(self):
        text, n = anonymize("Nothing matches here", ["Rao"])
        assert text == "Nothing matches here"
        assert n == 0

    def test_case_insensitive_whole_word(self):
        text, n = anonymize("RAO met Raoul; rao left.", ["Rao"])
        assert text == "<NAME> met Raoul; <NAME> left."
        assert n == 2

    def test_empty_lexicon_identity(self):
        assert anonymize("Some text", []) == ("Some text", 0)

    def test_idempotent(self):
        text, _ = anonymize("Rao and Varma heard Rao.", ["Rao", "Varma"])
        again, n = anonymize(text, ["Rao", "Varma"])
        assert again == text
        assert n == 0

    def test_idempotent_even_for_name_literal(self):
        text, _ = anonymize("NAME called name.", ["name"])
        again, _ = anonymize(text, ["name"])
        assert again == text

    def test_planted_names_all_replaced(self):
        planted = generate(
            SynthConfig(n_docs=100, seed=31, min_words=100, max_words=260, plant_names=True)
        )
        from lexplain.synth import JUDGE_NAMES

        for p in planted:
            cleaned = clean_document(p.raw)
            anon, _ = anonymize(cleaned, list(JUDGE_NAMES))
            low = anon.lower()
            for name in JUDGE_NAMES:
                assert name.lower() not in low.split()


class TestPartition:
    def _docs(self, n, accepted_fraction=0.5):
        docs = []
        n_acc = int(n * accepted_fraction)
        for i in range(n):
            label = Decision.ACCEPTED if i < n_acc else Decision.REJECTED
            docs.append(Document(id=f"d{i}", text="text", label=label))
        return docs

    def test_balanced_val_test(self):
        docs = self._docs(100)
        partition(docs, seed=7, fractions=(0.8, 0.1, 0.1))
        val = [d for d in docs if d.split == Split.VALIDATION]
        test = [d for d in docs if d.split == Split.TEST]
        assert len(val) == 10 and len(test) == 10
        assert sum(1 for d in val if d.label == Decision.ACCEPTED) == 5
        assert sum(1 for d in test if d.label == Decision.ACCEPTED) == 5

    def test_deterministic(self):
        docs_a = self._docs(100)
        docs_b = self._docs(100)
        a = partition(docs_a, seed=7, fractions=(0.8, 0.1, 0.1))
        b = partition(docs_b, seed=7, fractions=(0.8, 0.1, 0.1))
        assert a.assignment == b.assignment

    def test_different_seed_differs(self):
        docs_a = self._docs(100)
        docs_b = self._docs(100)
        a = partition(docs_a, seed=7)
        b = partition(docs_b, seed=8)
        assert a.assignment != b.assignment

    def test_unbalanced_train_residual(self):
        docs = self._docs(1000, accepted_fraction=0.41)
        partition(docs, seed=3, fractions=(0.9, 0.05, 0.05))
        for split, expected in ((Split.VALIDATION, 50), (Split.TEST, 50)):
            members = [d for d in docs if d.split == split]
            assert len(members) == expected
            acc = sum(1 for d in members if d.label == Decision.ACCEPTED)
            assert abs(acc - expected / 2) <= 1
        train = [d for d in docs if d.split == Split.TRAIN]
        acc_train = sum(1 for d in train if d.label == Decision.ACCEPTED)
        assert acc_train == 410 - 50  # residual imbalance stays in train

    def test_covers_all_docs_disjointly(self):
        docs = self._docs(101)
        assignment = partition(docs, seed=1)
        assert set(assignment.assignment) == {d.id for d in docs}
        assert all(d.split is not None for d in docs)

    def test_insufficient_class(self):
        docs = self._docs(100, accepted_fraction=0.05)
        with pytest.raises(InsufficientClassSize):
            partition(docs, seed=1, fractions=(0.5, 0.25, 0.25))

    def test_unlabeled_go_to_train(self):
        docs = self._docs(60)
        docs.append(Document(id="u1", text="text", label=None))
        partition(docs, seed=2)
        assert docs[-1].split == Split.TRAIN


class TestPreprocessPipeline:
    def test_label_rule_soundness_and_report(self, small_planted_corpus):
        docs, report = preprocess_planted(small_planted_corpus)
        assert report.total == len(small_planted_corpus)
        assert report.labeled == len(small_planted_corpus)  # all planted docs carry decisions
        for doc, planted in zip(docs, small_planted_corpus):
            assert doc.label == planted.label
            if doc.petition_labels:
                assert resolve_label(doc.petition_labels) == doc.label
        multi = sum(1 for p in small_planted_corpus if len(p.petition_labels) > 1)
        assert report.multi_petition == multi

    def test_cue_survives_preprocessing(self, small_planted_corpus):
        docs, _ = preprocess_planted(small_planted_corpus)
        for doc, planted in zip(docs, small_planted_corpus):
            assert planted.cue_sentence in doc.text
