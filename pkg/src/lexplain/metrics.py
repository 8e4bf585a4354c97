"""Classification, agreement and text-overlap metrics.

Conventions shared by the overlap metrics: identical non-empty inputs score
1.0; two empty inputs score 1.0; empty versus non-empty scores 0.0. Set
metrics (jaccard, overlap_min, overlap_max) work on unique lower-cased token
sets with punctuation dropped; the n-gram metrics keep punctuation tokens.
Candidate/reference order is fixed: machine text is the candidate, gold text
the reference.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import GoldExplanation
from .errors import DocMismatch, EmptyInput, LengthMismatch, RaggedRows, TooFewRaters
from .occlusion import Explanation
from .segmenter import tokenize

BLEU_EPSILON = 1e-9


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassificationReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class: dict[int, dict[str, float]]
    confusion: dict[str, int]  # keys tn, fp, fn, tp (class 1 = positive)

    def as_percent_rows(self) -> list[tuple[str, float]]:
        return [
            ("macro_precision", 100.0 * self.macro_precision),
            ("macro_recall", 100.0 * self.macro_recall),
            ("macro_f1", 100.0 * self.macro_f1),
            ("accuracy", 100.0 * self.accuracy),
        ]


def macro_f_score(precision: float, recall: float) -> float:
    """Harmonic mean of the macro-averaged precision and recall; works on
    fractions or percents."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def classification_report(gold, pred) -> ClassificationReport:
    gold = [int(g) for g in gold]
    pred = [int(p) for p in pred]
    if len(gold) != len(pred):
        raise LengthMismatch(f"gold has {len(gold)} items, pred has {len(pred)}")
    if not gold:
        raise EmptyInput("cannot score empty label lists")
    tp = sum(1 for g, p in zip(gold, pred) if g == 1 and p == 1)
    tn = sum(1 for g, p in zip(gold, pred) if g == 0 and p == 0)
    fp = sum(1 for g, p in zip(gold, pred) if g == 0 and p == 1)
    fn = sum(1 for g, p in zip(gold, pred) if g == 1 and p == 0)

    per_class = {}
    for cls in (0, 1):
        cls_tp = tp if cls == 1 else tn
        cls_fp = fn if cls == 0 else fp  # predicted cls but gold is the other
        cls_fn = fp if cls == 0 else fn
        prec = cls_tp / (cls_tp + cls_fp) if cls_tp + cls_fp else 0.0
        rec = cls_tp / (cls_tp + cls_fn) if cls_tp + cls_fn else 0.0
        per_class[cls] = {
            "precision": prec,
            "recall": rec,
            "f1": macro_f_score(prec, rec),
        }
    macro_p = (per_class[0]["precision"] + per_class[1]["precision"]) / 2
    macro_r = (per_class[0]["recall"] + per_class[1]["recall"]) / 2
    return ClassificationReport(
        accuracy=(tp + tn) / len(gold),
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f_score(macro_p, macro_r),
        per_class=per_class,
        confusion={"tn": tn, "fp": fp, "fn": fn, "tp": tp},
    )


# ---------------------------------------------------------------------------
# Agreement
# ---------------------------------------------------------------------------

def pairwise_agreement(a, b) -> float:
    """Percent of positions where the two label lists agree."""
    if len(a) != len(b):
        raise LengthMismatch(f"lists have lengths {len(a)} and {len(b)}")
    if not a:
        raise EmptyInput("cannot compare empty label lists")
    matches = sum(1 for x, y in zip(a, b) if int(x) == int(y))
    return 100.0 * matches / len(a)


def fleiss_kappa(counts) -> float:
    """Fleiss' kappa for an items-by-categories matrix of rating counts.
    Every row must sum to the same rater count n >= 2. Returns nan when the
    expected agreement is 1 (all ratings in a single category)."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 2 or counts.shape[0] == 0:
        raise RaggedRows("counts must be a non-empty 2-D matrix")
    row_sums = counts.sum(axis=1)
    n = row_sums[0]
    if not np.all(row_sums == n):
        raise RaggedRows("every item must be rated by the same number of raters")
    if n < 2:
        raise TooFewRaters("Fleiss' kappa needs at least 2 raters per item")
    N = counts.shape[0]
    p_i = ((counts * counts).sum(axis=1) - n) / (n * (n - 1))
    p_bar = p_i.mean()
    p_j = counts.sum(axis=0) / (N * n)
    p_e = float((p_j * p_j).sum())
    if p_e >= 1.0:
        return math.nan
    return (p_bar - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class AgreementMatrix:
    annotators: tuple[str, ...]
    matrix: np.ndarray  # percent agreement, symmetric, diagonal 100
    fleiss: float


def agreement_matrix(labels_by_annotator: dict[str, dict[str, int]]) -> AgreementMatrix:
    """Pairwise percent agreement over shared documents plus Fleiss' kappa
    over documents rated by every annotator."""
    annotators = tuple(sorted(labels_by_annotator))
    if len(annotators) < 2:
        raise TooFewRaters("need at least two annotators")
    m = np.full((len(annotators), len(annotators)), np.nan)
    for i, a in enumerate(annotators):
        m[i, i] = 100.0
        for j in range(i + 1, len(annotators)):
            b = annotators[j]
            shared = sorted(set(labels_by_annotator[a]) & set(labels_by_annotator[b]))
            if shared:
                va = [labels_by_annotator[a][d] for d in shared]
                vb = [labels_by_annotator[b][d] for d in shared]
                m[i, j] = m[j, i] = pairwise_agreement(va, vb)

    common = set.intersection(*(set(labels_by_annotator[a]) for a in annotators))
    if common:
        rows = []
        for doc in sorted(common):
            row = [0, 0]
            for a in annotators:
                row[int(labels_by_annotator[a][doc])] += 1
            rows.append(row)
        kappa = fleiss_kappa(np.array(rows))
    else:
        kappa = math.nan
    return AgreementMatrix(annotators=annotators, matrix=m, fleiss=kappa)


def annotator_accuracy(
    labels_by_annotator: dict[str, dict[str, int]], gold: dict[str, int]
) -> dict[str, float]:
    """Percent accuracy of each annotator against gold labels on the
    documents they rated."""
    out = {}
    for annotator in sorted(labels_by_annotator):
        shared = sorted(set(labels_by_annotator[annotator]) & set(gold))
        if not shared:
            out[annotator] = math.nan
            continue
        va = [labels_by_annotator[annotator][d] for d in shared]
        vg = [gold[d] for d in shared]
        out[annotator] = pairwise_agreement(va, vg)
    return out


# ---------------------------------------------------------------------------
# Set overlap
# ---------------------------------------------------------------------------

def _as_set(tokens) -> frozenset:
    return frozenset(tokens)


def jaccard(a, b) -> float:
    a, b = _as_set(a), _as_set(b)
    if not a and not b:
        return 1.0
    union = a | b
    return len(a & b) / len(union)


def overlap_min(a, b) -> float:
    a, b = _as_set(a), _as_set(b)
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return len(a & b) / min(len(a), len(b))


def overlap_max(a, b) -> float:
    a, b = _as_set(a), _as_set(b)
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return len(a & b) / max(len(a), len(b))


# ---------------------------------------------------------------------------
# N-gram overlap
# ---------------------------------------------------------------------------

def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: list[str], reference: list[str], n: int) -> float:
    """Clipped n-gram F1 (beta = 1)."""
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    if not cand and not ref:
        return 1.0
    if not cand or not ref:
        return 0.0
    hits = sum(min(c, ref[g]) for g, c in cand.items())
    precision = hits / sum(cand.values())
    recall = hits / sum(ref.values())
    return macro_f_score(precision, recall)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(candidate: list[str], reference: list[str]) -> float:
    """Longest-common-subsequence F-measure (beta = 1)."""
    if not candidate and not reference:
        return 1.0
    if not candidate or not reference:
        return 0.0
    lcs = _lcs_length(candidate, reference)
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return macro_f_score(precision, recall)


def bleu(candidate: list[str], reference: list[str]) -> float:
    """Brevity penalty times the geometric mean of clipped unigram and bigram
    precisions. Zero precisions are floored at BLEU_EPSILON; an order with no
    n-grams on either side is skipped (so single-token identity is 1.0)."""
    if not candidate and not reference:
        return 1.0
    if not candidate or not reference:
        return 0.0
    log_sum = 0.0
    orders = 0
    for n in (1, 2):
        cand = _ngrams(candidate, n)
        ref = _ngrams(reference, n)
        if not cand and not ref:
            continue
        orders += 1
        if not cand:
            precision = 0.0
        else:
            hits = sum(min(c, ref[g]) for g, c in cand.items())
            precision = hits / sum(cand.values())
        log_sum += math.log(max(precision, BLEU_EPSILON))
    if orders == 0:
        return 0.0
    geo = math.exp(log_sum / orders)
    c, r = len(candidate), len(reference)
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return bp * geo


def _meteor_alignment(candidate: list[str], reference: list[str]) -> tuple[int, int]:
    """Exact-match alignment: each candidate token maps left-to-right to the
    earliest unused reference position with the same surface form. Returns
    (matches, chunks) where chunks counts maximal runs that are contiguous in
    both strings."""
    used = [False] * len(reference)
    positions: dict[str, list[int]] = {}
    for j, tok in enumerate(reference):
        positions.setdefault(tok, []).append(j)
    next_idx: dict[str, int] = {tok: 0 for tok in positions}
    aligned: list[tuple[int, int]] = []
    for i, tok in enumerate(candidate):
        plist = positions.get(tok)
        if plist is None:
            continue
        k = next_idx[tok]
        while k < len(plist) and used[plist[k]]:
            k += 1
        next_idx[tok] = k
        if k < len(plist):
            used[plist[k]] = True
            next_idx[tok] = k + 1
            aligned.append((i, plist[k]))
    if not aligned:
        return 0, 0
    chunks = 1
    for (i0, j0), (i1, j1) in zip(aligned, aligned[1:]):
        if i1 != i0 + 1 or j1 != j0 + 1:
            chunks += 1
    return len(aligned), chunks


def meteor(candidate: list[str], reference: list[str]) -> float:
    """Exact-match variant: recall-weighted harmonic mean (9:1) with the
    fragmentation penalty 0.5 * (chunks / matches)^3. A single-chunk
    alignment is unfragmented and takes no penalty, so identical inputs score
    exactly 1.0."""
    if not candidate and not reference:
        return 1.0
    if not candidate or not reference:
        return 0.0
    matches, chunks = _meteor_alignment(candidate, reference)
    if matches == 0:
        return 0.0
    precision = matches / len(candidate)
    recall = matches / len(reference)
    f_mean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.0 if chunks <= 1 else 0.5 * (chunks / matches) ** 3
    return f_mean * (1.0 - penalty)


# ---------------------------------------------------------------------------
# Machine-vs-gold explanation overlap
# ---------------------------------------------------------------------------

OVERLAP_METRIC_NAMES = (
    "jaccard", "overlap_min", "overlap_max",
    "rouge_1", "rouge_2", "rouge_l", "bleu", "meteor",
)


@dataclass(frozen=True)
class OverlapReport:
    jaccard: float
    overlap_min: float
    overlap_max: float
    rouge_1: float
    rouge_2: float
    rouge_l: float
    bleu: float
    meteor: float

    def values(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in OVERLAP_METRIC_NAMES}


def overlap_tokens(text: str) -> list[str]:
    """Lower-cased tokens for the n-gram metrics (punctuation kept)."""
    return [t.text.lower() for t in tokenize(text)]


def overlap_token_set(text: str) -> frozenset:
    """Unique lower-cased word tokens for the set metrics (punctuation
    dropped)."""
    return frozenset(t for t in overlap_tokens(text) if any(ch.isalnum() for ch in t))


def text_overlap_report(machine_text: str, gold_text: str) -> OverlapReport:
    cand = overlap_tokens(machine_text)
    ref = overlap_tokens(gold_text)
    cand_set = overlap_token_set(machine_text)
    ref_set = overlap_token_set(gold_text)
    return OverlapReport(
        jaccard=jaccard(cand_set, ref_set),
        overlap_min=overlap_min(cand_set, ref_set),
        overlap_max=overlap_max(cand_set, ref_set),
        rouge_1=rouge_n(cand, ref, 1),
        rouge_2=rouge_n(cand, ref, 2),
        rouge_l=rouge_l(cand, ref),
        bleu=bleu(cand, ref),
        meteor=meteor(cand, ref),
    )


def machine_explanation_text(expl: Explanation) -> str:
    ordered = sorted(expl.selected, key=lambda s: s.char_span[0])
    return " ".join(s.text for s in ordered)


def gold_explanation_text(gold: GoldExplanation) -> str:
    ordered = sorted(gold.spans, key=lambda s: s.char_span[0])
    return " ".join(s.text for s in ordered)


def explanation_report(machine: Explanation, gold: GoldExplanation) -> OverlapReport:
    """All eight overlap metrics between a machine explanation and one
    annotator's gold explanation (all ranks used)."""
    if machine.doc_id != gold.doc_id:
        raise DocMismatch(
            f"machine explanation is for {machine.doc_id!r}, gold for {gold.doc_id!r}"
        )
    return text_overlap_report(machine_explanation_text(machine), gold_explanation_text(gold))
