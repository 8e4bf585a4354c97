"""Corpus ingestion: cleaning, decision extraction, labeling, anonymization
and balanced random splits.

Raw case proceedings carry header/meta blocks and state the decision near the
end. Cleaning removes the meta text, extraction pulls the decision label(s)
out of the tail and truncates the text at the earliest decision sentence, and
the multi-petition rule collapses several per-petition decisions into one
document label (accepted if any petition was accepted).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConflictingSameSentence,
    EmptyAfterCleaning,
    InsufficientClassSize,
    NoPetitions,
)
from .segmenter import split_sentences, tokenize


class Decision(enum.IntEnum):
    REJECTED = 0
    ACCEPTED = 1


class Split(str, enum.Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"
    EXPERT = "expert"


@dataclass(frozen=True)
class RawCase:
    id: str
    raw_text: str
    source: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("case id must be non-empty")
        if not self.raw_text:
            raise ValueError(f"case {self.id}: raw_text must be non-empty")


@dataclass
class Document:
    id: str
    text: str
    label: Decision | None = None
    petition_labels: list[Decision] | None = None
    split: Split | None = None
    anonymized: bool = False


@dataclass(frozen=True)
class GoldSpan:
    text: str
    char_span: tuple[int, int]
    rank: int

    def __post_init__(self):
        if not 1 <= self.rank <= 4:
            raise ValueError(f"rank must be in 1..4, got {self.rank}")


@dataclass(frozen=True)
class GoldExplanation:
    doc_id: str
    annotator_id: str
    spans: tuple[GoldSpan, ...]


# ---------------------------------------------------------------------------
# Cleaning
# ---------------------------------------------------------------------------

STRIP_PREFIX = "strip-prefix"
STRIP_MATCH = "strip-match"


@dataclass(frozen=True)
class CleaningRule:
    action: str  # STRIP_PREFIX or STRIP_MATCH
    pattern: str

    def __post_init__(self):
        if self.action not in (STRIP_PREFIX, STRIP_MATCH):
            raise ValueError(f"unknown cleaning action {self.action!r}")
        re.compile(self.pattern)  # fail fast on bad regexes


# Headers of the kind found at the top of uploaded court proceedings: court
# banner through the first blank line, then per-line meta fields.
DEFAULT_CLEANING_RULES = (
    CleaningRule(STRIP_PREFIX, r"(?is)\s*IN THE SUPREME COURT\b.*?\n[ \t]*\n"),
    CleaningRule(STRIP_PREFIX, r"(?is)\s*SUPREME COURT OF\b.*?\n[ \t]*\n"),
    CleaningRule(STRIP_MATCH, r"(?im)^[ \t]*(?:CASE|CIVIL APPEAL|CRIMINAL APPEAL|PETITION|APPEAL) NO\.?[^\n]*\n?"),
    CleaningRule(STRIP_MATCH, r"(?im)^[ \t]*DATE OF JUDGMENT[^\n]*\n?"),
    CleaningRule(STRIP_MATCH, r"(?im)^[ \t]*(?:BENCH|CORAM|PETITIONER|RESPONDENT|APPELLANT|ADVOCATE|CITATION)\s*:[^\n]*\n?"),
    CleaningRule(STRIP_MATCH, r"(?im)^[ \t]*JUDGMENT\s*:?[ \t]*\n"),
)

_MAX_CLEAN_PASSES = 8


def clean_document(raw: RawCase, rules: tuple[CleaningRule, ...] = DEFAULT_CLEANING_RULES) -> str:
    """Remove every rule match from the text, iterating until a pass changes
    nothing (so cleaning is idempotent even when one removal exposes another
    match). Only matched spans are removed."""
    text = raw.raw_text
    for _ in range(_MAX_CLEAN_PASSES):
        new = _apply_rules(text, rules)
        if new == text:
            break
        text = new
    if not text.strip():
        raise EmptyAfterCleaning(f"document {raw.id} is empty after cleaning")
    return text


def _apply_rules(text: str, rules: tuple[CleaningRule, ...]) -> str:
    for rule in rules:
        if rule.action == STRIP_PREFIX:
            m = re.match(rule.pattern, text)
            if m and m.end() > 0:
                text = text[m.end():]
        else:
            text = re.sub(rule.pattern, "", text)
    return text


# ---------------------------------------------------------------------------
# Decision extraction
# ---------------------------------------------------------------------------

_PATTERN_GAP_WORDS = 4  # "Appeal No. 1 is allowed" still matches "appeal is allowed"


@dataclass(frozen=True)
class DecisionPattern:
    phrase: str
    label: Decision

    def regex(self) -> re.Pattern:
        # Up to _PATTERN_GAP_WORDS extra words may sit between the phrase
        # words; court dispositions routinely interpose case numbers and
        # party qualifiers ("the appeal of the State is dismissed").
        words = [re.escape(w) for w in self.phrase.split()]
        gap = r"(?:\s+\S+){0,%d}?\s+" % _PATTERN_GAP_WORDS
        return re.compile(r"\b" + gap.join(words) + r"\b", re.IGNORECASE)


DEFAULT_DECISION_PATTERNS = tuple(
    [DecisionPattern(p, Decision.ACCEPTED) for p in (
        "appeal is allowed",
        "appeals are allowed",
        "petition is allowed",
        "appeal is accepted",
        "we allow the appeal",
        "order set aside",
    )]
    + [DecisionPattern(p, Decision.REJECTED) for p in (
        "appeal is dismissed",
        "appeals are dismissed",
        "petition is dismissed",
        "appeal fails",
        "we dismiss",
    )]
)

DEFAULT_TAIL_FRACTION = 0.10
DEFAULT_TAIL_FLOOR = 50


def extract_decision(
    text: str,
    patterns: tuple[DecisionPattern, ...] = DEFAULT_DECISION_PATTERNS,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
    tail_floor: int = DEFAULT_TAIL_FLOOR,
) -> tuple[str, list[Decision]]:
    """Scan the final window of the document (last `tail_fraction` of tokens,
    at least `tail_floor`) for decision phrases. Returns the matched labels in
    order of occurrence and the text truncated at the start of the earliest
    sentence containing a match. No match returns the text unchanged."""
    if not patterns:
        raise ValueError("patterns table must be non-empty")
    tokens = tokenize(text)
    if not tokens:
        return text, []
    window = max(math.ceil(tail_fraction * len(tokens)), tail_floor)
    window = min(window, len(tokens))
    window_char_start = tokens[len(tokens) - window].char_span[0]

    sentences = split_sentences(text, tokens)
    sentence_of: list[tuple[int, int]] = [s.char_span for s in sentences]

    def containing(pos: int) -> tuple[int, int]:
        for span in sentence_of:
            if span[0] <= pos < span[1]:
                return span
        return (pos, pos + 1)  # match in inter-sentence whitespace; degenerate

    hits: list[tuple[int, Decision]] = []  # (match char offset, label)
    for pat in patterns:
        for m in pat.regex().finditer(text, window_char_start):
            span = containing(m.start())
            if m.end() > span[1]:
                continue  # the word-gap allowance must not cross sentences
            hits.append((m.start(), pat.label))
    if not hits:
        return text, []
    hits.sort(key=lambda h: h[0])

    by_sentence: dict[tuple[int, int], set[Decision]] = {}
    for pos, label in hits:
        by_sentence.setdefault(containing(pos), set()).add(label)
    for span, labels in by_sentence.items():
        if len(labels) > 1:
            raise ConflictingSameSentence(
                f"sentence at {span} matches both accepting and rejecting patterns: "
                f"{text[span[0]:span[1]]!r}"
            )

    labels = [label for _, label in hits]
    earliest = containing(hits[0][0])[0]
    return text[:earliest].rstrip(), labels


def resolve_label(petition_labels: list[Decision]) -> Decision:
    """Document label for a multi-petition case: accepted if any petition was."""
    if not petition_labels:
        raise NoPetitions("cannot resolve a label from zero petitions")
    return Decision.ACCEPTED if Decision.ACCEPTED in petition_labels else Decision.REJECTED


# ---------------------------------------------------------------------------
# Anonymization
# ---------------------------------------------------------------------------

NAME_PLACEHOLDER = "<NAME>"


def anonymize(
    text: str,
    name_lexicon: list[str],
    placeholder: str = NAME_PLACEHOLDER,
) -> tuple[str, int]:
    """Replace whole-word, case-insensitive lexicon matches with a placeholder
    token. Returns the rewritten text and the replacement count. Matches
    already wrapped in placeholder brackets are left alone, which keeps the
    operation idempotent."""
    entries = [e for e in name_lexicon if e]
    if not entries:
        return text, 0
    entries.sort(key=len, reverse=True)  # longest-first so multiword names win
    alt = "|".join(re.escape(e) for e in entries)
    pattern = re.compile(r"(?<![<\w])\b(?:" + alt + r")\b(?![\w>])", re.IGNORECASE)
    return pattern.subn(placeholder, text)


# ---------------------------------------------------------------------------
# Preprocessing pipeline: clean -> extract -> anonymize
# ---------------------------------------------------------------------------

@dataclass
class ExtractionReport:
    total: int = 0
    labeled: int = 0
    unlabeled: int = 0
    multi_petition: int = 0
    conflicting: int = 0
    empty_after_extraction: int = 0
    replacements: int = 0

    def lines(self) -> list[str]:
        return [
            f"documents      {self.total}",
            f"labeled        {self.labeled}",
            f"unlabeled      {self.unlabeled}",
            f"multi_petition {self.multi_petition}",
            f"conflicting    {self.conflicting}",
            f"empty_text     {self.empty_after_extraction}",
            f"anonymized     {self.replacements}",
        ]


def preprocess_case(
    raw: RawCase,
    cleaning_rules: tuple[CleaningRule, ...] = DEFAULT_CLEANING_RULES,
    patterns: tuple[DecisionPattern, ...] = DEFAULT_DECISION_PATTERNS,
    name_lexicon: list[str] | None = None,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
    tail_floor: int = DEFAULT_TAIL_FLOOR,
    report: ExtractionReport | None = None,
) -> Document:
    """Full ingestion of one raw case. Conflicting decision sentences leave
    the document unlabeled rather than aborting the corpus run."""
    if report is None:
        report = ExtractionReport()
    report.total += 1
    text = clean_document(raw, cleaning_rules)
    try:
        text, petition_labels = extract_decision(
            text, patterns, tail_fraction=tail_fraction, tail_floor=tail_floor
        )
    except ConflictingSameSentence:
        report.conflicting += 1
        petition_labels = []
    anonymized = False
    if name_lexicon:
        text, n = anonymize(text, name_lexicon)
        report.replacements += n
        anonymized = True
    if petition_labels:
        label = resolve_label(petition_labels)
        report.labeled += 1
        if len(petition_labels) > 1:
            report.multi_petition += 1
    else:
        label = None
        report.unlabeled += 1
    if not text.strip():
        report.empty_after_extraction += 1
    return Document(
        id=raw.id,
        text=text,
        label=label,
        petition_labels=list(petition_labels) if petition_labels else None,
        anonymized=anonymized,
    )


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitAssignment:
    assignment: dict[str, Split]
    seed: int
    fractions: tuple[float, float, float]

    def counts(self) -> dict[Split, int]:
        out: dict[Split, int] = {}
        for s in self.assignment.values():
            out[s] = out.get(s, 0) + 1
        return out


def partition(
    docs: list[Document],
    seed: int,
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
) -> SplitAssignment:
    """Deterministic random split with validation and test balanced per class
    to within one document. Unlabeled documents go to the train split (they
    are excluded from training and cannot be scored in evaluation sets).
    Residual class imbalance stays in train."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    labeled = [d for d in docs if d.label is not None]
    unlabeled = [d for d in docs if d.label is None]
    n = len(labeled)
    n_val = round(fractions[1] * n)
    n_test = round(fractions[2] * n)

    by_class: dict[Decision, list[Document]] = {Decision.REJECTED: [], Decision.ACCEPTED: []}
    for d in labeled:
        by_class[d.label].append(d)

    need = 2 * (math.ceil(n_val / 2) + math.ceil(n_test / 2))
    for cls, members in by_class.items():
        if members and len(members) < need:
            raise InsufficientClassSize(
                f"class {cls.name} has {len(members)} documents; "
                f"need >= {need} for fractions {fractions}"
            )
    if n_val + n_test > 0 and (not by_class[Decision.REJECTED] or not by_class[Decision.ACCEPTED]):
        raise InsufficientClassSize("both classes must be present to build balanced splits")

    rng = np.random.default_rng(seed)
    shuffled: dict[Decision, list[Document]] = {}
    for cls in (Decision.REJECTED, Decision.ACCEPTED):
        members = sorted(by_class[cls], key=lambda d: d.id)
        order = rng.permutation(len(members))
        shuffled[cls] = [members[i] for i in order]

    assignment: dict[str, Split] = {}

    def take(count: int, split: Split) -> None:
        # Per-class quota; when the total is odd the class with more
        # remaining documents absorbs the extra (ties favor REJECTED).
        base, rem = divmod(count, 2)
        quota = {Decision.REJECTED: base, Decision.ACCEPTED: base}
        if rem:
            bigger = max(
                (Decision.REJECTED, Decision.ACCEPTED),
                key=lambda c: (len(shuffled[c]), c == Decision.REJECTED),
            )
            quota[bigger] += 1
        for cls, k in quota.items():
            for d in shuffled[cls][:k]:
                assignment[d.id] = split
            shuffled[cls] = shuffled[cls][k:]

    take(n_val, Split.VALIDATION)
    take(n_test, Split.TEST)
    for cls in (Decision.REJECTED, Decision.ACCEPTED):
        for d in shuffled[cls]:
            assignment[d.id] = Split.TRAIN
    for d in unlabeled:
        assignment[d.id] = Split.TRAIN

    for d in docs:
        d.split = assignment[d.id]
    return SplitAssignment(assignment=assignment, seed=seed, fractions=tuple(fractions))
