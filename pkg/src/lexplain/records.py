"""Line-delimited record files and plain-text rule tables.

Every corpus artifact is one JSON object per UTF-8 line. A file may start
with a meta record ({"record": "meta", ...}) carrying the seed and config
used to produce it; readers skip meta records.

Rule tables are plain text, one rule per line, "LABEL<TAB>pattern". Labels
are ACCEPTED/REJECTED for decision patterns and STRIP-PREFIX/STRIP-MATCH for
cleaning rules. Blank lines and lines starting with '#' are ignored.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from .corpus import (
    CleaningRule,
    Decision,
    DecisionPattern,
    Document,
    GoldExplanation,
    GoldSpan,
    RawCase,
    Split,
)
from .errors import MalformedRecord


def write_jsonl(path: str | Path, records: Iterable[dict], meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"record": "meta", **meta}, sort_keys=True) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yields (line_no, record), skipping meta records and blank lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"line {line_no}: invalid JSON ({exc})", line_no) from exc
            if not isinstance(rec, dict):
                raise MalformedRecord(f"line {line_no}: record must be a JSON object", line_no)
            if rec.get("record") == "meta":
                continue
            yield line_no, rec


# --- raw cases ---

def read_raw_cases(path: str | Path) -> list[RawCase]:
    cases = []
    for line_no, rec in read_jsonl(path):
        try:
            cases.append(
                RawCase(
                    id=str(rec["id"]),
                    raw_text=rec.get("raw_text", rec.get("text", "")),
                    source=rec.get("source"),
                )
            )
        except (KeyError, ValueError) as exc:
            raise MalformedRecord(f"line {line_no}: {exc}", line_no) from exc
    return cases


# --- documents ---

def document_to_record(doc: Document) -> dict:
    return {
        "id": doc.id,
        "text": doc.text,
        "label": int(doc.label) if doc.label is not None else None,
        "petition_labels": (
            [int(p) for p in doc.petition_labels] if doc.petition_labels is not None else None
        ),
        "split": doc.split.value if doc.split is not None else None,
        "anonymized": doc.anonymized,
    }


def record_to_document(rec: dict, line_no: int = 0) -> Document:
    try:
        label = rec.get("label")
        petition = rec.get("petition_labels")
        split = rec.get("split")
        return Document(
            id=str(rec["id"]),
            text=rec["text"],
            label=Decision(label) if label is not None else None,
            petition_labels=[Decision(p) for p in petition] if petition is not None else None,
            split=Split(split) if split is not None else None,
            anonymized=bool(rec.get("anonymized", False)),
        )
    except (KeyError, ValueError) as exc:
        raise MalformedRecord(f"line {line_no}: bad document record ({exc})", line_no) from exc


def read_documents(path: str | Path) -> list[Document]:
    return [record_to_document(rec, line_no) for line_no, rec in read_jsonl(path)]


def write_documents(path: str | Path, docs: Iterable[Document], meta: dict | None = None) -> None:
    write_jsonl(path, (document_to_record(d) for d in docs), meta=meta)


# --- gold explanations ---

def record_to_gold(rec: dict, line_no: int = 0) -> GoldExplanation:
    try:
        spans = tuple(
            GoldSpan(
                text=s["text"],
                char_span=(int(s["start"]), int(s["end"])),
                rank=int(s["rank"]),
            )
            for s in rec["spans"]
        )
        return GoldExplanation(
            doc_id=str(rec["doc_id"]),
            annotator_id=str(rec["annotator_id"]),
            spans=spans,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise MalformedRecord(f"line {line_no}: bad gold explanation ({exc})", line_no) from exc


def read_gold_explanations(path: str | Path) -> list[GoldExplanation]:
    return [record_to_gold(rec, line_no) for line_no, rec in read_jsonl(path)]


def gold_to_record(gold: GoldExplanation) -> dict:
    return {
        "doc_id": gold.doc_id,
        "annotator_id": gold.annotator_id,
        "spans": [
            {"text": s.text, "start": s.char_span[0], "end": s.char_span[1], "rank": s.rank}
            for s in gold.spans
        ],
    }


# --- judgment annotations (for agreement) ---

def read_annotations(path: str | Path) -> dict[str, dict[str, int]]:
    """{annotator_id: {doc_id: label}} from records {doc_id, annotator_id, label}."""
    out: dict[str, dict[str, int]] = {}
    for line_no, rec in read_jsonl(path):
        try:
            out.setdefault(str(rec["annotator_id"]), {})[str(rec["doc_id"])] = int(rec["label"])
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedRecord(f"line {line_no}: bad annotation record ({exc})", line_no) from exc
    return out


# --- rule tables ---

def parse_rule_lines(lines: Iterable[str], path: str = "<rules>") -> list[tuple[str, str]]:
    rules = []
    for line_no, line in enumerate(lines, start=1):
        stripped = line.rstrip("\n")
        if not stripped.strip() or stripped.lstrip().startswith("#"):
            continue
        if "\t" not in stripped:
            raise MalformedRecord(
                f"{path} line {line_no}: expected 'LABEL<TAB>pattern'", line_no
            )
        label, pattern = stripped.split("\t", 1)
        rules.append((label.strip(), pattern))
    return rules


def read_cleaning_rules(path: str | Path) -> tuple[CleaningRule, ...]:
    with open(path, "r", encoding="utf-8") as fh:
        parsed = parse_rule_lines(fh, str(path))
    rules = []
    for label, pattern in parsed:
        action = label.lower()
        if action not in ("strip-prefix", "strip-match"):
            raise MalformedRecord(f"{path}: unknown cleaning action {label!r}")
        rules.append(CleaningRule(action, pattern))
    return tuple(rules)


def read_decision_patterns(path: str | Path) -> tuple[DecisionPattern, ...]:
    with open(path, "r", encoding="utf-8") as fh:
        parsed = parse_rule_lines(fh, str(path))
    table = []
    for label, pattern in parsed:
        name = label.strip().upper()
        if name not in ("ACCEPTED", "REJECTED"):
            raise MalformedRecord(f"{path}: unknown decision label {label!r}")
        table.append(DecisionPattern(pattern, Decision[name]))
    return tuple(table)


def read_name_lexicon(path: str | Path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip() and not line.lstrip().startswith("#")]
