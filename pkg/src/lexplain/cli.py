"""Command-line surface.

Subcommands: preprocess, split, train, predict, explain, evaluate,
agreement, scores-report. Exit codes: 0 success, 1 usage error, 2 data
error, 3 model/checkpoint error.

Settings come from defaults, then an optional --config file (flat
"key = value" lines with dotted section prefixes, '#' comments), then flags.
Recognized keys:

    seed                  chunk.size        chunk.overlap
    train.epochs          train.learning_rate  train.batch_size
    train.hidden          train.attention   train.momentum  train.clip_norm
    occlusion.top_fraction  occlusion.mask_mode
    embedder              bridge.endpoint

Every output file records the seed (meta record for JSONL, '# seed=' comment
for reports/CSV, header field for checkpoints); given the same inputs,
config and seed, outputs are byte-identical.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bridge_client import BridgeEmbedder
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import (
    DEFAULT_CLEANING_RULES,
    DEFAULT_DECISION_PATTERNS,
    DEFAULT_TAIL_FLOOR,
    DEFAULT_TAIL_FRACTION,
    Decision,
    Document,
    ExtractionReport,
    Split,
    partition,
    preprocess_case,
)
from .embedder import HashingEmbedder
from .errors import (
    CheckpointError,
    DataError,
    LexplainError,
    ModelError,
    UsageError,
)
from .metrics import (
    OVERLAP_METRIC_NAMES,
    agreement_matrix,
    annotator_accuracy,
    classification_report,
    explanation_report,
    text_overlap_report,
)
from .model import SequenceHead, TrainConfig, embed_document, predict, train, train_chunk_head
from .occlusion import (
    Explanation,
    OcclusionConfig,
    SentenceScore,
    averaged_chunk_report,
    explain,
    explanation_to_record,
)
from .records import (
    read_annotations,
    read_cleaning_rules,
    read_decision_patterns,
    read_documents,
    read_gold_explanations,
    read_jsonl,
    read_name_lexicon,
    read_raw_cases,
    write_documents,
    write_jsonl,
)
from .segmenter import ChunkConfig


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Config resolution
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    seed: int = 0
    chunk: ChunkConfig = ChunkConfig()
    train: TrainConfig = TrainConfig()
    occlusion: OcclusionConfig = OcclusionConfig()
    embedder: str = "builtin"
    bridge_endpoint: str | None = None
    dim: int = 256


def _parse_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise UsageError(f"{path} line {line_no}: expected 'key = value'")
            key, value = stripped.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _as_bool(value: str) -> bool:
    if value.lower() in ("1", "true", "yes", "on"):
        return True
    if value.lower() in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {value!r}")


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    values: dict[str, str] = {}
    if getattr(args, "config", None):
        values = _parse_config_file(args.config)

    def pick(key: str, flag_value, cast):
        if flag_value is not None:
            return flag_value
        if key in values:
            try:
                return cast(values[key])
            except (ValueError, TypeError) as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
        return None

    seed = pick("seed", getattr(args, "seed", None), int)
    if seed is not None:
        cfg.seed = seed
    chunk_size = pick("chunk.size", getattr(args, "chunk_size", None), int)
    overlap = pick("chunk.overlap", getattr(args, "overlap", None), int)
    try:
        cfg.chunk = ChunkConfig(
            chunk_size=chunk_size if chunk_size is not None else cfg.chunk.chunk_size,
            overlap=overlap if overlap is not None else cfg.chunk.overlap,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    train_kwargs = {}
    for key, cast, name in (
        ("train.epochs", int, "epochs"),
        ("train.learning_rate", float, "learning_rate"),
        ("train.batch_size", int, "batch_size"),
        ("train.hidden", int, "hidden"),
        ("train.momentum", float, "momentum"),
        ("train.clip_norm", float, "clip_norm"),
    ):
        value = pick(key, getattr(args, name, None), cast)
        if value is not None:
            train_kwargs[name] = value
    attention = pick("train.attention", getattr(args, "attention", None), _as_bool)
    if attention is not None:
        train_kwargs["use_attention"] = attention
    try:
        cfg.train = replace(TrainConfig(seed=cfg.seed), **train_kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    top_fraction = pick("occlusion.top_fraction", getattr(args, "top_fraction", None), float)
    mask_mode = pick("occlusion.mask_mode", getattr(args, "mask_mode", None), str)
    try:
        cfg.occlusion = OcclusionConfig(
            top_fraction=top_fraction if top_fraction is not None else 0.4,
            mask_mode=mask_mode if mask_mode is not None else "zero",
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    embedder = pick("embedder", getattr(args, "embedder", None), str)
    if embedder is not None:
        if embedder not in ("builtin", "bridge"):
            raise UsageError(f"--embedder must be 'builtin' or 'bridge', got {embedder!r}")
        cfg.embedder = embedder
    endpoint = pick("bridge.endpoint", getattr(args, "bridge_endpoint", None), str)
    if endpoint is not None:
        cfg.bridge_endpoint = endpoint
    dim = pick("embedder.dim", getattr(args, "dim", None), int)
    if dim is not None:
        cfg.dim = dim
    return cfg


def _make_embedder(cfg: RunConfig):
    if cfg.embedder == "bridge":
        if not cfg.bridge_endpoint:
            raise UsageError("--embedder bridge requires --bridge-endpoint")
        return BridgeEmbedder(cfg.bridge_endpoint)
    return HashingEmbedder(dim=cfg.dim, seed=cfg.seed)


def _select_docs(docs: list[Document], split: str | None) -> list[Document]:
    if split is None:
        return docs
    try:
        wanted = Split(split)
    except ValueError as exc:
        raise UsageError(f"unknown split {split!r}") from exc
    return [d for d in docs if d.split == wanted]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_preprocess(args) -> int:
    cfg = resolve_config(args)
    rules = read_cleaning_rules(args.cleaning_rules) if args.cleaning_rules else DEFAULT_CLEANING_RULES
    patterns = (
        read_decision_patterns(args.decision_patterns)
        if args.decision_patterns
        else DEFAULT_DECISION_PATTERNS
    )
    lexicon = read_name_lexicon(args.name_lexicon) if args.name_lexicon else None
    raw_cases = read_raw_cases(args.raw)
    report = ExtractionReport()
    docs = [
        preprocess_case(
            raw,
            cleaning_rules=rules,
            patterns=patterns,
            name_lexicon=lexicon,
            tail_fraction=args.tail_fraction,
            tail_floor=args.tail_floor,
            report=report,
        )
        for raw in raw_cases
    ]
    write_documents(args.out, docs, meta={"seed": cfg.seed, "command": "preprocess"})
    for line in report.lines():
        print(line)
    return 0


def cmd_split(args) -> int:
    cfg = resolve_config(args)
    try:
        fractions = tuple(float(x) for x in args.fractions.split(","))
    except ValueError as exc:
        raise UsageError(f"--fractions must be three comma-separated numbers: {exc}") from exc
    if len(fractions) != 3:
        raise UsageError("--fractions must have exactly three values")
    docs = read_documents(args.docs)
    try:
        assignment = partition(docs, seed=cfg.seed, fractions=fractions)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_documents(
        args.out,
        docs,
        meta={"seed": cfg.seed, "command": "split", "fractions": list(fractions)},
    )
    print("split\tdocs\taccepted_pct")
    for split in (Split.TRAIN, Split.VALIDATION, Split.TEST):
        members = [d for d in docs if d.split == split]
        labeled = [d for d in members if d.label is not None]
        pct = (
            100.0 * sum(1 for d in labeled if d.label == Decision.ACCEPTED) / len(labeled)
            if labeled
            else float("nan")
        )
        print(f"{split.value}\t{len(members)}\t{pct:.2f}")
    return 0


def _train_docs(docs: list[Document], split: str | None) -> list[Document]:
    if split is not None:
        selected = _select_docs(docs, split)
    elif any(d.split is not None for d in docs):
        selected = [d for d in docs if d.split == Split.TRAIN]
    else:
        selected = docs
    return [d for d in selected if d.label is not None and d.text.strip()]


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    docs = read_documents(args.docs)
    train_set = _train_docs(docs, args.split)
    if not train_set:
        raise DataError("no labeled training documents after split selection")
    e = _make_embedder(cfg)
    embedded = [embed_document(d, cfg.chunk, e) for d in train_set]
    head, history = train(train_set, e, cfg.train, chunk_cfg=cfg.chunk, embedded=embedded)
    if isinstance(e, HashingEmbedder):
        train_chunk_head(train_set, e, cfg.train, chunk_cfg=cfg.chunk, embedded=embedded)
    save_checkpoint(args.out, head, e, cfg.chunk, cfg.seed)
    print(f"trained on {len(train_set)} documents")
    for epoch, loss in enumerate(history):
        print(f"epoch\t{epoch}\tloss\t{loss:.6f}")
    print(f"checkpoint\t{args.out}")
    return 0


def _load_model(args, cfg: RunConfig):
    ckpt = load_checkpoint(args.model)
    if cfg.embedder == "bridge" or (ckpt.embedder_kind == "bridge" and cfg.bridge_endpoint):
        if not cfg.bridge_endpoint:
            raise CheckpointError(
                "checkpoint was trained with a bridge embedder; pass --bridge-endpoint"
            )
        e = BridgeEmbedder(cfg.bridge_endpoint)
        if e.dim != ckpt.head.input_dim:
            raise CheckpointError(
                f"bridge dim {e.dim} does not match checkpoint input_dim {ckpt.head.input_dim}"
            )
    elif ckpt.embedder_kind == "bridge":
        raise CheckpointError(
            "checkpoint was trained with a bridge embedder; pass --bridge-endpoint"
        )
    else:
        e = ckpt.embedder
    return ckpt, e


def cmd_predict(args) -> int:
    cfg = resolve_config(args)
    ckpt, e = _load_model(args, cfg)
    docs = _select_docs(read_documents(args.docs), args.split)
    docs = [d for d in docs if d.text.strip()]
    if not docs:
        raise DataError("no documents to predict on")
    records = []
    gold = []
    pred = []
    for d in docs:
        label, prob = predict(d, e, ckpt.head, chunk_cfg=ckpt.chunk_cfg)
        records.append({"id": d.id, "label": int(label), "prob": prob})
        if d.label is not None:
            gold.append(int(d.label))
            pred.append(int(label))
    write_jsonl(args.out, records, meta={"seed": ckpt.seed, "command": "predict"})
    print(f"predicted {len(records)} documents")
    if gold:
        report = classification_report(gold, pred)
        print(f"accuracy\t{100.0 * report.accuracy:.2f}")
    return 0


def cmd_explain(args) -> int:
    cfg = resolve_config(args)
    ckpt, e = _load_model(args, cfg)
    docs = _select_docs(read_documents(args.docs), args.split)
    docs = [d for d in docs if d.text.strip()]
    if not docs:
        raise DataError("no documents to explain")
    records = []
    for d in docs:
        expl = explain(d, e, ckpt.head, cfg=cfg.occlusion, chunk_cfg=ckpt.chunk_cfg)
        records.append(explanation_to_record(expl))
    write_jsonl(args.out, records, meta={"seed": ckpt.seed, "command": "explain"})
    print(f"explained {len(records)} documents")
    return 0


def _write_report(path: str | None, lines: list[str], seed: int) -> None:
    body = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# seed={seed}\n")
            fh.write(body)
    sys.stdout.write(body)


def cmd_evaluate(args) -> int:
    cfg = resolve_config(args)
    if not args.pred and not args.machine_expl:
        raise UsageError("evaluate needs --pred (labels) and/or --machine-expl (explanations)")
    lines: list[str] = []

    if args.pred:
        if not args.gold:
            raise UsageError("--pred requires --gold with labeled documents")
        gold_docs = {d.id: d for d in read_documents(args.gold)}
        gold = []
        pred = []
        for _, rec in read_jsonl(args.pred):
            doc = gold_docs.get(str(rec.get("id")))
            if doc is None or doc.label is None:
                continue
            gold.append(int(doc.label))
            pred.append(int(rec["label"]))
        if not gold:
            raise DataError("no overlapping labeled documents between --pred and --gold")
        report = classification_report(gold, pred)
        lines.append("metric\tvalue")
        for name, value in report.as_percent_rows():
            lines.append(f"{name}\t{value:.2f}")
        for cls, name in ((0, "rejected"), (1, "accepted")):
            stats = report.per_class[cls]
            lines.append(f"precision_{name}\t{100.0 * stats['precision']:.2f}")
            lines.append(f"recall_{name}\t{100.0 * stats['recall']:.2f}")
            lines.append(f"f1_{name}\t{100.0 * stats['f1']:.2f}")
        c = report.confusion
        lines.append(f"confusion_tn_fp_fn_tp\t{c['tn']},{c['fp']},{c['fn']},{c['tp']}")

    if args.machine_expl:
        if not args.gold_expl:
            raise UsageError("--machine-expl requires --gold-expl")
        machine = _read_machine_explanations(args.machine_expl)
        golds = read_gold_explanations(args.gold_expl)
        annotators = sorted({g.annotator_id for g in golds})
        if not annotators:
            raise DataError("no gold explanations found")
        per_annotator: dict[str, list] = {a: [] for a in annotators}
        for g in golds:
            m = machine.get(g.doc_id)
            if m is not None:
                per_annotator[g.annotator_id].append(explanation_report(m, g))
        if lines:
            lines.append("")
        lines.append("metric\t" + "\t".join(annotators))
        for name in OVERLAP_METRIC_NAMES:
            row = [name]
            for a in annotators:
                reports = per_annotator[a]
                if reports:
                    row.append(f"{np.mean([getattr(r, name) for r in reports]):.4f}")
                else:
                    row.append("nan")
            lines.append("\t".join(row))

    _write_report(args.out, lines, cfg.seed)
    return 0


def _read_machine_explanations(path: str) -> dict[str, Explanation]:
    out: dict[str, Explanation] = {}
    for _, rec in read_jsonl(path):
        sentences = tuple(
            SentenceScore(
                text=s["text"],
                char_span=(int(s["char_span"][0]), int(s["char_span"][1])),
                raw_delta=float(s["score"]),  # score reconstructed with length 1
                length=1,
                whole_chunk=bool(s.get("whole_chunk", False)),
            )
            for s in rec.get("sentences", [])
        )
        out[str(rec["doc_id"])] = Explanation(
            doc_id=str(rec["doc_id"]),
            label=Decision(int(rec["label"])),
            prob=float(rec["prob"]),
            selected=sentences,
            chunk_scores=(),
            top_fraction=float(rec.get("top_fraction", 0.4)),
            warnings=tuple(rec.get("warnings", ())),
        )
    return out


def cmd_agreement(args) -> int:
    cfg = resolve_config(args)
    lines: list[str] = []
    labels = read_annotations(args.annotations)
    matrix = agreement_matrix(labels)
    lines.append("agreement\t" + "\t".join(matrix.annotators))
    for i, a in enumerate(matrix.annotators):
        row = [a]
        for j in range(len(matrix.annotators)):
            value = matrix.matrix[i, j]
            row.append("nan" if np.isnan(value) else f"{value:.1f}")
        lines.append("\t".join(row))
    kappa = "nan" if np.isnan(matrix.fleiss) else f"{matrix.fleiss:.3f}"
    lines.append(f"fleiss_kappa\t{kappa}")

    if args.gold:
        gold_docs = read_documents(args.gold)
        gold = {d.id: int(d.label) for d in gold_docs if d.label is not None}
        accuracy = annotator_accuracy(labels, gold)
        lines.append("")
        lines.append("annotator\taccuracy")
        for a in sorted(accuracy):
            value = accuracy[a]
            lines.append(f"{a}\t" + ("nan" if np.isnan(value) else f"{value:.2f}"))

    if args.explanations:
        golds = read_gold_explanations(args.explanations)
        by_annotator: dict[str, dict[str, str]] = {}
        from .metrics import gold_explanation_text

        for g in golds:
            by_annotator.setdefault(g.annotator_id, {})[g.doc_id] = gold_explanation_text(g)
        annotators = sorted(by_annotator)
        for name in OVERLAP_METRIC_NAMES:
            lines.append("")
            lines.append(f"explanation_{name}\t" + "\t".join(annotators))
            for a in annotators:
                row = [a]
                for b in annotators:
                    shared = sorted(set(by_annotator[a]) & set(by_annotator[b]))
                    if not shared:
                        row.append("nan")
                        continue
                    values = [
                        getattr(
                            text_overlap_report(by_annotator[a][doc], by_annotator[b][doc]), name
                        )
                        for doc in shared
                    ]
                    row.append(f"{float(np.mean(values)):.4f}")
                lines.append("\t".join(row))

    _write_report(args.out, lines, cfg.seed)
    return 0


def cmd_scores_report(args) -> int:
    cfg = resolve_config(args)
    ckpt, e = _load_model(args, cfg)
    docs = _select_docs(read_documents(args.docs), args.split)
    docs = [d for d in docs if d.text.strip()]
    if not docs:
        raise DataError("no documents for the scores report")
    rows = averaged_chunk_report(docs, e, ckpt.head, chunk_cfg=ckpt.chunk_cfg)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# seed={ckpt.seed}\n")
        fh.write("chunks,position,mean_occlusion,mean_attention\n")
        for row in rows:
            fh.write(
                f"{row.chunk_count},{row.position},{row.mean_occlusion!r},{row.mean_attention!r}\n"
            )
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, *, model: bool = False) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--chunk-size", type=int, default=None)
    p.add_argument("--overlap", type=int, default=None)
    p.add_argument("--top-fraction", type=float, default=None)
    p.add_argument("--embedder", choices=("builtin", "bridge"), default=None)
    p.add_argument("--bridge-endpoint", default=None)
    p.add_argument("--dim", type=int, default=None, help="builtin embedder dimensionality")
    if model:
        p.add_argument("--model", required=True, help="checkpoint path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lexplain", description=__doc__)
    parser.add_argument("--version", action="version", version=f"lexplain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("preprocess", help="clean raw cases, extract labels, anonymize")
    p.add_argument("--raw", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cleaning-rules")
    p.add_argument("--decision-patterns")
    p.add_argument("--name-lexicon")
    p.add_argument("--tail-fraction", type=float, default=DEFAULT_TAIL_FRACTION)
    p.add_argument("--tail-floor", type=int, default=DEFAULT_TAIL_FLOOR)
    _add_common(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("split", help="assign balanced random splits")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fractions", default="0.8,0.1,0.1")
    _add_common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the hierarchical head")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--split", default=None, help="train on this split only")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--hidden", type=int, default=None)
    p.add_argument("--momentum", type=float, default=None)
    p.add_argument("--clip-norm", dest="clip_norm", type=float, default=None)
    p.add_argument("--attention", dest="attention", action="store_const", const="true", default=None)
    p.add_argument("--no-attention", dest="attention", action="store_const", const="false")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict decisions with a checkpoint")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default=None)
    _add_common(p, model=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="two-level occlusion explanations")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--mask-mode", choices=("zero", "drop"), default=None)
    _add_common(p, model=True)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", help="score predictions and/or explanations")
    p.add_argument("--pred", help="prediction records")
    p.add_argument("--gold", help="labeled documents file")
    p.add_argument("--machine-expl", dest="machine_expl", help="explanation records")
    p.add_argument("--gold-expl", dest="gold_expl", help="gold explanation records")
    p.add_argument("--out", default=None, help="also write the report here")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("agreement", help="inter-annotator agreement tables")
    p.add_argument("--annotations", required=True, help="judgment annotation records")
    p.add_argument("--gold", default=None, help="labeled documents for annotator accuracy")
    p.add_argument("--explanations", default=None, help="gold explanations for overlap matrices")
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("scores-report", help="per-position occlusion/attention CSV")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default=None)
    _add_common(p, model=True)
    p.set_defaults(func=cmd_scores_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
