"""Two-level occlusion explanations.

Level 1 masks whole chunk embeddings against the sequence head: with the
predicted label y, the label probability is p = sigma for y = 1 and
p = 1 - sigma for y = 0, and the chunk score is the drop

    s_c = p_unmasked - p_masked.

Level 2 looks inside every positively scored chunk: each sentence is removed
from the chunk text, the chunk classifier's logit for the predicted label is
recomputed, and the logit drop divided by the sentence's token count is the
sentence score. The top `top_fraction` of sentences per positive chunk (at
least one, ties to the earlier position) form the explanation; sentences
shared by overlapping chunks are merged keeping the maximum score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import Decision, Document
from .embedder import Embedder
from .model import MASK_ZERO, SequenceHead, embed_document
from .segmenter import Chunk, ChunkConfig, chunk, split_sentences, tokenize

WARN_NO_POSITIVE_CHUNKS = "no-positive-chunks"
WARN_WHOLE_CHUNK_SENTENCE = "whole-chunk-sentence"


@dataclass(frozen=True)
class MaskedEvaluation:
    sigma_m: float
    sigma_m_prime: float
    y: int


@dataclass(frozen=True)
class ChunkScore:
    chunk_index: int
    p_m: float
    p_m_prime: float

    @property
    def s_c(self) -> float:
        return self.p_m - self.p_m_prime


@dataclass(frozen=True)
class SentenceScore:
    text: str
    char_span: tuple[int, int]  # document offsets
    raw_delta: float
    length: int
    whole_chunk: bool = False

    @property
    def score(self) -> float:
        return self.raw_delta / self.length


@dataclass(frozen=True)
class Explanation:
    doc_id: str
    label: Decision
    prob: float
    selected: tuple[SentenceScore, ...]
    chunk_scores: tuple[ChunkScore, ...]
    top_fraction: float
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class OcclusionConfig:
    top_fraction: float = 0.4
    mask_mode: str = MASK_ZERO

    def __post_init__(self):
        if not 0.0 < self.top_fraction <= 1.0:
            raise ValueError(f"top_fraction must be in (0, 1], got {self.top_fraction}")


def label_probability(sigma: float, y: int) -> float:
    return sigma if y == 1 else 1.0 - sigma


def score_chunks(
    doc: Document,
    e: Embedder,
    head: SequenceHead,
    chunk_cfg: ChunkConfig | None = None,
    mask_mode: str = MASK_ZERO,
    H: np.ndarray | None = None,
) -> tuple[list[ChunkScore], Decision, float, np.ndarray | None]:
    """One score per chunk. Returns (scores, predicted label, unmasked
    sigmoid, attention weights). The unmasked pass runs once and is shared by
    every masking."""
    if H is None:
        H = embed_document(doc, chunk_cfg or ChunkConfig(), e)
    sigma_m, attention = head.forward(H)
    y = 1 if sigma_m >= 0.5 else 0
    p_m = label_probability(sigma_m, y)
    scores = []
    for c in range(H.shape[0]):
        sigma_prime, _ = head.forward(H, mask=c, mask_mode=mask_mode)
        scores.append(ChunkScore(chunk_index=c, p_m=p_m, p_m_prime=label_probability(sigma_prime, y)))
    return scores, Decision(y), sigma_m, attention


def score_sentences(
    chunk_obj: Chunk,
    e: Embedder,
    predicted_label: Decision,
) -> tuple[list[SentenceScore], list[str]]:
    """Sentence scores for one chunk against the chunk classification head.
    Masking removes the sentence's text from the chunk before re-embedding.
    A sentence spanning the whole chunk is scored against the empty-input
    logits (bias only) and flagged."""
    text = chunk_obj.text
    tokens = tokenize(text)
    sentences = split_sentences(text, tokens)
    if not sentences:
        return [], []
    y = int(predicted_label)
    base_logit = float(e.logits_chunk(text)[y])
    offset = chunk_obj.char_span[0]
    out = []
    warnings = []
    for s in sentences:
        masked_text = text[: s.char_span[0]] + text[s.char_span[1]:]
        whole = not masked_text.strip()
        if whole and WARN_WHOLE_CHUNK_SENTENCE not in warnings:
            warnings.append(WARN_WHOLE_CHUNK_SENTENCE)
        masked_logit = float(e.logits_chunk(masked_text)[y])
        length = s.token_span[1] - s.token_span[0]
        out.append(
            SentenceScore(
                text=text[s.char_span[0]:s.char_span[1]],
                char_span=(offset + s.char_span[0], offset + s.char_span[1]),
                raw_delta=base_logit - masked_logit,
                length=length,
                whole_chunk=whole,
            )
        )
    return out, warnings


def explain(
    doc: Document,
    e: Embedder,
    head: SequenceHead,
    cfg: OcclusionConfig | None = None,
    chunk_cfg: ChunkConfig | None = None,
) -> Explanation:
    cfg = cfg or OcclusionConfig()
    chunk_cfg = chunk_cfg or ChunkConfig()
    tokens = tokenize(doc.text)
    chunks = chunk(tokens, chunk_cfg, text=doc.text)
    H = embed_document(doc, chunk_cfg, e)
    scores, label, sigma_m, _ = score_chunks(
        doc, e, head, chunk_cfg, mask_mode=cfg.mask_mode, H=H
    )

    warnings: list[str] = []
    picked: dict[tuple[int, int], SentenceScore] = {}
    positive = [cs for cs in scores if cs.s_c > 0.0]
    if not positive:
        warnings.append(WARN_NO_POSITIVE_CHUNKS)
    for cs in positive:
        sentence_scores, chunk_warnings = score_sentences(chunks[cs.chunk_index], e, label)
        for w in chunk_warnings:
            if w not in warnings:
                warnings.append(w)
        if not sentence_scores:
            continue
        k = math.ceil(cfg.top_fraction * len(sentence_scores))
        ranked = sorted(sentence_scores, key=lambda s: (-s.score, s.char_span[0]))
        for s in ranked[:k]:
            prev = picked.get(s.char_span)
            if prev is None or s.score > prev.score:
                picked[s.char_span] = s

    selected = tuple(sorted(picked.values(), key=lambda s: (-s.score, s.char_span[0])))
    return Explanation(
        doc_id=doc.id,
        label=label,
        prob=sigma_m,
        selected=selected,
        chunk_scores=tuple(scores),
        top_fraction=cfg.top_fraction,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Averaged per-position report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChunkPositionRow:
    chunk_count: int
    position: int
    mean_occlusion: float
    mean_attention: float  # nan when the head has no attention


def averaged_chunk_report(
    docs: list[Document],
    e: Embedder,
    head: SequenceHead,
    chunk_cfg: ChunkConfig | None = None,
) -> list[ChunkPositionRow]:
    """Group documents by chunk count; within each group report, for every
    chunk position, the mean occlusion score and mean attention weight."""
    chunk_cfg = chunk_cfg or ChunkConfig()
    groups: dict[int, list[tuple[list[ChunkScore], np.ndarray | None]]] = {}
    for doc in docs:
        if not doc.text.strip():
            continue
        scores, _, _, attention = score_chunks(doc, e, head, chunk_cfg)
        groups.setdefault(len(scores), []).append((scores, attention))

    rows = []
    for count in sorted(groups):
        members = groups[count]
        occ = np.zeros(count)
        att = np.zeros(count)
        have_attention = all(a is not None for _, a in members)
        for scores, attention in members:
            occ += np.array([cs.s_c for cs in scores])
            if have_attention:
                att += attention
        occ /= len(members)
        att = att / len(members) if have_attention else np.full(count, np.nan)
        for pos in range(count):
            rows.append(
                ChunkPositionRow(
                    chunk_count=count,
                    position=pos,
                    mean_occlusion=float(occ[pos]),
                    mean_attention=float(att[pos]),
                )
            )
    return rows


def explanation_to_record(expl: Explanation) -> dict:
    return {
        "doc_id": expl.doc_id,
        "label": int(expl.label),
        "prob": expl.prob,
        "top_fraction": expl.top_fraction,
        "chunk_scores": [
            {"chunk_index": cs.chunk_index, "p_m": cs.p_m, "p_m_prime": cs.p_m_prime, "s_c": cs.s_c}
            for cs in expl.chunk_scores
        ],
        "sentences": [
            {
                "text": s.text,
                "char_span": [s.char_span[0], s.char_span[1]],
                "score": s.score,
                "whole_chunk": s.whole_chunk,
            }
            for s in expl.selected
        ],
        "warnings": list(expl.warnings),
    }
