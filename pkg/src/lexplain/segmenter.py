"""Deterministic tokenization, sentence splitting, tail selection and chunking.

Every downstream stage (embedding, occlusion, metrics) works on the token
stream produced here, so the rules are intentionally simple and fixed:
whitespace-separated words with leading/trailing punctuation peeled off into
their own tokens, and a rule-based sentence splitter with a configurable
abbreviation list.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field

_PUNCT = set(string.punctuation)

# Abbreviations that keep a following "." from ending a sentence.
DEFAULT_ABBREVIATIONS = ("No.", "vs.", "v.", "Sec.", "Art.", "Hon.", "Rs.")


@dataclass(frozen=True)
class Token:
    text: str
    char_span: tuple[int, int]


@dataclass(frozen=True)
class Sentence:
    char_span: tuple[int, int]
    token_span: tuple[int, int]  # [first, last) token indices


@dataclass(frozen=True)
class Chunk:
    index: int
    token_span: tuple[int, int]
    char_span: tuple[int, int]
    text: str


@dataclass(frozen=True)
class ChunkConfig:
    chunk_size: int = 512
    overlap: int = 100
    tail_tokens: int = 512
    tail_sentences: int = 150

    def __post_init__(self):
        if not 0 <= self.overlap < self.chunk_size:
            raise ValueError(
                f"overlap must satisfy 0 <= overlap < chunk_size, "
                f"got overlap={self.overlap}, chunk_size={self.chunk_size}"
            )
        if self.tail_tokens < 1:
            raise ValueError("tail_tokens must be >= 1")

    @property
    def stride(self) -> int:
        return self.chunk_size - self.overlap


def tokenize(text: str) -> list[Token]:
    """Split on whitespace, then peel leading/trailing punctuation into
    separate tokens. Character offsets are exact slices of `text`."""
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        _split_word(text, i, j, tokens)
        i = j
    return tokens


def _split_word(text: str, start: int, end: int, out: list[Token]) -> None:
    # Peel punctuation one character at a time from both ends; a run of
    # punctuation-only characters yields one token per character.
    lo, hi = start, end
    lead: list[int] = []
    trail: list[int] = []
    while lo < hi and text[lo] in _PUNCT:
        lead.append(lo)
        lo += 1
    while hi > lo and text[hi - 1] in _PUNCT:
        trail.append(hi - 1)
        hi -= 1
    for p in lead:
        out.append(Token(text[p], (p, p + 1)))
    if lo < hi:
        out.append(Token(text[lo:hi], (lo, hi)))
    for p in reversed(trail):
        out.append(Token(text[p], (p, p + 1)))


_TERMINALS = {".", "?", "!"}


def split_sentences(
    text: str,
    tokens: list[Token],
    abbreviations: tuple[str, ...] = DEFAULT_ABBREVIATIONS,
) -> list[Sentence]:
    """Sentence boundaries fall after a terminal punctuation token that is
    followed by whitespace and then a capital letter or digit, unless the
    preceding token plus the period forms a known abbreviation. Sentences
    tile the token stream."""
    if not tokens:
        return []
    abbrev = {a.lower() for a in abbreviations}
    boundaries: list[int] = []  # index of the last token of each sentence
    for k, tok in enumerate(tokens):
        if tok.text not in _TERMINALS:
            continue
        if k + 1 >= len(tokens):
            continue
        nxt = tokens[k + 1]
        if nxt.char_span[0] <= tok.char_span[1]:
            continue  # no whitespace gap after the terminal
        gap = text[tok.char_span[1]:nxt.char_span[0]]
        if not gap.isspace():
            continue
        first = nxt.text[0]
        if not (first.isupper() or first.isdigit()):
            continue
        if tok.text == "." and k > 0:
            prev = tokens[k - 1]
            if (prev.text + ".").lower() in abbrev:
                continue
        boundaries.append(k)

    sentences: list[Sentence] = []
    start = 0
    for b in boundaries:
        sentences.append(_make_sentence(tokens, start, b + 1))
        start = b + 1
    if start < len(tokens):
        sentences.append(_make_sentence(tokens, start, len(tokens)))
    return sentences


def _make_sentence(tokens: list[Token], first: int, last: int) -> Sentence:
    return Sentence(
        char_span=(tokens[first].char_span[0], tokens[last - 1].char_span[1]),
        token_span=(first, last),
    )


def tail(tokens: list[Token], n: int) -> list[Token]:
    """Last min(n, len) tokens, order preserved."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return tokens[-n:] if len(tokens) > n else list(tokens)


def chunk(tokens: list[Token], cfg: ChunkConfig, text: str | None = None) -> list[Chunk]:
    """Sliding windows of cfg.chunk_size tokens with cfg.overlap shared
    between consecutive windows. A final partial window is kept only when it
    is longer than the overlap (otherwise it lies entirely inside the
    previous window). Token coverage is total."""
    n = len(tokens)
    chunks: list[Chunk] = []
    stride = cfg.stride
    start = 0
    while start < n:
        end = min(start + cfg.chunk_size, n)
        length = end - start
        if start > 0 and length <= cfg.overlap:
            break  # contained in the previous chunk
        char_span = (tokens[start].char_span[0], tokens[end - 1].char_span[1])
        chunk_text = text[char_span[0]:char_span[1]] if text is not None else ""
        chunks.append(
            Chunk(
                index=len(chunks),
                token_span=(start, end),
                char_span=char_span,
                text=chunk_text,
            )
        )
        if end == n:
            break
        start += stride
    return chunks
