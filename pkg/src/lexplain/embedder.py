"""Chunk embedders.

An embedder turns chunk text into a fixed-length vector (embed_chunk) and
into a pair of class logits (logits_chunk) once its chunk classification
head has been trained. The built-in HashingEmbedder is a vocabulary-free
hashed bag of words:

    index(token) = blake2b(lowercased token, digest_size=8, key=seed) mod dim
    vector = token counts scattered into `dim` buckets, L2-normalized
             (empty text gives the zero vector; norm uses sqrt(v . v))

The recipe is part of the external interface: a bridge server that returns
the same vectors for the same chunk text is a drop-in replacement.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import SingleClass, TrainingDiverged
from .segmenter import tokenize

DEFAULT_DIM = 256


class Embedder(Protocol):
    dim: int

    def embed_chunk(self, text: str) -> np.ndarray: ...

    def logits_chunk(self, text: str) -> np.ndarray: ...


def hash_index(token: str, seed: int, dim: int) -> int:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "little")
    ).digest()
    return int.from_bytes(digest, "little") % dim


class HashingEmbedder:
    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self.W_c = np.zeros((2, dim))
        self.b_c = np.zeros(2)
        self._index_cache: dict[str, int] = {}

    def _index(self, token: str) -> int:
        idx = self._index_cache.get(token)
        if idx is None:
            idx = hash_index(token, self.seed, self.dim)
            self._index_cache[token] = idx
        return idx

    def embed_chunk(self, text: str) -> np.ndarray:
        v = np.zeros(self.dim)
        for tok in tokenize(text):
            v[self._index(tok.text.lower())] += 1.0
        norm = np.sqrt(v @ v)
        if norm > 0.0:
            v /= norm
        return v

    def logits_chunk(self, text: str) -> np.ndarray:
        return self.W_c @ self.embed_chunk(text) + self.b_c


# ---------------------------------------------------------------------------
# Two-logit logistic training (shared by the chunk head and the document
# baseline). Full-batch gradient descent with momentum; deterministic.
# ---------------------------------------------------------------------------

@dataclass
class LogisticModel:
    W: np.ndarray  # (2, d)
    b: np.ndarray  # (2,)

    def logits(self, X: np.ndarray) -> np.ndarray:
        return X @ self.W.T + self.b

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(X), axis=1)


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    epochs: int = 200,
    learning_rate: float = 1.0,
    momentum: float = 0.9,
    l2: float = 1e-4,
) -> LogisticModel:
    """Softmax regression over two classes. Raises SingleClass when only one
    label is present and TrainingDiverged on non-finite loss."""
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise SingleClass("training data contains a single class")
    n, d = X.shape
    W = np.zeros((2, d))
    b = np.zeros(2)
    vW = np.zeros_like(W)
    vb = np.zeros_like(b)
    onehot = np.eye(2)[y]
    for _ in range(epochs):
        logits = X @ W.T + b
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        p = e / e.sum(axis=1, keepdims=True)
        if not np.all(np.isfinite(p)):
            raise TrainingDiverged("non-finite probabilities during logistic fit")
        g = (p - onehot) / n  # (n, 2)
        gW = g.T @ X + l2 * W
        gb = g.sum(axis=0)
        vW = momentum * vW - learning_rate * gW
        vb = momentum * vb - learning_rate * gb
        W = W + vW
        b = b + vb
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
        raise TrainingDiverged("non-finite parameters after logistic fit")
    return LogisticModel(W=W, b=b)
