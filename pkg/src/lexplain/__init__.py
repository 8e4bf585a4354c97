"""Judgment prediction and occlusion explanations for long court documents."""

__version__ = "0.1.0"

from .corpus import Decision, Document, GoldExplanation, RawCase, Split
from .kernels import BACKEND as KERNEL_BACKEND
from .segmenter import Chunk, ChunkConfig, Sentence, Token

__all__ = [
    "Decision",
    "Document",
    "GoldExplanation",
    "RawCase",
    "Split",
    "Chunk",
    "ChunkConfig",
    "Sentence",
    "Token",
    "KERNEL_BACKEND",
    "__version__",
]
