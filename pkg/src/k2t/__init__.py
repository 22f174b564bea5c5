"""Keyword-guided text generation with hard lexical constraints."""

from .decoding import DecodeConfig, GenerationResult, decode, nucleus_filter
from .guidance import GuidanceState, GuideWord, build_guide_words, current_lambda
from .lm_backend import NGramModel, RemoteProvider, Vocabulary, train_ngram
from .semantic_space import EmbeddingTable, cosine_similarity, load_embeddings

__version__ = "0.1.0"

__all__ = [
    "DecodeConfig",
    "EmbeddingTable",
    "GenerationResult",
    "GuidanceState",
    "GuideWord",
    "NGramModel",
    "RemoteProvider",
    "Vocabulary",
    "build_guide_words",
    "cosine_similarity",
    "current_lambda",
    "decode",
    "load_embeddings",
    "nucleus_filter",
    "train_ngram",
    "__version__",
]
