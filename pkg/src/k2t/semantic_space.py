"""Word embeddings, cosine similarity, and the clipped semantic shift.

The shift of a token toward a guide word is max(0, cos) of their vectors;
guidance strategies combine per-guide shifts by head / max / sum / pick.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import ContractError, EmbeddingLoadError, UnmappedWordError

logger = logging.getLogger(__name__)

# Word-start markers used by common subword vocabularies (GPT-2 byte BPE
# and sentencepiece). Stripped so a subword token can hit its word entry.
_SUBWORD_MARKERS = ("Ġ", "▁")

STRATEGIES = ("fixed_order", "closest", "all", "random_pick")


def normalize_word(word: str) -> str:
    """Case-fold, strip whitespace and leading subword-space markers."""
    word = word.strip()
    while word and word[0] in _SUBWORD_MARKERS:
        word = word[1:]
    return word.casefold().strip()


@dataclass
class EmbeddingTable:
    """Immutable word -> vector map; shareable across generations."""

    dim: int
    entries: dict[str, np.ndarray]
    norm_cache: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.norm_cache:
            self.norm_cache = {
                w: float(np.linalg.norm(v)) for w, v in self.entries.items()
            }

    def __contains__(self, word: str) -> bool:
        return normalize_word(word) in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def unit_vector(self, word: str) -> np.ndarray:
        """Unit-norm vector for a normalized-key lookup; raises on a miss."""
        key = normalize_word(word)
        vec = self.entries.get(key)
        if vec is None:
            raise UnmappedWordError(f"word not in embedding table: {word!r}")
        return vec / self.norm_cache[key]


def load_embeddings(
    source: TextIO | Iterable[str],
    vocab_filter: set[str] | None = None,
) -> EmbeddingTable:
    """Parse word-per-line embeddings ("word c1 ... cd").

    A leading "count dim" header line (exactly two integer fields) is
    detected and skipped. Duplicate words keep the first occurrence; zero
    vectors are rejected. Both are logged, neither is an error.
    """
    if vocab_filter is not None:
        vocab_filter = {normalize_word(w) for w in vocab_filter}

    entries: dict[str, np.ndarray] = {}
    dim: int | None = None
    parsed_any = False

    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split()
        if lineno == 1 and len(fields) == 2 and _all_ints(fields):
            continue  # header-bearing variant
        word, comps = fields[0], fields[1:]
        if not comps:
            raise EmbeddingLoadError(f"line {lineno}: no vector components")
        try:
            vec = np.array([float(c) for c in comps], dtype=np.float64)
        except ValueError as exc:
            raise EmbeddingLoadError(f"line {lineno}: {exc}") from None
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise EmbeddingLoadError(
                f"line {lineno}: expected {dim} components, got {len(vec)}"
            )
        parsed_any = True
        key = normalize_word(word)
        if vocab_filter is not None and key not in vocab_filter:
            continue
        if key in entries:
            logger.warning("duplicate embedding for %r, keeping first", key)
            continue
        if not np.linalg.norm(vec) > 0.0:
            logger.warning("zero vector for %r rejected", key)
            continue
        entries[key] = vec

    if not parsed_any or dim is None:
        raise EmbeddingLoadError("empty embedding stream")
    return EmbeddingTable(dim=dim, entries=entries)


def save_embeddings(table: EmbeddingTable, path) -> None:
    """Write a table back out in the word-per-line format."""
    with open(path, "w", encoding="utf-8") as fh:
        for word, vec in table.entries.items():
            fh.write(word + " " + " ".join(repr(float(c)) for c in vec) + "\n")


def cosine_similarity(table: EmbeddingTable, a: str, b: str) -> float:
    """cos of the two word vectors, clamped to [-1, 1] against fp drift."""
    ua, ub = table.unit_vector(a), table.unit_vector(b)
    return float(np.clip(np.dot(ua, ub), -1.0, 1.0))


def clipped_shift(table: EmbeddingTable, token_text: str, guide: str) -> float:
    """max(0, cos(token, guide)); an unmapped token contributes exactly 0."""
    if normalize_word(guide) not in table.entries:
        raise UnmappedWordError(f"guide word not in embedding table: {guide!r}")
    try:
        cos = cosine_similarity(table, token_text, guide)
    except UnmappedWordError:
        return 0.0
    return max(0.0, cos)


def exact_shift(token_text: str, guide: str) -> float:
    """Exact-token variant: 1 when the token is the guide word itself."""
    return 1.0 if normalize_word(token_text) == normalize_word(guide) else 0.0


def strategy_shift(
    table: EmbeddingTable,
    token_text: str,
    remaining: Sequence[str],
    strategy: str,
    picked: str | None = None,
    exact_only: bool = False,
) -> float:
    """Combine per-guide clipped shifts for one candidate token.

    fixed_order targets the head word, closest takes the max, all sums
    the per-word clipped terms, random_pick targets the caller-picked word.
    """
    if not remaining:
        raise ContractError("strategy_shift requires a nonempty remaining set")
    if strategy not in STRATEGIES:
        raise ContractError(f"unknown strategy: {strategy!r}")

    def one(guide: str) -> float:
        if exact_only:
            return exact_shift(token_text, guide)
        return clipped_shift(table, token_text, guide)

    if strategy == "fixed_order":
        return one(remaining[0])
    if strategy == "closest":
        return max(one(g) for g in remaining)
    if strategy == "all":
        return sum(one(g) for g in remaining)
    if picked is None or picked not in remaining:
        raise ContractError("random_pick requires picked from the remaining set")
    return one(picked)


class ShiftTable:
    """Vectorized per-token shifts over one vocabulary.

    Similarities are static across steps, so shift vectors are cached per
    (remaining-set signature, strategy) within a generation. One instance
    belongs to one generation; share the EmbeddingTable, not this.
    """

    def __init__(self, table: EmbeddingTable, token_texts: Sequence[str]):
        self.table = table
        self.token_texts = tuple(token_texts)
        keys = [normalize_word(t) for t in self.token_texts]
        matrix = np.zeros((len(keys), table.dim))
        for i, key in enumerate(keys):
            vec = table.entries.get(key)
            if vec is not None:
                matrix[i] = vec / table.norm_cache[key]
        self._keys = keys
        self._key_to_ids: dict[str, list[int]] = {}
        for i, key in enumerate(keys):
            self._key_to_ids.setdefault(key, []).append(i)
        self._matrix = matrix
        self._per_guide: dict[tuple[str, bool], np.ndarray] = {}
        self._combined: dict[tuple, np.ndarray] = {}

    def guide_shifts(self, guide: str, exact_only: bool = False) -> np.ndarray:
        """Clipped shift of every vocabulary token toward one guide word."""
        key = (normalize_word(guide), exact_only)
        cached = self._per_guide.get(key)
        if cached is not None:
            return cached
        if exact_only:
            shifts = np.zeros(len(self.token_texts))
            for i in self._key_to_ids.get(key[0], []):
                shifts[i] = 1.0
        else:
            unit = self.table.unit_vector(guide)
            shifts = np.clip(self._matrix @ unit, 0.0, 1.0)
        shifts.setflags(write=False)
        self._per_guide[key] = shifts
        return shifts

    def shift_vector(
        self,
        remaining: Sequence[str],
        strategy: str,
        picked: str | None = None,
        exact_only: bool = False,
    ) -> np.ndarray:
        """strategy_shift for every token at once (read-only array)."""
        if not remaining:
            raise ContractError("shift_vector requires a nonempty remaining set")
        sig = (tuple(remaining), strategy, picked, exact_only)
        cached = self._combined.get(sig)
        if cached is not None:
            return cached
        if len(self._combined) >= 512:
            self._combined.clear()
        if strategy == "fixed_order":
            out = self.guide_shifts(remaining[0], exact_only)
        elif strategy == "closest":
            out = self.guide_shifts(remaining[0], exact_only)
            for g in remaining[1:]:
                out = np.maximum(out, self.guide_shifts(g, exact_only))
        elif strategy == "all":
            out = sum(self.guide_shifts(g, exact_only) for g in remaining)
        elif strategy == "random_pick":
            if picked is None or picked not in remaining:
                raise ContractError(
                    "random_pick requires picked from the remaining set"
                )
            out = self.guide_shifts(picked, exact_only)
        else:
            raise ContractError(f"unknown strategy: {strategy!r}")
        out = np.asarray(out)
        out.setflags(write=False)
        self._combined[sig] = out
        return out


def _all_ints(fields: list[str]) -> bool:
    try:
        for f in fields:
            int(f)
    except ValueError:
        return False
    return True
