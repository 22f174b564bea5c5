"""Guide-word control state: annealed shift strength, EOS gating, forcing.

The shift strength grows on an exponential schedule over the generation
budget and becomes infinite (hard forcing) when only enough budget is left
to emit the remaining guide words verbatim.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ContractError, UnmappedWordError
from .lm_backend import ScoreVector, Vocabulary
from .semantic_space import EmbeddingTable, ShiftTable, normalize_word
from .textproc import TokenizerConfig, render_token_strings, stem, word_tokens

INFINITE_LAMBDA = math.inf


@dataclass(frozen=True)
class GuideWord:
    surface: str
    stem: str
    embedding_key: str
    token_ids: tuple[int, ...]


def build_guide_words(
    words: Sequence[str],
    table: EmbeddingTable,
    vocabulary: Vocabulary,
    cfg: TokenizerConfig = TokenizerConfig(),
) -> list[GuideWord]:
    """Resolve surface words to stems, embedding keys and token ids."""
    guides = []
    for word in words:
        key = normalize_word(word)
        if not key:
            raise ContractError(f"empty guide word: {word!r}")
        if key not in table.entries:
            raise UnmappedWordError(f"guide word not in embedding table: {word!r}")
        token_ids = tokenize_guide_word(key, vocabulary, cfg)
        rendered = render_token_strings(
            [vocabulary.tokens[i] for i in token_ids], cfg
        )
        if stem(rendered) != stem(key):
            raise ContractError(
                f"guide word {word!r} does not survive the token round-trip"
            )
        guides.append(
            GuideWord(
                surface=word,
                stem=stem(key),
                embedding_key=key,
                token_ids=tuple(token_ids),
            )
        )
    return guides


def tokenize_guide_word(
    word: str, vocabulary: Vocabulary, cfg: TokenizerConfig
) -> list[int]:
    """Token ids spelling the word: exact hit, else greedy longest match."""
    marker = cfg.subword_space_marker or ""
    for candidate in (marker + word, word):
        token_id = vocabulary.id_of(candidate)
        if token_id is not None:
            return [token_id]
    # Greedy longest-prefix decomposition for subword vocabularies.
    target = marker + word
    ids: list[int] = []
    pos = 0
    while pos < len(target):
        best_id, best_len = None, 0
        for length in range(len(target) - pos, 0, -1):
            token_id = vocabulary.id_of(target[pos : pos + length])
            if token_id is not None:
                best_id, best_len = token_id, length
                break
        if best_id is None:
            raise ContractError(
                f"guide word {word!r} cannot be spelled with this vocabulary"
            )
        ids.append(best_id)
        pos += best_len
    return ids


@dataclass
class GuidanceState:
    """Remaining guide words plus the annealing clock; one copy per hypothesis."""

    all_words: tuple[GuideWord, ...]
    remaining: tuple[GuideWord, ...]
    strategy: str
    lambda0: float
    growth_c: float
    max_len: int
    last_satisfied_step: int = 0
    rng_seed: int = 0
    exact_only: bool = False
    annealing_enabled: bool = True
    rng: np.random.Generator = field(default=None, repr=False)

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng(self.rng_seed)
        if self.max_len < len(self.all_words):
            raise ContractError("max_len must cover the guide words")

    @classmethod
    def start(cls, guides: Sequence[GuideWord], **kwargs) -> "GuidanceState":
        guides = tuple(guides)
        return cls(all_words=guides, remaining=guides, **kwargs)

    def clone(self) -> "GuidanceState":
        return replace(self, rng=copy.deepcopy(self.rng))

    @property
    def active(self) -> bool:
        """Whether guidance touches scores at all.

        lambda0 = 0 with annealing disabled is the no-control baseline and
        must reproduce unguided decoding bit for bit, so EOS suppression is
        off too.
        """
        return bool(self.remaining) and (self.annealing_enabled or self.lambda0 > 0)

    @property
    def forced_budget(self) -> int:
        """Tokens needed to emit every remaining guide word verbatim."""
        return sum(len(w.token_ids) for w in self.remaining)


def annealed_lambda(
    lambda0: float, c: float, max_len: int, n_remaining: int, t_n: int, t: int
) -> float:
    """Exponential schedule ending in the distinguished infinity.

    lambda0 * exp(c (t - t_n) / (T - n - t_n)) while t < T - n, infinity at
    and beyond that boundary.
    """
    if t >= max_len - n_remaining:
        return INFINITE_LAMBDA
    denom = max_len - n_remaining - t_n
    if denom <= 0:
        raise ContractError(
            f"degenerate budget: T={max_len} n={n_remaining} t_n={t_n}"
        )
    return lambda0 * math.exp(c * (t - t_n) / denom)


def current_lambda(state: GuidanceState, t: int) -> float:
    """Shift strength at step t; infinite once the forcing phase starts.

    The budget reserve counts remaining token ids, not remaining words, so
    multi-token guide words still fit when forcing begins. With word-level
    tokens the two coincide.
    """
    if not state.remaining:
        raise ContractError("current_lambda requires remaining guide words")
    if not state.last_satisfied_step <= t <= state.max_len:
        raise ContractError(
            f"step {t} outside [{state.last_satisfied_step}, {state.max_len}]"
        )
    if not state.annealing_enabled:
        return state.lambda0
    return annealed_lambda(
        state.lambda0,
        state.growth_c,
        state.max_len,
        state.forced_budget,
        state.last_satisfied_step,
        t,
    )


def apply_shift(
    scores: ScoreVector, state: GuidanceState, t: int, shifts: ShiftTable
) -> ScoreVector:
    """Add lambda_t * strategy shift to every token's score.

    Zero-shift entries stay bit-identical. For random_pick the target word
    is drawn once per step from the state's own stream.
    """
    lam = current_lambda(state, t)
    if math.isinf(lam):
        raise ContractError("apply_shift called in the forcing phase")
    picked = None
    if state.strategy == "random_pick":
        picked = state.remaining[
            int(state.rng.integers(len(state.remaining)))
        ].embedding_key
    if lam == 0.0:
        return scores
    shift = shifts.shift_vector(
        [w.embedding_key for w in state.remaining],
        state.strategy,
        picked,
        state.exact_only,
    )
    values = np.where(shift > 0.0, scores.values + lam * shift, scores.values)
    return ScoreVector(values=values, step_index=scores.step_index)


def suppress_eos(scores: ScoreVector, state: GuidanceState, eos_id: int) -> ScoreVector:
    """Mask EOS to -inf while any guide word is unsatisfied."""
    if not state.remaining:
        return scores
    values = scores.values.copy()
    values[eos_id] = -math.inf
    return ScoreVector(values=values, step_index=scores.step_index)


def update_state(state: GuidanceState, generated_text: str, t: int) -> GuidanceState:
    """Drop guide words whose stem appears among the new words.

    Under fixed_order only the head word can be satisfied; later words are
    ignored until they become the head.
    """
    if not state.remaining:
        return state
    stems = {stem(w) for w in word_tokens(generated_text)}
    if not stems:
        return state
    if state.strategy == "fixed_order":
        remaining = list(state.remaining)
        while remaining and remaining[0].stem in stems:
            remaining.pop(0)
        remaining = tuple(remaining)
    else:
        remaining = tuple(w for w in state.remaining if w.stem not in stems)
    if len(remaining) == len(state.remaining):
        return state
    return replace(state, remaining=remaining, last_satisfied_step=t)


def force_tokens(state: GuidanceState) -> tuple[int, ...]:
    """Token ids of the next guide word to append verbatim (list order)."""
    if not state.remaining:
        raise ContractError("force_tokens requires remaining guide words")
    return state.remaining[0].token_ids
