"""Decoding algorithms over guided score vectors.

Every algorithm runs the same step loop: base log-probabilities, semantic
shift, EOS gate, then selection; the forcing phase appends guide words
verbatim. Nucleus sampling decodes one sequence; the beam variants keep K
and re-rank the finalists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BudgetError, ContractError, ProviderError
from .guidance import (
    GuidanceState,
    GuideWord,
    apply_shift,
    current_lambda,
    force_tokens,
    suppress_eos,
    update_state,
)
from .lm_backend import ScoreProvider, ScoreVector, Vocabulary
from .semantic_space import EmbeddingTable, ShiftTable
from .textproc import TokenizerConfig, render_token_strings

ALGORITHMS = ("nucleus", "beam", "beam_wc", "beam_wc_nucleus")


@dataclass(frozen=True)
class DecodeConfig:
    algorithm: str = "nucleus"
    nucleus_p: float = 0.9
    beam_width: int = 4
    max_len: int = 90
    seed: int = 0
    strategy: str = "closest"
    lambda0: float = 5.0
    growth_c: float = 100.0
    annealing_enabled: bool = True
    exact_only: bool = False
    keep_trace: bool = False
    tokenizer: TokenizerConfig = TokenizerConfig()

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ContractError(f"unknown algorithm: {self.algorithm!r}")
        if not 0.0 < self.nucleus_p <= 1.0:
            raise ContractError("nucleus_p must be in (0, 1]")
        if self.beam_width < 1:
            raise ContractError("beam_width must be >= 1")
        if self.max_len < 1:
            raise ContractError("max_len must be >= 1")


@dataclass(frozen=True)
class TraceStep:
    step: int
    lam: float
    token_id: int
    shift: float
    forced: bool


@dataclass(frozen=True)
class GenerationResult:
    token_ids: tuple[int, ...]
    text: str
    satisfied: tuple[tuple[str, int], ...]
    prompt_ids: tuple[int, ...]
    cum_logprob: float
    per_step_trace: tuple[TraceStep, ...] | None = None


@dataclass(frozen=True)
class BeamHypothesis:
    """One alive or finished beam; owns its guidance state copy."""

    token_ids: tuple[int, ...]
    gen_len: int
    cum_logprob: float
    cum_shifted: float
    guidance: GuidanceState
    finished: bool
    pending: str
    satisfied: tuple[tuple[str, int], ...] = ()
    trace: tuple[TraceStep, ...] = ()

    @property
    def generated(self) -> tuple[int, ...]:
        return self.token_ids[len(self.token_ids) - self.gen_len:]


def nucleus_filter(probs: np.ndarray, p: float) -> np.ndarray:
    """Keep the smallest top-probability prefix with mass >= p, renormalized.

    Ties between equal probabilities break toward the lower token id.
    """
    if not 0.0 < p <= 1.0:
        raise ContractError("p must be in (0, 1]")
    probs = np.asarray(probs, dtype=np.float64)
    total = probs.sum()
    if total <= 0.0:
        raise ContractError("nucleus_filter requires positive mass")
    if abs(total - 1.0) > 1e-6:
        raise ContractError(f"probabilities must sum to 1, got {total!r}")
    order = np.lexsort((np.arange(len(probs)), -probs))
    csum = np.cumsum(probs[order])
    cutoff = int(np.searchsorted(csum, p, side="left"))
    cutoff = min(cutoff, len(probs) - 1)
    kept = order[: cutoff + 1]
    out = np.zeros_like(probs)
    out[kept] = probs[kept] / probs[kept].sum()
    return out


def rerank(hyp: BeamHypothesis, mode: str) -> float:
    """Length-normalized base log-probability, plus one per satisfied word
    in word_count mode."""
    if hyp.gen_len < 1:
        raise ContractError("cannot rerank an empty hypothesis")
    score = hyp.cum_logprob / hyp.gen_len
    if mode == "word_count":
        score += len(hyp.guidance.all_words) - len(hyp.guidance.remaining)
    elif mode != "length_norm":
        raise ContractError(f"unknown rerank mode: {mode!r}")
    return score


def decode(
    config: DecodeConfig,
    prompt: Sequence[int],
    guides: Sequence[GuideWord],
    provider: ScoreProvider,
    table: EmbeddingTable | None,
    shifts: ShiftTable | None = None,
) -> GenerationResult:
    """Run one full guided generation.

    A prebuilt ShiftTable for (table, provider vocabulary) may be passed to
    share similarity caches across generations.
    """
    vocab = provider.vocabulary
    if not prompt or prompt[0] != vocab.bos_id:
        raise ContractError("prompt must begin with BOS")
    state = GuidanceState.start(
        tuple(guides),
        strategy=config.strategy,
        lambda0=config.lambda0,
        growth_c=config.growth_c,
        max_len=config.max_len,
        rng_seed=config.seed,
        exact_only=config.exact_only,
        annealing_enabled=config.annealing_enabled,
    )
    if config.annealing_enabled and state.forced_budget > config.max_len:
        raise BudgetError(
            f"budget {config.max_len} cannot fit {state.forced_budget} "
            "forced guide tokens"
        )
    if guides and table is None and shifts is None:
        raise ContractError("guide words require an embedding table")
    if shifts is None and guides:
        shifts = ShiftTable(table, vocab.tokens)
    if config.algorithm == "nucleus":
        return _decode_nucleus(config, tuple(prompt), state, provider, shifts)
    return _decode_beam(config, tuple(prompt), state, provider, shifts)


def _softmax(values: np.ndarray) -> np.ndarray:
    shifted = values - values.max()
    exps = np.exp(shifted)
    return exps / exps.sum()


def _step_logprobs(provider: ScoreProvider, ids, step: int) -> ScoreVector:
    """Provider call with the failing step attached to any transport error."""
    try:
        return provider.logprobs(ids)
    except ProviderError as exc:
        raise ProviderError(f"provider failed at step {step}: {exc}") from exc


def _complete_word(
    pending: str, token_id: int, vocab: Vocabulary, cfg: TokenizerConfig
) -> tuple[str, str | None]:
    """Advance the partial-word buffer by one token.

    Returns (new_pending, completed word or None). With a word-level
    vocabulary every token is already a complete word.
    """
    if token_id in (vocab.bos_id, vocab.eos_id):
        return "", pending or None
    text = vocab.tokens[token_id]
    marker = cfg.subword_space_marker
    if not marker:
        return "", text
    if text.startswith(marker):
        return text[len(marker):], pending or None
    return pending + text, None


def _absorb_word(
    state: GuidanceState, word: str | None, t: int
) -> tuple[GuidanceState, list[tuple[str, int]]]:
    if not word or not state.remaining:
        return state, []
    new_state = update_state(state, word, t)
    gone = [
        (w.surface, t)
        for w in state.remaining
        if w not in new_state.remaining
    ]
    return new_state, gone


def _render(generated: Sequence[int], vocab: Vocabulary, cfg: TokenizerConfig) -> str:
    texts = [
        vocab.tokens[i] for i in generated if i not in (vocab.bos_id, vocab.eos_id)
    ]
    return render_token_strings(texts, cfg)


def _decode_nucleus(
    config: DecodeConfig,
    prompt: tuple[int, ...],
    state: GuidanceState,
    provider: ScoreProvider,
    shifts: ShiftTable | None,
) -> GenerationResult:
    vocab = provider.vocabulary
    cfg = config.tokenizer
    rng = np.random.default_rng(config.seed)
    ids = list(prompt)
    generated: list[int] = []
    satisfied: list[tuple[str, int]] = []
    trace: list[TraceStep] = []
    pending = ""
    cum_logprob = 0.0
    t = 0
    while t < config.max_len:
        if state.active and math.isinf(current_lambda(state, t)):
            state, pending, t, cum_logprob = _force_word(
                state, pending, t, ids, generated, satisfied, trace,
                provider, vocab, cfg, cum_logprob, config.keep_trace,
            )
            continue
        base = _step_logprobs(provider, ids, t)
        scored = base
        lam = 0.0
        if state.active:
            lam = current_lambda(state, t)
            scored = apply_shift(base, state, t, shifts)
            scored = suppress_eos(scored, state, vocab.eos_id)
        probs = _softmax(scored.values)
        filtered = nucleus_filter(probs, config.nucleus_p)
        token = int(rng.choice(vocab.size, p=filtered))
        ids.append(token)
        generated.append(token)
        cum_logprob += float(base.values[token])
        if config.keep_trace:
            shift_amt = float(scored.values[token] - base.values[token])
            trace.append(TraceStep(t, lam, token, max(0.0, shift_amt), False))
        t += 1
        pending, completed = _complete_word(pending, token, vocab, cfg)
        state, gone = _absorb_word(state, completed, t)
        satisfied.extend(gone)
        if token == vocab.eos_id:
            break
    state, gone = _absorb_word(state, pending or None, t)
    satisfied.extend(gone)
    return GenerationResult(
        token_ids=tuple(generated),
        text=_render(generated, vocab, cfg),
        satisfied=tuple(satisfied),
        prompt_ids=prompt,
        cum_logprob=cum_logprob,
        per_step_trace=tuple(trace) if config.keep_trace else None,
    )


def _force_word(
    state, pending, t, ids, generated, satisfied, trace,
    provider, vocab, cfg, cum_logprob, keep_trace,
):
    """Append the head guide word verbatim, then account for it."""
    state, gone = _absorb_word(state, pending or None, t)
    satisfied.extend(gone)
    pending = ""
    if not state.remaining:
        return state, pending, t, cum_logprob
    forced = force_tokens(state)
    texts = []
    for token in forced:
        base = _step_logprobs(provider, ids, t)
        cum_logprob += float(base.values[token])
        ids.append(token)
        generated.append(token)
        texts.append(vocab.tokens[token])
        if keep_trace:
            trace.append(TraceStep(t, math.inf, token, 0.0, True))
        t += 1
    state, gone = _absorb_word(state, render_token_strings(texts, cfg), t)
    satisfied.extend(gone)
    return state, pending, t, cum_logprob


def _beam_children(
    hyp: BeamHypothesis,
    config: DecodeConfig,
    provider: ScoreProvider,
    shifts: ShiftTable | None,
    rng: np.random.Generator,
) -> list[BeamHypothesis]:
    vocab = provider.vocabulary
    cfg = config.tokenizer
    state = hyp.guidance
    t = hyp.gen_len

    if state.active and math.isinf(current_lambda(state, t)):
        return [_force_into(hyp, config, provider)]

    base = _step_logprobs(provider, hyp.token_ids, t)
    scored = base
    lam = 0.0
    if state.active:
        lam = current_lambda(state, t)
        scored = apply_shift(base, state, t, shifts)
        scored = suppress_eos(scored, state, vocab.eos_id)

    if config.algorithm == "beam_wc_nucleus":
        probs = _softmax(scored.values)
        filtered = nucleus_filter(probs, config.nucleus_p)
        support = int(np.count_nonzero(filtered))
        k = min(config.beam_width, support)
        tokens = [
            int(x)
            for x in rng.choice(vocab.size, size=k, replace=False, p=filtered)
        ]
    else:
        order = np.lexsort((np.arange(vocab.size), -scored.values))
        tokens = [
            int(x)
            for x in order[: config.beam_width]
            if np.isfinite(scored.values[int(x)])
        ]

    children = []
    for token in tokens:
        child_state = state.clone()
        pending, completed = _complete_word(hyp.pending, token, vocab, cfg)
        child_state, gone = _absorb_word(child_state, completed, t + 1)
        finished = token == vocab.eos_id or t + 1 >= config.max_len
        trace = hyp.trace
        if config.keep_trace:
            shift_amt = float(scored.values[token] - base.values[token])
            trace = trace + (
                TraceStep(t, lam, token, max(0.0, shift_amt), False),
            )
        children.append(
            BeamHypothesis(
                token_ids=hyp.token_ids + (token,),
                gen_len=t + 1,
                cum_logprob=hyp.cum_logprob + float(base.values[token]),
                cum_shifted=hyp.cum_shifted + float(scored.values[token]),
                guidance=child_state,
                finished=finished,
                pending=pending,
                satisfied=hyp.satisfied + tuple(gone),
                trace=trace,
            )
        )
    return children


def _force_into(
    hyp: BeamHypothesis, config: DecodeConfig, provider: ScoreProvider
) -> BeamHypothesis:
    """Forcing inside beam search: true base log-probs are accumulated."""
    vocab = provider.vocabulary
    cfg = config.tokenizer
    state, gone = _absorb_word(hyp.guidance, hyp.pending or None, hyp.gen_len)
    satisfied = hyp.satisfied + tuple(gone)
    ids = hyp.token_ids
    gen_len = hyp.gen_len
    cum_logprob, cum_shifted = hyp.cum_logprob, hyp.cum_shifted
    trace = hyp.trace
    if state.remaining:
        forced = force_tokens(state)
        texts = []
        for token in forced:
            base = _step_logprobs(provider, ids, gen_len)
            lp = float(base.values[token])
            cum_logprob += lp
            cum_shifted += lp
            ids = ids + (token,)
            texts.append(vocab.tokens[token])
            if config.keep_trace:
                trace = trace + (TraceStep(gen_len, math.inf, token, 0.0, True),)
            gen_len += 1
        state, gone = _absorb_word(
            state, render_token_strings(texts, cfg), gen_len
        )
        satisfied = satisfied + tuple(gone)
    return BeamHypothesis(
        token_ids=ids,
        gen_len=gen_len,
        cum_logprob=cum_logprob,
        cum_shifted=cum_shifted,
        guidance=state,
        finished=gen_len >= config.max_len,
        pending="",
        satisfied=satisfied,
        trace=trace,
    )


def beam_step(
    hyps: list[BeamHypothesis],
    provider: ScoreProvider,
    config: DecodeConfig,
    shifts: ShiftTable | None,
    rng: np.random.Generator,
) -> list[BeamHypothesis]:
    """Expand live hypotheses and prune the pool to the beam width.

    The pruning score is the cumulative shifted score; ties keep the
    lexicographically smaller token-id tuple.
    """
    if not 1 <= len(hyps) <= config.beam_width:
        raise ContractError("beam_step requires 1..K hypotheses")
    pool: list[BeamHypothesis] = []
    for hyp in hyps:
        if hyp.finished:
            pool.append(hyp)
        else:
            pool.extend(_beam_children(hyp, config, provider, shifts, rng))
    pool.sort(key=lambda h: (-h.cum_shifted, h.token_ids))
    return pool[: config.beam_width]


def _decode_beam(
    config: DecodeConfig,
    prompt: tuple[int, ...],
    state: GuidanceState,
    provider: ScoreProvider,
    shifts: ShiftTable | None,
) -> GenerationResult:
    vocab = provider.vocabulary
    cfg = config.tokenizer
    rng = np.random.default_rng(config.seed)
    hyps = [
        BeamHypothesis(
            token_ids=prompt,
            gen_len=0,
            cum_logprob=0.0,
            cum_shifted=0.0,
            guidance=state,
            finished=False,
            pending="",
        )
    ]
    while not all(h.finished for h in hyps):
        hyps = beam_step(hyps, provider, config, shifts, rng)

    mode = "length_norm" if config.algorithm == "beam" else "word_count"
    winner = min(hyps, key=lambda h: (-rerank(h, mode), h.token_ids))

    win_state, gone = _absorb_word(
        winner.guidance, winner.pending or None, winner.gen_len
    )
    satisfied = winner.satisfied + tuple(gone)
    generated = winner.generated
    return GenerationResult(
        token_ids=generated,
        text=_render(generated, vocab, cfg),
        satisfied=satisfied,
        prompt_ids=prompt,
        cum_logprob=winner.cum_logprob,
        per_step_trace=winner.trace if config.keep_trace else None,
    )
