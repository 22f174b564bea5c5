"""Automatic text-quality metrics: perplexity, 4-gram repetition, success rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ContractError, MetricError
from .lm_backend import ScoreProvider
from .textproc import contains_keyword, word_tokens


def perplexity(
    token_ids: Sequence[int],
    eval_provider: ScoreProvider,
    prompt_ids: Sequence[int] | None = None,
) -> float:
    """exp of the negative mean log-probability of the generated tokens.

    The evaluation provider must be a separately trained model, or the
    estimate is inflated. Prompt tokens condition the chain but are not
    scored; EOS, when present, is.
    """
    if not token_ids:
        raise ContractError("perplexity requires a nonempty sequence")
    vocab = eval_provider.vocabulary
    context = list(prompt_ids) if prompt_ids else [vocab.bos_id]
    if context[0] != vocab.bos_id:
        raise ContractError("prompt must begin with BOS")
    logprobs = []
    for token in token_ids:
        values = eval_provider.logprobs(context).values
        lp = float(values[token])
        if not math.isfinite(lp):
            raise MetricError(f"zero-probability token {token} under eval model")
        logprobs.append(lp)
        context.append(token)
    # fsum keeps the uniform-model identity ppl == |V| exact at any length
    return math.exp(-math.fsum(logprobs) / len(logprobs))


def repetition_4gram(tokens: Sequence[str]) -> float:
    """Proportion of repeated 4-grams over the sliding window; 0 if < 4 tokens."""
    grams = [tuple(tokens[i : i + 4]) for i in range(len(tokens) - 3)]
    if not grams:
        return 0.0
    return 1.0 - len(set(grams)) / len(grams)


def repetition_of_text(text: str) -> float:
    return repetition_4gram(word_tokens(text))


def success_rate(
    texts: Sequence[str], keyword_sets: Sequence[Sequence[str]]
) -> float:
    """Percentage of all keywords whose stem appears in their text."""
    if len(texts) != len(keyword_sets):
        raise ContractError(
            f"{len(texts)} texts vs {len(keyword_sets)} keyword sets"
        )
    total = sum(len(ks) for ks in keyword_sets)
    if total == 0:
        raise ContractError("no keywords to score")
    hits = 0
    for text, keywords in zip(texts, keyword_sets):
        for keyword in keywords:
            found, _ = contains_keyword(text, keyword)
            hits += found
    return 100.0 * hits / total


@dataclass(frozen=True)
class Aggregate:
    mean: float
    std: float
    degenerate: bool = False  # single sample, std reported as 0


def aggregate(values: Sequence[float]) -> Aggregate:
    """Mean and sample (n-1) standard deviation across runs."""
    if not values:
        raise ContractError("aggregate requires at least one value")
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return Aggregate(mean=mean, std=0.0, degenerate=True)
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return Aggregate(mean=mean, std=math.sqrt(var))
