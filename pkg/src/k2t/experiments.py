"""Batch experiment runner: grid sweeps with CSV summaries.

A grid cell is one (lambda0, strategy, algorithm) combination; each cell
runs every keyword set under every seed, aggregates the three metrics per
seed, and reports mean and sample std across seeds.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from . import metrics
from .decoding import ALGORITHMS, DecodeConfig, decode
from .errors import ContractError, K2TError
from .guidance import build_guide_words
from .lm_backend import NGramModel, ScoreProvider, build_vocabulary, train_ngram
from .semantic_space import (
    STRATEGIES,
    EmbeddingTable,
    ShiftTable,
    load_embeddings,
)
from .textproc import TokenizerConfig, tokenize

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "cell_id,lambda0,strategy,algorithm,"
    "ppl_mean,ppl_std,rep_mean,rep_std,sr_mean,sr_std,failures"
)


def stable_seed(*parts) -> int:
    """Deterministic 63-bit seed derived from the given parts."""
    digest = hashlib.sha256("\x1f".join(map(str, parts)).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def build_keyword_sets(
    word_list: Sequence[str],
    stopwords: set[str],
    n_sets: int = 50,
    set_size: int = 5,
    seed: int = 0,
) -> list[list[str]]:
    """Sample disjoint keyword sets from the rarer half of a frequency list.

    The first 500 words are dropped as too common, stop words are dropped,
    and n_sets * set_size distinct words are drawn uniformly.
    """
    words = [w.strip().lower() for w in word_list if w.strip()]
    if len(words) < 1000:
        raise ContractError(f"word list has {len(words)} entries, need >= 1000")
    pool = [w for w in words[500:] if w not in stopwords]
    need = n_sets * set_size
    if need > len(pool):
        raise ContractError(
            f"cannot draw {need} keywords from a pool of {len(pool)}"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(pool), size=need, replace=False)
    return [
        [pool[int(i)] for i in chosen[s * set_size : (s + 1) * set_size]]
        for s in range(n_sets)
    ]


def default_wordlist_path() -> Path:
    return Path(__file__).parent / "data" / "wordlist_1k.txt"


def default_stopwords_path() -> Path:
    return Path(__file__).parent / "data" / "stopwords.txt"


@dataclass
class ExperimentSpec:
    """Flat description of one sweep; mirrors the JSON config fields.

    Keyword sets are either given inline or built from a frequency word
    list via the drop-500 / drop-stopwords / sample protocol.
    """

    lambda0_grid: list[float]
    strategy_grid: list[str]
    algorithm_grid: list[str]
    seeds: list[int]
    embeddings: str
    keyword_sets: list[list[str]] | None = None
    wordlist: str | None = None
    stopwords: str | None = None
    n_sets: int = 50
    set_size: int = 5
    sets_seed: int = 0
    lm: str | None = None
    corpus: str | None = None
    order: int = 2
    smoothing_k: float = 0.001
    eval_lm: str | None = None
    eval_order: int = 1
    prompt: str = ""
    max_len: int = 90
    nucleus_p: float = 0.9
    beam_width: int = 4
    growth_c: float = 100.0
    annealing_enabled: bool = True
    exact_only: bool = False

    def __post_init__(self):
        if self.keyword_sets is None:
            wordlist = self.wordlist or str(default_wordlist_path())
            stopwords_path = self.stopwords or str(default_stopwords_path())
            with open(wordlist, encoding="utf-8") as fh:
                words = fh.read().split()
            with open(stopwords_path, encoding="utf-8") as fh:
                stopwords = set(fh.read().split())
            self.keyword_sets = build_keyword_sets(
                words, stopwords, self.n_sets, self.set_size, self.sets_seed
            )
        for name in ("keyword_sets", "lambda0_grid", "strategy_grid",
                     "algorithm_grid", "seeds"):
            if not getattr(self, name):
                raise ContractError(f"{name} must be nonempty")
        for s in self.strategy_grid:
            if s not in STRATEGIES:
                raise ContractError(f"unknown strategy: {s!r}")
        for a in self.algorithm_grid:
            if a not in ALGORITHMS:
                raise ContractError(f"unknown algorithm: {a!r}")
        if self.lm is None and self.corpus is None:
            raise ContractError("spec needs either an lm path or a corpus path")

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


def load_corpus_sequences(path, vocabulary=None):
    """Word-tokenize a text corpus into BOS...EOS id sequences."""
    cfg = TokenizerConfig()
    with open(path, encoding="utf-8") as fh:
        token_lines = [tokenize(line, cfg) for line in fh if line.strip()]
    if vocabulary is None:
        vocabulary = build_vocabulary(token_lines)
    bos, eos = vocabulary.bos_id, vocabulary.eos_id
    sequences = []
    for toks in token_lines:
        ids = [vocabulary.id_of(t) for t in toks]
        if any(i is None for i in ids):
            raise ContractError("corpus token missing from the given vocabulary")
        sequences.append([bos, *ids, eos])
    return sequences, vocabulary


def train_from_corpus(path, order: int, smoothing_k: float) -> NGramModel:
    sequences, vocabulary = load_corpus_sequences(path)
    return train_ngram(sequences, order, smoothing_k, vocabulary)


@dataclass
class ExperimentContext:
    """Loaded resources shared across all grid cells."""

    table: EmbeddingTable
    provider: ScoreProvider
    eval_provider: ScoreProvider
    prompt_ids: tuple[int, ...]
    tokenizer: TokenizerConfig = field(default_factory=TokenizerConfig)
    shifts: ShiftTable | None = None

    def __post_init__(self):
        if self.shifts is None:
            self.shifts = ShiftTable(self.table, self.provider.vocabulary.tokens)


def prepare_context(spec: ExperimentSpec) -> ExperimentContext:
    with open(spec.embeddings, encoding="utf-8") as fh:
        table = load_embeddings(fh)
    if spec.lm:
        provider = NGramModel.load(spec.lm)
    else:
        provider = train_from_corpus(spec.corpus, spec.order, spec.smoothing_k)
    if spec.eval_lm:
        eval_provider = NGramModel.load(spec.eval_lm)
    elif spec.corpus:
        # Separate model for perplexity: same text, different order.
        eval_provider = train_from_corpus(
            spec.corpus, spec.eval_order, spec.smoothing_k
        )
    else:
        raise ContractError(
            "perplexity needs a separate eval model: give eval_lm or corpus"
        )
    unmapped = sorted(
        {w for ks in spec.keyword_sets for w in ks if w not in table}
    )
    if unmapped:
        raise ContractError(f"keywords missing from embeddings: {unmapped[:5]}")
    prompt_ids = encode_prompt(spec.prompt, provider.vocabulary)
    return ExperimentContext(table, provider, eval_provider, prompt_ids)


def encode_prompt(prompt: str, vocabulary) -> tuple[int, ...]:
    ids = [vocabulary.bos_id]
    for word in tokenize(prompt):
        token_id = vocabulary.id_of(word)
        if token_id is None:
            raise ContractError(f"prompt word {word!r} not in vocabulary")
        ids.append(token_id)
    return tuple(ids)


def run_cell(
    spec: ExperimentSpec,
    ctx: ExperimentContext,
    cell_id: str,
    lambda0: float,
    strategy: str,
    algorithm: str,
) -> dict:
    """All keyword sets under all seeds for one grid cell."""
    ppl_runs, rep_runs, sr_runs = [], [], []
    for seed in spec.seeds:
        texts = []
        ppls, reps = [], []
        for set_idx, keywords in enumerate(spec.keyword_sets):
            guides = build_guide_words(
                keywords, ctx.table, ctx.provider.vocabulary, ctx.tokenizer
            )
            config = DecodeConfig(
                algorithm=algorithm,
                nucleus_p=spec.nucleus_p,
                beam_width=spec.beam_width,
                max_len=spec.max_len,
                seed=stable_seed(seed, cell_id, set_idx),
                strategy=strategy,
                lambda0=lambda0,
                growth_c=spec.growth_c,
                annealing_enabled=spec.annealing_enabled,
                exact_only=spec.exact_only,
                tokenizer=ctx.tokenizer,
            )
            result = decode(
                config, ctx.prompt_ids, guides, ctx.provider, ctx.table,
                shifts=ctx.shifts,
            )
            texts.append(result.text)
            if result.token_ids:
                ppls.append(
                    metrics.perplexity(
                        result.token_ids, ctx.eval_provider, result.prompt_ids
                    )
                )
            reps.append(100.0 * metrics.repetition_of_text(result.text))
        ppl_runs.append(sum(ppls) / len(ppls) if ppls else float("nan"))
        rep_runs.append(sum(reps) / len(reps))
        sr_runs.append(metrics.success_rate(texts, spec.keyword_sets))
    ppl = metrics.aggregate(ppl_runs)
    rep = metrics.aggregate(rep_runs)
    sr = metrics.aggregate(sr_runs)
    return {
        "cell_id": cell_id,
        "lambda0": fmt(lambda0),
        "strategy": strategy,
        "algorithm": algorithm,
        "ppl_mean": fmt(ppl.mean),
        "ppl_std": fmt(ppl.std),
        "rep_mean": fmt(rep.mean),
        "rep_std": fmt(rep.std),
        "sr_mean": fmt(sr.mean),
        "sr_std": fmt(sr.std),
        "failures": "0",
    }


def fmt(value: float) -> str:
    return f"{value:.6g}"


def run_experiment(spec: ExperimentSpec, ctx: ExperimentContext | None = None):
    """Run every grid cell; a failing cell yields a failure row, not an abort."""
    if ctx is None:
        ctx = prepare_context(spec)
    rows = []
    cells = list(
        product(spec.lambda0_grid, spec.strategy_grid, spec.algorithm_grid)
    )
    for idx, (lambda0, strategy, algorithm) in enumerate(cells):
        cell_id = f"c{idx:03d}"
        try:
            rows.append(
                run_cell(spec, ctx, cell_id, lambda0, strategy, algorithm)
            )
        except K2TError as exc:
            logger.error("cell %s failed: %s", cell_id, exc)
            rows.append(
                {
                    "cell_id": cell_id,
                    "lambda0": fmt(lambda0),
                    "strategy": strategy,
                    "algorithm": algorithm,
                    "ppl_mean": "",
                    "ppl_std": "",
                    "rep_mean": "",
                    "rep_std": "",
                    "sr_mean": "",
                    "sr_std": "",
                    "failures": "1",
                }
            )
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(
        buffer, fieldnames=CSV_HEADER.split(","), lineterminator="\n"
    )
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def write_csv(rows: list[dict], path) -> None:
    Path(path).write_text(rows_to_csv(rows), encoding="utf-8")
