"""Command-line surface: generate, eval, experiment, train-lm, serve-check."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import metrics
from .decoding import DecodeConfig, decode
from .errors import ContractError, K2TError
from .experiments import (
    ExperimentSpec,
    run_experiment,
    train_from_corpus,
    write_csv,
)
from .guidance import build_guide_words, tokenize_guide_word
from .lm_backend import NGramModel, RemoteProvider, ScoreProvider, Vocabulary
from .semantic_space import load_embeddings
from .textproc import TokenizerConfig, tokenize

log = logging.getLogger("k2t")

ALGORITHM_NAMES = {
    "ns": "nucleus",
    "bs": "beam",
    "bswc": "beam_wc",
    "bswcns": "beam_wc_nucleus",
}
STRATEGY_NAMES = {
    "order": "fixed_order",
    "closest": "closest",
    "all": "all",
    "random": "random_pick",
}


def detect_subword_marker(vocabulary: Vocabulary) -> str | None:
    for token in vocabulary.tokens:
        if token.startswith("Ġ"):
            return "Ġ"
        if token.startswith("▁"):
            return "▁"
    return None


def add_provider_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("score provider")
    group.add_argument("--lm", help="trained n-gram model file")
    group.add_argument("--corpus", help="text corpus to train an n-gram model on")
    group.add_argument("--order", type=int, default=2, help="n-gram order")
    group.add_argument("--smoothing", type=float, default=0.001,
                       help="add-k smoothing constant")
    group.add_argument("--remote", metavar="HOST:PORT",
                       help="TCP logprob provider")
    group.add_argument("--remote-cmd", metavar="CMD",
                       help="stdio logprob provider command")


def make_provider(args) -> ScoreProvider:
    given = [x for x in (args.lm, args.corpus, args.remote, args.remote_cmd) if x]
    if len(given) != 1:
        raise ContractError(
            "give exactly one of --lm, --corpus, --remote, --remote-cmd"
        )
    if args.lm:
        return NGramModel.load(args.lm)
    if args.corpus:
        return train_from_corpus(args.corpus, args.order, args.smoothing)
    if args.remote:
        host, _, port = args.remote.rpartition(":")
        if not host or not port.isdigit():
            raise ContractError(f"--remote expects HOST:PORT, got {args.remote!r}")
        return RemoteProvider.connect(host, int(port))
    return RemoteProvider.spawn(args.remote_cmd)


def encode_prompt_ids(
    prompt: str, vocabulary: Vocabulary, cfg: TokenizerConfig
) -> tuple[int, ...]:
    ids = [vocabulary.bos_id]
    for word in tokenize(prompt, cfg):
        direct = vocabulary.id_of(word)
        if direct is not None and not cfg.subword_space_marker:
            ids.append(direct)
        else:
            ids.extend(tokenize_guide_word(word, vocabulary, cfg))
    return tuple(ids)


def cmd_generate(args) -> int:
    provider = make_provider(args)
    vocabulary = provider.vocabulary
    cfg = TokenizerConfig(subword_space_marker=detect_subword_marker(vocabulary))
    keywords = [w.strip() for w in args.keywords.split(",") if w.strip()]
    table = None
    guides = []
    if keywords:
        if not args.embeddings:
            raise ContractError("--keywords requires --embeddings")
        with open(args.embeddings, encoding="utf-8") as fh:
            table = load_embeddings(fh)
        guides = build_guide_words(keywords, table, vocabulary, cfg)
    config = DecodeConfig(
        algorithm=ALGORITHM_NAMES[args.algorithm],
        nucleus_p=args.p,
        beam_width=args.beams,
        max_len=args.max_len,
        seed=args.seed,
        strategy=STRATEGY_NAMES[args.strategy],
        lambda0=args.lambda0,
        growth_c=args.c,
        annealing_enabled=not args.no_anneal,
        exact_only=args.words_only,
        keep_trace=args.trace is not None,
        tokenizer=cfg,
    )
    prompt_ids = encode_prompt_ids(args.prompt, vocabulary, cfg)
    result = decode(config, prompt_ids, guides, provider, table)
    print(result.text)
    if keywords:
        satisfied = dict(result.satisfied)
        print()
        print("keywords:")
        for guide in guides:
            step = satisfied.get(guide.surface)
            status = f"satisfied at step {step}" if step is not None else "missing"
            print(f"  {guide.surface}: {status}")
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for row in result.per_step_trace or ():
                fh.write(json.dumps({
                    "step": row.step,
                    "lambda": row.lam,
                    "token_id": row.token_id,
                    "shift": row.shift,
                    "forced": row.forced,
                }) + "\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(result.text + "\n")
    if hasattr(provider, "close"):
        provider.close()
    return 0


def cmd_eval(args) -> int:
    provider = make_provider(args)
    vocabulary = provider.vocabulary
    if args.file:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = args.text or ""
    if not text.strip():
        raise ContractError("nothing to evaluate: give --text or --file")
    keywords = [w.strip() for w in args.keywords.split(",") if w.strip()]
    token_ids = []
    for word in tokenize(text):
        token_id = vocabulary.id_of(word)
        if token_id is None:
            raise ContractError(f"text word {word!r} not in the eval vocabulary")
        token_ids.append(token_id)
    ppl = metrics.perplexity(token_ids, provider)
    rep = 100.0 * metrics.repetition_of_text(text)
    print(f"perplexity: {ppl:.6g}")
    print(f"repetition: {rep:.6g}%")
    if keywords:
        sr = metrics.success_rate([text], [keywords])
        print(f"success_rate: {sr:.6g}%")
    return 0


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.from_json(args.spec)
    rows = run_experiment(spec)
    write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_train_lm(args) -> int:
    model = train_from_corpus(args.corpus, args.order, args.smoothing)
    model.save(args.out)
    print(
        f"trained order-{model.order} model: |V|={model.vocabulary.size}, "
        f"{len(model.counts)} contexts -> {args.out}"
    )
    return 0


def cmd_serve_check(args) -> int:
    provider = make_provider(args)
    if not isinstance(provider, RemoteProvider):
        raise ContractError("serve-check needs --remote or --remote-cmd")
    vocabulary = provider.vocabulary
    vec = provider.logprobs([vocabulary.bos_id])
    deviation = abs(vec.log_mass())
    print(f"handshake ok: |V|={vocabulary.size}, "
          f"bos={vocabulary.bos_id}, eos={vocabulary.eos_id}")
    print(f"logprobs ok: {len(vec.values)} values, "
          f"|logsumexp|={deviation:.3g}")
    provider.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="k2t",
        description="Keyword-guided text generation with hard constraints",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate text containing keywords")
    add_provider_args(gen)
    gen.add_argument("--embeddings", help="word embedding file")
    gen.add_argument("--keywords", default="", help="comma-separated guide words")
    gen.add_argument("--prompt", default="", help="initial context text")
    gen.add_argument("--algorithm", choices=sorted(ALGORITHM_NAMES),
                     default="ns")
    gen.add_argument("--p", type=float, default=0.9, help="nucleus mass")
    gen.add_argument("--beams", type=int, default=4, help="beam width")
    gen.add_argument("--lambda0", type=float, default=5.0,
                     help="initial shift strength")
    gen.add_argument("--c", type=float, default=100.0,
                     help="annealing growth constant")
    gen.add_argument("--max-len", type=int, default=90,
                     help="generation budget in tokens")
    gen.add_argument("--strategy", choices=sorted(STRATEGY_NAMES),
                     default="closest")
    gen.add_argument("--no-anneal", action="store_true",
                     help="disable annealing (soft control only)")
    gen.add_argument("--words-only", action="store_true",
                     help="shift only exact keyword tokens, not similar words")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--trace", help="write a per-step JSON-lines trace here")
    gen.add_argument("--out", help="write the generated text here")
    gen.set_defaults(func=cmd_generate)

    ev = sub.add_parser("eval", help="score a text with the three metrics")
    add_provider_args(ev)
    ev.add_argument("--text", help="text to evaluate")
    ev.add_argument("--file", help="file with the text to evaluate")
    ev.add_argument("--keywords", default="",
                    help="keywords for the success rate")
    ev.set_defaults(func=cmd_eval)

    ex = sub.add_parser("experiment", help="run a grid sweep from a JSON spec")
    ex.add_argument("--spec", required=True, help="experiment spec JSON")
    ex.add_argument("--out", required=True, help="output CSV path")
    ex.set_defaults(func=cmd_experiment)

    tr = sub.add_parser("train-lm", help="train and save an n-gram model")
    tr.add_argument("--corpus", required=True)
    tr.add_argument("--order", type=int, default=2)
    tr.add_argument("--smoothing", type=float, default=0.001)
    tr.add_argument("--out", required=True)
    tr.set_defaults(func=cmd_train_lm)

    sc = sub.add_parser("serve-check",
                        help="handshake and one round-trip against a provider")
    add_provider_args(sc)
    sc.set_defaults(func=cmd_serve_check)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("K2T_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except K2TError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
