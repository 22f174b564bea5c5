"""Word-level text processing: tokenization, stemming, keyword matching."""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import porter

stem = porter.stem

# Word = run of letters/digits (with internal apostrophes); anything else
# that is not whitespace becomes its own punctuation token.
_TOKEN_RE = re.compile(r"\w+(?:'\w+)*|[^\w\s]", re.UNICODE)

# Punctuation that attaches to the preceding word when detokenizing.
_ATTACH_LEFT = frozenset(".,!?;:)]}%")
_ATTACH_RIGHT = frozenset("([{")


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    punctuation_split: bool = True
    subword_space_marker: str | None = None


def tokenize(text: str, cfg: TokenizerConfig = TokenizerConfig()) -> list[str]:
    """Split text into word and punctuation tokens."""
    if cfg.lowercase:
        text = text.lower()
    if cfg.punctuation_split:
        return _TOKEN_RE.findall(text)
    return text.split()


def detokenize(tokens: list[str]) -> str:
    """Join tokens with single spaces, attaching punctuation to its word."""
    parts: list[str] = []
    for tok in tokens:
        if parts and tok in _ATTACH_LEFT:
            parts[-1] += tok
        elif parts and parts[-1] and parts[-1][-1] in _ATTACH_RIGHT:
            parts[-1] += tok
        else:
            parts.append(tok)
    return " ".join(parts)


def render_token_strings(tokens: list[str], cfg: TokenizerConfig) -> str:
    """Turn raw vocabulary token strings into text.

    Subword vocabularies mark word starts with a space marker; word-level
    vocabularies are joined with plain spaces.
    """
    if cfg.subword_space_marker:
        return "".join(tokens).replace(cfg.subword_space_marker, " ").strip()
    return detokenize(tokens)


def word_tokens(text: str) -> list[str]:
    """Lowercased word tokens only, punctuation dropped."""
    return [t for t in tokenize(text) if t[0].isalnum()]


def contains_keyword(text: str, guide) -> tuple[bool, int]:
    """Whether any word of text has the guide's stem, and the first index.

    Accepts a GuideWord or a plain keyword string.
    """
    target = getattr(guide, "stem", None) or stem(str(guide))
    for i, word in enumerate(word_tokens(text)):
        if stem(word) == target:
            return True, i
    return False, -1
