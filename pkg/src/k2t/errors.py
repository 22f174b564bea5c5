"""Exception hierarchy for the k2t package."""


class K2TError(Exception):
    """Base class for all errors raised by this package."""


class EmbeddingLoadError(K2TError):
    """Raised when an embedding stream cannot be parsed."""


class UnmappedWordError(K2TError):
    """Raised when a word has no vector in the embedding table."""


class VocabularyError(K2TError):
    """Raised when a vocabulary violates its invariants."""


class ProviderError(K2TError):
    """Raised on transport or protocol failures of a score provider.

    Kept distinct from decode-logic errors so callers can tell a broken
    connection apart from a bug in the decoding loop.
    """


class ContractError(K2TError):
    """Raised when an operation is called outside its preconditions."""


class BudgetError(K2TError):
    """Raised when the length budget cannot accommodate the guide words."""


class MetricError(K2TError):
    """Raised when a metric is undefined for the given input."""
