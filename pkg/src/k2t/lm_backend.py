"""Base score providers: log p(. | context) over a fixed vocabulary.

Two implementations share one interface: an add-k smoothed n-gram model
trained in process, and a remote provider speaking a line-delimited JSON
protocol over a child process's stdio or a TCP socket.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import ContractError, ProviderError, VocabularyError

BOS_TOKEN = "<s>"
EOS_TOKEN = "</s>"

_LOGPROB_CACHE_LIMIT = 65536


@dataclass(frozen=True)
class Vocabulary:
    """Dense token-id space with distinguished BOS and EOS."""

    tokens: tuple[str, ...]
    bos_id: int
    eos_id: int

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise VocabularyError("token strings must be unique")
        for name, idx in (("bos_id", self.bos_id), ("eos_id", self.eos_id)):
            if not 0 <= idx < len(self.tokens):
                raise VocabularyError(f"{name} out of range: {idx}")
        if self.bos_id == self.eos_id:
            raise VocabularyError("bos_id and eos_id must differ")

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int | None:
        return self._token_to_id.get(token)

    @property
    def _token_to_id(self) -> dict[str, int]:
        cached = self.__dict__.get("_t2i")
        if cached is None:
            cached = {t: i for i, t in enumerate(self.tokens)}
            object.__setattr__(self, "_t2i", cached)
        return cached


@dataclass
class ScoreVector:
    """Per-token log-domain scores for one decoding step."""

    values: np.ndarray
    step_index: int = 0

    def log_mass(self) -> float:
        """logsumexp of the values; 0 for a normalized distribution."""
        finite = self.values[np.isfinite(self.values)]
        if finite.size == 0:
            return float("-inf")
        top = finite.max()
        return float(top + np.log(np.exp(finite - top).sum()))


class ScoreProvider(Protocol):
    vocabulary: Vocabulary

    def logprobs(self, context_ids: Sequence[int]) -> ScoreVector: ...


def logprobs(provider: ScoreProvider, context_ids: Sequence[int]) -> ScoreVector:
    """Normalized next-token log-probabilities for a BOS-initial context."""
    if not context_ids or context_ids[0] != provider.vocabulary.bos_id:
        raise ContractError("context must begin with BOS")
    return provider.logprobs(context_ids)


class NGramModel:
    """Add-k smoothed n-gram model; immutable once trained."""

    def __init__(
        self,
        order: int,
        vocabulary: Vocabulary,
        counts: dict[tuple[int, ...], dict[int, int]],
        smoothing_k: float,
    ):
        if order < 1:
            raise ContractError(f"order must be >= 1, got {order}")
        if not smoothing_k > 0:
            raise ContractError("smoothing_k must be > 0")
        self.order = order
        self.vocabulary = vocabulary
        self.counts = counts
        self.smoothing_k = float(smoothing_k)
        self._totals = {ctx: sum(row.values()) for ctx, row in counts.items()}
        self._cache: dict[tuple[int, ...], np.ndarray] = {}

    def _context_key(self, context_ids: Sequence[int]) -> tuple[int, ...]:
        n = self.order - 1
        ctx = tuple(context_ids[-n:]) if n else ()
        if len(ctx) < n:
            ctx = (self.vocabulary.bos_id,) * (n - len(ctx)) + ctx
        return ctx

    def logprobs(self, context_ids: Sequence[int]) -> ScoreVector:
        ctx = self._context_key(context_ids)
        values = self._cache.get(ctx)
        if values is None:
            size = self.vocabulary.size
            k = self.smoothing_k
            probs = np.full(size, k)
            for tok, count in self.counts.get(ctx, {}).items():
                probs[tok] += count
            probs /= self._totals.get(ctx, 0) + k * size
            values = np.log(probs)
            values.setflags(write=False)
            if len(self._cache) >= _LOGPROB_CACHE_LIMIT:
                self._cache.clear()
            self._cache[ctx] = values
        return ScoreVector(values=values, step_index=len(context_ids))

    def save(self, path) -> None:
        payload = {
            "format": "k2t-ngram",
            "version": 1,
            "order": self.order,
            "smoothing_k": self.smoothing_k,
            "tokens": list(self.vocabulary.tokens),
            "bos_id": self.vocabulary.bos_id,
            "eos_id": self.vocabulary.eos_id,
            "counts": [
                [list(ctx), sorted(row.items())]
                for ctx, row in sorted(self.counts.items())
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path) -> "NGramModel":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != "k2t-ngram":
            raise ContractError(f"not a k2t n-gram model file: {path}")
        vocab = Vocabulary(
            tokens=tuple(payload["tokens"]),
            bos_id=payload["bos_id"],
            eos_id=payload["eos_id"],
        )
        counts = {
            tuple(ctx): {int(tok): int(cnt) for tok, cnt in row}
            for ctx, row in payload["counts"]
        }
        return cls(payload["order"], vocab, counts, payload["smoothing_k"])


def train_ngram(
    corpus: Iterable[Sequence[int]],
    order: int,
    smoothing_k: float,
    vocabulary: Vocabulary,
) -> NGramModel:
    """Count (context, next) pairs over BOS-padded contexts of order-1."""
    if order < 1:
        raise ContractError(f"order must be >= 1, got {order}")
    counts: dict[tuple[int, ...], dict[int, int]] = {}
    n_ctx = order - 1
    bos, eos = vocabulary.bos_id, vocabulary.eos_id
    nonempty = False
    for seq in corpus:
        if len(seq) < 2 or seq[0] != bos or seq[-1] != eos:
            raise ContractError("each sequence must run from BOS to EOS")
        nonempty = True
        for i in range(1, len(seq)):
            ctx = tuple(seq[max(0, i - n_ctx):i]) if n_ctx else ()
            if len(ctx) < n_ctx:
                ctx = (bos,) * (n_ctx - len(ctx)) + ctx
            row = counts.setdefault(ctx, {})
            row[seq[i]] = row.get(seq[i], 0) + 1
    if not nonempty:
        raise ContractError("corpus is empty")
    return NGramModel(order, vocabulary, counts, smoothing_k)


def build_vocabulary(token_iterables: Iterable[Iterable[str]]) -> Vocabulary:
    """Vocabulary over sorted unique word tokens, BOS at 0 and EOS at 1."""
    words = sorted({t for toks in token_iterables for t in toks})
    if BOS_TOKEN in words or EOS_TOKEN in words:
        raise VocabularyError("corpus must not contain the reserved BOS/EOS")
    return Vocabulary(tokens=(BOS_TOKEN, EOS_TOKEN, *words), bos_id=0, eos_id=1)


# --- wire protocol -------------------------------------------------------
#
# provider -> client  {"type":"hello","tokens":[...],"bos_id":i,"eos_id":i}
# client -> provider  {"type":"logprobs","id":n,"context_ids":[...]}
# provider -> client  {"type":"logprobs","id":n,"values":[...]}
# either side         {"type":"error","id":n,"message":"..."}


class LineTransport(Protocol):
    def send_line(self, line: str) -> None: ...

    def recv_line(self) -> str: ...

    def close(self) -> None: ...


class StdioTransport:
    """Child process carrying one message per line on stdin/stdout."""

    def __init__(self, command: str | list[str]):
        argv = shlex.split(command) if isinstance(command, str) else command
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise ProviderError(f"cannot launch provider {argv!r}: {exc}") from exc

    def send_line(self, line: str) -> None:
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise ProviderError("provider process closed its stdin") from exc

    def recv_line(self) -> str:
        line = self._proc.stdout.readline()
        if not line:
            code = self._proc.poll()
            raise ProviderError(f"provider stream ended (exit code {code})")
        return line.rstrip("\n")

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


class TcpTransport:
    """TCP connection carrying the identical line protocol."""

    def __init__(self, host: str, port: int):
        try:
            self._sock = socket.create_connection((host, port))
        except OSError as exc:
            raise ProviderError(f"cannot connect to {host}:{port}: {exc}") from exc
        self._reader = self._sock.makefile("r", encoding="utf-8")
        self._writer = self._sock.makefile("w", encoding="utf-8")

    def send_line(self, line: str) -> None:
        try:
            self._writer.write(line + "\n")
            self._writer.flush()
        except OSError as exc:
            raise ProviderError("provider connection closed") from exc

    def recv_line(self) -> str:
        line = self._reader.readline()
        if not line:
            raise ProviderError("provider connection ended")
        return line.rstrip("\n")

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def _parse_message(line: str) -> dict:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProviderError(f"malformed message from provider: {exc}") from None
    if not isinstance(msg, dict) or "type" not in msg:
        raise ProviderError(f"malformed message from provider: {line[:120]!r}")
    return msg


def remote_handshake(transport: LineTransport) -> Vocabulary:
    """Read the hello line and build the provider's vocabulary."""
    msg = _parse_message(transport.recv_line())
    if msg["type"] != "hello":
        raise ProviderError(f"expected hello handshake, got {msg['type']!r}")
    try:
        return Vocabulary(
            tokens=tuple(msg["tokens"]),
            bos_id=int(msg["bos_id"]),
            eos_id=int(msg["eos_id"]),
        )
    except (KeyError, TypeError) as exc:
        raise ProviderError(f"incomplete hello handshake: {exc}") from None


class RemoteProvider:
    """Score provider backed by a remote process over a LineTransport.

    One connection serves one generation at a time; requests are strictly
    serialized, so every response line must answer the request before it.
    """

    def __init__(self, transport: LineTransport):
        self._transport = transport
        self.vocabulary = remote_handshake(transport)
        self._next_id = 0

    @classmethod
    def spawn(cls, command: str | list[str]) -> "RemoteProvider":
        return cls(StdioTransport(command))

    @classmethod
    def connect(cls, host: str, port: int) -> "RemoteProvider":
        return cls(TcpTransport(host, port))

    def logprobs(self, context_ids: Sequence[int]) -> ScoreVector:
        request_id = self._next_id
        self._next_id += 1
        self._transport.send_line(
            json.dumps(
                {
                    "type": "logprobs",
                    "id": request_id,
                    "context_ids": list(map(int, context_ids)),
                },
                separators=(",", ":"),
            )
        )
        msg = _parse_message(self._transport.recv_line())
        if msg["type"] == "error":
            raise ProviderError(
                f"provider error for request {msg.get('id')}: {msg.get('message')}"
            )
        if msg["type"] == "hello":
            raise ProviderError("duplicate handshake from provider")
        if msg["type"] != "logprobs":
            raise ProviderError(f"unexpected message type {msg['type']!r}")
        if msg.get("id") != request_id:
            raise ProviderError(
                f"response id {msg.get('id')} does not match request {request_id}"
            )
        values = np.asarray(msg.get("values", []), dtype=np.float64)
        if values.shape != (self.vocabulary.size,):
            raise ProviderError(
                f"expected {self.vocabulary.size} values, got {values.shape}"
            )
        vec = ScoreVector(values=values, step_index=len(context_ids))
        if abs(vec.log_mass()) > 1e-3:
            raise ProviderError(
                f"provider values are not normalized (logsumexp={vec.log_mass():.2e})"
            )
        values.setflags(write=False)
        return vec

    def close(self) -> None:
        self._transport.close()

    def __enter__(self) -> "RemoteProvider":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
