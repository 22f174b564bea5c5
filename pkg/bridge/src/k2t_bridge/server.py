"""Serve a pretrained causal LM behind the line-delimited logprob protocol.

Wire format, one JSON message per line:

    server -> client  {"type":"hello","tokens":[...],"bos_id":i,"eos_id":i}
    client -> server  {"type":"logprobs","id":n,"context_ids":[...]}
    server -> client  {"type":"logprobs","id":n,"values":[...]}
    either side       {"type":"error","id":n,"message":"..."}

Values are log-softmaxed next-token log-probabilities, so the client can
accumulate comparable scores. The full context is resent on every request;
no per-request state lives in the server.
"""

from __future__ import annotations

import argparse
import json
import logging
import socket
import sys

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

log = logging.getLogger("k2t_bridge")


class BridgeError(Exception):
    pass


class BridgeServer:
    def __init__(
        self,
        model_name: str,
        device: str = "cpu",
        bos_id: int | None = None,
        eos_id: int | None = None,
    ):
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModelForCausalLM.from_pretrained(model_name)
        self.model.to(device)
        self.model.eval()
        self.device = device
        self.vocab_size = len(self.tokenizer)

        self.bos_id = bos_id if bos_id is not None else self.tokenizer.bos_token_id
        self.eos_id = eos_id if eos_id is not None else self.tokenizer.eos_token_id
        if self.bos_id is None or self.eos_id is None:
            raise BridgeError(
                "tokenizer lacks BOS/EOS ids; pass --bos-id / --eos-id"
            )
        if self.bos_id == self.eos_id:
            raise BridgeError(
                "BOS and EOS ids coincide (common for GPT-2 style models); "
                "pick a distinct --bos-id for the protocol handshake"
            )

    def hello(self) -> dict:
        tokens = self.tokenizer.convert_ids_to_tokens(list(range(self.vocab_size)))
        tokens = [
            t if t is not None else f"<unused-{i}>" for i, t in enumerate(tokens)
        ]
        return {
            "type": "hello",
            "tokens": tokens,
            "bos_id": int(self.bos_id),
            "eos_id": int(self.eos_id),
        }

    @torch.no_grad()
    def logprobs(self, context_ids: list[int]) -> list[float]:
        if not context_ids:
            raise BridgeError("context_ids must be nonempty")
        if any(not 0 <= i < self.vocab_size for i in context_ids):
            raise BridgeError("context id out of vocabulary range")
        ids = torch.tensor([context_ids], dtype=torch.long, device=self.device)
        logits = self.model(ids).logits[0, -1, : self.vocab_size]
        values = torch.log_softmax(logits.double(), dim=-1)
        return values.cpu().tolist()

    def handle_line(self, line: str) -> dict:
        request_id = None
        try:
            msg = json.loads(line)
            request_id = msg.get("id") if isinstance(msg, dict) else None
            if not isinstance(msg, dict) or msg.get("type") != "logprobs":
                raise BridgeError(f"unsupported message: {line[:80]!r}")
            context_ids = msg.get("context_ids")
            if not isinstance(context_ids, list):
                raise BridgeError("context_ids must be a list")
            values = self.logprobs([int(i) for i in context_ids])
            return {"type": "logprobs", "id": request_id, "values": values}
        except (json.JSONDecodeError, BridgeError, ValueError, TypeError) as exc:
            return {"type": "error", "id": request_id, "message": str(exc)}

    def serve_stream(self, reader, writer) -> None:
        writer.write(json.dumps(self.hello()) + "\n")
        writer.flush()
        for line in reader:
            if not line.strip():
                continue
            try:
                reply = self.handle_line(line)
            except Exception as exc:  # model failure: report, then shut down
                log.exception("model failure")
                writer.write(json.dumps(
                    {"type": "error", "id": None,
                     "message": f"model failure: {exc}"}
                ) + "\n")
                writer.flush()
                raise
            writer.write(json.dumps(reply) + "\n")
            writer.flush()

    def serve_stdio(self) -> None:
        self.serve_stream(sys.stdin, sys.stdout)

    def serve_tcp(self, port: int, host: str = "127.0.0.1",
                  max_connections: int | None = None) -> None:
        server = socket.socket()
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind((host, port))
        server.listen(1)
        log.info("listening on %s:%d", host, server.getsockname()[1])
        served = 0
        try:
            while max_connections is None or served < max_connections:
                conn, peer = server.accept()
                log.info("connection from %s", peer)
                with conn:
                    reader = conn.makefile("r", encoding="utf-8")
                    writer = conn.makefile("w", encoding="utf-8")
                    try:
                        self.serve_stream(reader, writer)
                    except (BrokenPipeError, ConnectionResetError):
                        log.info("client disconnected")
                served += 1
        finally:
            server.close()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="k2t-bridge",
        description="Serve a causal LM's next-token log-probabilities",
    )
    parser.add_argument("--model", required=True,
                        help="model name or local path")
    transport = parser.add_mutually_exclusive_group(required=True)
    transport.add_argument("--stdio", action="store_true",
                           help="speak the protocol on stdin/stdout")
    transport.add_argument("--tcp", type=int, metavar="PORT",
                           help="listen on a TCP port")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--bos-id", type=int, default=None,
                        help="override the BOS id sent in the handshake")
    parser.add_argument("--eos-id", type=int, default=None)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(name)s: %(message)s")
    try:
        server = BridgeServer(args.model, device=args.device,
                              bos_id=args.bos_id, eos_id=args.eos_id)
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.stdio:
        server.serve_stdio()
    else:
        server.serve_tcp(args.tcp)
    return 0


if __name__ == "__main__":
    sys.exit(main())
