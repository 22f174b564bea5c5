"""Transformer logprob sidecar for the k2t wire protocol."""

from .server import BridgeServer, main

__version__ = "0.1.0"

__all__ = ["BridgeServer", "main", "__version__"]
