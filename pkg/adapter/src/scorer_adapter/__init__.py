"""Reference external scorer for the mbrkit line-delimited JSON protocol.

Mock backends (`lexical_mock`, `qe_mock`) reproduce the primary toolkit's
in-process mocks bit-compatibly for protocol conformance testing; the
`real_model` backend wraps a sentence-embedding model for end-to-end runs.
"""

from .mocks import EMBEDDING_DIM, cosine, fnv1a64, lexical_embed, token_f1
from .server import AdapterConfig, AdapterStartupError, handle_request, serve

__version__ = "0.1.0"

__all__ = [
    "EMBEDDING_DIM",
    "AdapterConfig",
    "AdapterStartupError",
    "cosine",
    "fnv1a64",
    "handle_request",
    "lexical_embed",
    "serve",
    "token_f1",
]
