"""Request loop for the scorer protocol.

One UTF-8 JSON object per newline-terminated line on stdin/stdout:

    {"req_id": 0, "op": "hello", "protocol": 1}
    {"req_id": n, "op": "score_pair", "pairs": [[left, right], ...]}
    {"req_id": n, "op": "embed", "texts": [...]}
    {"req_id": n, "op": "estimate", "triples": [[[...],[...],[...]], ...]}

Every request is answered immediately and independently; the loop holds no
state between requests, so reordering requests never changes any individual
response.  Failures are reported as {"req_id": n, "error": str}.
"""

import json
import sys
from dataclasses import dataclass

from .mocks import EMBEDDING_DIM, cosine, lexical_embed, token_f1

PROTOCOL_VERSION = 1

BACKENDS = ("lexical_mock", "qe_mock", "real_model")


class AdapterStartupError(Exception):
    """The configured backend could not be brought up."""


@dataclass(frozen=True)
class AdapterConfig:
    backend: str
    model_id: str | None = None
    device: str | None = None
    batch_size: int = 32

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend: {self.backend!r}")
        if (self.backend == "real_model") != (self.model_id is not None):
            raise ValueError("model_id is required for real_model and only for real_model")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


class LexicalMockBackend:
    name = "lexical_mock"
    shape = "factorable"
    embedding_dim = EMBEDDING_DIM
    deterministic = True

    def score_pairs(self, pairs):
        # left text fills both the source and support slots, as in the
        # primary mock's convenience path
        return [cosine(lexical_embed(left), lexical_embed(right)) for left, right in pairs]

    def embed(self, texts):
        return [lexical_embed(t) for t in texts]

    def estimate(self, triples):
        return [cosine(support, hyp) for _, support, hyp in triples]


class QEMockBackend:
    name = "qe_mock"
    shape = "joint"
    embedding_dim = None
    deterministic = True

    def score_pairs(self, pairs):
        return [token_f1(left, right) for left, right in pairs]


class RealModelBackend:
    """Sentence-embedding model behind the same surface.

    embed goes straight to the model, score_pair and estimate reduce to the
    cosine of the relevant embeddings; which model is a config choice.
    """

    shape = "factorable"
    deterministic = False

    def __init__(self, model_id, device=None, batch_size=32):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise AdapterStartupError(f"sentence-transformers is not installed: {exc}") from exc
        try:
            self.model = SentenceTransformer(model_id, device=device)
        except Exception as exc:
            raise AdapterStartupError(f"cannot load model {model_id!r}: {exc}") from exc
        self.name = f"real:{model_id}"
        self.embedding_dim = self.model.get_sentence_embedding_dimension()
        self.batch_size = batch_size

    def _encode(self, texts):
        vectors = self.model.encode(
            list(texts), batch_size=self.batch_size, convert_to_numpy=True
        )
        return [v.tolist() for v in vectors]

    def embed(self, texts):
        return self._encode(texts)

    def score_pairs(self, pairs):
        lefts = self._encode([left for left, _ in pairs])
        rights = self._encode([right for _, right in pairs])
        return [cosine(l, r) for l, r in zip(lefts, rights)]

    def estimate(self, triples):
        return [cosine(support, hyp) for _, support, hyp in triples]


def build_backend(config: AdapterConfig):
    if config.backend == "lexical_mock":
        return LexicalMockBackend()
    if config.backend == "qe_mock":
        return QEMockBackend()
    return RealModelBackend(config.model_id, config.device, config.batch_size)


def _error(req_id, message):
    return {"req_id": req_id, "error": message}


def _chunked(items, size):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def handle_request(backend, request, batch_size):
    """One request in, one response object out; never raises."""
    if not isinstance(request, dict):
        return _error(None, "request must be a JSON object")
    req_id = request.get("req_id")
    op = request.get("op")

    if op == "hello":
        if request.get("protocol") != PROTOCOL_VERSION:
            return _error(req_id, f"unsupported protocol {request.get('protocol')!r}")
        reply = {
            "req_id": req_id,
            "name": backend.name,
            "shape": backend.shape,
            "deterministic": backend.deterministic,
        }
        if backend.embedding_dim is not None:
            reply["embedding_dim"] = backend.embedding_dim
        return reply

    if op == "score_pair":
        pairs = request.get("pairs")
        if not isinstance(pairs, list) or not all(
            isinstance(p, list) and len(p) == 2 and all(isinstance(t, str) for t in p)
            for p in pairs
        ):
            return _error(req_id, "score_pair needs 'pairs': [[left, right], ...]")
        scores = []
        for chunk in _chunked(pairs, batch_size):
            scores.extend(backend.score_pairs([tuple(p) for p in chunk]))
        return {"req_id": req_id, "scores": scores}

    if op == "embed":
        if backend.shape != "factorable":
            return _error(req_id, f"backend {backend.name!r} is joint; embed unsupported")
        texts = request.get("texts")
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            return _error(req_id, "embed needs 'texts': [str, ...]")
        embeddings = []
        for chunk in _chunked(texts, batch_size):
            embeddings.extend(backend.embed(chunk))
        return {"req_id": req_id, "embeddings": embeddings}

    if op == "estimate":
        if backend.shape != "factorable":
            return _error(req_id, f"backend {backend.name!r} is joint; estimate unsupported")
        triples = request.get("triples")
        if not isinstance(triples, list) or not all(
            isinstance(t, list) and len(t) == 3 for t in triples
        ):
            return _error(req_id, "estimate needs 'triples': [[src, support, hyp], ...]")
        for t in triples:
            for vec in t:
                if not isinstance(vec, list) or len(vec) != backend.embedding_dim:
                    return _error(
                        req_id,
                        f"estimate vectors must have length {backend.embedding_dim}",
                    )
        scores = []
        for chunk in _chunked(triples, batch_size):
            scores.extend(backend.estimate([tuple(t) for t in chunk]))
        return {"req_id": req_id, "scores": scores}

    return _error(req_id, f"unknown op {op!r}")


def serve(config: AdapterConfig, stdin=None, stdout=None):
    """Answer requests until EOF on input."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    backend = build_backend(config)
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            response = _error(None, f"malformed request: {exc.msg}")
        else:
            response = handle_request(backend, request, config.batch_size)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
