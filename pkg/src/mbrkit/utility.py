"""Utility-function providers shared by every decision rule.

Two provider shapes are first-class: `joint` providers score a (support,
hypothesis) text pair in one call, while `factorable` providers decompose
into per-sentence embeddings plus a cheap estimator over (source, support,
hypothesis) embedding triples.  All utilities are higher-is-better.

The built-in mocks are deterministic and cheap so that every decision path
is testable in-process:

  * lexical-mock (factorable): L2-normalized bag of FNV-1a token hashes in a
    256-dim vector; estimate is the cosine of the support and hypothesis
    embeddings, ignoring the source slot.
  * qe-mock (joint): token-level F1 after whitespace tokenization.
  * bleu-utility (joint): sentence BLEU of the hypothesis against the
    support, with exp_decay smoothing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bleu import sentence_bleu, tokenize

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1

LEXICAL_DIM = 256


class ScoringError(Exception):
    """A provider failed to score; `index` locates the failing item."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class ProviderShapeError(TypeError):
    """An operation was requested from a provider of the wrong shape."""


@dataclass(frozen=True)
class ProviderCapabilities:
    name: str
    shape: str  # "factorable" | "joint"
    embedding_dim: int | None = None
    deterministic: bool = True

    def __post_init__(self) -> None:
        if self.shape not in ("factorable", "joint"):
            raise ValueError(f"unknown provider shape: {self.shape!r}")
        if (self.shape == "factorable") != (self.embedding_dim is not None):
            raise ValueError("embedding_dim must be present iff shape is factorable")
        if self.embedding_dim is not None and self.embedding_dim < 1:
            raise ValueError("embedding_dim must be positive")


@dataclass
class UtilityMatrix:
    """|C| x |S| utility table: entry (i, j) = u(supports[j], candidates[i])."""

    values: list[list[float]]
    row_labels: list[int]
    col_labels: list[int]

    @property
    def rows(self) -> int:
        return len(self.values)

    @property
    def cols(self) -> int:
        return len(self.values[0]) if self.values else 0


class UtilityProvider:
    """Base provider; subclasses fill in the methods their shape supports."""

    capabilities: ProviderCapabilities

    @property
    def name(self) -> str:
        return self.capabilities.name

    @property
    def shape(self) -> str:
        return self.capabilities.shape

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        raise NotImplementedError

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        raise ProviderShapeError(f"provider {self.name!r} is {self.shape}; embed needs factorable")

    def estimate(
        self, triples: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]]
    ) -> list[float]:
        raise ProviderShapeError(f"provider {self.name!r} is {self.shape}; estimate needs factorable")


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash; the lexical mock and its remote twins must agree bit-for-bit."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


class LexicalMockProvider(UtilityProvider):
    """Deterministic hashed bag-of-tokens embedder with cosine estimation."""

    def __init__(self) -> None:
        self.capabilities = ProviderCapabilities(
            name="lexical-mock", shape="factorable", embedding_dim=LEXICAL_DIM
        )
        self._cache: dict[str, np.ndarray] = {}

    def _embed_one(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        vec = np.zeros(LEXICAL_DIM, dtype=np.float64)
        for token in text.split():
            h = fnv1a64(token.encode("utf-8"))
            bucket = h % LEXICAL_DIM
            # sign from the top hash bit
            vec[bucket] += -1.0 if (h >> 63) & 1 else 1.0
        norm = math.sqrt(float(np.dot(vec, vec)))
        if norm > 0.0:
            vec /= norm
        vec.setflags(write=False)
        self._cache[text] = vec
        return vec

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self._embed_one(t) for t in texts]

    def estimate(
        self, triples: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]]
    ) -> list[float]:
        scores = []
        for idx, (src, support, hyp) in enumerate(triples):
            for vec in (src, support, hyp):
                if len(vec) != LEXICAL_DIM:
                    raise ScoringError(
                        f"embedding of length {len(vec)} does not match dim {LEXICAL_DIM}",
                        index=idx,
                    )
            scores.append(_cosine(support, hyp))
        return scores

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        # Mock-only convenience: the left text fills both the source and
        # support slots.  Decision rules never take this path.
        triples = [
            (self._embed_one(left), self._embed_one(left), self._embed_one(right))
            for left, right in pairs
        ]
        return self.estimate(triples)


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    # sqrt of the squared-norm product keeps cosine(x, x) exactly 1.0
    dot = float(np.dot(u, v))
    nu2 = float(np.dot(u, u))
    nv2 = float(np.dot(v, v))
    if nu2 == 0.0 or nv2 == 0.0:
        return 0.0
    return dot / math.sqrt(nu2 * nv2)


class QEMockProvider(UtilityProvider):
    """Token-level F1 between the pair texts; symmetric by construction."""

    def __init__(self) -> None:
        self.capabilities = ProviderCapabilities(name="qe-mock", shape="joint")
        self._bags: dict[str, tuple[dict[str, int], int]] = {}

    def _bag(self, text: str) -> tuple[dict[str, int], int]:
        cached = self._bags.get(text)
        if cached is not None:
            return cached
        counts: dict[str, int] = {}
        tokens = text.split()
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        entry = (counts, len(tokens))
        self._bags[text] = entry
        return entry

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        scores = []
        bag = self._bag
        for left, right in pairs:
            a, la = bag(left)
            b, lb = bag(right)
            if la == 0 and lb == 0:
                scores.append(1.0)
                continue
            if len(b) < len(a):
                a, b = b, a
            overlap = 0
            get = b.get
            for gram, count in a.items():
                other = get(gram, 0)
                if other:
                    overlap += count if count < other else other
            scores.append(0.0 if overlap == 0 else 2.0 * overlap / (la + lb))
        return scores


class BleuUtilityProvider(UtilityProvider):
    """Surface-metric utility u(support, hyp) = sentence BLEU of hyp vs support."""

    def __init__(self, tokenize_mode: str = "intl") -> None:
        self.capabilities = ProviderCapabilities(name="bleu-utility", shape="joint")
        self.tokenize_mode = tokenize_mode
        self._tokens: dict[str, list[str]] = {}

    def _tokenize(self, text: str) -> list[str]:
        cached = self._tokens.get(text)
        if cached is None:
            cached = tokenize(text, self.tokenize_mode)
            self._tokens[text] = cached
        return cached

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [
            sentence_bleu(self._tokenize(hyp), [self._tokenize(support)], smoothing="exp_decay").value
            for support, hyp in pairs
        ]


MOCK_PROVIDERS = {
    "lexical": LexicalMockProvider,
    "qe": QEMockProvider,
    "bleu": BleuUtilityProvider,
}


def get_mock_provider(name: str) -> UtilityProvider:
    try:
        return MOCK_PROVIDERS[name]()
    except KeyError:
        raise ValueError(f"unknown mock provider: {name!r}") from None


def build_utility_matrix(
    provider: UtilityProvider,
    candidates: Sequence[str],
    supports: Sequence[str],
    context_source: str | None = None,
) -> UtilityMatrix:
    """Score every (support, candidate) pair into a |C| x |S| matrix.

    Joint providers receive the raw text pairs.  Factorable providers require
    `context_source` and go through embed/estimate, embedding every distinct
    text exactly once.
    """
    if not candidates or not supports:
        raise ValueError("candidates and supports must be non-empty")
    n_rows, n_cols = len(candidates), len(supports)

    if provider.shape == "joint":
        pairs = [(s, c) for c in candidates for s in supports]
        try:
            flat = provider.score_pairs(pairs)
        except ScoringError as exc:
            raise _locate(exc, n_cols) from exc
    else:
        if context_source is None:
            raise ProviderShapeError(
                "factorable providers need a context_source to build a utility matrix"
            )
        distinct = list(dict.fromkeys([context_source, *supports, *candidates]))
        embeddings = dict(zip(distinct, provider.embed(distinct)))
        src = embeddings[context_source]
        triples = [
            (src, embeddings[s], embeddings[c]) for c in candidates for s in supports
        ]
        try:
            flat = provider.estimate(triples)
        except ScoringError as exc:
            raise _locate(exc, n_cols) from exc

    if len(flat) != n_rows * n_cols:
        raise ScoringError(
            f"provider returned {len(flat)} scores for {n_rows * n_cols} items"
        )
    values = [flat[i * n_cols : (i + 1) * n_cols] for i in range(n_rows)]
    return UtilityMatrix(
        values=values,
        row_labels=list(range(n_rows)),
        col_labels=list(range(n_cols)),
    )


def _locate(exc: ScoringError, n_cols: int) -> ScoringError:
    if exc.index is None:
        return exc
    row, col = divmod(exc.index, n_cols)
    return ScoringError(f"{exc} at matrix entry ({row}, {col})", index=exc.index)
