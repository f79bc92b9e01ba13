"""Decision rules over candidate hypotheses.

Every rule materializes the full decision-score vector and resolves the
argmax set with an absolute tolerance of 1e-12; the winner is the lowest
tied index unless callers opt into logprob tie-breaking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .corpus import Candidate
from .utility import ProviderShapeError, UtilityProvider, build_utility_matrix

TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class DecisionResult:
    rule: str
    selected_index: int
    scores: list[float]
    tied_indices: list[int]
    support_size: int
    weighted: bool

    @property
    def selected(self) -> int:
        return self.selected_index


@dataclass(frozen=True)
class SupportWeights:
    """Nonnegative weights over a support set, normalized to sum to 1."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("weights must be non-empty")
        if any(not math.isfinite(w) or w < 0.0 for w in self.values):
            raise ValueError("weights must be finite and >= 0")
        total = sum(self.values)
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"weights must sum to 1, got {total}")

    @classmethod
    def uniform(cls, n: int) -> "SupportWeights":
        if n < 1:
            raise ValueError("support set must be non-empty")
        return cls(values=(1.0 / n,) * n)

    @classmethod
    def from_raw(cls, raw: Sequence[float]) -> "SupportWeights":
        if not raw:
            raise ValueError("weights must be non-empty")
        if any(not math.isfinite(w) or w < 0.0 for w in raw):
            raise ValueError("weights must be finite and >= 0")
        total = sum(raw)
        if total <= 0.0:
            raise ValueError("weights must not all be zero")
        return cls(values=tuple(w / total for w in raw))

    @classmethod
    def from_logprobs(cls, logprobs: Sequence[float]) -> "SupportWeights":
        """Softmax over the support subset: exp(logprob), renormalized."""
        return cls.from_raw([math.exp(lp) for lp in logprobs])


def _texts(candidates: Sequence[Candidate | str]) -> list[str]:
    return [c.text if isinstance(c, Candidate) else c for c in candidates]


def _logprobs(candidates: Sequence[Candidate | str]) -> list[float | None]:
    return [c.logprob if isinstance(c, Candidate) else None for c in candidates]


def _decide(
    scores: Sequence[float], tie_break: str, logprobs: Sequence[float | None] | None = None
) -> tuple[int, list[int]]:
    if not scores:
        raise ValueError("empty candidate list")
    if any(not math.isfinite(s) for s in scores):
        raise ValueError("decision scores must be finite")
    best = max(scores)
    tied = [i for i, s in enumerate(scores) if s >= best - TIE_TOLERANCE]
    if tie_break == "lowest_index":
        return tied[0], tied
    if tie_break == "logprob":
        if logprobs is None or any(logprobs[i] is None for i in tied):
            raise ValueError("logprob tie-breaking requires logprobs on all tied candidates")
        return min(tied, key=lambda i: (-logprobs[i], i)), tied
    raise ValueError(f"unknown tie_break: {tie_break!r}")


def _weights_for(supports_len: int, weights: SupportWeights | None) -> tuple[float, ...]:
    if weights is None:
        return SupportWeights.uniform(supports_len).values
    if len(weights.values) != supports_len:
        raise ValueError(
            f"got {len(weights.values)} weights for {supports_len} supports"
        )
    return weights.values


def map_select(candidates: Sequence[Candidate], tie_break: str = "lowest_index") -> DecisionResult:
    """Select the candidate with the highest model log-probability."""
    if not candidates:
        raise ValueError("empty candidate list")
    missing = [i for i, c in enumerate(candidates) if c.logprob is None]
    if missing:
        raise ValueError(f"candidates without logprob at indices {missing}")
    scores = [c.logprob for c in candidates]
    selected, tied = _decide(scores, "lowest_index")
    return DecisionResult(
        rule="map",
        selected_index=selected,
        scores=scores,
        tied_indices=tied,
        support_size=0,
        weighted=False,
    )


def mbr_select_naive(
    candidates: Sequence[Candidate | str],
    supports: Sequence[str],
    provider: UtilityProvider,
    weights: SupportWeights | None = None,
    source: str | None = None,
    tie_break: str = "lowest_index",
) -> DecisionResult:
    """Expected-utility selection over the full |C| x |S| utility matrix.

    `source` is required for factorable providers, where it fills the
    context slot of each estimator triple; joint providers ignore it.
    """
    cand_texts = _texts(candidates)
    if not cand_texts or not supports:
        raise ValueError("candidates and supports must be non-empty")
    matrix = build_utility_matrix(provider, cand_texts, supports, context_source=source)
    w = _weights_for(len(supports), weights)
    scores = [sum(wj * uj for wj, uj in zip(w, row)) for row in matrix.values]
    selected, tied = _decide(scores, tie_break, _logprobs(candidates))
    return DecisionResult(
        rule="mbr_naive",
        selected_index=selected,
        scores=scores,
        tied_indices=tied,
        support_size=len(supports),
        weighted=weights is not None,
    )


def mbr_select_fast(
    candidates: Sequence[Candidate | str],
    supports: Sequence[str],
    source: str,
    provider: UtilityProvider,
    weights: SupportWeights | None = None,
    tie_break: str = "lowest_index",
) -> DecisionResult:
    """MBR through the factorable decomposition.

    Embeds each distinct text among {source} + candidates + supports exactly
    once, then estimates all |C| x |S| triples; selections match
    `mbr_select_naive` on the same inputs.
    """
    if provider.shape != "factorable":
        raise ProviderShapeError(
            f"mbr_select_fast needs a factorable provider, got {provider.name!r} ({provider.shape})"
        )
    cand_texts = _texts(candidates)
    if not cand_texts or not supports:
        raise ValueError("candidates and supports must be non-empty")
    distinct = list(dict.fromkeys([source, *supports, *cand_texts]))
    embeddings = dict(zip(distinct, provider.embed(distinct)))
    src_emb = embeddings[source]
    support_embs = [embeddings[s] for s in supports]
    triples = [
        (src_emb, s_emb, embeddings[c]) for c in cand_texts for s_emb in support_embs
    ]
    flat = provider.estimate(triples)
    n_cols = len(supports)
    w = _weights_for(n_cols, weights)
    scores = [
        sum(wj * uj for wj, uj in zip(w, flat[i * n_cols : (i + 1) * n_cols]))
        for i in range(len(cand_texts))
    ]
    selected, tied = _decide(scores, tie_break, _logprobs(candidates))
    return DecisionResult(
        rule="mbr_fast",
        selected_index=selected,
        scores=scores,
        tied_indices=tied,
        support_size=len(supports),
        weighted=weights is not None,
    )


def qe_rerank(
    source: str,
    candidates: Sequence[Candidate | str],
    provider: UtilityProvider,
    tie_break: str = "lowest_index",
) -> DecisionResult:
    """Select the candidate with the highest quality-estimation score."""
    cand_texts = _texts(candidates)
    if not cand_texts:
        raise ValueError("empty candidate list")
    scores = provider.score_pairs([(source, c) for c in cand_texts])
    selected, tied = _decide(scores, tie_break, _logprobs(candidates))
    return DecisionResult(
        rule="qe_rerank",
        selected_index=selected,
        scores=scores,
        tied_indices=tied,
        support_size=1,
        weighted=False,
    )


def smbr_select(
    sources: Sequence[tuple[str, float | None]],
    candidates: Sequence[Candidate | str],
    provider: UtilityProvider,
    tie_break: str = "lowest_index",
) -> DecisionResult:
    """Source-based MBR over (text, weight) support sources.

    With a single original source this reduces to `qe_rerank` bit-for-bit;
    weights, when present on every source, are renormalized, otherwise the
    sources are weighted uniformly.
    """
    if not sources:
        raise ValueError("empty support source list")
    cand_texts = _texts(candidates)
    if not cand_texts:
        raise ValueError("empty candidate list")
    source_texts = [s for s, _ in sources]
    raw_weights = [w for _, w in sources]
    weighted = all(w is not None for w in raw_weights)
    if weighted:
        weights = SupportWeights.from_raw(raw_weights)
    elif any(w is not None for w in raw_weights):
        raise ValueError("either all support sources carry a weight or none do")
    else:
        weights = SupportWeights.uniform(len(sources))
    w = weights.values
    pairs = [(s, c) for c in cand_texts for s in source_texts]
    flat = provider.score_pairs(pairs)
    n_cols = len(source_texts)
    scores = [
        sum(wj * uj for wj, uj in zip(w, flat[i * n_cols : (i + 1) * n_cols]))
        for i in range(len(cand_texts))
    ]
    selected, tied = _decide(scores, tie_break, _logprobs(candidates))
    return DecisionResult(
        rule="smbr",
        selected_index=selected,
        scores=scores,
        tied_indices=tied,
        support_size=len(sources),
        weighted=weighted,
    )


def filter_support(
    candidates: Sequence[Candidate | str],
    source: str,
    provider: UtilityProvider,
    m: int,
) -> list[str]:
    """The m candidates with highest QE against the source, best first.

    Ties go to the lower candidate index, consistent with `qe_rerank`.
    """
    cand_texts = _texts(candidates)
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > len(cand_texts):
        raise ValueError(f"m={m} exceeds the {len(cand_texts)} candidates")
    scores = provider.score_pairs([(source, c) for c in cand_texts])
    order = sorted(range(len(cand_texts)), key=lambda i: (-scores[i], i))
    return [cand_texts[i] for i in order[:m]]
