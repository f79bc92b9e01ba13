"""Support-set analyses: source-count ablation, quasi-source quality and
average-QE-vs-support-size curves.

Support sets are truncated in file order after the original source, so every
curve point at support size 1 coincides exactly with QE reranking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .corpus import Segment, SegmentSet, support_view
from .decision import qe_rerank, smbr_select
from .utility import UtilityProvider, _cosine


@dataclass(frozen=True)
class AblationCurve:
    k_values: tuple[int, ...]
    metric_values: tuple[float, ...]
    metric_name: str

    def __post_init__(self) -> None:
        if not self.k_values or len(self.k_values) != len(self.metric_values):
            raise ValueError("k_values and metric_values must be parallel and non-empty")
        if any(b <= a for a, b in zip(self.k_values, self.k_values[1:])):
            raise ValueError("k_values must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "metric_name": self.metric_name,
            "k_values": list(self.k_values),
            "metric_values": list(self.metric_values),
        }


@dataclass(frozen=True)
class SourceQualityReport:
    self_bleu: float | None
    mean_semantic_similarity: float
    n_sources: int

    def to_dict(self) -> dict:
        return {
            "self_bleu": self.self_bleu,
            "mean_semantic_similarity": self.mean_semantic_similarity,
            "n_sources": self.n_sources,
        }


SelectionMetric = Callable[[Sequence[str], Sequence[Sequence[str]]], float]


def _segments(segments: SegmentSet | Sequence[Segment]) -> list[Segment]:
    return list(segments)


def _check_support_depth(segs: Sequence[Segment], max_k: int) -> None:
    for seg in segs:
        available = 1 + sum(1 for q in seg.quasi_sources if q.provenance != "original")
        if available < max_k:
            raise ValueError(
                f"segment {seg.id!r} has {available} support sources, needs {max_k}"
            )


def _select_at_k(seg: Segment, provider: UtilityProvider, k: int) -> str:
    supports = support_view(seg, "quasi_sources_with_original")[:k]
    result = smbr_select(supports, seg.candidates, provider)
    return seg.candidates[result.selected_index].text


def source_count_ablation(
    segments: SegmentSet | Sequence[Segment],
    provider: UtilityProvider,
    k_values: Sequence[int],
    selection_metric: SelectionMetric,
    metric_name: str = "selection_metric",
) -> AblationCurve:
    """Evaluate sMBR selections as the support size grows.

    For each k the support set is the original source plus the first k-1
    quasi-sources; selections are scored against references with
    `selection_metric`.
    """
    segs = _segments(segments)
    if not segs:
        raise ValueError("no segments")
    _check_support_depth(segs, max(k_values))
    points = []
    for k in k_values:
        selections = [_select_at_k(seg, provider, k) for seg in segs]
        points.append(selection_metric(selections, [seg.references for seg in segs]))
    return AblationCurve(
        k_values=tuple(k_values), metric_values=tuple(points), metric_name=metric_name
    )


def avg_qe_to_original(
    segments: SegmentSet | Sequence[Segment],
    provider: UtilityProvider,
    k_values: Sequence[int],
) -> AblationCurve:
    """Mean QE of each support size's winner against the original source.

    At k = 1 this is the mean of the per-segment maximum QE scores; at any
    larger k the per-segment value can only stay equal or drop, since the
    k = 1 winner maximizes QE-to-original by definition.
    """
    segs = _segments(segments)
    if not segs:
        raise ValueError("no segments")
    _check_support_depth(segs, max(k_values))
    points = []
    for k in k_values:
        total = 0.0
        for seg in segs:
            winner = _select_at_k(seg, provider, k)
            total += provider.score_pairs([(seg.source, winner)])[0]
        points.append(total / len(segs))
    return AblationCurve(
        k_values=tuple(k_values),
        metric_values=tuple(points),
        metric_name="avg_qe_to_original",
    )


def per_segment_qe_of_winners(
    seg: Segment, provider: UtilityProvider, k: int
) -> float:
    """QE against the original source of the sMBR winner at support size k."""
    winner = _select_at_k(seg, provider, k)
    return provider.score_pairs([(seg.source, winner)])[0]


def source_quality(
    segments: Segment | SegmentSet | Sequence[Segment],
    embed_provider: UtilityProvider,
) -> SourceQualityReport:
    """Surface diversity (Self-BLEU) and semantic similarity of quasi-sources.

    Similarity is the cosine between the embeddings of the original source
    and each quasi-source, kept in [-1, 1] (scaled x100 only when printed).
    Segments with fewer than 2 quasi-sources report no Self-BLEU but still
    contribute similarity.  Provenance-"original" entries are not counted as
    quasi-sources.
    """
    from .bleu import self_bleu  # local import to keep module load light

    segs = [segments] if isinstance(segments, Segment) else _segments(segments)
    if not segs:
        raise ValueError("no segments")

    self_bleus: list[float] = []
    similarities: list[float] = []
    n_sources = 0
    for seg in segs:
        quasi = [q.text for q in seg.quasi_sources if q.provenance != "original"]
        if not quasi:
            raise ValueError(f"segment {seg.id!r} has no quasi-sources to analyze")
        n_sources += len(quasi)
        if len(quasi) >= 2:
            self_bleus.append(self_bleu(quasi))
        embeddings = embed_provider.embed([seg.source, *quasi])
        original = embeddings[0]
        sims = [_cosine(original, e) for e in embeddings[1:]]
        # fsum keeps the report invariant under quasi-source permutation
        similarities.append(math.fsum(sims) / len(sims))

    return SourceQualityReport(
        self_bleu=math.fsum(self_bleus) / len(self_bleus) if self_bleus else None,
        mean_semantic_similarity=math.fsum(similarities) / len(similarities),
        n_sources=n_sources,
    )
