"""Paired bootstrap resampling between two systems under a corpus metric.

The resampling stream is a single numpy PCG64 generator seeded with the
report's seed; all index multisets are drawn up front as one
(n_resamples, n_segments) block, row r belonging to resample r.  Reports are
reproducible across runs only when the generator and seed match, so both are
recorded.  Ties inside a resample count against significance.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

GENERATOR_NAME = "numpy-pcg64"

MetricFn = Callable[[Sequence[str], Sequence[Sequence[str]]], float]


@dataclass(frozen=True)
class SignificanceReport:
    metric_name: str
    n_segments: int
    n_resamples: int
    seed: int
    generator: str
    wins_a: int
    wins_b: int
    ties: int
    p_value: float
    system_a_score: float
    system_b_score: float

    def to_dict(self) -> dict:
        return {
            "metric_name": self.metric_name,
            "n_segments": self.n_segments,
            "n_resamples": self.n_resamples,
            "seed": self.seed,
            "generator": self.generator,
            "wins_a": self.wins_a,
            "wins_b": self.wins_b,
            "ties": self.ties,
            "p_value": self.p_value,
            "system_a_score": self.system_a_score,
            "system_b_score": self.system_b_score,
        }


def paired_bootstrap(
    outputs_a: Sequence[str],
    outputs_b: Sequence[str],
    refs: Sequence[Sequence[str]],
    metric: MetricFn,
    n_resamples: int = 1000,
    seed: int = 0,
    metric_name: str = "metric",
) -> SignificanceReport:
    """One-sided paired bootstrap for "system a is better than system b".

    Each resample draws n_segments indices with replacement and recomputes
    the full corpus metric for both systems; p is the fraction of resamples
    where metric(a) <= metric(b), so ties count against a.
    """
    n = len(outputs_a)
    if len(outputs_b) != n or len(refs) != n:
        raise ValueError(
            f"length mismatch: a={len(outputs_a)}, b={len(outputs_b)}, refs={len(refs)}"
        )
    if n < 2:
        raise ValueError("paired bootstrap needs at least 2 segments")
    if n_resamples < 1:
        raise ValueError("n_resamples must be >= 1")

    rng = np.random.default_rng(seed)
    index_block = rng.integers(0, n, size=(n_resamples, n))

    wins_a = wins_b = ties = 0
    for row in index_block:
        sub_a = [outputs_a[i] for i in row]
        sub_b = [outputs_b[i] for i in row]
        sub_refs = [refs[i] for i in row]
        score_a = metric(sub_a, sub_refs)
        score_b = metric(sub_b, sub_refs)
        if score_a > score_b:
            wins_a += 1
        elif score_b > score_a:
            wins_b += 1
        else:
            ties += 1

    return SignificanceReport(
        metric_name=metric_name,
        n_segments=n,
        n_resamples=n_resamples,
        seed=seed,
        generator=GENERATOR_NAME,
        wins_a=wins_a,
        wins_b=wins_b,
        ties=ties,
        p_value=(wins_b + ties) / n_resamples,
        system_a_score=metric(outputs_a, refs),
        system_b_score=metric(outputs_b, refs),
    )


def significance_marker(p_value: float) -> str:
    """Dagger markers for the conventional 0.05 / 0.01 thresholds."""
    if p_value < 0.01:
        return "††"
    if p_value < 0.05:
        return "†"
    return ""
