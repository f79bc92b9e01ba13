"""Call-count and wall-time instrumentation for the decision rules.

The counting wrapper delegates scoring unchanged while keeping item-exact
tallies, which is how the cost shapes are asserted: naive MBR scores
|C| x |S| utility items, sMBR scores K x |C| pairs, and the fast MBR path
embeds each distinct text exactly once.
"""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, replace
from typing import Sequence

from .corpus import Segment, SegmentSet, support_view
from .decision import (
    map_select,
    mbr_select_fast,
    mbr_select_naive,
    qe_rerank,
    smbr_select,
)
from .utility import UtilityProvider

BENCH_RULES = ("map", "mbr_naive", "mbr_fast", "qe_rerank", "smbr")


class BenchContractError(AssertionError):
    """A measured call tally violated the expected cost shape."""


@dataclass
class CallTally:
    embed_calls: int = 0
    embed_texts: int = 0
    estimate_calls: int = 0
    estimate_triples: int = 0
    pair_calls: int = 0
    pair_items: int = 0

    def reset(self) -> None:
        self.embed_calls = 0
        self.embed_texts = 0
        self.estimate_calls = 0
        self.estimate_triples = 0
        self.pair_calls = 0
        self.pair_items = 0

    def snapshot(self) -> "CallTally":
        return CallTally(
            self.embed_calls,
            self.embed_texts,
            self.estimate_calls,
            self.estimate_triples,
            self.pair_calls,
            self.pair_items,
        )

    def to_dict(self) -> dict:
        return {
            "embed_calls": self.embed_calls,
            "embed_texts": self.embed_texts,
            "estimate_calls": self.estimate_calls,
            "estimate_triples": self.estimate_triples,
            "pair_calls": self.pair_calls,
            "pair_items": self.pair_items,
        }


class CountingProvider(UtilityProvider):
    """Transparent wrapper: identical scores, item-exact call counters."""

    def __init__(self, base: UtilityProvider):
        self.base = base
        self.capabilities = base.capabilities
        self.tally = CallTally()

    def score_pairs(self, pairs):
        self.tally.pair_calls += 1
        self.tally.pair_items += len(pairs)
        return self.base.score_pairs(pairs)

    def embed(self, texts):
        self.tally.embed_calls += 1
        self.tally.embed_texts += len(texts)
        return self.base.embed(texts)

    def estimate(self, triples):
        self.tally.estimate_calls += 1
        self.tally.estimate_triples += len(triples)
        return self.base.estimate(triples)


def counting_wrapper(provider: UtilityProvider) -> CountingProvider:
    return CountingProvider(provider)


class SyntheticLatencyProvider(UtilityProvider):
    """Adds a configurable per-item delay so cost shapes show up in wall time."""

    def __init__(
        self,
        base: UtilityProvider,
        pair_delay: float = 0.0,
        embed_delay: float = 0.0,
        estimate_delay: float = 0.0,
    ):
        self.base = base
        self.capabilities = replace(base.capabilities, name=f"latency:{base.name}")
        self.pair_delay = pair_delay
        self.embed_delay = embed_delay
        self.estimate_delay = estimate_delay

    def score_pairs(self, pairs):
        if self.pair_delay:
            time.sleep(self.pair_delay * len(pairs))
        return self.base.score_pairs(pairs)

    def embed(self, texts):
        if self.embed_delay:
            time.sleep(self.embed_delay * len(texts))
        return self.base.embed(texts)

    def estimate(self, triples):
        if self.estimate_delay:
            time.sleep(self.estimate_delay * len(triples))
        return self.base.estimate(triples)


@dataclass(frozen=True)
class BenchReport:
    rule: str
    sizes: tuple[int, int, int]  # (|C|, |S|, K)
    tally: CallTally
    wall_time: float
    per_segment_time: float
    min_time: float = 0.0
    max_time: float = 0.0
    repetitions: int = 1
    parallel_wall_time: float | None = None

    def to_dict(self) -> dict:
        out = {
            "rule": self.rule,
            "candidates": self.sizes[0],
            "supports": self.sizes[1],
            "k": self.sizes[2],
            "tally": self.tally.to_dict(),
            "wall_time": self.wall_time,
            "per_segment_time": self.per_segment_time,
            "min_time": self.min_time,
            "max_time": self.max_time,
            "repetitions": self.repetitions,
        }
        if self.parallel_wall_time is not None:
            out["parallel_wall_time"] = self.parallel_wall_time
        return out


def _run_rule(rule: str, seg: Segment, provider: UtilityProvider) -> None:
    if rule == "map":
        map_select(seg.candidates)
    elif rule == "mbr_naive":
        supports = [c.text for c in seg.candidates]
        mbr_select_naive(seg.candidates, supports, provider, source=seg.source)
    elif rule == "mbr_fast":
        supports = [c.text for c in seg.candidates]
        mbr_select_fast(seg.candidates, supports, seg.source, provider)
    elif rule == "qe_rerank":
        qe_rerank(seg.source, seg.candidates, provider)
    elif rule == "smbr":
        smbr_select(support_view(seg, "quasi_sources_with_original"), seg.candidates, provider)
    else:
        raise ValueError(f"unknown bench rule: {rule!r}")


def _expected_counts(rule: str, segs: Sequence[Segment], shape: str) -> dict[str, int]:
    expected = {"pair_items": 0, "estimate_triples": 0, "embed_texts": 0}
    for seg in segs:
        n_c = len(seg.candidates)
        if rule == "qe_rerank":
            expected["pair_items"] += n_c
        elif rule == "smbr":
            expected["pair_items"] += n_c * len(support_view(seg, "quasi_sources_with_original"))
        elif rule == "mbr_naive":
            key = "pair_items" if shape == "joint" else "estimate_triples"
            expected[key] += n_c * n_c
            if shape == "factorable":
                texts = [c.text for c in seg.candidates]
                expected["embed_texts"] += len(dict.fromkeys([seg.source, *texts]))
        elif rule == "mbr_fast":
            texts = [c.text for c in seg.candidates]
            expected["estimate_triples"] += n_c * n_c
            expected["embed_texts"] += len(dict.fromkeys([seg.source, *texts]))
    return expected


def _check_contract(rule: str, tally: CallTally, expected: dict[str, int]) -> None:
    actual = {
        "pair_items": tally.pair_items,
        "estimate_triples": tally.estimate_triples,
        "embed_texts": tally.embed_texts,
    }
    for key, want in expected.items():
        if actual[key] != want:
            raise BenchContractError(
                f"rule {rule!r}: expected {key}={want}, measured {actual[key]}"
            )


def _sizes(rule: str, segs: Sequence[Segment]) -> tuple[int, int, int]:
    first = segs[0]
    n_c = len(first.candidates)
    if rule in ("mbr_naive", "mbr_fast"):
        return (n_c, n_c, 0)
    if rule == "qe_rerank":
        return (n_c, 1, 0)
    if rule == "smbr":
        k = len(support_view(first, "quasi_sources_with_original"))
        return (n_c, k, k)
    return (n_c, 0, 0)


def run_bench(
    rules: Sequence[str],
    segments: SegmentSet | Sequence[Segment],
    provider: UtilityProvider,
    repetitions: int = 5,
    parallel_workers: int = 0,
) -> list[BenchReport]:
    """Time each rule over the corpus and verify its call-count contract.

    Runs single-threaded so tallies and times stay interpretable; a positive
    `parallel_workers` additionally reports a threaded wall time.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    segs = list(segments)
    if not segs:
        raise ValueError("no segments")

    reports = []
    for rule in rules:
        counting = counting_wrapper(provider)
        times = []
        for _ in range(repetitions):
            counting.tally.reset()
            start = time.perf_counter()
            for seg in segs:
                _run_rule(rule, seg, counting)
            times.append(time.perf_counter() - start)
        _check_contract(rule, counting.tally, _expected_counts(rule, segs, provider.shape))

        parallel_time = None
        if parallel_workers > 0:
            from concurrent.futures import ThreadPoolExecutor

            start = time.perf_counter()
            with ThreadPoolExecutor(max_workers=parallel_workers) as pool:
                list(pool.map(lambda seg: _run_rule(rule, seg, provider), segs))
            parallel_time = time.perf_counter() - start

        median = statistics.median(times)
        reports.append(
            BenchReport(
                rule=rule,
                sizes=_sizes(rule, segs),
                tally=counting.tally.snapshot(),
                wall_time=median,
                per_segment_time=median / len(segs),
                min_time=min(times),
                max_time=max(times),
                repetitions=repetitions,
                parallel_wall_time=parallel_time,
            )
        )
    return reports
