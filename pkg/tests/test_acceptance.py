"""Acceptance suite: the exit criteria, one test per criterion.

Each test prints one PASS line on success; a failure fails the test (and the
suite) with the offending instance in the assertion message.  All criteria
run against in-process mocks; nothing here needs a real neural metric.
"""

import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from mbrkit.bench import counting_wrapper
from mbrkit.bleu import corpus_bleu, sentence_bleu
from mbrkit.corpus import Candidate, support_view
from mbrkit.decision import (
    SupportWeights,
    filter_support,
    map_select,
    mbr_select_fast,
    mbr_select_naive,
    qe_rerank,
    smbr_select,
)
from mbrkit.significance import paired_bootstrap
from mbrkit.utility import BleuUtilityProvider, LexicalMockProvider, QEMockProvider

from fixtures import (
    ANALYSIS_CORPUS,
    bootstrap_fixture,
    cached_mean_sentence_bleu,
    random_segments,
    to_segments,
    write_jsonl,
)
from oracles import (
    brute_bleu_utility,
    brute_filter_support,
    brute_map,
    brute_mbr,
    brute_qe_rerank,
    brute_smbr,
    oracle_paired_bootstrap,
    oracle_token_f1,
)

VOCAB = [
    "alpha", "beta", "gamma", "delta", "omega", "cat", "dog", "red",
    "blue", "sun", "moon", "tree", "stone", "river",
]


def random_sentence(rng, max_len=8):
    length = int(rng.integers(1, max_len + 1))
    return " ".join(VOCAB[int(i)] for i in rng.integers(0, len(VOCAB), size=length))


def report(criterion):
    print(f"ACCEPTANCE PASS: {criterion}")


class TestAcceptance:
    def test_k1_identity(self):
        """smbr with only the original source is qe_rerank, bit for bit."""
        rng = np.random.default_rng(2024)
        qe = QEMockProvider()
        start = time.perf_counter()
        for trial in range(1000):
            source = random_sentence(rng)
            candidates = [
                random_sentence(rng) for _ in range(int(rng.integers(2, 65)))
            ]
            via_smbr = smbr_select([(source, None)], candidates, qe)
            via_rerank = qe_rerank(source, candidates, qe)
            assert via_smbr.scores == via_rerank.scores, f"trial {trial}"
            assert via_smbr.selected_index == via_rerank.selected_index, f"trial {trial}"
            assert via_smbr.tied_indices == via_rerank.tied_indices, f"trial {trial}"
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"K=1 identity sweep took {elapsed:.1f}s"
        report(f"K=1 identity: 1000 instances, 0 mismatches, {elapsed:.2f}s")

    def test_fast_naive_equivalence(self):
        """The embedding-cache path is a pure refactoring of naive MBR."""
        rng = np.random.default_rng(2025)
        lex = LexicalMockProvider()
        mismatches = 0
        for trial in range(500):
            n_c = int(rng.integers(1, 9))
            n_s = int(rng.integers(1, 9))
            candidates = [random_sentence(rng, 6) for _ in range(n_c)]
            supports = [random_sentence(rng, 6) for _ in range(n_s)]
            source = random_sentence(rng, 6)
            weights = None
            if rng.random() < 0.3:
                weights = SupportWeights.from_raw(
                    [float(w) for w in rng.uniform(0.05, 1.0, size=n_s)]
                )
            naive = mbr_select_naive(candidates, supports, lex, weights=weights, source=source)
            fast = mbr_select_fast(candidates, supports, source, lex, weights=weights)
            if fast.selected_index != naive.selected_index:
                mismatches += 1
            assert all(
                abs(a - b) <= 1e-9 for a, b in zip(fast.scores, naive.scores)
            ), f"trial {trial}"
        assert mismatches == 0
        report("fast/naive equivalence: 500 instances, 0 selection mismatches")

    def test_brute_force_oracle(self):
        """Independent brute-force argmax agrees with every rule."""
        rng = np.random.default_rng(2026)
        qe = QEMockProvider()
        bleu_util = BleuUtilityProvider()
        for trial in range(50):
            n_c = int(rng.integers(1, 7))
            n_s = int(rng.integers(1, 7))
            candidates = [random_sentence(rng, 5) for _ in range(n_c)]
            supports = [random_sentence(rng, 5) for _ in range(n_s)]
            source = random_sentence(rng, 5)
            raw_weights = [float(w) for w in rng.uniform(0.1, 1.0, size=n_s)]
            logprobs = [float(-lp) for lp in rng.uniform(0.01, 6.0, size=n_c)]

            for provider, utility in ((qe, oracle_token_f1), (bleu_util, brute_bleu_utility)):
                ours = mbr_select_naive(candidates, supports, provider)
                _, selected, tied = brute_mbr(candidates, supports, utility)
                assert (ours.selected_index, ours.tied_indices) == (selected, tied), (
                    f"trial {trial}: mbr_naive/{provider.name}"
                )
                ours_w = mbr_select_naive(
                    candidates, supports, provider,
                    weights=SupportWeights.from_raw(raw_weights),
                )
                _, selected_w, tied_w = brute_mbr(candidates, supports, utility, raw_weights)
                assert (ours_w.selected_index, ours_w.tied_indices) == (selected_w, tied_w)

            ours = qe_rerank(source, candidates, qe)
            _, selected, tied = brute_qe_rerank(source, candidates, oracle_token_f1)
            assert (ours.selected_index, ours.tied_indices) == (selected, tied)

            ours = smbr_select([(s, None) for s in supports], candidates, qe)
            _, selected, tied = brute_smbr(supports, candidates, oracle_token_f1)
            assert (ours.selected_index, ours.tied_indices) == (selected, tied)

            ours = map_select(
                [Candidate(t, lp) for t, lp in zip(candidates, logprobs)]
            )
            _, selected, tied = brute_map(logprobs)
            assert (ours.selected_index, ours.tied_indices) == (selected, tied)

            m = int(rng.integers(1, n_c + 1))
            ours_filter = filter_support(candidates, source, qe, m)
            theirs_filter = brute_filter_support(candidates, source, oracle_token_f1, m)
            assert ours_filter == theirs_filter
        report("brute-force oracle: 50 instances, every rule argmax matches")

    def test_count_contracts(self):
        """Naive is |C| x |S| items, sMBR is K x |C|, fast embeds distinct once."""
        qe_checks = []
        for n in (8, 32, 128):
            texts = [f"cand token{i} word{i}" for i in range(n)]
            counting = counting_wrapper(QEMockProvider())
            mbr_select_naive(texts, texts, counting)
            assert counting.tally.pair_items == n * n
            qe_checks.append((n, counting.tally.pair_items))

            for k in (1, 17):
                sources = [(f"source number{j}", None) for j in range(k)]
                counting = counting_wrapper(QEMockProvider())
                smbr_select(sources, texts, counting)
                assert counting.tally.pair_items == k * n

            # half the candidate list is duplicated: distinct embeds only
            distinct = [f"distinct token{i}" for i in range(max(n // 2, 1))]
            dup_texts = [distinct[i % len(distinct)] for i in range(n)]
            counting = counting_wrapper(LexicalMockProvider())
            mbr_select_fast(dup_texts, dup_texts, "the source", counting)
            assert counting.tally.embed_texts == len(distinct) + 1
            assert counting.tally.estimate_triples == n * n
        report(f"count contracts at n in {{8,32,128}}, K in {{1,17}}: {qe_checks}")

    def test_bleu_oracle(self):
        """Sentence/corpus BLEU match the frozen manual-oracle goldens."""
        fixtures = [
            ("the cat sat", ["the cat sat down"], "exp_decay", 0.7165313105737893),
            ("the cat sat on the mat", ["the cat sat on a mat"], "exp_decay", 0.537284965911771),
            ("a big dog barks loudly", ["a big dog barks today"], "none", 0.668740304976422),
            ("one two three four five six", ["one two three four five seven"], "none", 0.7598356856515925),
            ("he reads a long book", ["he reads a very long book"], "exp_decay", 0.48682021841593603),
            ("rain fell over the town", ["rain fell on the town", "rain fell over a town"], "exp_decay", 0.5946035575013605),
            ("x y", ["x y z w"], "exp_decay", 0.36787944117144233),
            ("alpha beta gamma delta", ["alpha beta gamma delta"], "none", 1.0),
            ("two birds fly", ["two birds flew", "two birds fly away"], "none", 1.0),
            ("she builds houses", ["she builds wooden houses"], "add_k", 0.49681506261157293),
            ("long sentence with many common tokens here", ["long sentence with many shared tokens here"], "exp_decay", 0.488923022434901),
            ("single", ["single token"], "exp_decay", 0.36787944117144233),
        ]
        for hyp, refs, smoothing, expected in fixtures:
            got = sentence_bleu(
                hyp.split(), [r.split() for r in refs], smoothing=smoothing
            ).value
            assert abs(got - expected) <= 1e-9, (hyp, got, expected)

        corpus_pairs = [
            (h.split(), [r.split() for r in refs]) for h, refs, _, _ in fixtures[:6]
        ]
        assert abs(corpus_bleu(corpus_pairs).value - 0.5562557813671719) <= 1e-9

        for size in (1, 5, 40):
            identical = [(f"tok{i} a b c".split(), [f"tok{i} a b c".split()]) for i in range(size)]
            assert corpus_bleu(identical).value == 1.0
        assert sentence_bleu("a b c".split(), ["x y z".split()]).value == 0.0
        assert corpus_bleu([("a b".split(), ["x y".split()])]).value == 0.0
        report(f"BLEU oracle: {len(fixtures)} fixture pairs within 1e-9")

    def test_bootstrap_behavior(self):
        """Identical -> p=1, dominant -> p=0, 60/100 fixture matches the oracle."""
        metric = cached_mean_sentence_bleu()

        outputs = [f"sentence number{i} alpha" for i in range(10)]
        refs = [[o] for o in outputs]
        identical = paired_bootstrap(outputs, outputs, refs, metric, 500, seed=11)
        assert identical.p_value == 1.0 and identical.ties == 500

        outs_a, outs_b, refs = bootstrap_fixture(n_segments=50, a_wins=50)
        dominant = paired_bootstrap(outs_a, outs_b, refs, metric, 1000, seed=12)
        assert dominant.p_value == 0.0 and dominant.wins_a == 1000

        outs_a, outs_b, refs = bootstrap_fixture(n_segments=100, a_wins=60)
        fixture = paired_bootstrap(outs_a, outs_b, refs, metric, 1000, seed=42)
        oracle_p = oracle_paired_bootstrap(
            [1.0] * 60 + [0.0] * 40, [0.0] * 60 + [1.0] * 40, 1000, 42
        )
        assert fixture.p_value == oracle_p == 0.029
        report(f"bootstrap: identical p=1, dominant p=0, 60/100 fixture p={fixture.p_value}")

    def test_pointwise_k_vs_1_inequality(self):
        """Per segment, QE-to-original of the k-winner never beats the 1-winner."""
        qe = QEMockProvider()
        corpora = [to_segments(ANALYSIS_CORPUS)]
        rng = np.random.default_rng(2027)
        for _ in range(3):
            corpora.append(to_segments(random_segments(rng, 10, 8, 5)))
        segments_checked = 0
        for corpus in corpora:
            for seg in corpus:
                supports = support_view(seg, "quasi_sources_with_original")
                winner_at_1 = seg.candidates[
                    smbr_select(supports[:1], seg.candidates, qe).selected_index
                ].text
                qe_at_1 = qe.score_pairs([(seg.source, winner_at_1)])[0]
                for k in range(2, len(supports) + 1):
                    winner = seg.candidates[
                        smbr_select(supports[:k], seg.candidates, qe).selected_index
                    ].text
                    qe_at_k = qe.score_pairs([(seg.source, winner)])[0]
                    assert qe_at_k <= qe_at_1 + 1e-12, (seg.id, k)
                segments_checked += 1
        report(f"pointwise k-vs-1 inequality: {segments_checked} segments, all k")

    def test_end_to_end_determinism(self, tmp_path):
        """Two identical decode invocations produce byte-identical files."""
        segs_file = tmp_path / "segs.jsonl"
        write_jsonl(ANALYSIS_CORPUS, segs_file)
        outputs = []
        for name in ("one.jsonl", "two.jsonl"):
            out = tmp_path / name
            proc = subprocess.run(
                [
                    sys.executable, "-m", "mbrkit", "decode",
                    "--input", str(segs_file), "--rule", "smbr",
                    "--provider", "mock:qe", "--emit-scores",
                    "--output", str(out),
                ],
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 0, proc.stderr
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
        report("end-to-end determinism: byte-identical decode outputs")

    @pytest.mark.slow
    def test_throughput(self, tmp_path):
        """1000 segments x 128 candidates x K=17 smbr decode in under 30 s."""
        rng = np.random.default_rng(2028)
        segs_file = tmp_path / "big.jsonl"
        with open(segs_file, "w", encoding="utf-8") as fh:
            for idx in range(1000):
                record = {
                    "id": f"seg{idx}",
                    "source": random_sentence(rng),
                    "candidates": [{"text": random_sentence(rng)} for _ in range(128)],
                    "quasi_sources": [
                        {"text": random_sentence(rng), "provenance": "pp"}
                        for _ in range(16)
                    ],
                }
                fh.write(json.dumps(record) + "\n")

        out = tmp_path / "decode.jsonl"
        start = time.perf_counter()
        proc = subprocess.run(
            [
                sys.executable, "-m", "mbrkit", "decode",
                "--input", str(segs_file), "--rule", "smbr",
                "--provider", "mock:qe", "--workers", "1",
                "--output", str(out),
            ],
            capture_output=True,
            text=True,
        )
        elapsed = time.perf_counter() - start
        assert proc.returncode == 0, proc.stderr
        n_records = sum(1 for line in out.read_text().splitlines() if '"header"' not in line)
        assert n_records == 1000
        assert elapsed < 30.0, f"decode took {elapsed:.1f}s"
        report(f"throughput: 1000x128xK=17 smbr decode in {elapsed:.1f}s (< 30s)")
