"""Surface-metric tests: tokenizer, sentence/corpus BLEU, Self-BLEU.

Golden values marked as oracle-derived were frozen from the independent
implementations in oracles.py before the library was written.
"""

import math

import numpy as np
import pytest

from mbrkit.bleu import corpus_bleu, self_bleu, sentence_bleu, tokenize

from oracles import oracle_corpus_bleu, oracle_self_bleu, oracle_sentence_bleu


class TestTokenize:
    def test_intl_splits_punctuation(self):
        assert tokenize("Hello, world!") == ["Hello", ",", "world", "!"]

    def test_whitespace_collapses(self):
        assert tokenize("a b  c", mode="whitespace") == ["a", "b", "c"]

    def test_empty_input(self):
        assert tokenize("") == []
        assert tokenize("", mode="whitespace") == []

    def test_intl_unicode_whitespace_and_symbols(self):
        assert tokenize("a b—c") == ["a", "b", "—", "c"]

    def test_no_empty_tokens(self):
        for mode in ("intl", "whitespace"):
            assert all(tokenize("  .. a  b ! ", mode))

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            tokenize("a", mode="nope")


class TestSentenceBleu:
    def test_exact_match_is_one(self):
        for sent in ("a", "a b", "the cat sat on the mat"):
            toks = sent.split()
            assert sentence_bleu(toks, [toks]).value == 1.0

    def test_zero_overlap_is_zero(self):
        score = sentence_bleu("a b c".split(), ["x y z".split()])
        assert score.value == 0.0

    def test_oracle_golden_exp_decay(self):
        # frozen from oracle_sentence_bleu; equals exp(-1/3) (pure brevity penalty)
        score = sentence_bleu(
            "the cat sat".split(), ["the cat sat down".split()], smoothing="exp_decay"
        )
        assert score.value == 0.7165313105737893
        assert score.brevity_penalty == math.exp(1.0 - 4.0 / 3.0)

    def test_empty_hypothesis_flags_instead_of_raising(self):
        score = sentence_bleu([], ["a b".split()], smoothing="none")
        assert score.value == 0.0
        assert score.degenerate
        assert 0.0 < score.brevity_penalty <= 1.0

    def test_permutation_invariant_in_refs(self):
        rng = np.random.default_rng(7)
        vocab = ["a", "b", "c", "d", "e"]
        for _ in range(50):
            hyp = [vocab[i] for i in rng.integers(0, 5, size=rng.integers(1, 8))]
            refs = [
                [vocab[i] for i in rng.integers(0, 5, size=rng.integers(1, 8))]
                for _ in range(3)
            ]
            forward = sentence_bleu(hyp, refs)
            backward = sentence_bleu(hyp, refs[::-1])
            assert forward == backward

    def test_bounds(self):
        rng = np.random.default_rng(11)
        vocab = ["a", "b", "c", "d"]
        for _ in range(200):
            hyp = [vocab[i] for i in rng.integers(0, 4, size=rng.integers(1, 7))]
            ref = [vocab[i] for i in rng.integers(0, 4, size=rng.integers(1, 7))]
            for smoothing in ("none", "exp_decay", "add_k"):
                score = sentence_bleu(hyp, [ref], smoothing=smoothing)
                assert 0.0 <= score.value <= 1.0
                assert 0.0 < score.brevity_penalty <= 1.0
                assert all(0.0 <= p <= 1.0 for p in score.precisions)

    def test_value_identity_when_all_precisions_positive(self):
        rng = np.random.default_rng(13)
        vocab = ["a", "b", "c"]
        checked = 0
        for _ in range(300):
            hyp = [vocab[i] for i in rng.integers(0, 3, size=rng.integers(4, 9))]
            ref = [vocab[i] for i in rng.integers(0, 3, size=rng.integers(4, 9))]
            score = sentence_bleu(hyp, [ref], smoothing="exp_decay")
            if all(p > 0.0 for p in score.precisions):
                expected = score.brevity_penalty * math.exp(
                    sum(math.log(p) for p in score.precisions) / 4
                )
                assert score.value == pytest.approx(expected, abs=1e-15)
                checked += 1
        assert checked > 50

    def test_closest_reference_tie_prefers_shorter(self):
        # hypothesis length 5 sits exactly between reference lengths 4 and 6
        hyp = "a b c d e".split()
        refs = [list("wxyz"), list("uvwxyz")]
        score = sentence_bleu(hyp, refs)
        assert score.ref_len == 4

    def test_zero_unigram_overrides_smoothing(self):
        for smoothing in ("none", "exp_decay", "add_k"):
            assert sentence_bleu(["q"], ["z".split()], smoothing=smoothing).value == 0.0

    def test_add_k_smoothing_fills_higher_orders(self):
        score = sentence_bleu("a b".split(), ["a c".split()], smoothing="add_k", smooth_k=1.0)
        # p1 = 1/2 raw; p2 = (0+1)/(1+1) = 1/2 smoothed
        assert score.precisions[0] == 0.5
        assert score.precisions[1] == 0.5
        assert score.value > 0.0

    def test_matches_oracle_on_random_cases(self):
        rng = np.random.default_rng(17)
        vocab = ["a", "b", "c", "d", "e", "f"]
        for _ in range(150):
            hyp = [vocab[i] for i in rng.integers(0, 6, size=rng.integers(1, 9))]
            refs = [
                [vocab[i] for i in rng.integers(0, 6, size=rng.integers(1, 9))]
                for _ in range(int(rng.integers(1, 3)))
            ]
            for smoothing in ("none", "exp_decay"):
                ours = sentence_bleu(hyp, refs, smoothing=smoothing).value
                theirs = oracle_sentence_bleu(hyp, refs, smoothing=smoothing)
                assert ours == theirs

    def test_requires_reference(self):
        with pytest.raises(ValueError):
            sentence_bleu(["a"], [])


class TestCorpusBleu:
    def test_all_exact_matches_score_one(self):
        for size in (1, 3, 17):
            pairs = [(f"tok{i} a b".split(), [f"tok{i} a b".split()]) for i in range(size)]
            assert corpus_bleu(pairs).value == 1.0

    def test_singleton_equals_sentence_bleu_unsmoothed(self):
        hyp = "a b c d e".split()
        ref = "a b c d f".split()
        single = corpus_bleu([(hyp, [ref])])
        sent = sentence_bleu(hyp, [ref], smoothing="none")
        assert single == sent

    def test_two_pair_oracle_golden(self):
        # frozen from oracle_corpus_bleu
        pairs = [
            ("the cat sat".split(), ["the cat sat down".split()]),
            ("a big dog barks loudly".split(), ["a big dog barks today".split()]),
        ]
        assert corpus_bleu(pairs).value == 0.6381572513051155

    def test_aggregates_counts_not_scores(self):
        # one perfect 4-token pair plus one zero 2-token pair: count aggregation
        # gives a different number from averaging the sentence scores (0.5)
        pairs = [
            ("a b c d".split(), ["a b c d".split()]),
            ("x y".split(), ["q r s t".split()]),
        ]
        value = corpus_bleu(pairs).value
        assert value == oracle_corpus_bleu(pairs)
        sentence_mean = (
            sentence_bleu(pairs[0][0], pairs[0][1], smoothing="none").value
            + sentence_bleu(pairs[1][0], pairs[1][1], smoothing="none").value
        ) / 2
        assert sentence_mean == 0.5
        assert value != sentence_mean

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            corpus_bleu([])


class TestSelfBleu:
    def test_identical_sentences_score_100(self):
        for k in (2, 3, 7):
            assert self_bleu(["same tokens here"] * k) == 100.0

    def test_disjoint_vocabulary_scores_0(self):
        assert self_bleu(["a b c", "d e f", "g h i"]) == 0.0

    def test_three_sentence_oracle_golden(self):
        # frozen from oracle_self_bleu (pairwise brute force)
        sentences = ["the cat sat", "the cat ran", "a dog sat"]
        assert self_bleu(sentences) == 50.89874567572861
        assert self_bleu(sentences) == oracle_self_bleu([s.split() for s in sentences])

    def test_permutation_invariant(self):
        sentences = ["the cat sat", "the cat ran", "a dog sat", "a dog ran"]
        base = self_bleu(sentences)
        assert self_bleu(sentences[::-1]) == base
        assert self_bleu([sentences[2], sentences[0], sentences[3], sentences[1]]) == base

    def test_undefined_below_two(self):
        with pytest.raises(ValueError, match="undefined"):
            self_bleu(["only one"])
