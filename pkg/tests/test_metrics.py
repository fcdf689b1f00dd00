import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from headline_bench.metrics import (
    MetricsError, corpus_bleu, evaluate_corpus, novelty, novelty_profile, render_table, repetition_rate, rouge_l,
    rouge_n,
)
from oracles import brute_force_lcs, direct_bleu, f1_from_lcs

tokens = st.lists(st.sampled_from("abcde"), max_size=10)


class TestRougeN:
    def test_identity(self):
        assert rouge_n("abc", "abc", 1).f1 == 1.0

    def test_partial(self):
        s = rouge_n(list("abc"), list("ab"), 1)
        assert s.precision == 1.0
        assert s.recall == pytest.approx(2 / 3)
        assert s.f1 == pytest.approx(0.8)

    def test_disjoint_bigrams(self):
        assert rouge_n(list("abcd"), list("ef"), 2).f1 == 0.0

    def test_clipped_multiset(self):
        s = rouge_n(list("aab"), list("aaaa"), 1)
        assert (s.precision, s.recall) == (0.5, 2 / 3)

    def test_empty_side(self):
        assert rouge_n([], list("ab"), 1).f1 == 0.0
        assert rouge_n(list("a"), list("a"), 2).f1 == 0.0

    def test_bad_order(self):
        with pytest.raises(MetricsError):
            rouge_n("a", "a", 0)

    @given(tokens, tokens)
    def test_swap_exchanges_p_and_r(self, ref, hyp):
        for n in (1, 2):
            a, b = rouge_n(ref, hyp, n), rouge_n(hyp, ref, n)
            assert (a.precision, a.recall) == (b.recall, b.precision)
            assert a.f1 == pytest.approx(b.f1)

    @given(tokens, tokens)
    def test_bigram_overlap_bounded_by_unigram(self, ref, hyp):
        from collections import Counter
        from headline_bench.metrics import ngrams
        o1 = sum((Counter(ngrams(ref, 1)) & Counter(ngrams(hyp, 1))).values())
        o2 = sum((Counter(ngrams(ref, 2)) & Counter(ngrams(hyp, 2))).values())
        assert o2 <= o1


class TestRougeL:
    def test_swapped_pair(self):
        s = rouge_l(list("abcd"), list("acbd"))
        assert s.f1 == pytest.approx(0.75)
        assert brute_force_lcs(list("abcd"), list("acbd")) == 3

    def test_identity_and_empty(self):
        assert rouge_l(list("abc"), list("abc")).f1 == 1.0
        assert rouge_l(list("abc"), []).f1 == 0.0

    @settings(max_examples=300)
    @given(tokens, tokens)
    def test_matches_brute_force(self, ref, hyp):
        expected = f1_from_lcs(brute_force_lcs(ref, hyp), len(ref), len(hyp))
        assert rouge_l(ref, hyp).f1 == expected

    @given(tokens, tokens)
    def test_symmetric_f1(self, ref, hyp):
        assert rouge_l(ref, hyp).f1 == pytest.approx(rouge_l(hyp, ref).f1)


class TestCorpusBleu:
    def test_identity(self):
        assert corpus_bleu([(list("abcde"), list("abcde")), (list("xy"), list("xy"))]).bleu == 100.0

    def test_prefix_spot_value(self):
        b = corpus_bleu([(list("abcd"), list("abc"))])
        assert b.p_n[:3] == (1.0, 1.0, 1.0)
        assert b.orders_used == (1, 2, 3)
        assert b.bp == pytest.approx(math.exp(1 - 4 / 3))
        assert b.bleu == pytest.approx(71.65, abs=0.01)
        assert b.bleu == pytest.approx(direct_bleu(list("abcd"), list("abc")), abs=1e-9)

    def test_against_sacrebleu(self):
        sacrebleu = pytest.importorskip("sacrebleu")
        from sacrebleu.metrics import BLEU
        rng = random.Random(3)
        refs = [[rng.choice("abcdefgh") for _ in range(rng.randint(3, 12))] for _ in range(200)]
        hyps = [[t if rng.random() < 0.7 else rng.choice("abcdefgh") for t in r[:rng.randint(2, len(r) + 2)]]
                for r in refs]
        ours = corpus_bleu(list(zip(refs, hyps))).bleu
        scorer = BLEU(tokenize="none", smooth_method="none", effective_order=True)
        theirs = scorer.corpus_score([" ".join(h) for h in hyps], [[" ".join(r) for r in refs]]).score
        assert ours == pytest.approx(theirs, abs=1e-9)
        single = scorer.corpus_score(["a b c"], [["a b c d"]]).score
        assert corpus_bleu([(list("abcd"), list("abc"))]).bleu == pytest.approx(single, abs=1e-9)

    def test_no_penalty_when_longer(self):
        b = corpus_bleu([(list("abc"), list("abcabc"))])
        assert b.bp == 1.0

    def test_disjoint_is_zero(self):
        assert corpus_bleu([(list("abcd"), list("efgh"))]).bleu == 0.0

    def test_nested_single_reference_accepted(self):
        assert corpus_bleu([([list("abc")], list("abc"))]).bleu == 100.0
        with pytest.raises(MetricsError):
            corpus_bleu([([list("abc"), list("abd")], list("abc"))])

    def test_empty_corpus(self):
        with pytest.raises(MetricsError):
            corpus_bleu([])

    def test_smoothing_flag(self):
        b = corpus_bleu([(list("abcd"), list("abxd"))])
        assert b.bleu == 0.0
        assert corpus_bleu([(list("abcd"), list("abxd"))], smooth=True).bleu > 0.0

    @settings(max_examples=200)
    @given(st.lists(st.tuples(tokens.filter(bool), tokens.filter(bool)), min_size=1, max_size=5))
    def test_hundred_iff_identical(self, pairs):
        b = corpus_bleu(pairs).bleu
        identical = all(list(r) == list(h) for r, h in pairs)
        if identical:
            assert b == pytest.approx(100.0)
        else:
            assert b < 100.0 - 1e-9 or all(
                sorted(r) == sorted(h) and len(r) < 2 for r, h in pairs)


class TestNovelty:
    def test_unigram(self):
        assert novelty(list("abcd"), list("abx"), 1) == pytest.approx(1 / 3)

    def test_bigram(self):
        assert novelty(list("abcd"), list("abx"), 2) == pytest.approx(1 / 2)

    def test_copied(self):
        for n in (1, 2, 3, 4):
            assert novelty(list("abcde"), list("bcde"), n) == 0.0

    def test_short_headline_undefined(self):
        assert novelty(list("abc"), list("ab"), 3) is None

    def test_profile_skips_undefined_items(self):
        prof = novelty_profile([list("abcd"), list("abcd")], [list("abx"), list("x")], orders=(1, 2))
        assert prof[1] == pytest.approx((1 / 3 + 1) / 2)
        assert prof[2] == pytest.approx(1 / 2)


class TestRepetition:
    def test_flagged(self):
        assert repetition_rate([list("abab")], 2) == 1.0

    def test_not_flagged(self):
        assert repetition_rate([list("abc")]) == 0.0

    def test_empty(self):
        assert repetition_rate([]) == 0.0

    def test_table4_style_repeat(self):
        head = "рубль укрепился на открытии на открытии на открытии на одну копейку".split()
        ref = "курс доллара подрос на открытии в среду на 1 коп - до 28,04 руб".split()
        assert repetition_rate([head, ref]) == 0.5


class TestEvaluateCorpus:
    def test_identity(self):
        refs = ["Курс доллара подрос", "рубль укрепился на открытии"]
        rep = evaluate_corpus(refs, refs)
        assert (rep.rouge1, rep.rouge2, rep.rougeL, rep.bleu.bleu) == (100.0, 100.0, 100.0, 100.0)
        assert rep.r_mean == 100.0

    def test_disjoint(self):
        rep = evaluate_corpus(["а б в"], ["г д е"])
        assert (rep.rouge1, rep.rouge2, rep.rougeL, rep.bleu.bleu) == (0.0, 0.0, 0.0, 0.0)

    def test_lowercases_before_scoring(self):
        assert evaluate_corpus(["Курс Доллара"], ["курс доллара"]).rouge1 == 100.0

    def test_macro_average_and_r_mean(self):
        refs = [list("abc"), list("abcd")]
        hyps = [list("ab"), list("acbd")]
        rep = evaluate_corpus(refs, hyps)
        assert rep.rouge1 == pytest.approx(100 * (0.8 + 1.0) / 2)
        assert rep.rougeL == pytest.approx(100 * (0.8 + 0.75) / 2)
        assert rep.r_mean == (rep.rouge1 + rep.rouge2 + rep.rougeL) / 3

    def test_novelty_only_with_sources(self):
        assert evaluate_corpus(["а б"], ["а в"]).novelty is None
        rep = evaluate_corpus(["а б"], ["а в"], sources=["а б г"])
        assert rep.novelty[1] == pytest.approx(0.5)

    def test_length_mismatch(self):
        with pytest.raises(MetricsError, match="2 references vs 1"):
            evaluate_corpus(["a", "b"], ["a"])

    def test_jobs_do_not_change_results(self):
        rng = random.Random(0)
        refs = [[rng.choice("abcdef") for _ in range(rng.randint(1, 8))] for _ in range(60)]
        hyps = [[rng.choice("abcdef") for _ in range(rng.randint(1, 8))] for _ in range(60)]
        srcs = [r + h for r, h in zip(refs, hyps)]
        a = evaluate_corpus(refs, hyps, srcs, jobs=1).to_dict()
        b = evaluate_corpus(refs, hyps, srcs, jobs=3).to_dict()
        assert a == b

    def test_report_json_keys_and_table(self):
        rep = evaluate_corpus(["а б"], ["а б"], sources=["а б в"])
        d = rep.to_dict()
        for key in ("rouge_1", "rouge_2", "rouge_l", "r_mean", "bleu", "novelty", "repetition_rate", "n_examples",
                    "config"):
            assert key in d
        assert set(d["novelty"]) == {"1", "2", "3", "4"}
        table = rep.table("first sentence")
        assert [c.strip() for c in table.splitlines()[0].split("|")[1:]] == ["R1", "R2", "RL", "R-mean", "BLEU"]
        assert "100.0" in table

    def test_render_missing_value(self):
        out = render_table([("PBATrans", {"rouge_1": 43.0, "rouge_2": 25.4, "rouge_l": 40.0, "r_mean": 36.1})])
        assert out.splitlines()[-1].endswith("-")
