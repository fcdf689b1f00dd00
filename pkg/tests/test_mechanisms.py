from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from headline_bench.mechanisms import (
    CLS, DECODER_SCHEDULE, ENCODER_SCHEDULE, MASK, SEP, NoiseSpec, ScheduleConfig, corrupt, decode_document,
    dual_schedule, encode_document, infill, infill_spans, noam_lr, rotate,
)
from headline_bench.tokenization import Vocab

LETTERS = list("abcdefghij")


@pytest.fixture(scope="module")
def vocab():
    return Vocab(LETTERS, specials=(CLS, SEP))


def random_doc(rng, max_sents=6, max_len=8):
    return [[str(t) for t in rng.choice(LETTERS, size=rng.integers(1, max_len + 1))]
            for _ in range(rng.integers(1, max_sents + 1))]


def check_layout(doc, sents, vocab):
    toks = vocab.decode(doc.token_ids)
    assert len(doc.token_ids) == len(doc.segment_ids) == doc.attention_length
    k = -1
    for i, tok in enumerate(toks):
        if tok == CLS:
            k += 1
            assert i == doc.cls_positions[k]
            assert i == 0 or toks[i - 1] == SEP
        assert doc.segment_ids[i] == k % 2
    assert toks[-1] == SEP
    assert toks.count(CLS) == toks.count(SEP) == len(doc.cls_positions)


class TestEncodeDocument:
    def test_two_sentence_example(self, vocab):
        doc = encode_document([list("abc"), list("de")], vocab)
        assert vocab.decode(doc.token_ids) == [CLS, "a", "b", "c", SEP, CLS, "d", "e", SEP]
        assert doc.segment_ids == [0, 0, 0, 0, 0, 1, 1, 1, 1]
        assert doc.cls_positions == [0, 5]

    def test_single_sentence_all_zero(self, vocab):
        assert set(encode_document([list("abcd")], vocab).segment_ids) == {0}

    def test_cut_mid_second_sentence_drops_it(self, vocab):
        doc = encode_document([list("abc"), list("defg")], vocab, max_len=7)
        assert decode_document(doc, vocab) == [list("abc")]

    def test_overlong_first_sentence_truncated(self, vocab):
        doc = encode_document([list("abcdefgh"), list("ab")], vocab, max_len=5)
        assert vocab.decode(doc.token_ids) == [CLS, "a", "b", "c", SEP]

    def test_requires_specials(self):
        with pytest.raises(ValueError):
            encode_document([["a"]], Vocab(["a"]))

    def test_requires_sentences(self, vocab):
        with pytest.raises(ValueError):
            encode_document([], vocab)

    def test_random_documents_layout_and_roundtrip(self, vocab):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            sents = random_doc(rng)
            max_len = int(rng.integers(3, 60))
            doc = encode_document(sents, vocab, max_len)
            assert len(doc.token_ids) <= max_len
            check_layout(doc, sents, vocab)
            back = decode_document(doc, vocab)
            assert back[1:] == sents[1:len(back)]
            assert back[0] == sents[0][:len(back[0])]
            if len(sents[0]) + 2 <= max_len:
                assert back[0] == sents[0]


class TestNoam:
    def test_spot_values(self):
        assert noam_lr(20000, ENCODER_SCHEDULE) == pytest.approx(1.4142e-5, rel=5e-5)
        assert noam_lr(1, ENCODER_SCHEDULE) == pytest.approx(7.0711e-10, rel=5e-5)

    def test_branches_meet_at_warmup(self):
        w = 400
        assert w ** -0.5 == pytest.approx(w * w ** -1.5, rel=1e-15)

    @pytest.mark.parametrize("warmup", [1, 2, 7, 100, 4000])
    def test_peak_at_warmup_and_monotone(self, warmup):
        cfg = ScheduleConfig(1.0, warmup)
        lrs = np.array([noam_lr(s, cfg) for s in range(1, 3 * warmup + 10)])
        assert int(np.argmax(lrs)) + 1 == warmup
        assert np.all(np.diff(lrs[:warmup]) > 0)
        assert np.all(np.diff(lrs[warmup - 1:]) < 0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            noam_lr(0, ENCODER_SCHEDULE)
        with pytest.raises(ValueError):
            ScheduleConfig(0.0, 10)
        with pytest.raises(ValueError):
            ScheduleConfig(1.0, 0)

    def test_dual_is_composition(self):
        for step in (1, 500, 10000, 20000, 50000):
            assert dual_schedule(step) == (noam_lr(step, ENCODER_SCHEDULE), noam_lr(step, DECODER_SCHEDULE))

    def test_decoder_peaks_earlier(self):
        steps = np.arange(1, 40001)
        enc, dec = zip(*(dual_schedule(int(s)) for s in steps))
        assert np.argmax(dec) < np.argmax(enc)

    @given(st.integers(1, 100000))
    def test_equal_configs_equal_outputs(self, step):
        cfg = ScheduleConfig(0.5, 300)
        a, b = dual_schedule(step, cfg, cfg)
        assert a == b


sentences_st = st.lists(st.lists(st.sampled_from(LETTERS), min_size=1, max_size=6), min_size=1, max_size=6)


class TestCorrupt:
    def test_rotate_example(self):
        assert rotate(list("abcd"), 2) == list("cdab")

    def test_shuffle_single_sentence(self):
        assert corrupt([list("abc")], NoiseSpec("shuffle_sentences", seed=4)) == list("abc")

    def test_empty_document_unchanged(self):
        for kind in ("shuffle_sentences", "rotate", "infill"):
            assert corrupt([], NoiseSpec(kind)) == []

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            NoiseSpec("delete")
        with pytest.raises(ValueError):
            NoiseSpec("infill", span_length_mean=0)

    @given(sentences_st, st.integers(0, 2 ** 32 - 1))
    def test_shuffle_preserves_sentence_multiset(self, sents, seed):
        out = corrupt(sents, NoiseSpec("shuffle_sentences", seed=seed))
        assert Counter(out) == Counter(t for s in sents for t in s)
        rng = np.random.default_rng(seed)
        from headline_bench.mechanisms import shuffle_sentences
        shuffled = shuffle_sentences(sents, rng)
        assert sorted(map(tuple, shuffled)) == sorted(map(tuple, sents))
        assert [t for s in shuffled for t in s] == out

    @given(sentences_st, st.integers(0, 2 ** 32 - 1))
    def test_rotate_preserves_cyclic_adjacency(self, sents, seed):
        flat = [t for s in sents for t in s]
        out = corrupt(sents, NoiseSpec("rotate", seed=seed))
        assert Counter(out) == Counter(flat)
        assert any(rotate(flat, k) == out for k in range(len(flat)))

    def test_rotate_offset_roughly_uniform(self):
        flat = [str(i) for i in range(8)]
        starts = Counter(corrupt([flat], NoiseSpec("rotate", seed=s))[0] for s in range(4000))
        assert set(starts) == set(flat)
        assert max(starts.values()) < 1.3 * 4000 / 8

    @given(sentences_st, st.integers(0, 2 ** 32 - 1))
    def test_infill_keeps_unmasked_tokens_in_order(self, sents, seed):
        flat = [t for s in sents for t in s]
        out, mask = infill(flat, NoiseSpec("infill", seed=seed), np.random.default_rng(seed))
        assert [t for t in out if t != MASK] == [t for t, m in zip(flat, mask) if not m]
        assert mask.sum() == round(0.3 * len(flat))

    def test_spans_disjoint(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            spans = infill_spans(50, 3.0, 0.5, rng)
            for (s0, e0), (s1, e1) in zip(spans, spans[1:]):
                assert s0 < e0 <= s1 < e1

    def test_mask_fraction_monte_carlo(self):
        doc = [[f"t{i}" for i in range(1000)]]
        fracs = []
        for seed in range(100):
            out, mask = infill(doc[0], NoiseSpec("infill", span_length_mean=2.0, seed=seed),
                               np.random.default_rng(seed))
            fracs.append(mask.mean())
            assert out.count(MASK) >= 1
        assert all(abs(f - 0.3) <= 0.05 for f in fracs)

    def test_span_lengths_follow_mean(self):
        rng = np.random.default_rng(0)
        # sparse masking so collisions with earlier spans barely shorten anything
        lengths = [e - s for _ in range(20) for s, e in infill_spans(100000, 3.0, 0.01, rng)]
        assert np.mean(lengths) == pytest.approx(3.0 + np.exp(-3.0), rel=0.05)

    def test_seed_reproducible(self):
        sents = [list("abcdef"), list("ghij")]
        for kind in ("shuffle_sentences", "rotate", "infill"):
            assert corrupt(sents, NoiseSpec(kind, seed=9)) == corrupt(sents, NoiseSpec(kind, seed=9))
