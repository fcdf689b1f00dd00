import json
import unicodedata

import pytest
from hypothesis import given, strategies as st

from headline_bench.corpus import (
    Article, CorpusError, SplitManifest, load_lenta, load_ria, normalize, read_articles, split_dataset,
    split_sentences, write_articles,
)


def _articles(n, prefix="a"):
    return [Article(f"{prefix}{i}", f"title {i}", f"text {i}") for i in range(n)]


class TestLoadRia:
    def test_strips_tags_and_counts_skips(self, ria_file):
        arts, skipped = load_ria(ria_file)
        assert skipped == 2
        assert [a.title for a in arts] == ["Курс доллара подрос", "т"]
        assert arts[0].text == "Курс доллара подрос на 1 коп. Торги идут."
        assert arts[1].text == "а б"

    def test_single_record(self, tmp_path):
        path = tmp_path / "one.jsonl"
        path.write_text('{"title":"т","text":"<p>а б</p>"}\n', encoding="utf-8")
        (art,), skipped = load_ria(path)
        assert (art.title, art.text, skipped) == ("т", "а б", 0)

    def test_entities_decoded_after_tag_removal(self, tmp_path):
        path = tmp_path / "e.jsonl"
        path.write_text('{"title":"x","text":"a &lt;b&gt; &amp; &laquo;c&raquo;"}\n', encoding="utf-8")
        (art,), _ = load_ria(path)
        assert art.text == "a <b> & «c»"

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        assert load_ria(path) == ([], 0)

    def test_one_valid_one_malformed(self, tmp_path):
        path = tmp_path / "mixed.jsonl"
        path.write_text('{"title":"a","text":"b"}\n{"title": \n', encoding="utf-8")
        arts, skipped = load_ria(path)
        assert len(arts) == 1 and skipped == 1

    def test_unreadable_file_is_fatal(self, tmp_path):
        with pytest.raises(CorpusError):
            load_ria(tmp_path / "missing.jsonl")


class TestLoadLenta:
    def test_one_row(self, tmp_path):
        path = tmp_path / "lenta.csv"
        path.write_text("url,title,text,topic,tags\nhttps://x/1,а,б,t,g\n", encoding="utf-8")
        (art,), skipped = load_lenta(path)
        assert (art.id, art.title, art.text, skipped) == ("https://x/1", "а", "б", 0)

    def test_empty_text_skipped(self, tmp_path):
        path = tmp_path / "lenta.csv"
        path.write_text("url,title,text,topic,tags\nu1,а,,t,g\nu2,б,в,t,g\n", encoding="utf-8")
        arts, skipped = load_lenta(path)
        assert [a.id for a in arts] == ["u2"] and skipped == 1

    def test_quoted_comma_and_newline_preserved(self, tmp_path):
        text = 'первая строка, с запятой\nвторая "цитата" строка'
        path = tmp_path / "lenta.csv"
        quoted = '"' + text.replace('"', '""') + '"'
        path.write_text(f"url,title,text,topic,tags\n,заголовок,{quoted},t,g\n", encoding="utf-8")
        (art,), _ = load_lenta(path)
        assert art.text == text
        assert art.id == "lenta-0"

    def test_missing_column_is_fatal(self, tmp_path):
        path = tmp_path / "lenta.csv"
        path.write_text("url,title\nu,t\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="text"):
            load_lenta(path)


class TestNormalize:
    def test_rules(self):
        assert normalize("Курс  Доллара ") == "курс доллара"
        assert normalize("") == ""

    def test_composes_breve(self):
        decomposed = "й"
        out = normalize(decomposed)
        assert out == "й"
        assert len(out) == 1
        # canonical-equivalence oracle
        assert unicodedata.is_normalized("NFC", out)
        assert unicodedata.normalize("NFD", out) == unicodedata.normalize("NFD", decomposed)

    @given(st.text())
    def test_idempotent(self, text):
        assert normalize(normalize(text)) == normalize(text)


class TestSplitDataset:
    def test_counts_100(self):
        assert split_dataset(_articles(100), (90, 5, 5), seed=0).counts == (90, 5, 5)

    def test_counts_million(self):
        arts = [Article(str(i), "t", "x") for i in range(1_000_000)]
        m = split_dataset(arts, (90, 5, 5), seed=1)
        assert m.counts == (900_000, 50_000, 50_000)

    def test_seed_changes_assignment_not_counts(self):
        arts = _articles(100)
        m1, m2 = split_dataset(arts, seed=1), split_dataset(arts, seed=2)
        assert m1.counts == m2.counts
        assert m1.assignment != m2.assignment

    def test_reproducible_and_disjoint(self, tmp_path):
        arts = _articles(237)
        m1, m2 = split_dataset(arts, seed=7), split_dataset(arts, seed=7)
        assert m1.to_dict() == m2.to_dict()
        parts = [set(m1.ids(p)) for p in ("train", "val", "test")]
        assert sum(map(len, parts)) == 237
        assert set.union(*parts) == {a.id for a in arts}
        assert [len(p) for p in parts] == list(m1.counts)
        m1.save(tmp_path / "m.json")
        m2.save(tmp_path / "n.json")
        assert (tmp_path / "m.json").read_bytes() == (tmp_path / "n.json").read_bytes()
        assert SplitManifest.load(tmp_path / "m.json").to_dict() == m1.to_dict()

    def test_manifest_json_schema(self, tmp_path):
        m = split_dataset(_articles(10), seed=3)
        m.save(tmp_path / "m.json")
        data = json.loads((tmp_path / "m.json").read_text())
        assert set(data) == {"seed", "counts", "assignment"}
        assert set(data["assignment"].values()) <= {"train", "val", "test"}

    def test_select_keeps_corpus_order(self):
        arts = _articles(50)
        m = split_dataset(arts, seed=5)
        test = m.select(arts, "test")
        positions = [arts.index(a) for a in test]
        assert positions == sorted(positions)

    def test_too_few_articles(self):
        with pytest.raises(CorpusError):
            split_dataset(_articles(2))

    @pytest.mark.parametrize("ratios", [(90, 5), (90, 10, 0), (50, 30, 30)])
    def test_bad_ratios(self, ratios):
        with pytest.raises(CorpusError):
            split_dataset(_articles(10), ratios)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(CorpusError):
            split_dataset([Article("x", "a", "b")] * 3)


def _texts(text):
    return [text[s.start:s.end] for s in split_sentences(text)]


class TestSplitSentences:
    def test_two_sentences(self):
        assert _texts("первое предложение. второе.") == ["первое предложение.", "второе."]

    def test_no_terminator(self):
        assert _texts("заголовок без точки") == ["заголовок без точки"]

    def test_abbreviation_suppresses_split(self):
        assert _texts("музей им. пушкина открыт.") == ["музей им. пушкина открыт."]

    def test_initials_and_multi_dot_abbreviation(self):
        assert len(split_sentences("а. с. пушкин родился. это известно.")) == 2
        assert len(split_sentences("то есть т.е. так. конец.")) == 2

    def test_other_terminators(self):
        assert _texts("что? да! ну… ладно") == ["что?", "да!", "ну…", "ладно"]

    def test_needs_letter_after_space(self):
        assert len(split_sentences("в 2010 г. 5 человек. 3.5 процента")) == 1

    def test_custom_abbreviations(self):
        assert len(split_sentences("ул. ленина", abbreviations=[])) == 2

    def test_empty(self):
        assert split_sentences("") == []

    @given(st.lists(st.sampled_from(["а", "б", "им", "г", "слово", ".", "!", "?", "…", " ", "  ", "х."]),
                    max_size=30).map("".join))
    def test_spans_reconstruct_text(self, raw):
        text = normalize(raw)
        spans = split_sentences(text)
        rebuilt, pos = [], 0
        for s in spans:
            assert 0 <= s.start < s.end <= len(text)
            gap = text[pos:s.start]
            assert gap.strip() == ""
            rebuilt.append(gap + text[s.start:s.end])
            pos = s.end
        assert text[pos:].strip() == ""
        assert "".join(rebuilt) + text[pos:] == text


def test_articles_roundtrip(tmp_path):
    arts = [Article("1", "т", "т\nекст", "ria"), Article("2", "x", "y")]
    write_articles(arts, tmp_path / "a.jsonl")
    assert read_articles(tmp_path / "a.jsonl") == arts
