"""News corpus ingestion, normalization, sentence splitting and splits."""

from __future__ import annotations

import csv
import html
import json
import logging
import re
import sys
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

log = logging.getLogger(__name__)

PARTITIONS = ("train", "val", "test")

_TAG_RE = re.compile(r"<[^>]*>")
_WS_RE = re.compile(r"\s+")
_TERMINATORS = ".!?…"
_CLOSERS = "»\"')"


class CorpusError(Exception):
    pass


@dataclass(frozen=True)
class Article:
    id: str
    title: str
    text: str
    source_tag: str | None = None

    def to_json(self) -> str:
        rec = {"id": self.id, "title": self.title, "text": self.text}
        if self.source_tag is not None:
            rec["source_tag"] = self.source_tag
        return json.dumps(rec, ensure_ascii=False)


class Loaded(NamedTuple):
    articles: list[Article]
    skipped: int


@dataclass(frozen=True)
class SentenceSpan:
    start: int
    end: int


@dataclass
class SplitManifest:
    seed: int
    counts: tuple[int, int, int]
    assignment: dict[str, str] = field(default_factory=dict)

    def ids(self, partition: str) -> list[str]:
        return [i for i, p in self.assignment.items() if p == partition]

    def select(self, articles: Iterable[Article], partition: str) -> list[Article]:
        """Articles of one partition, in corpus order."""
        if partition not in PARTITIONS:
            raise CorpusError(f"unknown partition {partition!r}")
        return [a for a in articles if self.assignment.get(a.id) == partition]

    def to_dict(self) -> dict:
        return {"seed": self.seed, "counts": list(self.counts), "assignment": dict(self.assignment)}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SplitManifest":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(int(data["seed"]), tuple(data["counts"]), dict(data["assignment"]))


def strip_html(text: str) -> str:
    text = html.unescape(_TAG_RE.sub(" ", text))
    return _WS_RE.sub(" ", text).strip()


def normalize(text: str) -> str:
    text = unicodedata.normalize("NFC", text).lower()
    return _WS_RE.sub(" ", text).strip()


def load_ria(path: str | Path, source_tag: str = "ria") -> Loaded:
    """Read a JSON-lines corpus with ``title`` and ``text`` fields.

    Malformed lines and records lacking either field are skipped and
    counted. Markup in ``text`` is stripped and entities decoded.
    """
    path = Path(path)
    try:
        fh = path.open(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc
    articles, skipped = [], 0
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                skipped += 1
                continue
            if not isinstance(rec, dict):
                skipped += 1
                continue
            title, text = rec.get("title"), rec.get("text")
            if not isinstance(title, str) or not isinstance(text, str):
                skipped += 1
                continue
            title, text = strip_html(title), strip_html(text)
            if not title or not text:
                skipped += 1
                continue
            art_id = str(rec.get("id") or f"{source_tag}-{lineno}")
            articles.append(Article(art_id, title, text, source_tag))
    if skipped:
        log.warning("%s: skipped %d records", path, skipped)
    _check_unique(articles)
    return Loaded(articles, skipped)


def load_lenta(path: str | Path, source_tag: str = "lenta") -> Loaded:
    """Read the Lenta CSV dump (header with at least url, title, text)."""
    path = Path(path)
    csv.field_size_limit(sys.maxsize)
    try:
        fh = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc
    articles, skipped = [], 0
    with fh:
        reader = csv.DictReader(fh)
        missing = {"url", "title", "text"} - set(reader.fieldnames or ())
        if missing:
            raise CorpusError(f"{path}: missing required columns {sorted(missing)}")
        for row_idx, row in enumerate(reader):
            title, text = (row.get("title") or "").strip(), (row.get("text") or "").strip()
            if not title or not text:
                skipped += 1
                continue
            url = (row.get("url") or "").strip()
            articles.append(Article(url or f"{source_tag}-{row_idx}", title, text, source_tag))
    if skipped:
        log.warning("%s: skipped %d rows", path, skipped)
    _check_unique(articles)
    return Loaded(articles, skipped)


def read_articles(path: str | Path) -> list[Article]:
    """Read the articles JSONL interchange format written by ``write_articles``."""
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(Article(str(rec.get("id") or lineno), rec["title"], rec["text"], rec.get("source_tag")))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusError(f"{path}:{lineno}: bad article record ({exc})") from exc
    _check_unique(out)
    return out


def write_articles(articles: Iterable[Article], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for a in articles:
            fh.write(a.to_json() + "\n")


def _check_unique(articles: Sequence[Article]) -> None:
    seen = set()
    for a in articles:
        if not a.id:
            raise CorpusError("article with empty id")
        if a.id in seen:
            raise CorpusError(f"duplicate article id {a.id!r}")
        seen.add(a.id)


def split_dataset(articles: Sequence[Article], ratios: Sequence[int] = (90, 5, 5), seed: int = 42) -> SplitManifest:
    """Seeded shuffle, then contiguous train/val/test assignment.

    Train and validation sizes are floored, the test partition takes the
    remainder.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or sum(ratios) != 100:
        raise CorpusError(f"ratios must be three positive integers summing to 100, got {tuple(ratios)}")
    n = len(articles)
    if n < len(PARTITIONS):
        raise CorpusError(f"need at least {len(PARTITIONS)} articles to split, got {n}")
    _check_unique(articles)
    n_train = n * ratios[0] // 100
    n_val = n * ratios[1] // 100
    counts = (n_train, n_val, n - n_train - n_val)
    order = np.random.default_rng(seed).permutation(n)
    label = np.empty(n, dtype=object)
    label[order[:n_train]] = "train"
    label[order[n_train:n_train + n_val]] = "val"
    label[order[n_train + n_val:]] = "test"
    assignment = {a.id: str(label[i]) for i, a in enumerate(articles)}
    return SplitManifest(seed, counts, assignment)


def load_abbreviations() -> frozenset[str]:
    text = resources.files("headline_bench").joinpath("data/abbreviations.txt").read_text(encoding="utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#"))


DEFAULT_ABBREVIATIONS = load_abbreviations()


def split_sentences(text: str, abbreviations: Iterable[str] | None = None) -> list[SentenceSpan]:
    """Sentence spans of normalized text.

    A boundary follows a run of terminators (optionally closed by a quote
    or bracket) when whitespace and then a letter come next. A period
    after a listed abbreviation or a single-letter initial does not end
    a sentence.
    """
    abbrevs = DEFAULT_ABBREVIATIONS if abbreviations is None else frozenset(abbreviations)
    n = len(text)
    spans: list[SentenceSpan] = []
    start = 0
    while start < n and text[start].isspace():
        start += 1
    i = start
    while i < n:
        if text[i] not in _TERMINATORS:
            i += 1
            continue
        j = i
        while j < n and text[j] in _TERMINATORS:
            j += 1
        while j < n and text[j] in _CLOSERS:
            j += 1
        k = j
        while k < n and text[k].isspace():
            k += 1
        if k == j or k >= n or not text[k].isalpha():
            i = j
            continue
        if text[i:j].startswith(".") and _is_abbreviation(text, start, i, abbrevs):
            i = j
            continue
        spans.append(SentenceSpan(start, j))
        start = i = k
    end = n
    while end > start and text[end - 1].isspace():
        end -= 1
    if end > start:
        spans.append(SentenceSpan(start, end))
    return spans


def _is_abbreviation(text: str, sent_start: int, dot: int, abbrevs: frozenset[str]) -> bool:
    w = dot
    while w > sent_start and not text[w - 1].isspace():
        w -= 1
    word = text[w:dot].lstrip("«\"'(")
    if not word:
        return False
    if len(word) == 1 and word.isalpha():
        return True
    return word in abbrevs


def sentences(text: str, abbreviations: Iterable[str] | None = None) -> list[str]:
    return [text[s.start:s.end] for s in split_sentences(text, abbreviations)]
