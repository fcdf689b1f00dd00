"""Headline generators that need no training."""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Iterable

from headline_bench.corpus import Article, normalize, split_sentences
from headline_bench.tokenization import word_tokenize


def first_sentence(article: Article | str, max_tokens: int | None = None) -> str:
    text = normalize(article.text if isinstance(article, Article) else article)
    spans = split_sentences(text)
    if not spans:
        return ""
    head = text[spans[0].start:spans[0].end]
    if max_tokens is not None and len(word_tokenize(head)) > max_tokens:
        # cut on the character offset of the last kept token so the output stays a prefix
        count, pos = 0, 0
        for tok in word_tokenize(head):
            pos = head.index(tok, pos) + len(tok)
            count += 1
            if count == max_tokens:
                break
        head = head[:pos]
    return head


GENERATORS: dict[str, Callable[..., str]] = {"first_sentence": first_sentence}


def run_baseline(articles: Iterable[Article], generator: str | Callable[..., str] = "first_sentence",
                 out: str | Path | None = None, **kwargs) -> list[str]:
    """Generate one headline per article in input order; optionally write them one per line."""
    gen = GENERATORS[generator] if isinstance(generator, str) else generator
    lines = [gen(a, **kwargs).replace("\n", " ") for a in articles]
    if out is not None:
        write_predictions(lines, out)
    return lines


def write_predictions(lines: Iterable[str], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def read_predictions(path: str | Path) -> list[str]:
    with Path(path).open(encoding="utf-8") as fh:
        return [line.rstrip("\r\n") for line in fh]
