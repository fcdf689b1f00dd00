"""Benchmarking workbench for news headline generation."""

from headline_bench.corpus import Article, load_lenta, load_ria, normalize, split_dataset, split_sentences
from headline_bench.metrics import MetricReport, corpus_bleu, evaluate_corpus, novelty, repetition_rate, rouge_l, rouge_n
from headline_bench.tokenization import BpeModel, TokenSeq, Vocab, bpe_decode, bpe_encode, bpe_train, word_tokenize

__version__ = "0.1.0"

__all__ = [
    "Article",
    "BpeModel",
    "MetricReport",
    "TokenSeq",
    "Vocab",
    "bpe_decode",
    "bpe_encode",
    "bpe_train",
    "corpus_bleu",
    "evaluate_corpus",
    "load_lenta",
    "load_ria",
    "normalize",
    "novelty",
    "repetition_rate",
    "rouge_l",
    "rouge_n",
    "split_dataset",
    "split_sentences",
    "word_tokenize",
]
