"""ROUGE, BLEU, novelty and repetition scoring for headline corpora."""

from __future__ import annotations

import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from headline_bench.corpus import normalize
from headline_bench.tokenization import word_tokenize

BLEU_MAX_ORDER = 4
NOVELTY_ORDERS = (1, 2, 3, 4)


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, hyp_total: int, ref_total: int) -> "RougeScore":
        if hyp_total == 0 or ref_total == 0:
            return cls(0.0, 0.0, 0.0)
        p, r = overlap / hyp_total, overlap / ref_total
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f1)


@dataclass(frozen=True)
class BleuBreakdown:
    p_n: tuple[float, ...]
    bp: float
    hyp_len: int
    ref_len: int
    bleu: float
    orders_used: tuple[int, ...] = ()


@dataclass
class MetricReport:
    rouge1: float
    rouge2: float
    rougeL: float
    r_mean: float
    bleu: BleuBreakdown
    novelty: dict[int, float] | None
    repetition_rate: float
    n_examples: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rouge_1": self.rouge1,
            "rouge_2": self.rouge2,
            "rouge_l": self.rougeL,
            "r_mean": self.r_mean,
            "bleu": self.bleu.bleu,
            "bleu_breakdown": asdict(self.bleu),
            "novelty": None if self.novelty is None else {str(n): v for n, v in self.novelty.items()},
            "repetition_rate": self.repetition_rate,
            "n_examples": self.n_examples,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=1, sort_keys=False)

    def table(self, name: str = "system") -> str:
        return render_table([(name, self.to_dict())])


def ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def rouge_n(ref: Sequence[str], hyp: Sequence[str], n: int = 1) -> RougeScore:
    if n < 1:
        raise MetricsError("n must be >= 1")
    ref_ng, hyp_ng = Counter(ngrams(ref, n)), Counter(ngrams(hyp, n))
    overlap = sum((ref_ng & hyp_ng).values())
    return RougeScore.from_counts(overlap, sum(hyp_ng.values()), sum(ref_ng.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(ref: Sequence[str], hyp: Sequence[str]) -> RougeScore:
    return RougeScore.from_counts(lcs_length(ref, hyp), len(hyp), len(ref))


def _bleu_stats(ref: Sequence[str], hyp: Sequence[str], max_order: int) -> list[int]:
    # [hyp_len, ref_len, match_1, total_1, ..., match_N, total_N]
    stats = [len(hyp), len(ref)]
    for n in range(1, max_order + 1):
        h, r = Counter(ngrams(hyp, n)), Counter(ngrams(ref, n))
        stats += [sum((h & r).values()), sum(h.values())]
    return stats


def corpus_bleu(pairs: Iterable[tuple[Sequence[str], Sequence[str]]], max_order: int = BLEU_MAX_ORDER,
                smooth: bool = False) -> BleuBreakdown:
    """Single-reference corpus BLEU on a 0..100 scale.

    Clipped n-gram counts are pooled over the corpus. Orders with no
    hypothesis n-grams at all are left out of the geometric mean; with
    ``smooth`` on, orders above 1 get add-one counts.
    """
    totals = None
    for ref, hyp in pairs:
        if isinstance(ref, (list, tuple)) and ref and not isinstance(ref[0], str):
            if len(ref) != 1:
                raise MetricsError("only single-reference BLEU is supported")
            ref = ref[0]
        s = _bleu_stats(ref, hyp, max_order)
        totals = s if totals is None else [a + b for a, b in zip(totals, s)]
    if totals is None:
        raise MetricsError("corpus_bleu needs at least one pair")
    return _bleu_from_stats(totals, max_order, smooth)


def _bleu_from_stats(totals: Sequence[int], max_order: int, smooth: bool) -> BleuBreakdown:
    hyp_len, ref_len = totals[0], totals[1]
    p_n, logs, used = [], [], []
    for n in range(1, max_order + 1):
        match, total = totals[2 * n], totals[2 * n + 1]
        if smooth and n > 1:
            match, total = match + 1, total + 1
        if total == 0:
            p_n.append(0.0)
            continue
        p = match / total
        p_n.append(p)
        used.append(n)
        logs.append(math.log(p) if p > 0 else -math.inf)
    if hyp_len == 0:
        bp = 0.0
    else:
        bp = 1.0 if hyp_len >= ref_len else math.exp(1 - ref_len / hyp_len)
    if not logs or any(math.isinf(x) for x in logs) or bp == 0.0:
        bleu = 0.0
    else:
        bleu = 100.0 * bp * math.exp(math.fsum(logs) / len(logs))
    return BleuBreakdown(tuple(p_n), bp, hyp_len, ref_len, bleu, tuple(used))


def novelty(source: Sequence[str], headline: Sequence[str], n: int = 1) -> float | None:
    """Share of distinct headline n-grams that never occur in the source.

    Returns ``None`` for headlines shorter than ``n`` tokens.
    """
    if n < 1:
        raise MetricsError("n must be >= 1")
    head = set(ngrams(headline, n))
    if not head:
        return None
    return len(head - set(ngrams(source, n))) / len(head)


def has_repetition(headline: Sequence[str], n: int = 2) -> bool:
    grams = ngrams(headline, n)
    return len(set(grams)) < len(grams)


def repetition_rate(headlines: Sequence[Sequence[str]], n: int = 2) -> float:
    if n < 1:
        raise MetricsError("n must be >= 1")
    if not headlines:
        return 0.0
    return sum(has_repetition(h, n) for h in headlines) / len(headlines)


def _as_tokens(x) -> tuple[str, ...]:
    if isinstance(x, str):
        return word_tokenize(normalize(x)).tokens
    return tuple(x)


def _score_chunk(args):
    refs, hyps, sources = args
    rows = []
    for i, (ref, hyp) in enumerate(zip(refs, hyps)):
        r1, r2, rl = rouge_n(ref, hyp, 1).f1, rouge_n(ref, hyp, 2).f1, rouge_l(ref, hyp).f1
        nov = tuple(novelty(sources[i], hyp, n) for n in NOVELTY_ORDERS) if sources is not None else None
        rows.append((r1, r2, rl, _bleu_stats(ref, hyp, BLEU_MAX_ORDER), nov, has_repetition(hyp, 2)))
    return rows


def evaluate_corpus(refs: Sequence, hyps: Sequence, sources: Sequence | None = None, jobs: int = 1,
                    smooth_bleu: bool = False) -> MetricReport:
    """Score aligned references and hypotheses.

    Items may be raw strings (normalized and word-tokenized here) or
    token sequences. ROUGE is macro-averaged F1, BLEU is pooled over the
    corpus; both are scaled to 0..100. Novelty is reported only when
    sources are given.
    """
    if len(refs) != len(hyps):
        raise MetricsError(f"length mismatch: {len(refs)} references vs {len(hyps)} hypotheses")
    if sources is not None and len(sources) != len(refs):
        raise MetricsError(f"length mismatch: {len(refs)} references vs {len(sources)} sources")
    if not refs:
        raise MetricsError("empty corpus")
    refs = [_as_tokens(r) for r in refs]
    hyps = [_as_tokens(h) for h in hyps]
    srcs = None if sources is None else [_as_tokens(s) for s in sources]

    if jobs > 1 and len(refs) > jobs:
        bounds = np.linspace(0, len(refs), jobs + 1).astype(int)
        chunks = [(refs[a:b], hyps[a:b], None if srcs is None else srcs[a:b]) for a, b in zip(bounds, bounds[1:])]
        with ProcessPoolExecutor(jobs) as pool:
            rows = [row for part in pool.map(_score_chunk, chunks) for row in part]
    else:
        rows = _score_chunk((refs, hyps, srcs))

    n = len(rows)
    # fsum keeps the averages independent of chunking
    r1 = 100.0 * math.fsum(r[0] for r in rows) / n
    r2 = 100.0 * math.fsum(r[1] for r in rows) / n
    rl = 100.0 * math.fsum(r[2] for r in rows) / n
    totals = [sum(col) for col in zip(*(r[3] for r in rows))]
    bleu = _bleu_from_stats(totals, BLEU_MAX_ORDER, smooth_bleu)
    nov = None
    if srcs is not None:
        nov = {}
        for k, order in enumerate(NOVELTY_ORDERS):
            vals = [r[4][k] for r in rows if r[4][k] is not None]
            nov[order] = math.fsum(vals) / len(vals) if vals else 0.0
    rep = sum(r[5] for r in rows) / n
    config = {
        "rouge": "token-level F1, macro-averaged, no stemming, lowercase word tokens",
        "bleu": f"corpus, max order {BLEU_MAX_ORDER}, uniform weights, zero-count orders excluded",
        "bleu_smoothing": "add-one above unigrams" if smooth_bleu else "none",
        "repetition_n": 2,
    }
    return MetricReport(r1, r2, rl, (r1 + r2 + rl) / 3, bleu, nov, rep, n, config)


def bootstrap_r_mean(refs: Sequence, hyps: Sequence, n_samples: int = 1000, seed: int = 0,
                     alpha: float = 0.05) -> tuple[float, float]:
    """Percentile bootstrap interval for R-mean over resampled items."""
    refs = [_as_tokens(r) for r in refs]
    hyps = [_as_tokens(h) for h in hyps]
    per_item = np.array([(rouge_n(r, h, 1).f1 + rouge_n(r, h, 2).f1 + rouge_l(r, h).f1) / 3
                         for r, h in zip(refs, hyps)])
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(per_item), size=(n_samples, len(per_item)))
    means = 100.0 * per_item[idx].mean(axis=1)
    return float(np.quantile(means, alpha / 2)), float(np.quantile(means, 1 - alpha / 2))


TABLE_COLUMNS = (("R1", "rouge_1"), ("R2", "rouge_2"), ("RL", "rouge_l"), ("R-mean", "r_mean"), ("BLEU", "bleu"))


def render_table(rows: Sequence[tuple[str, dict]]) -> str:
    """Fixed-width table with one row per system, one decimal per cell."""
    name_w = max([len("Model")] + [len(name) for name, _ in rows])
    header = "Model".ljust(name_w) + "".join(f" | {c:>6}" for c, _ in TABLE_COLUMNS)
    lines = [header, "-" * len(header)]
    for name, rep in rows:
        cells = []
        for _, key in TABLE_COLUMNS:
            v = rep.get(key)
            cells.append(f" | {'-':>6}" if v is None else f" | {v:6.1f}")
        lines.append(name.ljust(name_w) + "".join(cells))
    return "\n".join(lines)


def novelty_profile(sources: Sequence, headlines: Sequence, orders: Sequence[int] = NOVELTY_ORDERS) -> dict[int, float]:
    srcs = [_as_tokens(s) for s in sources]
    heads = [_as_tokens(h) for h in headlines]
    out = {}
    for n in orders:
        vals = [v for s, h in zip(srcs, heads) if (v := novelty(s, h, n)) is not None]
        out[n] = math.fsum(vals) / len(vals) if vals else 0.0
    return out
