"""Encoder-input, learning-rate and document-noising mechanisms.

Covers the multi-sentence [CLS]/[SEP] document encoding with alternating
segment ids, inverse-square-root warmup schedules with separate encoder
and decoder settings, and sentence shuffling / rotation / span infilling.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from headline_bench.tokenization import Vocab

CLS = "[CLS]"
SEP = "[SEP]"
MASK = "<mask>"

NOISE_KINDS = ("shuffle_sentences", "rotate", "infill")


@dataclass(frozen=True)
class EncodedDoc:
    token_ids: list[int]
    segment_ids: list[int]
    cls_positions: list[int]
    attention_length: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def encode_document(sentences: Sequence[Sequence[str]], vocab: Vocab, max_len: int = 512) -> EncodedDoc:
    """Lay out ``[CLS] s_k [SEP]`` blocks with segment ids alternating per sentence.

    A sentence that does not fit entirely is dropped together with
    everything after it; only a first sentence that alone overflows is
    cut, keeping its [CLS] and [SEP].
    """
    if not sentences:
        raise ValueError("document needs at least one sentence")
    if CLS not in vocab or SEP not in vocab:
        raise ValueError("vocabulary lacks [CLS]/[SEP]")
    if max_len < 3:
        raise ValueError("max_len must leave room for [CLS], one token and [SEP]")
    cls_id, sep_id = vocab.id_of[CLS], vocab.id_of[SEP]
    ids: list[int] = []
    segs: list[int] = []
    cls_pos: list[int] = []
    for k, sent in enumerate(sentences):
        body = vocab.encode(sent)
        if len(ids) + len(body) + 2 > max_len:
            if k > 0:
                break
            body = body[:max_len - 2]
        cls_pos.append(len(ids))
        block = [cls_id, *body, sep_id]
        ids.extend(block)
        segs.extend([k % 2] * len(block))
    return EncodedDoc(ids, segs, cls_pos, len(ids))


def decode_document(doc: EncodedDoc, vocab: Vocab) -> list[list[str]]:
    """Sentence token lists recovered from an encoded document."""
    out: list[list[str]] = []
    for tok in vocab.decode(doc.token_ids):
        if tok == CLS:
            out.append([])
        elif tok != SEP:
            out[-1].append(tok)
    return out


@dataclass(frozen=True)
class ScheduleConfig:
    base_lr: float
    warmup_steps: int

    def __post_init__(self):
        if self.base_lr <= 0:
            raise ValueError("base_lr must be positive")
        if self.warmup_steps < 1:
            raise ValueError("warmup_steps must be >= 1")


# conventional defaults for a pretrained encoder with a fresh decoder, not tuned here
ENCODER_SCHEDULE = ScheduleConfig(2e-3, 20_000)
DECODER_SCHEDULE = ScheduleConfig(0.2, 10_000)


def noam_lr(step: int, cfg: ScheduleConfig) -> float:
    if step < 1:
        raise ValueError("step must be >= 1")
    return cfg.base_lr * min(step ** -0.5, step * cfg.warmup_steps ** -1.5)


def dual_schedule(step: int, encoder: ScheduleConfig = ENCODER_SCHEDULE,
                  decoder: ScheduleConfig = DECODER_SCHEDULE) -> tuple[float, float]:
    return noam_lr(step, encoder), noam_lr(step, decoder)


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    mask_token: str = MASK
    span_length_mean: float = 3.0
    mask_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.kind == "infill" and self.span_length_mean <= 0:
            raise ValueError("span_length_mean must be positive")
        if not 0.0 <= self.mask_fraction <= 1.0:
            raise ValueError("mask_fraction must lie in [0, 1]")


def shuffle_sentences(sentences: Sequence[Sequence[str]], rng: np.random.Generator) -> list[list[str]]:
    order = rng.permutation(len(sentences))
    return [list(sentences[i]) for i in order]


def rotate(tokens: Sequence[str], offset: int) -> list[str]:
    if not tokens:
        return []
    offset %= len(tokens)
    return list(tokens[offset:]) + list(tokens[:offset])


def infill_spans(n_tokens: int, span_length_mean: float, mask_fraction: float,
                 rng: np.random.Generator) -> list[tuple[int, int]]:
    """Disjoint ``(start, end)`` spans covering ``round(mask_fraction * n)`` tokens.

    Lengths are Poisson draws with zero bumped to one and clipped to the
    remaining budget; a span stops short when it runs into an earlier one.
    """
    budget = int(round(mask_fraction * n_tokens))
    taken = np.zeros(n_tokens, dtype=bool)
    spans: list[tuple[int, int]] = []
    masked = 0
    while masked < budget:
        length = max(1, int(rng.poisson(span_length_mean)))
        length = min(length, budget - masked)
        free = np.flatnonzero(~taken)
        start = int(free[rng.integers(len(free))])
        end = start
        while end < n_tokens and end - start < length and not taken[end]:
            end += 1
        taken[start:end] = True
        spans.append((start, end))
        masked += end - start
    return sorted(spans)


def infill(tokens: Sequence[str], spec: NoiseSpec, rng: np.random.Generator) -> tuple[list[str], np.ndarray]:
    """Replace each sampled span by one mask token; also return the token mask."""
    mask = np.zeros(len(tokens), dtype=bool)
    spans = infill_spans(len(tokens), spec.span_length_mean, spec.mask_fraction, rng)
    out: list[str] = []
    pos = 0
    for start, end in spans:
        out.extend(tokens[pos:start])
        out.append(spec.mask_token)
        mask[start:end] = True
        pos = end
    out.extend(tokens[pos:])
    return out, mask


def corrupt(sentences: Sequence[Sequence[str]], spec: NoiseSpec) -> list[str]:
    """Noised token stream for one document, reproducible from ``spec.seed``."""
    flat = [t for s in sentences for t in s]
    if not flat:
        return flat
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "shuffle_sentences":
        return [t for s in shuffle_sentences(sentences, rng) for t in s]
    if spec.kind == "rotate":
        return rotate(flat, int(rng.integers(len(flat))))
    return infill(flat, spec, rng)[0]
