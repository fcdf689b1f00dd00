"""Length-normalized beam search."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from headline_bench.seq2seq.pgn import BOS_ID, EOS_ID, PAD_ID, PgnParams, decode_step, encode_source, extend_ids
from headline_bench.tokenization import TokenSeq

StepFn = Callable[[object, int], tuple[np.ndarray, object]]


def normalized(logp: float, length: int, alpha: float) -> float:
    return logp / (max(length, 1) ** alpha)


def search(step: StepFn, init_state, bos: int, eos: int, beam: int = 4, max_len: int = 30,
           alpha: float = 1.0) -> tuple[tuple[int, ...], float]:
    """Generic beam search over a ``step(state, token) -> (log_probs, state)`` model.

    Candidates are ranked by cumulative log-probability with ties going
    to the smaller token-id sequence; finished hypotheses (ending in
    ``eos``) compete on ``logp / len**alpha``. If nothing finishes within
    ``max_len`` steps the best partial hypothesis is returned. The
    result includes the trailing ``eos`` when present.
    """
    if beam < 1:
        raise ValueError("beam must be >= 1")
    live = [(0.0, (), init_state, bos)]
    finished: list[tuple[float, tuple[int, ...]]] = []
    for _ in range(max_len):
        cands = []
        for logp, toks, state, last in live:
            lp, new_state = step(state, last)
            top = np.argsort(-lp, kind="stable")[:beam]
            for tok in top:
                if np.isfinite(lp[tok]):
                    cands.append((logp + float(lp[tok]), toks + (int(tok),), new_state))
        cands.sort(key=lambda c: (-c[0], c[1]))
        live = []
        for logp, toks, state in cands[:beam]:
            if toks[-1] == eos:
                finished.append((logp, toks))
            else:
                live.append((logp, toks, state, toks[-1]))
        if not live:
            break
    pool = finished or [(logp, toks) for logp, toks, _, _ in live]
    best = min(pool, key=lambda c: (-normalized(c[0], len(c[1]), alpha), c[1]))
    return best[1], normalized(best[0], len(best[1]), alpha)


def _pgn_step(params: PgnParams, source):
    banned = [PAD_ID, BOS_ID]

    def step(state, token):
        cell_state, cov = state
        dist, cell_state, cov, _ = decode_step(params, source, token, cell_state, cov)
        with np.errstate(divide="ignore"):
            lp = np.log(dist)
        lp[banned] = -np.inf
        return lp, (cell_state, cov)

    return step


def beam_search(params: PgnParams, src_ext: Sequence[int], beam: int = 4, max_len: int | None = None,
                alpha: float = 1.0, n_ext: int = 0) -> list[int]:
    """Decode extended-vocabulary ids for one source; EOS is stripped.

    With ``beam > 1`` the greedy decode is kept as a candidate, so the
    returned hypothesis never scores below the beam-1 result.
    """
    max_len = params.config.max_tgt_len + 1 if max_len is None else max_len
    source = encode_source(params, src_ext, n_ext)
    init = (source.state0, np.zeros(source.mask.shape))
    step = _pgn_step(params, source)
    toks, score = search(step, init, BOS_ID, EOS_ID, beam, max_len, alpha)
    if beam > 1:
        g_toks, g_score = search(step, init, BOS_ID, EOS_ID, 1, max_len, alpha)
        if (-g_score, g_toks) < (-score, toks):
            toks = g_toks
    return [t for t in toks if t != EOS_ID]


def generate(params: PgnParams, vocab, src_tokens: Sequence[str], beam: int = 4, max_len: int | None = None,
             alpha: float = 1.0) -> TokenSeq:
    """Headline tokens for a tokenized source, copying source OOVs by name."""
    ex = extend_ids(src_tokens, (), vocab)
    ids = beam_search(params, ex.src, beam, max_len, alpha, len(ex.oovs))
    V = len(vocab)
    toks = [vocab.token_of[i] if i < V else ex.oovs[i - V] for i in ids]
    return TokenSeq(tuple(toks), "word")
