"""Pointer-generator network with coverage, in numpy, with exact gradients.

Model summary (row-vector convention, per decoder step t):

    e_i   = v . tanh(h_i W_h + s_t W_s + c_t[i] w_c + b_attn)
    a_t   = softmax(e) over unpadded source positions
    h*_t  = sum_i a_t[i] h_i
    P_voc = softmax(([s_t; h*_t] V + b) V' + b')
    p_gen = sigmoid(h*_t . w_h + s_t . w_s + x_t . w_x + b_ptr)
    P(w)  = p_gen P_voc(w) + (1 - p_gen) sum_{i: src_i = w} a_t[i]
    cov_t = sum_i min(a_t[i], c_t[i]);  c_{t+1} = c_t + a_t

The per-step loss is ``-ln P(y_t) + lambda * cov_t``, averaged over the
target steps of each example and then over the batch.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from headline_bench.seq2seq.cells import CELLS, sigmoid

PAD_ID, UNK_ID, BOS_ID, EOS_ID = 0, 1, 2, 3


class PgnError(ValueError):
    pass


@dataclass(frozen=True)
class PgnConfig:
    vocab_size: int
    embed_dim: int = 32
    hidden_dim: int = 64
    max_src_len: int = 400
    max_tgt_len: int = 30
    coverage_weight: float = 1.0
    cell: str = "lstm"
    seed: int = 0
    init_scale: float = 0.1

    def __post_init__(self):
        for name in ("vocab_size", "embed_dim", "hidden_dim", "max_src_len", "max_tgt_len"):
            if getattr(self, name) < 1:
                raise PgnError(f"{name} must be >= 1")
        if self.vocab_size <= EOS_ID:
            raise PgnError("vocab_size must cover the four reserved ids")
        if self.coverage_weight < 0:
            raise PgnError("coverage_weight must be >= 0")
        if self.cell not in CELLS:
            raise PgnError(f"unknown cell {self.cell!r}")

    @property
    def attn_dim(self) -> int:
        return 2 * self.hidden_dim

    def to_dict(self) -> dict:
        return asdict(self)


def param_shapes(cfg: PgnConfig) -> dict[str, tuple[int, ...]]:
    V, E, H, A = cfg.vocab_size, cfg.embed_dim, cfg.hidden_dim, cfg.attn_dim
    G = CELLS[cfg.cell].n_gates * H
    shapes = {"emb": (V, E)}
    for prefix, in_dim in (("enc_f_", E), ("enc_b_", E), ("dec_", E)):
        shapes.update({prefix + "Wx": (in_dim, G), prefix + "Wh": (H, G), prefix + "b": (G,)})
    shapes.update({
        "red_W": (2 * H, H), "red_b": (H,),
        "attn_W_h": (2 * H, A), "attn_W_s": (H, A), "attn_w_c": (A,), "b_attn": (A,), "attn_v": (A,),
        "V": (3 * H, H), "b": (H,), "V_prime": (H, V), "b_prime": (V,),
        "ptr_w_h": (2 * H,), "ptr_w_s": (H,), "ptr_w_x": (E,), "b_ptr": (1,),
    })
    return shapes


BIASES = {"enc_f_b", "enc_b_b", "dec_b", "red_b", "b_attn", "b", "b_prime", "b_ptr"}


@dataclass
class PgnParams:
    config: PgnConfig
    tensors: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def copy(self) -> "PgnParams":
        return PgnParams(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def validate(self) -> None:
        for name, shape in param_shapes(self.config).items():
            if name not in self.tensors:
                raise PgnError(f"missing parameter {name}")
            if self.tensors[name].shape != shape:
                raise PgnError(f"{name}: shape {self.tensors[name].shape} != expected {shape}")
            if not np.all(np.isfinite(self.tensors[name])):
                raise PgnError(f"{name}: non-finite values")

    @property
    def n_params(self) -> int:
        return sum(v.size for v in self.tensors.values())


def init_params(cfg: PgnConfig) -> PgnParams:
    """Uniform(-init_scale, init_scale) weights and zero biases from ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    tensors = {}
    for name, shape in param_shapes(cfg).items():
        if name in BIASES:
            tensors[name] = np.zeros(shape)
        else:
            tensors[name] = rng.uniform(-cfg.init_scale, cfg.init_scale, size=shape)
    return PgnParams(cfg, tensors)


def softmax(x, axis=-1):
    x = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(x)
    return e / e.sum(axis=axis, keepdims=True)


def _attend(p, enc, enc_feat, s, cov, mask):
    pre = enc_feat + (s @ p["attn_W_s"])[..., None, :] + cov[..., None] * p["attn_w_c"] + p["b_attn"]
    th = np.tanh(pre)
    e = th @ p["attn_v"]
    e = np.where(mask > 0, e, -np.inf)
    a = softmax(e, axis=-1)
    ctx = np.einsum("...n,...nk->...k", a, enc)
    return a, ctx, th


def attention(s_t, enc_states, c_t, params: PgnParams, mask=None):
    """Coverage-aware additive attention.

    ``s_t`` is ``(H,)`` or ``(B, H)``, ``enc_states`` ``(..., n, 2H)``,
    ``c_t`` ``(..., n)``. Returns the attention weights and the context.
    """
    p = params.tensors
    enc_states = np.asarray(enc_states, dtype=float)
    c_t = np.asarray(c_t, dtype=float)
    if mask is None:
        mask = np.ones(enc_states.shape[:-1])
    a, ctx, _ = _attend(p, enc_states, enc_states @ p["attn_W_h"], np.asarray(s_t, dtype=float), c_t, mask)
    return a, ctx


def final_distribution(p_gen: float, vocab_dist, a_t, src_ids, extended_size: int = 0) -> np.ndarray:
    """Mix the generation distribution with attention mass scattered onto source ids."""
    vocab_dist = np.asarray(vocab_dist, dtype=float)
    out = np.zeros(vocab_dist.shape[-1] + extended_size)
    out[:vocab_dist.shape[-1]] = p_gen * vocab_dist
    np.add.at(out, np.asarray(src_ids, dtype=int), (1.0 - p_gen) * np.asarray(a_t, dtype=float))
    return out


def coverage_step(c_t, a_t):
    c_t, a_t = np.asarray(c_t, dtype=float), np.asarray(a_t, dtype=float)
    if c_t.shape != a_t.shape:
        raise PgnError(f"coverage shape {c_t.shape} != attention shape {a_t.shape}")
    return c_t + a_t, float(np.minimum(a_t, c_t).sum())


@dataclass
class Example:
    """One source/target pair in extended-vocabulary ids."""

    src: list[int]
    tgt: list[int]
    oovs: list[str] = field(default_factory=list)


def extend_ids(src_tokens: Sequence[str], tgt_tokens: Sequence[str], vocab) -> Example:
    """Map tokens to ids, giving source OOVs temporary ids past the vocabulary."""
    V = len(vocab)
    oovs: list[str] = []
    src = []
    for tok in src_tokens:
        if tok in vocab:
            src.append(vocab.id_of[tok])
        else:
            if tok not in oovs:
                oovs.append(tok)
            src.append(V + oovs.index(tok))
    tgt = []
    for tok in tgt_tokens:
        if tok in vocab:
            tgt.append(vocab.id_of[tok])
        elif tok in oovs:
            tgt.append(V + oovs.index(tok))
        else:
            tgt.append(UNK_ID)
    return Example(src, tgt, oovs)


@dataclass
class Batch:
    src: np.ndarray
    src_ext: np.ndarray
    src_mask: np.ndarray
    dec_in: np.ndarray
    target: np.ndarray
    tgt_mask: np.ndarray
    n_ext: np.ndarray

    @property
    def size(self) -> int:
        return self.src.shape[0]


def make_batch(examples: Sequence[Example], cfg: PgnConfig) -> Batch:
    """Pad a list of examples; sources and targets are cut to the configured maxima.

    Decoder inputs are ``[BOS] + tgt`` and outputs ``tgt + [EOS]``.
    """
    V = cfg.vocab_size
    B = len(examples)
    srcs = [ex.src[:cfg.max_src_len] for ex in examples]
    tgts = [ex.tgt[:cfg.max_tgt_len] for ex in examples]
    if any(len(s) == 0 for s in srcs):
        raise PgnError("empty source sequence")
    n = max(len(s) for s in srcs)
    T = max(len(t) for t in tgts) + 1
    src_ext = np.zeros((B, n), dtype=np.int64)
    src_mask = np.zeros((B, n))
    dec_in = np.zeros((B, T), dtype=np.int64)
    target = np.zeros((B, T), dtype=np.int64)
    tgt_mask = np.zeros((B, T))
    n_ext = np.zeros(B, dtype=np.int64)
    for b, (s, t, ex) in enumerate(zip(srcs, tgts, examples)):
        src_ext[b, :len(s)] = s
        src_mask[b, :len(s)] = 1.0
        n_ext[b] = len(ex.oovs)
        limit = V + n_ext[b]
        for tok in t:
            if not 0 <= tok < limit:
                raise PgnError(f"target id {tok} outside vocabulary+extended range [0, {limit})")
        dec_in[b, :len(t) + 1] = [BOS_ID] + t
        target[b, :len(t) + 1] = t + [EOS_ID]
        tgt_mask[b, :len(t) + 1] = 1.0
    src = np.where(src_ext >= V, UNK_ID, src_ext)
    dec_in = np.where(dec_in >= V, UNK_ID, dec_in)
    return Batch(src, src_ext, src_mask, dec_in, target, tgt_mask, n_ext)


def _encode(p, cfg: PgnConfig, src, mask):
    Cell = CELLS[cfg.cell]
    B, n = src.shape
    H = cfg.hidden_dim
    xs = p["emb"][src]
    hf = np.empty((B, n, H))
    hb = np.empty((B, n, H))
    caches_f, caches_b = [None] * n, [None] * n
    st = Cell.zero_state(B, H)
    for i in range(n):
        new, caches_f[i] = Cell.forward(p, "enc_f_", xs[:, i], st)
        mi = mask[:, i:i + 1]
        st = tuple(mi * a + (1.0 - mi) * b for a, b in zip(new, st))
        hf[:, i] = st[0]
    h_last = st[0]
    st = Cell.zero_state(B, H)
    for i in reversed(range(n)):
        new, caches_b[i] = Cell.forward(p, "enc_b_", xs[:, i], st)
        mi = mask[:, i:i + 1]
        st = tuple(mi * a + (1.0 - mi) * b for a, b in zip(new, st))
        hb[:, i] = st[0]
    h_first = st[0]
    enc = np.concatenate([hf, hb], axis=2)
    hfin = np.concatenate([h_last, h_first], axis=1)
    s0 = np.tanh(hfin @ p["red_W"] + p["red_b"])
    state0 = (s0,) + Cell.zero_state(B, H)[1:]
    enc_feat = enc @ p["attn_W_h"]
    return enc, enc_feat, state0, (caches_f, caches_b, hfin, s0)


def _decoder_step(p, cfg, enc, enc_feat, mask, token, state, cov):
    Cell = CELLS[cfg.cell]
    x = p["emb"][token]
    state, cell_cache = Cell.forward(p, "dec_", x, state)
    s = state[0]
    a, ctx, th = _attend(p, enc, enc_feat, s, cov, mask)
    so = np.concatenate([s, ctx], axis=-1)
    o = so @ p["V"] + p["b"]
    pv = softmax(o @ p["V_prime"] + p["b_prime"])
    pg = sigmoid(ctx @ p["ptr_w_h"] + s @ p["ptr_w_s"] + x @ p["ptr_w_x"] + p["b_ptr"][0])
    return state, dict(x=x, s=s, a=a, ctx=ctx, th=th, so=so, o=o, pv=pv, pg=pg, cell=cell_cache)


def _forward(params: PgnParams, batch: Batch, lam: float, keep_cache: bool, want_pred: bool = False):
    p, cfg = params.tensors, params.config
    V = cfg.vocab_size
    B, T = batch.dec_in.shape
    mask = batch.src_mask
    rows = np.arange(B)
    enc, enc_feat, state, enc_cache = _encode(p, cfg, batch.src, mask)
    weights = batch.tgt_mask / (batch.tgt_mask.sum(axis=1, keepdims=True) * B)
    cov = np.zeros_like(mask)
    steps = []
    total = 0.0
    diag = {"p_gen": [], "attention": [], "coverage": [], "coverage_loss": [], "nll": [], "a_lt_c": []}
    preds = np.zeros((B, T), dtype=np.int64) if want_pred else None
    for t in range(T):
        state, r = _decoder_step(p, cfg, enc, enc_feat, mask, batch.dec_in[:, t], state, cov)
        y = batch.target[:, t]
        in_vocab = y < V
        y_c = np.minimum(y, V - 1)
        pv_y = np.where(in_vocab, r["pv"][rows, y_c], 0.0)
        hit = (batch.src_ext == y[:, None]) & (mask > 0)
        copy_y = (r["a"] * hit).sum(axis=1)
        pg = r["pg"]
        prob = pg * pv_y + (1.0 - pg) * copy_y
        covl = np.minimum(r["a"], cov).sum(axis=1)
        nll = -np.log(prob)
        total += float(np.sum(weights[:, t] * (nll + lam * covl)))
        if want_pred:
            full = np.zeros((B, V + int(batch.n_ext.max())))
            full[:, :V] = pg[:, None] * r["pv"]
            np.add.at(full, (np.repeat(rows, mask.shape[1]), batch.src_ext.ravel()),
                      ((1.0 - pg)[:, None] * r["a"]).ravel())
            preds[:, t] = full.argmax(axis=1)
        diag["p_gen"].append(pg)
        diag["attention"].append(r["a"])
        diag["coverage"].append(cov)
        diag["coverage_loss"].append(covl)
        diag["nll"].append(nll)
        diag["a_lt_c"].append((r["a"] < cov) & (mask > 0))
        if keep_cache:
            r.update(cov=cov, y=y, y_c=y_c, in_vocab=in_vocab, pv_y=pv_y, hit=hit, copy_y=copy_y, prob=prob)
            steps.append(r)
        cov = cov + r["a"]
    if preds is not None:
        diag["predictions"] = preds
    cache = (enc, enc_feat, enc_cache, steps, weights) if keep_cache else None
    return total, diag, cache


def batch_loss(params: PgnParams, batch: Batch, lam: float | None = None) -> float:
    lam = params.config.coverage_weight if lam is None else lam
    return _forward(params, batch, lam, keep_cache=False)[0]


def loss_and_grads(params: PgnParams, batch: Batch, lam: float | None = None):
    """Mean loss over the batch, gradients for every tensor and step diagnostics."""
    lam = params.config.coverage_weight if lam is None else lam
    p, cfg = params.tensors, params.config
    Cell = CELLS[cfg.cell]
    H = cfg.hidden_dim
    loss, diag, (enc, enc_feat, enc_cache, steps, weights) = _forward(params, batch, lam, keep_cache=True)
    grads = {k: np.zeros_like(v) for k, v in p.items()}
    B, n = batch.src.shape
    rows = np.arange(B)
    mask = batch.src_mask
    denc = np.zeros_like(enc)
    denc_feat = np.zeros_like(enc_feat)
    dstate = tuple(np.zeros((B, H)) for _ in range(Cell.n_state))
    dcov_next = np.zeros_like(mask)

    for t in reversed(range(len(steps))):
        r = steps[t]
        w = weights[:, t]
        a, cov, pg = r["a"], r["cov"], r["pg"]
        dprob = -w / r["prob"]
        dpg = dprob * (r["pv_y"] - r["copy_y"])
        dpv_y = dprob * pg * r["in_vocab"]
        da = (dprob * (1.0 - pg))[:, None] * r["hit"]
        less = (a < cov) & (mask > 0)
        geq = (~(a < cov)) & (mask > 0)
        da += (lam * w)[:, None] * less
        dcov = (lam * w)[:, None] * geq
        # c_{t+1} = c_t + a_t
        da += dcov_next
        dcov += dcov_next

        pv = r["pv"]
        dlogits = -pv * (dpv_y * r["pv_y"])[:, None]
        dlogits[rows, r["y_c"]] += dpv_y * r["pv_y"]
        grads["V_prime"] += r["o"].T @ dlogits
        grads["b_prime"] += dlogits.sum(axis=0)
        do = dlogits @ p["V_prime"].T
        grads["V"] += r["so"].T @ do
        grads["b"] += do.sum(axis=0)
        dso = do @ p["V"].T
        ds = dso[:, :H].copy()
        dctx = dso[:, H:].copy()

        dzg = dpg * pg * (1.0 - pg)
        grads["ptr_w_h"] += r["ctx"].T @ dzg
        grads["ptr_w_s"] += r["s"].T @ dzg
        grads["ptr_w_x"] += r["x"].T @ dzg
        grads["b_ptr"] += dzg.sum()
        dctx += dzg[:, None] * p["ptr_w_h"]
        ds += dzg[:, None] * p["ptr_w_s"]
        dx = dzg[:, None] * p["ptr_w_x"]

        da += np.einsum("bk,bnk->bn", dctx, enc)
        denc += a[:, :, None] * dctx[:, None, :]
        de = a * (da - (a * da).sum(axis=1, keepdims=True))
        th = r["th"]
        grads["attn_v"] += np.einsum("bna,bn->a", th, de)
        dpre = de[:, :, None] * p["attn_v"] * (1.0 - th * th)
        denc_feat += dpre
        dpre_sum = dpre.sum(axis=1)
        grads["attn_W_s"] += r["s"].T @ dpre_sum
        ds += dpre_sum @ p["attn_W_s"].T
        grads["attn_w_c"] += np.einsum("bn,bna->a", cov, dpre)
        dcov += dpre @ p["attn_w_c"]
        grads["b_attn"] += dpre_sum.sum(axis=0)

        dx_cell, dstate = Cell.backward(p, "dec_", (dstate[0] + ds,) + tuple(dstate[1:]), r["cell"], grads)
        np.add.at(grads["emb"], batch.dec_in[:, t], dx + dx_cell)
        dcov_next = dcov

    caches_f, caches_b, hfin, s0 = enc_cache
    dred = dstate[0] * (1.0 - s0 * s0)
    grads["red_W"] += hfin.T @ dred
    grads["red_b"] += dred.sum(axis=0)
    dhfin = dred @ p["red_W"].T
    grads["attn_W_h"] += np.einsum("bnk,bna->ka", enc, denc_feat)
    denc += denc_feat @ p["attn_W_h"].T
    dhf, dhb = denc[:, :, :H], denc[:, :, H:]

    zeros = tuple(np.zeros((B, H)) for _ in range(Cell.n_state - 1))
    carry = (dhfin[:, :H],) + zeros
    for i in reversed(range(n)):
        carry = _masked_cell_backward(p, Cell, "enc_f_", caches_f[i], carry, dhf[:, i], mask[:, i:i + 1],
                                      grads, batch.src[:, i])
    carry = (dhfin[:, H:],) + zeros
    for i in range(n):
        carry = _masked_cell_backward(p, Cell, "enc_b_", caches_b[i], carry, dhb[:, i], mask[:, i:i + 1],
                                      grads, batch.src[:, i])
    for k, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise PgnError(f"non-finite gradient for {k}")
    return loss, grads, diag


def _masked_cell_backward(p, Cell, prefix, cache, carry, dh_out, mi, grads, ids):
    dtot = (carry[0] + dh_out,) + tuple(carry[1:])
    dnew = tuple(mi * d for d in dtot)
    dx, dprev = Cell.backward(p, prefix, dnew, cache, grads)
    np.add.at(grads["emb"], ids, dx)
    return tuple((1.0 - mi) * d + dp for d, dp in zip(dtot, dprev))


def forward_loss(params: PgnParams, src: Sequence[int], tgt: Sequence[int], lam: float | None = None,
                 oovs: Sequence[str] = ()):
    """Loss of one example under teacher forcing, plus per-step diagnostics.

    ``src`` and ``tgt`` are extended-vocabulary ids; ``tgt`` excludes BOS
    and EOS, which are added here.
    """
    batch = make_batch([Example(list(src), list(tgt), list(oovs))], params.config)
    lam = params.config.coverage_weight if lam is None else lam
    loss, diag, _ = _forward(params, batch, lam, keep_cache=False)
    if not np.isfinite(loss):
        raise PgnError("non-finite loss")
    return loss, {k: [np.asarray(x)[0] for x in v] if isinstance(v, list) else v[0] for k, v in diag.items()}


def teacher_forced_accuracy(params: PgnParams, batch: Batch) -> float:
    _, diag, _ = _forward(params, batch, params.config.coverage_weight, keep_cache=False, want_pred=True)
    correct = (diag["predictions"] == batch.target) * batch.tgt_mask
    return float(correct.sum() / batch.tgt_mask.sum())


@dataclass
class EncodedSource:
    enc: np.ndarray
    enc_feat: np.ndarray
    mask: np.ndarray
    src_ext: np.ndarray
    n_ext: int
    state0: tuple


def encode_source(params: PgnParams, src_ext: Sequence[int], n_ext: int = 0) -> EncodedSource:
    cfg = params.config
    src_ext = np.asarray(src_ext[:cfg.max_src_len], dtype=np.int64)[None, :]
    if src_ext.shape[1] == 0:
        raise PgnError("empty source sequence")
    src = np.where(src_ext >= cfg.vocab_size, UNK_ID, src_ext)
    mask = np.ones(src.shape)
    enc, enc_feat, state0, _ = _encode(params.tensors, cfg, src, mask)
    return EncodedSource(enc, enc_feat, mask, src_ext, n_ext, state0)


def decode_step(params: PgnParams, source: EncodedSource, token: int, state: tuple, cov: np.ndarray):
    """One decoder step for a single hypothesis.

    Returns the extended-vocabulary distribution, the new decoder state,
    the new coverage vector, and ``(attention, p_gen)``.
    """
    cfg = params.config
    tok = np.array([token if token < cfg.vocab_size else UNK_ID])
    state, r = _decoder_step(params.tensors, cfg, source.enc, source.enc_feat, source.mask, tok, state, cov)
    dist = final_distribution(float(r["pg"][0]), r["pv"][0], r["a"][0], source.src_ext[0], source.n_ext)
    return dist, state, cov + r["a"], (r["a"][0], float(r["pg"][0]))


def with_config(params: PgnParams, **changes) -> PgnParams:
    return PgnParams(replace(params.config, **changes), params.tensors)
