"""Deterministic single-threaded training for the pointer-generator."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from headline_bench.seq2seq.pgn import (
    EOS_ID, Example, PgnConfig, PgnError, PgnParams, batch_loss, init_params, loss_and_grads, make_batch,
    teacher_forced_accuracy,
)

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, params: PgnParams, curve: list):
        super().__init__(message)
        self.params = params
        self.curve = curve


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, tensors: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            tensors[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class CurvePoint:
    step: int
    train_loss: float
    val_loss: float | None


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def train(config: PgnConfig, corpus: Sequence[Example], steps: int, batch_size: int = 32, grad_accum: int = 1,
          val: Sequence[Example] | None = None, eval_every: int = 100, lr: float = 1e-3, clip_norm: float = 5.0,
          coverage_start: int = 0, params: PgnParams | None = None):
    """Optimize with Adam over seeded minibatches.

    Each optimizer step averages gradients over ``grad_accum`` batches of
    ``batch_size`` examples. Coverage loss applies from ``coverage_start``
    onwards. Returns the parameters and a list of ``CurvePoint`` logged
    every ``eval_every`` steps and at the end. A NaN loss raises
    ``TrainingDiverged`` carrying the last good parameters.
    """
    if not corpus:
        raise PgnError("empty training corpus")
    params = init_params(config) if params is None else params.copy()
    if steps <= 0:
        return params, []
    rng = np.random.default_rng(config.seed + 1)
    opt = Adam(lr=lr)
    val_batch = make_batch(val, config) if val else None
    order = rng.permutation(len(corpus))
    cursor = 0
    curve: list[CurvePoint] = []
    window: list[float] = []
    good = params.copy()

    for step in range(1, steps + 1):
        lam = config.coverage_weight if step > coverage_start else 0.0
        acc = None
        step_loss = 0.0
        for _ in range(grad_accum):
            if cursor + batch_size > len(order):
                order = rng.permutation(len(corpus))
                cursor = 0
            idx = order[cursor:cursor + batch_size]
            cursor += batch_size
            batch = make_batch([corpus[i] for i in idx], config)
            loss, grads, _ = loss_and_grads(params, batch, lam)
            step_loss += loss / grad_accum
            if acc is None:
                acc = grads
            else:
                for k in acc:
                    acc[k] += grads[k]
        if not np.isfinite(step_loss):
            raise TrainingDiverged(f"loss became {step_loss} at step {step}", good, curve)
        for k in acc:
            acc[k] /= grad_accum
        clip_by_global_norm(acc, clip_norm)
        good = params.copy()
        opt.step(params.tensors, acc)
        window.append(step_loss)
        if step % eval_every == 0 or step == steps:
            val_loss = batch_loss(params, val_batch, lam) if val_batch is not None else None
            curve.append(CurvePoint(step, float(np.mean(window)), val_loss))
            log.info("step %d train %.4f val %s", step, curve[-1].train_loss, val_loss)
            window = []
    return params, curve


def write_curve(curve: Sequence[CurvePoint], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "train_loss", "val_loss"])
        for pt in curve:
            w.writerow([pt.step, repr(pt.train_loss), "" if pt.val_loss is None else repr(pt.val_loss)])


def copy_task(n_examples: int, vocab_size: int = 50, k: int = 3, min_len: int = 5, max_len: int = 10,
              seed: int = 0) -> list[Example]:
    """Synthetic examples whose target is the first ``k`` source tokens."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_examples):
        n = int(rng.integers(min_len, max_len + 1))
        src = rng.integers(EOS_ID + 1, vocab_size, size=n).tolist()
        out.append(Example(src, src[:k]))
    return out


def accuracy(params: PgnParams, examples: Sequence[Example], batch_size: int = 256) -> float:
    """Teacher-forced next-token accuracy, EOS included, pooled over tokens."""
    correct = total = 0.0
    for i in range(0, len(examples), batch_size):
        batch = make_batch(examples[i:i + batch_size], params.config)
        n_tok = batch.tgt_mask.sum()
        correct += teacher_forced_accuracy(params, batch) * n_tok
        total += n_tok
    return correct / total


def save_checkpoint(params: PgnParams, path: str | Path, vocab_tokens: Sequence[str] | None = None) -> None:
    blob = {
        "version": CHECKPOINT_VERSION,
        "config": params.config.to_dict(),
        "seed": params.config.seed,
        "vocab": list(vocab_tokens) if vocab_tokens is not None else None,
        "tensors": {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in params.tensors.items()},
    }
    Path(path).write_text(json.dumps(blob), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[PgnParams, list[str] | None]:
    blob = json.loads(Path(path).read_text(encoding="utf-8"))
    if blob.get("version") != CHECKPOINT_VERSION:
        raise PgnError(f"{path}: unsupported checkpoint version {blob.get('version')}")
    cfg = PgnConfig(**blob["config"])
    tensors = {k: np.asarray(t["data"], dtype=np.float64).reshape(t["shape"]) for k, t in blob["tensors"].items()}
    params = PgnParams(cfg, tensors)
    params.validate()
    return params, blob.get("vocab")
