"""Central finite-difference check of the analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from headline_bench.seq2seq.pgn import Example, PgnError, PgnParams, _forward, loss_and_grads, make_batch


@dataclass
class GradCheckResult:
    max_rel_error: float
    n_checked: int
    n_skipped: int
    worst: tuple[str, tuple[int, ...]] | None


def rel_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))


def grad_check_details(params: PgnParams, examples: Example | Sequence[Example], eps: float = 1e-4,
                       lam: float | None = None, max_coords: int | None = None, seed: int = 0) -> GradCheckResult:
    """Compare analytic and central-difference gradients coordinate by coordinate.

    ``max_coords`` checks a seeded random subset instead of every
    coordinate. When coverage is on, coordinates whose perturbation flips
    a ``min(attention, coverage)`` branch are skipped, since the loss is
    not differentiable across that switch.
    """
    if isinstance(examples, Example):
        examples = [examples]
    lam = params.config.coverage_weight if lam is None else lam
    params = params.copy()
    batch = make_batch(examples, params.config)
    _, grads, diag = loss_and_grads(params, batch, lam)
    for k, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise PgnError(f"non-finite analytic gradient for {k}")
    base_branches = diag["a_lt_c"]

    coords = [(k, idx) for k, v in params.tensors.items() for idx in np.ndindex(v.shape)]
    if max_coords is not None and max_coords < len(coords):
        pick = np.random.default_rng(seed).choice(len(coords), size=max_coords, replace=False)
        coords = [coords[i] for i in sorted(pick)]

    def flipped(d) -> bool:
        return lam > 0 and any(np.any(x != y) for x, y in zip(d["a_lt_c"], base_branches))

    worst, max_err, checked, skipped = None, 0.0, 0, 0
    for name, idx in coords:
        arr = params.tensors[name]
        old = arr[idx]
        arr[idx] = old + eps
        lp, dp, _ = _forward(params, batch, lam, keep_cache=False)
        arr[idx] = old - eps
        lm, dm, _ = _forward(params, batch, lam, keep_cache=False)
        arr[idx] = old
        if flipped(dp) or flipped(dm):
            skipped += 1
            continue
        numeric = (lp - lm) / (2 * eps)
        if not np.isfinite(numeric):
            raise PgnError(f"non-finite numeric gradient at {name}{idx}")
        err = rel_error(float(grads[name][idx]), numeric)
        checked += 1
        if err > max_err:
            max_err, worst = err, (name, idx)
    return GradCheckResult(max_err, checked, skipped, worst)


def grad_check(params: PgnParams, examples: Example | Sequence[Example], eps: float = 1e-4,
               lam: float | None = None, max_coords: int | None = None, seed: int = 0) -> float:
    return grad_check_details(params, examples, eps, lam, max_coords, seed).max_rel_error
