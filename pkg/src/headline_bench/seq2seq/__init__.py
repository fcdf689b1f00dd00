"""Desk-scale pointer-generator: model, training, decoding, gradient checks."""

from headline_bench.seq2seq.beam import beam_search, generate, search
from headline_bench.seq2seq.gradcheck import grad_check, grad_check_details
from headline_bench.seq2seq.pgn import (
    Batch, Example, PgnConfig, PgnError, PgnParams, attention, coverage_step, extend_ids, final_distribution,
    forward_loss, init_params, loss_and_grads, make_batch,
)
from headline_bench.seq2seq.training import (
    CurvePoint, TrainingDiverged, accuracy, copy_task, load_checkpoint, save_checkpoint, train, write_curve,
)

__all__ = [
    "Batch", "CurvePoint", "Example", "PgnConfig", "PgnError", "PgnParams", "TrainingDiverged", "accuracy",
    "attention", "beam_search", "copy_task", "coverage_step", "extend_ids", "final_distribution", "forward_loss",
    "generate", "grad_check", "grad_check_details", "init_params", "load_checkpoint", "loss_and_grads",
    "make_batch", "save_checkpoint", "search", "train", "write_curve",
]
