"""Training loop: seeded shuffling, mini-batches, epoch-end validation,
best-checkpoint selection by validation total accuracy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import EmptyBatch, Hyperparams, Model, ModelConfig, SgdOptimizer


def total_accuracy(preds: np.ndarray, actuals: np.ndarray) -> float:
    """Fraction of samples where the prediction is accurate: both sides of
    the 1.0 line agree."""
    preds = np.asarray(preds, float)
    actuals = np.asarray(actuals, float)
    hit = ((preds > 1) & (actuals > 1)) | ((preds <= 1) & (actuals <= 1))
    return float(np.mean(hit)) if preds.size else 0.0


@dataclass
class TrainResult:
    model: Model
    best_epoch: int
    best_val_accuracy: float
    train_losses: list[float] = field(default_factory=list)
    val_accuracies: list[float] = field(default_factory=list)


def train_model(cfg: ModelConfig, hyper: Hyperparams,
                train_x: np.ndarray, train_t: np.ndarray, train_y: np.ndarray,
                val_x: np.ndarray | None = None, val_t: np.ndarray | None = None,
                val_y: np.ndarray | None = None,
                check_finite: bool = True,
                log=None) -> TrainResult:
    """Train a fresh model; returns the checkpoint with the highest
    validation total accuracy (training-loss minimum when no validation
    split is supplied)."""
    n = train_x.shape[0]
    if n == 0:
        raise EmptyBatch("empty dataset")
    model = Model(cfg)
    optimizer = SgdOptimizer(hyper, model.params)
    rng = np.random.default_rng(hyper.seed)
    has_val = val_x is not None and val_x.shape[0] > 0
    best_params = {k: v.copy() for k, v in model.params.items()}
    best_score = -np.inf
    best_epoch = 0
    result = TrainResult(model, 0, 0.0)
    batch = min(hyper.batch_size, n)
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            loss, grads = model.loss_and_grads(train_x[idx], train_t[idx], train_y[idx])
            optimizer.step(model.params, grads, epoch)
            if check_finite:
                for name, arr in model.params.items():
                    assert np.all(np.isfinite(arr)), f"non-finite parameter {name}"
            epoch_loss += loss
            n_batches += 1
        result.train_losses.append(epoch_loss / n_batches)
        if has_val:
            preds = model.forward(val_x, val_t)
            score = total_accuracy(preds, val_y)
            result.val_accuracies.append(score)
        else:
            score = -result.train_losses[-1]
        if score > best_score:
            best_score = score
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in model.params.items()}
        if log is not None:
            log(epoch, result.train_losses[-1],
                result.val_accuracies[-1] if has_val else None)
    result.model = Model(cfg, best_params)
    result.best_epoch = best_epoch
    result.best_val_accuracy = best_score if has_val else 0.0
    return result
