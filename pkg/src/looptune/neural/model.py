"""Densely connected 1D-convolutional speedup regressor.

Pipeline: initial conv -> dense blocks (two convs each, output concatenated
with the block input along channels) -> global average pooling over the
sequence -> concatenation with the transformation vector -> two affine
layers -> scalar prediction. All arithmetic is float64; convolutions use
same-padding so channel concatenation keeps sequence lengths aligned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import conv1d_backward, conv1d_forward
from .kernels_numpy import ShapeMismatch


@dataclass(frozen=True)
class Hyperparams:
    batch_size: int = 256
    epochs: int = 300
    lr0: float = 0.001
    lr_drop_epochs: tuple[int, ...] = (100, 200)
    lr_drop_divisor: float = 3.0
    momentum: float = 0.9
    clip_abs: float = 10.0
    seed: int = 0

    def lr(self, epoch: int) -> float:
        drops = sum(1 for d in self.lr_drop_epochs if d <= epoch)
        return self.lr0 / self.lr_drop_divisor ** drops


@dataclass(frozen=True)
class ModelConfig:
    in_channels: int
    max_len: int = 250
    init_channels: int = 64
    n_blocks: int = 4
    growth: int = 32
    kernel: int = 3
    hidden: int = 128
    tvec_len: int = 56
    seed: int = 0

    @property
    def feature_channels(self) -> int:
        return self.init_channels + self.n_blocks * self.growth


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _pad_same(x: np.ndarray, k: int) -> np.ndarray:
    left = (k - 1) // 2
    right = k - 1 - left
    return np.pad(x, ((0, 0), (left, right), (0, 0)))


def _unpad(dx: np.ndarray, k: int) -> np.ndarray:
    left = (k - 1) // 2
    right = k - 1 - left
    return dx[:, left:dx.shape[1] - right, :]


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    limit = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=shape)


def init_params(cfg: ModelConfig) -> dict[str, np.ndarray]:
    """Fan-in-scaled uniform initialization, seeded."""
    rng = np.random.default_rng(cfg.seed)
    k = cfg.kernel
    params: dict[str, np.ndarray] = {}
    params["conv0_w"] = _uniform(rng, (k, cfg.in_channels, cfg.init_channels),
                                 k * cfg.in_channels)
    params["conv0_b"] = np.zeros(cfg.init_channels)
    ch = cfg.init_channels
    for i in range(cfg.n_blocks):
        params[f"block{i}_w1"] = _uniform(rng, (k, ch, cfg.growth), k * ch)
        params[f"block{i}_b1"] = np.zeros(cfg.growth)
        params[f"block{i}_w2"] = _uniform(rng, (k, cfg.growth, cfg.growth),
                                          k * cfg.growth)
        params[f"block{i}_b2"] = np.zeros(cfg.growth)
        ch += cfg.growth
    fc_in = ch + cfg.tvec_len
    params["fc1_w"] = _uniform(rng, (fc_in, cfg.hidden), fc_in)
    params["fc1_b"] = np.zeros(cfg.hidden)
    params["fc2_w"] = _uniform(rng, (cfg.hidden, 1), cfg.hidden)
    params["fc2_b"] = np.zeros(1)
    return params


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    return {name: arr.shape for name, arr in init_params(cfg).items()}


def dense_block_forward(x: np.ndarray, w1, b1, w2, b2):
    """conv -> relu -> conv -> relu, output concatenated with the input."""
    k = w1.shape[0]
    xp = _pad_same(x, k)
    z1 = conv1d_forward(xp, w1, b1)
    a1 = _relu(z1)
    a1p = _pad_same(a1, k)
    z2 = conv1d_forward(a1p, w2, b2)
    a2 = _relu(z2)
    out = np.concatenate([x, a2], axis=2)
    cache = (xp, z1, a1p, z2, x.shape[2])
    return out, cache


def dense_block_backward(dout, cache, w1, w2):
    xp, z1, a1p, z2, in_ch = cache
    k = w1.shape[0]
    dx_direct = dout[:, :, :in_ch]
    da2 = dout[:, :, in_ch:]
    dz2 = da2 * (z2 > 0)
    da1p, dw2, db2 = conv1d_backward(a1p, w2, dz2)
    da1 = _unpad(da1p, k)
    dz1 = da1 * (z1 > 0)
    dxp, dw1, db1 = conv1d_backward(xp, w1, dz1)
    dx = _unpad(dxp, k) + dx_direct
    return dx, dw1, db1, dw2, db2


class Model:
    """Parameter container with forward/backward passes.

    The feature extractor (everything before the transformation vector joins)
    is a separate pass so that many transformations of one loop can be scored
    from a single extraction; feature_extractor_calls counts those passes.
    """

    def __init__(self, cfg: ModelConfig, params: dict[str, np.ndarray] | None = None):
        self.cfg = cfg
        self.params = params if params is not None else init_params(cfg)
        self.feature_extractor_calls = 0

    # -- forward ------------------------------------------------------------

    def extract_features(self, x: np.ndarray, want_cache: bool = False):
        """x (B, max_len, in_channels) -> pooled features (B, F)."""
        cfg = self.cfg
        if x.ndim != 3 or x.shape[1:] != (cfg.max_len, cfg.in_channels):
            raise ShapeMismatch(
                f"expected (B, {cfg.max_len}, {cfg.in_channels}), got {x.shape}")
        self.feature_extractor_calls += 1
        p = self.params
        k = cfg.kernel
        xp = _pad_same(x, k)
        z0 = conv1d_forward(xp, p["conv0_w"], p["conv0_b"])
        h = _relu(z0)
        caches = [(xp, z0)]
        for i in range(cfg.n_blocks):
            h, cache = dense_block_forward(h, p[f"block{i}_w1"], p[f"block{i}_b1"],
                                           p[f"block{i}_w2"], p[f"block{i}_b2"])
            caches.append(cache)
        feat = h.mean(axis=1)
        if want_cache:
            return feat, (caches, h.shape[1])
        return feat

    def head(self, feat: np.ndarray, tvec: np.ndarray, want_cache: bool = False):
        """feat (B, F), tvec (B, tvec_len) -> predictions (B,)."""
        cfg = self.cfg
        if tvec.ndim != 2 or tvec.shape[1] != cfg.tvec_len:
            raise ShapeMismatch(f"expected (B, {cfg.tvec_len}) tvec, got {tvec.shape}")
        p = self.params
        joined = np.concatenate([feat, tvec], axis=1)
        z1 = joined @ p["fc1_w"] + p["fc1_b"]
        a1 = _relu(z1)
        out = (a1 @ p["fc2_w"] + p["fc2_b"])[:, 0]
        if want_cache:
            return out, (joined, z1, a1)
        return out

    def forward(self, x: np.ndarray, tvec: np.ndarray) -> np.ndarray:
        return self.head(self.extract_features(x), tvec)

    def predict_many(self, x_one: np.ndarray, tvecs: np.ndarray) -> np.ndarray:
        """Score many transformation vectors for one loop with a single
        feature-extractor pass."""
        feat = self.extract_features(x_one[None, :, :])
        feats = np.broadcast_to(feat, (tvecs.shape[0], feat.shape[1]))
        return self.head(np.ascontiguousarray(feats), tvecs)

    # -- backward -----------------------------------------------------------

    def loss_and_grads(self, x: np.ndarray, tvec: np.ndarray, targets: np.ndarray):
        """MSE loss plus gradients for every parameter."""
        cfg = self.cfg
        p = self.params
        n = x.shape[0]
        if n == 0:
            raise EmptyBatch("empty batch")
        feat, (caches, seq_len) = self.extract_features(x, want_cache=True)
        preds, (joined, z1, a1) = self.head(feat, tvec, want_cache=True)
        diff = preds - targets
        loss = float(np.mean(diff ** 2))
        grads: dict[str, np.ndarray] = {}
        dp = (2.0 / n) * diff
        grads["fc2_w"] = a1.T @ dp[:, None]
        grads["fc2_b"] = np.array([dp.sum()])
        da1 = dp[:, None] @ p["fc2_w"].T
        dz1 = da1 * (z1 > 0)
        grads["fc1_w"] = joined.T @ dz1
        grads["fc1_b"] = dz1.sum(axis=0)
        djoined = dz1 @ p["fc1_w"].T
        dfeat = djoined[:, :feat.shape[1]]
        dh = np.repeat(dfeat[:, None, :] / seq_len, seq_len, axis=1)
        for i in range(cfg.n_blocks - 1, -1, -1):
            cache = caches[i + 1]
            dh, dw1, db1, dw2, db2 = dense_block_backward(
                dh, cache, p[f"block{i}_w1"], p[f"block{i}_w2"])
            grads[f"block{i}_w1"] = dw1
            grads[f"block{i}_b1"] = db1
            grads[f"block{i}_w2"] = dw2
            grads[f"block{i}_b2"] = db2
        xp, z0 = caches[0]
        dz0 = dh * (z0 > 0)
        _, dw0, db0 = conv1d_backward(xp, p["conv0_w"], dz0)
        grads["conv0_w"] = dw0
        grads["conv0_b"] = db0
        return loss, grads


class EmptyBatch(Exception):
    pass


def mse_loss(preds, targets) -> float:
    preds = np.asarray(preds, float)
    targets = np.asarray(targets, float)
    if preds.shape != targets.shape:
        raise ShapeMismatch(f"preds {preds.shape} vs targets {targets.shape}")
    if preds.size == 0:
        raise EmptyBatch("empty batch")
    return float(np.mean((preds - targets) ** 2))


class SgdOptimizer:
    """SGD with momentum, element-wise gradient clipping, and the stepwise
    learning-rate drop schedule."""

    def __init__(self, hyper: Hyperparams, params: dict[str, np.ndarray]):
        self.hyper = hyper
        self.velocity = {name: np.zeros_like(arr) for name, arr in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             epoch: int) -> None:
        h = self.hyper
        lr = h.lr(epoch)
        for name, g in grads.items():
            if g.shape != params[name].shape:
                raise ShapeMismatch(f"grad {name}: {g.shape} vs {params[name].shape}")
            clipped = np.clip(g, -h.clip_abs, h.clip_abs)
            v = self.velocity[name]
            v *= h.momentum
            v += clipped
            params[name] -= lr * v


def sgd_step(model: Model, grads: dict[str, np.ndarray], epoch: int,
             hyper: Hyperparams, optimizer: SgdOptimizer | None = None) -> SgdOptimizer:
    """Single update step; creates (and returns) the optimizer state when
    none is supplied."""
    if optimizer is None:
        optimizer = SgdOptimizer(hyper, model.params)
    optimizer.step(model.params, grads, epoch)
    return optimizer
