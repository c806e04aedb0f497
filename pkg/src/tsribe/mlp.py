"""Small feed-forward network trained with mini-batch SGD.

One ReLU hidden layer, softmax output, cross-entropy loss. Weights are
stored as plain float64 numpy arrays and serialize to the portable
``ts-mlp-v1`` JSON schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

MODEL_SCHEMA = "ts-mlp-v1"


class ModelCorruptError(ValueError):
    """Non-finite weights or activations."""


class InsufficientClassesError(ValueError):
    """Training data does not cover all output classes."""


def _glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class MLP:
    dims: tuple[int, ...]
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def init(cls, dims, seed: int = 0) -> "MLP":
        rng = np.random.default_rng(seed)
        weights = [_glorot_uniform(rng, dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
        biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
        return cls(tuple(dims), weights, biases)

    def _check_finite(self, arr: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(arr)):
            raise ModelCorruptError("non-finite activation")
        return arr

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Class probability distribution(s) for input(s) x."""
        h = np.asarray(x, dtype=np.float64)
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(0.0, h @ w + b)
        out = softmax(self._check_finite(h @ self.weights[-1] + self.biases[-1]))
        return self._check_finite(out)

    def loss(self, x: np.ndarray, y: np.ndarray) -> float:
        """Mean cross-entropy; y holds integer class indices."""
        p = self.forward(np.atleast_2d(x))
        y = np.atleast_1d(y)
        return float(-np.mean(np.log(p[np.arange(len(y)), y] + 1e-300)))

    def gradients(self, x: np.ndarray, y: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """Analytic gradients of mean cross-entropy w.r.t. weights and biases."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.atleast_1d(y)
        n = len(y)
        activations = [x]
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(0.0, h @ w + b)
            activations.append(h)
        p = softmax(h @ self.weights[-1] + self.biases[-1])

        delta = p.copy()
        delta[np.arange(n), y] -= 1.0
        delta /= n

        grads_w: list[np.ndarray] = [np.empty(0)] * len(self.weights)
        grads_b: list[np.ndarray] = [np.empty(0)] * len(self.biases)
        for layer in range(len(self.weights) - 1, -1, -1):
            grads_w[layer] = activations[layer].T @ delta
            grads_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights[layer].T) * (activations[layer] > 0)
        return grads_w, grads_b

    def copy(self) -> "MLP":
        return MLP(self.dims, [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases])

    # -- persistence ---------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "schema": MODEL_SCHEMA,
            "dims": list(self.dims),
            "layers": [{"w": w.tolist(), "b": b.tolist()}
                       for w, b in zip(self.weights, self.biases)],
        })

    @classmethod
    def from_json(cls, text: str) -> "MLP":
        obj = json.loads(text)
        if obj.get("schema") != MODEL_SCHEMA:
            raise ValueError(f"unknown model schema: {obj.get('schema')!r}")
        dims = tuple(obj["dims"])
        weights = [np.asarray(layer["w"], dtype=np.float64) for layer in obj["layers"]]
        biases = [np.asarray(layer["b"], dtype=np.float64) for layer in obj["layers"]]
        model = cls(dims, weights, biases)
        for w, b, din, dout in zip(weights, biases, dims[:-1], dims[1:]):
            if w.shape != (din, dout) or b.shape != (dout,):
                raise ModelCorruptError(f"weight shape {w.shape} inconsistent with dims {dims}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ModelCorruptError("non-finite weights in model file")
        return model

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "MLP":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.05
    epochs: int = 200
    batch: int = 32
    seed: int = 0
    hidden: int = 20
    shuffle: bool = True


def train_mlp(x: np.ndarray, y: np.ndarray, n_classes: int,
              cfg: TrainConfig = TrainConfig()) -> tuple[MLP, list[float]]:
    """Train a [D, hidden, n_classes] MLP; returns the model and per-epoch loss.

    Deterministic for a fixed config: initialization and batch shuffling both
    derive from cfg.seed.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(x) == 0:
        raise InsufficientClassesError("empty training set")
    if len(np.unique(y)) < n_classes:
        raise InsufficientClassesError(
            f"training data covers {len(np.unique(y))} of {n_classes} classes")

    model = MLP.init((x.shape[1], cfg.hidden, n_classes), seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed + 1)
    n = len(x)
    losses: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        for start in range(0, n, cfg.batch):
            idx = order[start:start + cfg.batch]
            gw, gb = model.gradients(x[idx], y[idx])
            for w, g in zip(model.weights, gw):
                w -= cfg.lr * g
            for b, g in zip(model.biases, gb):
                b -= cfg.lr * g
        losses.append(model.loss(x, y))
    for w in model.weights + model.biases:
        if not np.all(np.isfinite(w)):
            raise ModelCorruptError("training produced non-finite weights")
    return model, losses


def gradient_check(model: MLP, x: np.ndarray, y: np.ndarray, h: float = 1e-4) -> float:
    """Max relative error of analytic vs central finite-difference gradients."""
    grads_w, grads_b = model.gradients(x, y)
    analytic = grads_w + grads_b
    params = model.weights + model.biases
    max_err = 0.0
    for p, g in zip(params, analytic):
        flat = p.reshape(-1)
        gflat = np.asarray(g).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = model.loss(x, y)
            flat[i] = orig - h
            lm = model.loss(x, y)
            flat[i] = orig
            numeric = (lp - lm) / (2 * h)
            denom = max(abs(gflat[i]) + abs(numeric), 1e-8)
            err = abs(gflat[i] - numeric) / denom
            if abs(gflat[i] - numeric) < 1e-9:
                err = 0.0
            max_err = max(max_err, err)
    return max_err
