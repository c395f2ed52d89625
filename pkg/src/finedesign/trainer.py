"""Training core: softmax cross-entropy, Adam, cosine decay, small MLP.

The model is a fully-connected ReLU network over feature vectors, trained
with per-step cosine-decayed Adam on the mean softmax cross-entropy. All
arithmetic is float64 and every source of randomness (He-style init,
per-epoch shuffling) comes from one seeded generator, so a (dataset, config)
pair determines the trained parameters bit-for-bit on a given backend.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .design import LabeledDataset
from .errors import NumericalError, TrainingDivergedError, ValidationError

MODEL_FILE_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 1e-3
    epochs: int = 50
    batch_size: int = 128
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    hidden: tuple[int, ...] = (16,)
    seed: int = 0

    def validate(self) -> None:
        if not (isinstance(self.epochs, int) and self.epochs >= 1):
            raise ValidationError("epochs must be a positive integer")
        if not (isinstance(self.batch_size, int) and self.batch_size >= 1):
            raise ValidationError("batch_size must be a positive integer")
        if not self.lr0 > 0:
            raise ValidationError("lr0 must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValidationError("beta1 and beta2 must lie in (0, 1)")
        if not self.eps > 0:
            raise ValidationError("eps must be positive")
        if not all(isinstance(h, int) and h >= 1 for h in self.hidden):
            raise ValidationError("hidden widths must be positive integers")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must fit in an unsigned 64-bit integer")

    def to_json_dict(self, include_seed: bool = True) -> dict:
        out = {
            "lr0": self.lr0,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "hidden": list(self.hidden),
        }
        if include_seed:
            out["seed"] = self.seed
        return out

    @staticmethod
    def from_json_dict(obj: dict) -> "TrainConfig":
        if not isinstance(obj, dict):
            raise ValidationError("train config must be a JSON object")
        known = {"lr0", "epochs", "batch_size", "beta1", "beta2", "eps", "hidden", "seed"}
        unknown = set(obj) - known
        if unknown:
            raise ValidationError(f"unknown train config keys: {sorted(unknown)}")
        kwargs = dict(obj)
        if "hidden" in kwargs:
            kwargs["hidden"] = tuple(kwargs["hidden"])
        config = TrainConfig(**kwargs)
        config.validate()
        return config


@dataclass(frozen=True, eq=False)
class MLPParams:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activation: str = "relu"

    @property
    def architecture(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    def validate(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValidationError("weights and biases must pair up, one per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[1] != b.shape[0]:
                raise ValidationError(f"layer {i}: inconsistent parameter shapes")
            if i > 0 and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ValidationError(f"layer {i}: input width mismatch")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise NumericalError(f"layer {i}: non-finite parameters")


@dataclass(eq=False)
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @staticmethod
    def fresh(params) -> "AdamState":
        return AdamState(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            t=0,
        )


@dataclass(frozen=True, eq=False)
class TrainedModel:
    params: MLPParams
    class_names: tuple[str, ...]
    config: TrainConfig
    loss_trace: tuple[float, ...]
    design_extract: tuple[str, ...] | None = None


def softmax_xent(logits, label: int):
    """Loss and logit gradient of -log softmax(logits)[label].

    Max-subtraction keeps the computation finite for any finite logits.
    Returns ``(loss, grad)`` with ``grad = softmax(logits) - onehot(label)``.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] < 2:
        raise ValidationError("logits must be a vector of length >= 2")
    if not 0 <= label < z.shape[0]:
        raise ValidationError(f"label {label} out of range for {z.shape[0]} classes")
    if not np.isfinite(z).all():
        raise NumericalError("non-finite logits")
    mx = float(z.max())
    ez = np.exp(z - mx)
    se = float(ez.sum())
    loss = math.log(se) + mx - float(z[label])
    grad = ez / se
    grad[label] -= 1.0
    return loss, grad


def cosine_lr(t: int, total: int, lr0: float) -> float:
    """Cosine-decayed learning rate: lr0 * (1 + cos(pi * t / total)) / 2."""
    if total < 1:
        raise ValidationError("total step count must be >= 1")
    if not 0 <= t <= total:
        raise ValidationError(f"step index {t} outside [0, {total}]")
    return lr0 * 0.5 * (1.0 + math.cos(math.pi * t / total))


def adam_step(params, grads, state: AdamState, lr_t: float, config: TrainConfig,
              names=None):
    """One functional Adam update over a sequence of parameter arrays.

    Returns ``(new_params, new_state)``; inputs are not modified. Uses the
    active kernel backend, so results match the in-place training path
    exactly.
    """
    if len(params) != len(grads):
        raise ValidationError("params and grads must have the same length")
    if state.t < 0:
        raise ValidationError("Adam step counter must be >= 0")
    for i, g in enumerate(grads):
        if not np.isfinite(g).all():
            where = names[i] if names else f"parameter block {i}"
            raise NumericalError(f"non-finite gradient in {where}")
    impl = kernels.get_kernels()
    new_params = [np.array(p, dtype=np.float64, copy=True) for p in params]
    new_m = [np.array(m, dtype=np.float64, copy=True) for m in state.m]
    new_v = [np.array(v, dtype=np.float64, copy=True) for v in state.v]
    t = state.t + 1
    for p, g, m, v in zip(new_params, grads, new_m, new_v):
        impl.adam_update(
            p.reshape(-1),
            np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
            m.reshape(-1),
            v.reshape(-1),
            t,
            lr_t,
            config.beta1,
            config.beta2,
            config.eps,
        )
    return new_params, AdamState(m=new_m, v=new_v, t=t)


def _init_params(rng, dims) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """He-style initialization: W ~ N(0, 2/fan_in), zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return weights, biases


def train(dataset: LabeledDataset, config: TrainConfig) -> TrainedModel:
    """Train an MLP on the labeled dataset under the given protocol.

    Runs ``epochs * ceil(N / batch_size)`` Adam steps; the learning rate for
    step ``s`` (0-based) is ``cosine_lr(s, total_steps, lr0)``. Data is
    reshuffled every epoch by the seeded generator.
    """
    config.validate()
    n = len(dataset)
    if n == 0:
        raise ValidationError("cannot train on an empty dataset")
    k = len(dataset.class_names)
    if k < 2:
        raise ValidationError("need at least two classes")
    x = np.ascontiguousarray(dataset.features, dtype=np.float64)
    y = np.ascontiguousarray(dataset.class_index, dtype=np.int32)
    if int(y.min()) < 0 or int(y.max()) >= k:
        raise ValidationError("class_index out of range for class_names")

    impl = kernels.get_kernels()
    rng = np.random.default_rng(config.seed)
    dims = (x.shape[1],) + config.hidden + (k,)
    weights, biases = _init_params(rng, dims)
    grad_w = [np.empty_like(w) for w in weights]
    grad_b = [np.empty_like(b) for b in biases]
    blocks = [(w.reshape(-1), gw.reshape(-1)) for w, gw in zip(weights, grad_w)]
    blocks += [(b, gb) for b, gb in zip(biases, grad_b)]
    adam_m = [np.zeros_like(p) for p, _ in blocks]
    adam_v = [np.zeros_like(p) for p, _ in blocks]

    batch = config.batch_size
    steps_per_epoch = -(-n // batch)
    total_steps = config.epochs * steps_per_epoch
    step = 0
    t = 0
    trace = []
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        xs = x[perm]
        ys = y[perm]
        epoch_loss = 0.0
        for start in range(0, n, batch):
            xb = xs[start:start + batch]
            yb = ys[start:start + batch]
            lr_t = cosine_lr(step, total_steps, config.lr0)
            loss_sum = impl.batch_backward(weights, biases, xb, yb, grad_w, grad_b)
            if not math.isfinite(loss_sum):
                raise TrainingDivergedError(epoch)
            t += 1
            for (p, g), m, v in zip(blocks, adam_m, adam_v):
                impl.adam_update(p, g, m, v, t, lr_t, config.beta1, config.beta2, config.eps)
            epoch_loss += loss_sum
            step += 1
        trace.append(epoch_loss / n)

    params = MLPParams(weights=tuple(weights), biases=tuple(biases))
    params.validate()
    extract = dataset.provenance.extract if dataset.provenance is not None else None
    return TrainedModel(
        params=params,
        class_names=tuple(dataset.class_names),
        config=config,
        loss_trace=tuple(trace),
        design_extract=extract,
    )


def _forward_logits(params: MLPParams, x: np.ndarray) -> np.ndarray:
    a = x
    last = len(params.weights) - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        a = np.maximum(z, 0.0) if l < last else z
    return a


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    mx = logits.max(axis=1, keepdims=True)
    ez = np.exp(logits - mx)
    return ez / ez.sum(axis=1, keepdims=True)


def predict(model: TrainedModel, features):
    """Class probabilities and argmax class index for one feature vector.

    Ties break toward the lowest class index.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.params.architecture[0]:
        raise ValidationError(
            f"expected a feature vector of dimension {model.params.architecture[0]}"
        )
    logits = _forward_logits(model.params, x[None, :])
    probs = _softmax_rows(logits)[0]
    return probs, int(np.argmax(probs))


def predict_batch(model: TrainedModel, x: np.ndarray):
    """Vectorized ``predict`` over rows of ``x``; returns (probs, indices)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.params.architecture[0]:
        raise ValidationError(
            f"expected feature rows of dimension {model.params.architecture[0]}"
        )
    probs = _softmax_rows(_forward_logits(model.params, x))
    return probs, np.argmax(probs, axis=1)


def model_to_json_dict(model: TrainedModel) -> dict:
    return {
        "version": MODEL_FILE_VERSION,
        "class_names": list(model.class_names),
        "architecture": list(model.params.architecture),
        "activation": model.params.activation,
        "weights": [w.tolist() for w in model.params.weights],
        "biases": [b.tolist() for b in model.params.biases],
        "loss_trace": list(model.loss_trace),
        "design_extract": list(model.design_extract) if model.design_extract is not None else None,
        "train_config": model.config.to_json_dict(),
    }


def model_from_json_dict(obj: dict) -> TrainedModel:
    if not isinstance(obj, dict):
        raise ValidationError("model file must be a JSON object")
    if obj.get("version") != MODEL_FILE_VERSION:
        raise ValidationError(f"unsupported model file version {obj.get('version')!r}")
    weights = tuple(np.asarray(w, dtype=np.float64) for w in obj["weights"])
    biases = tuple(np.asarray(b, dtype=np.float64) for b in obj["biases"])
    params = MLPParams(weights=weights, biases=biases, activation=obj.get("activation", "relu"))
    params.validate()
    if list(params.architecture) != list(obj.get("architecture", [])):
        raise ValidationError("model architecture does not match its parameters")
    extract = obj.get("design_extract")
    model = TrainedModel(
        params=params,
        class_names=tuple(obj["class_names"]),
        config=TrainConfig.from_json_dict(obj["train_config"]),
        loss_trace=tuple(float(x) for x in obj.get("loss_trace", [])),
        design_extract=tuple(extract) if extract is not None else None,
    )
    if len(model.class_names) != params.architecture[-1]:
        raise ValidationError("class_names length does not match the output layer")
    return model


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(model_to_json_dict(model), separators=(",", ":")) + "\n")


def load_model(path) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad model JSON: {exc.msg}") from exc
    return model_from_json_dict(obj)
