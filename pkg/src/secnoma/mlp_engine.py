"""From-scratch MLP regression engine for covariance prediction.

Architecture: nine 256-wide fully connected ReLU layers, funneling through
128 and 64 nodes to a linear output of the n_t(n_t+1) packed covariance
entries. Training is Adam on mean squared error with a step-decay learning
rate, periodic validation, and patience-based early stopping; the
hyperparameter defaults reproduce the tuned values the models were
developed with.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channels import ChannelPair
from .features_dataset import (Dataset, build_input, feature_dim, label_dim,
                               load_dataset, unpack_labels,
                               FEATURE_SCALING_VERSION)
from .secrecy_rates import CovariancePair

HIDDEN_WIDTHS = (256, 256, 256, 256, 256, 256, 256, 256, 256, 128, 64)
MODEL_FORMAT = "secnoma-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    initial_lr: float = 1e-3
    drop_factor: float = 0.5
    drop_period: int = 5            # epochs between learning-rate drops
    batch_size: int = 256
    validation_frequency: int = 1000  # iterations between validation passes
    patience: int = 5               # consecutive non-improving validations
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    max_epochs: int = 40
    seed: int = 0

    def __post_init__(self):
        for name in ("initial_lr", "drop_factor", "drop_period", "batch_size",
                     "validation_frequency", "patience", "max_epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def learning_rate(self, epoch: int) -> float:
        return self.initial_lr * self.drop_factor ** (epoch // self.drop_period)


class PrecoderModel:
    """MLP weights plus the (n_t, alpha, P) context it was trained for."""

    def __init__(self, widths, weights, biases, context):
        self.widths = [int(w) for w in widths]
        self.weights = weights  # list of (out, in) arrays
        self.biases = biases    # list of (out,) arrays
        self.context = dict(context)
        for l, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (self.widths[l + 1], self.widths[l]):
                raise ValueError(f"layer {l}: weight shape {w.shape} does not "
                                 f"match widths {self.widths[l:l + 2]}")
            if b.shape != (self.widths[l + 1],):
                raise ValueError(f"layer {l}: bias shape {b.shape} mismatched")
        self._widths_arr = np.array(self.widths, dtype=np.int64)
        self._flat = None

    @property
    def n_t(self) -> int:
        return int(self.context["n_t"])

    @property
    def power(self) -> float:
        return float(self.context["P"])

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def flat_params(self) -> np.ndarray:
        if self._flat is None:
            parts = []
            for w, b in zip(self.weights, self.biases):
                parts.append(w.ravel())
                parts.append(b)
            self._flat = np.ascontiguousarray(np.concatenate(parts))
        return self._flat

    def set_flat_params(self, flat):
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, "
                             f"got {flat.size}")
        off = 0
        for l in range(len(self.weights)):
            w = self.weights[l]
            self.weights[l] = flat[off:off + w.size].reshape(w.shape).copy()
            off += w.size
            b = self.biases[l]
            self.biases[l] = flat[off:off + b.size].copy()
            off += b.size
        self._flat = None


def default_widths(n_t: int) -> list:
    return [feature_dim(n_t)] + list(HIDDEN_WIDTHS) + [label_dim(n_t)]


def init_model(n_t: int, alpha: float, power: float, seed: int = 0,
               widths=None, rng=None) -> PrecoderModel:
    """He-style fan-in Gaussian weights, zero biases."""
    widths = list(widths) if widths is not None else default_widths(n_t)
    rng = rng if rng is not None else np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        weights.append(rng.standard_normal((n_out, n_in)) * np.sqrt(2.0 / n_in))
        biases.append(np.zeros(n_out))
    context = {"n_t": int(n_t), "alpha": float(alpha), "P": float(power),
               "feature_scaling": FEATURE_SCALING_VERSION}
    return PrecoderModel(widths, weights, biases, context)


def mlp_forward(model: PrecoderModel, v) -> np.ndarray:
    """Single-vector forward pass (ReLU hidden layers, linear output)."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.shape != (model.widths[0],):
        raise ValueError(f"input length {v.shape} does not match "
                         f"model input width {model.widths[0]}")
    return kernels.nn_forward(model.flat_params(), model._widths_arr, v)


def forward_batch(model: PrecoderModel, x) -> np.ndarray:
    """Batched forward pass, rows are samples."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != model.widths[0]:
        raise ValueError(f"batch shape {a.shape} does not match input width "
                         f"{model.widths[0]}")
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        a = a @ w.T + b
        if l < last:
            np.maximum(a, 0.0, out=a)
    return a


def loss_and_grads(model: PrecoderModel, x, t):
    """Mean squared error over the batch and its parameter gradients."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.float64)
    acts = [x]
    a = x
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        a = a @ w.T + b
        if l < last:
            a = np.maximum(a, 0.0)
        acts.append(a)
    y = acts[-1]
    diff = y - t
    loss = float(np.mean(diff * diff))
    delta = (2.0 / diff.size) * diff
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.weights)
    for l in range(last, -1, -1):
        grads_w[l] = delta.T @ acts[l]
        grads_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ model.weights[l]
            delta = delta * (acts[l] > 0.0)
    return loss, grads_w, grads_b


def validation_mse(model: PrecoderModel, ds: Dataset,
                   chunk: int = 4096) -> float:
    sq_sum = 0.0
    n = 0
    for start in range(0, ds.count, chunk):
        x = ds.features[start:start + chunk]
        y = forward_batch(model, x)
        d = y - ds.labels[start:start + chunk]
        sq_sum += float(np.sum(d * d))
        n += d.size
    return sq_sum / n


@dataclass
class TrainingLog:
    entries: list = field(default_factory=list)  # dicts per validation pass

    def record(self, iteration, epoch, lr, val_mse):
        self.entries.append({"iteration": int(iteration), "epoch": int(epoch),
                             "lr": float(lr), "val_mse": float(val_mse)})

    def best_val_mse(self) -> float:
        return min(e["val_mse"] for e in self.entries)

    def to_json(self) -> str:
        return json.dumps({"entries": self.entries}, indent=2, sort_keys=True)


def _as_dataset(obj) -> Dataset:
    if isinstance(obj, Dataset):
        return obj
    return load_dataset(os.fspath(obj))


def train(cfg: TrainConfig, train_set, val_set):
    """Train a fresh model; returns (best PrecoderModel, TrainingLog).

    The learning rate is initial_lr * drop_factor^(epoch // drop_period);
    validation MSE is evaluated every validation_frequency iterations (plus
    once at the end) and training stops early after `patience` consecutive
    evaluations without improvement. The returned model carries the
    parameters of the best validation pass.
    """
    tr = _as_dataset(train_set)
    va = _as_dataset(val_set)
    if tr.count < 1 or va.count < 1:
        raise ValueError("training and validation sets must be non-empty")
    if tr.context() != va.context():
        raise ValueError(f"dataset contexts differ: {tr.context()} "
                         f"vs {va.context()}")

    rng = np.random.default_rng(cfg.seed)
    model = init_model(tr.n_t, tr.alpha, tr.power, rng=rng)
    params = model.weights + model.biases  # mutated in place below
    m_state = [np.zeros_like(p) for p in params]
    v_state = [np.zeros_like(p) for p in params]
    t_step = 0
    iteration = 0
    log = TrainingLog()
    best_val = np.inf
    best_snapshot = None
    bad_validations = 0
    stop = False

    def validate(epoch, lr):
        nonlocal best_val, best_snapshot, bad_validations, stop
        val = validation_mse(model, va)
        log.record(iteration, epoch, lr, val)
        if val < best_val:
            best_val = val
            best_snapshot = [p.copy() for p in params]
            bad_validations = 0
        else:
            bad_validations += 1
            if bad_validations >= cfg.patience:
                stop = True

    n = tr.count
    batch = min(cfg.batch_size, n)
    epoch = 0
    for epoch in range(cfg.max_epochs):
        lr = cfg.learning_rate(epoch)
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            _, gw, gb = loss_and_grads(model, tr.features[idx],
                                       tr.labels[idx])
            t_step += 1
            bc1 = 1.0 - cfg.adam_beta1 ** t_step
            bc2 = 1.0 - cfg.adam_beta2 ** t_step
            for k, g in enumerate(gw + gb):
                m = m_state[k]
                v = v_state[k]
                m *= cfg.adam_beta1
                m += (1.0 - cfg.adam_beta1) * g
                v *= cfg.adam_beta2
                v += (1.0 - cfg.adam_beta2) * (g * g)
                params[k] -= lr * (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)
            iteration += 1
            if iteration % cfg.validation_frequency == 0:
                validate(epoch, lr)
                if stop:
                    break
        if stop:
            break
    if not log.entries or log.entries[-1]["iteration"] != iteration:
        # final validation so short runs still select a best snapshot
        validate(epoch, cfg.learning_rate(epoch))

    if best_snapshot is not None:
        for p, snap in zip(params, best_snapshot):
            p[...] = snap
    n_layers = len(model.weights)
    final = PrecoderModel(model.widths,
                          [p.copy() for p in params[:n_layers]],
                          [p.copy() for p in params[n_layers:]],
                          model.context)
    return final, log


def predict_covariances(model: PrecoderModel, ch: ChannelPair) -> CovariancePair:
    """build_input -> forward -> unpack; always returns a feasible pair."""
    if ch.n_t != model.n_t:
        raise ValueError(f"model was trained for n_t={model.n_t}, "
                         f"channel has n_t={ch.n_t}")
    y = mlp_forward(model, build_input(ch))
    return unpack_labels(y, model.power)


def save_model(model: PrecoderModel, path: str):
    flat = model.flat_params()
    payload = np.ascontiguousarray(flat, dtype="<f8").tobytes()
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "widths": model.widths,
        "context": model.context,
        "param_sha256": hashlib.sha256(payload).hexdigest(),
    }
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as f:
            f.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path: str) -> PrecoderModel:
    with open(path, "rb") as f:
        header_line = f.readline()
        payload = f.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ValueError(f"{path}: not a model file ({e})") from None
    if header.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: unexpected format {header.get('format')!r}")
    if header.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version "
                         f"{header.get('version')}")
    widths = header["widths"]
    expected = sum((widths[l + 1] * widths[l] + widths[l + 1])
                   for l in range(len(widths) - 1)) * 8
    if len(payload) != expected:
        raise ValueError(f"{path}: payload is {len(payload)} bytes, expected "
                         f"{expected} (file truncated or corrupt)")
    digest = hashlib.sha256(payload).hexdigest()
    if digest != header.get("param_sha256"):
        raise ValueError(f"{path}: parameter checksum mismatch "
                         f"(file corrupt)")
    flat = np.frombuffer(payload, dtype="<f8")
    weights, biases = [], []
    off = 0
    for l in range(len(widths) - 1):
        n_out, n_in = widths[l + 1], widths[l]
        weights.append(flat[off:off + n_out * n_in].reshape(n_out, n_in).copy())
        off += n_out * n_in
        biases.append(flat[off:off + n_out].copy())
        off += n_out
    return PrecoderModel(widths, weights, biases, header["context"])
