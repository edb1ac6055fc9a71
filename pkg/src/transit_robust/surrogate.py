"""Feedforward network mapping feature vectors to the four robustness values.

Plain numpy implementation: rectifier hidden layers, linear 4-unit output,
mean squared error, Adam. Training runs in two phases (a fixed warm-up, then
a longer run that stops early when the training loss stalls), mirroring the
protocol the model was designed with.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureLayout, Scaler, fit_scaler

MODEL_FORMAT_VERSION = 1
N_OUTPUTS = 4


@dataclass
class TrainConfig:
    depth: int = 5
    width: int = 128
    phase1_epochs: int = 150
    phase1_batch: int = 100
    phase2_epochs: int = 1000
    phase2_batch: int = 300
    patience: int = 20
    validation_fraction: float = 0.11
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation fraction must be in (0, 1)")
        if self.depth < 1 or self.width < 1:
            raise ValueError("need at least one hidden layer and unit")


@dataclass
class MlpModel:
    weights: list[np.ndarray]  # per layer, shape (fan_in, fan_out)
    biases: list[np.ndarray]
    scaler: Scaler | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]


def init_model(input_dim: int, config: TrainConfig,
               rng: np.random.Generator) -> MlpModel:
    sizes = [input_dim] + [config.width] * config.depth + [N_OUTPUTS]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases)


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Network output for a batch (or single vector) of scaled inputs."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[1] != model.input_dim:
        raise ValueError(f"input has {h.shape[1]} columns, model expects "
                         f"{model.input_dim}")
    last = len(model.weights) - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w + b
        if k < last:
            np.maximum(h, 0.0, out=h)
    return h[0] if single else h


def predict(model: MlpModel, x_raw: np.ndarray) -> np.ndarray:
    """Forward pass on unscaled features using the embedded scaler."""
    if model.scaler is None:
        return forward(model, x_raw)
    return forward(model, model.scaler.apply(x_raw))


def loss_and_grad(model: MlpModel, x: np.ndarray, y: np.ndarray):
    """Mean squared error over the batch and its exact parameter gradients."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if x.shape[0] != y.shape[0]:
        raise ValueError("feature and label row counts differ")
    last = len(model.weights) - 1
    acts = [x]
    h = x
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w + b
        if k < last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    resid = acts[-1] - y
    loss = float(np.mean(resid ** 2))
    scale = 2.0 / resid.size
    delta = scale * resid
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for k in range(last, -1, -1):
        grads_w[k] = acts[k].T @ delta
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ model.weights[k].T) * (acts[k] > 0)
    return loss, grads_w, grads_b


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: list[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params],
                   [np.zeros_like(p) for p in params])


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState, config: TrainConfig) -> None:
    """In-place Adam update with bias correction."""
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= config.learning_rate * (m / c1) / (np.sqrt(v / c2) + config.eps)


@dataclass
class TrainHistory:
    epoch: list[int] = field(default_factory=list)
    phase: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)

    def to_rows(self):
        return list(zip(self.epoch, self.phase, self.train_loss, self.val_loss))


def _run_phase(model, x_tr, y_tr, x_val, y_val, epochs, batch, patience,
               config, rng, history, phase):
    params = model.weights + model.biases
    state = AdamState.for_params(params)
    best = np.inf
    stall = 0
    n = len(x_tr)
    for ep in range(epochs):
        order = rng.permutation(n)
        losses = []
        for lo in range(0, n, batch):
            idx = order[lo:lo + batch]
            loss, gw, gb = loss_and_grad(model, x_tr[idx], y_tr[idx])
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"training diverged: loss={loss} at phase {phase} epoch {ep}")
            adam_step(params, gw + gb, state, config)
            losses.append(loss)
        train_loss = float(np.mean(losses))
        val_loss = float(np.mean((forward(model, x_val) - y_val) ** 2)) \
            if len(x_val) else float("nan")
        history.epoch.append(len(history.epoch))
        history.phase.append(phase)
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        if patience is not None:
            if train_loss < best - 1e-12:
                best = train_loss
                stall = 0
            else:
                stall += 1
                if stall >= patience:
                    break


def train(x: np.ndarray, y: np.ndarray,
          config: TrainConfig | None = None,
          layout: FeatureLayout | None = None,
          metadata: dict | None = None) -> tuple[MlpModel, TrainHistory]:
    """Two-phase training with an embedded input scaler.

    Splits off the validation fraction deterministically by seed, runs the
    fixed warm-up phase, then the early-stopping phase with a fresh
    optimizer state.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    config = config or TrainConfig()
    if len(x) < 10:
        raise ValueError("need at least 10 training rows")
    rng = np.random.default_rng(config.seed)
    scaler = fit_scaler(x)
    xs = scaler.apply(x)

    n_val = max(1, int(round(config.validation_fraction * len(x))))
    perm = rng.permutation(len(x))
    val_idx, tr_idx = perm[:n_val], perm[n_val:]
    x_tr, y_tr = xs[tr_idx], y[tr_idx]
    x_val, y_val = xs[val_idx], y[val_idx]

    model = init_model(x.shape[1], config, rng)
    model.scaler = scaler
    history = TrainHistory()
    _run_phase(model, x_tr, y_tr, x_val, y_val, config.phase1_epochs,
               config.phase1_batch, None, config, rng, history, phase=1)
    _run_phase(model, x_tr, y_tr, x_val, y_val, config.phase2_epochs,
               config.phase2_batch, config.patience, config, rng, history,
               phase=2)
    model.metadata = {
        "epochs_run": len(history.epoch),
        "train_rows": int(len(tr_idx)),
        "seed": config.seed,
        "depth": config.depth,
        "width": config.width,
        **(metadata or {}),
    }
    if layout is not None:
        model.metadata["layout"] = json.loads(layout.to_json())
    return model, history


@dataclass
class EvalReport:
    mae: np.ndarray  # per robustness test
    mean_mae: float
    std: float
    within_1: float
    within_5: float


def evaluate(model: MlpModel, x: np.ndarray, y: np.ndarray) -> EvalReport:
    """Prediction error on a held-out split, in normalized robustness units."""
    pred = predict(model, np.asarray(x, dtype=np.float64))
    err = np.abs(pred - np.asarray(y, dtype=np.float64))
    return EvalReport(
        mae=err.mean(axis=0),
        mean_mae=float(err.mean()),
        std=float(err.std()),
        within_1=float((err <= 1.0).mean()),
        within_5=float((err <= 5.0).mean()),
    )


def feature_importance(model: MlpModel, layout: FeatureLayout) -> dict[int, float]:
    """Mean absolute first-layer weight mass per feature group.

    The weight mass of one input node is the sum of the absolute weights of
    its outgoing edges; groups are averaged per node so differently sized
    features compare fairly.
    """
    node_mass = np.abs(model.weights[0]).sum(axis=1)
    groups = layout.feature_of_index()
    return {f: float(node_mass[groups == f].mean()) for f in range(1, 10)}


def drop_feature_columns(x: np.ndarray, layout: FeatureLayout,
                         feature: int) -> np.ndarray:
    keep = layout.feature_of_index() != feature
    return np.asarray(x)[:, keep]


def leave_one_out_study(x: np.ndarray, y: np.ndarray, layout: FeatureLayout,
                        config: TrainConfig | None = None,
                        test_fraction: float = 0.1) -> dict[int, float]:
    """Retrain once per removed feature group; key 0 is the full baseline."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    config = config or TrainConfig()
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(len(x))
    n_test = max(1, int(round(test_fraction * len(x))))
    te, tr = perm[:n_test], perm[n_test:]
    out: dict[int, float] = {}
    for feature in range(0, 10):
        if feature == 0:
            x_tr, x_te = x[tr], x[te]
        else:
            x_tr = drop_feature_columns(x[tr], layout, feature)
            x_te = drop_feature_columns(x[te], layout, feature)
        model, _ = train(x_tr, y[tr], config)
        out[feature] = evaluate(model, x_te, y[te]).mean_mae
    return out


# ------------------------------------------------------------- persistence

def _encode(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode()


def _decode(s: str, shape) -> np.ndarray:
    return np.frombuffer(base64.b64decode(s), dtype="<f8").reshape(shape).copy()


def save_model(model: MlpModel, path) -> None:
    obj = {
        "format_version": MODEL_FORMAT_VERSION,
        "layer_sizes": model.layer_sizes,
        "weights": [_encode(w) for w in model.weights],
        "biases": [_encode(b) for b in model.biases],
        "scaler": model.scaler.to_obj() if model.scaler else None,
        "metadata": model.metadata,
    }
    with open(path, "w") as fh:
        json.dump(obj, fh)


def load_model(path) -> MlpModel:
    with open(path) as fh:
        obj = json.load(fh)
    if obj.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format {obj.get('format_version')}")
    sizes = obj["layer_sizes"]
    weights = [_decode(s, (a, b))
               for s, a, b in zip(obj["weights"], sizes, sizes[1:])]
    biases = [_decode(s, (b,)) for s, b in zip(obj["biases"], sizes[1:])]
    scaler = Scaler.from_obj(obj["scaler"]) if obj["scaler"] else None
    return MlpModel(weights, biases, scaler, obj.get("metadata", {}))
