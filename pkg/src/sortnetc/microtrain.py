"""Small numpy trainer for dense ReLU networks.

Hidden layers use ReLU; the output is a sigmoid for list classification
(binary cross entropy) or linear for learning to sort (mean squared error).
Parameters start from He initialisation and are fitted with Adam.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Literal, Sequence

import numpy as np

from .nnruntime import DenseLayer, DenseNetwork, sigmoid
from .rng import max_workers, substream

OPTIMIZER = "adam"
Loss = Literal["bce", "mse"]
Task = Literal["classify_list", "sort_vector"]


def init_he(layer_sizes: Sequence[int], seed: int, output_activation: str = "identity") -> DenseNetwork:
    """Gaussian weights with variance 2/fan_in, zero biases."""
    if len(layer_sizes) < 2:
        raise ValueError("need at least input and output sizes")
    rng = substream(seed, 0)
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(layer_sizes, layer_sizes[1:])):
        w = rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_out, fan_in))
        act = output_activation if i == len(layer_sizes) - 2 else "relu"
        layers.append(DenseLayer(w, np.zeros(fan_out), act))
    return DenseNetwork(layers)


def _forward_cache(net: DenseNetwork, X: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    acts = [X]
    a = X
    for i, layer in enumerate(net.layers):
        z = a @ layer.weights.T + layer.biases
        if i < len(net.layers) - 1:
            a = np.maximum(z, 0.0)
            acts.append(a)
    return acts, z


def loss_value(net: DenseNetwork, X: np.ndarray, Y: np.ndarray, loss: Loss) -> float:
    _, z = _forward_cache(net, np.asarray(X, dtype=float))
    return _loss_from_logits(z, np.asarray(Y, dtype=float).reshape(z.shape), loss)


def _loss_from_logits(z: np.ndarray, Y: np.ndarray, loss: Loss) -> float:
    if loss == "bce":
        # log(1 + e^z) - y z, the stable form of binary cross entropy on a sigmoid
        return float(np.mean(np.logaddexp(0.0, z) - Y * z))
    if loss == "mse":
        return float(np.mean((z - Y) ** 2))
    raise ValueError(f"unknown loss {loss!r}")


def loss_and_grads(net: DenseNetwork, X: np.ndarray, Y: np.ndarray, loss: Loss):
    """Loss and per-layer ``(dW, db)`` by backpropagation.

    For ``bce`` the last layer's activation must be the sigmoid, for ``mse``
    the identity; gradients are taken through that pairing.
    """
    X = np.asarray(X, dtype=float)
    acts, z = _forward_cache(net, X)
    Y = np.asarray(Y, dtype=float).reshape(z.shape)
    value = _loss_from_logits(z, Y, loss)
    if loss == "bce":
        delta = (sigmoid(z) - Y) / z.size
    else:
        delta = 2.0 * (z - Y) / z.size
    grads = []
    for i in range(len(net.layers) - 1, -1, -1):
        a_prev = acts[i]
        grads.append((delta.T @ a_prev, delta.sum(axis=0)))
        if i:
            delta = (delta @ net.layers[i].weights) * (a_prev > 0)
    grads.reverse()
    return value, grads


class Adam:
    def __init__(self, net: DenseNetwork, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.params = [p for layer in net.layers for p in (layer.weights, layer.biases)]
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def step(self, grads, lr: float | None = None) -> None:
        lr = self.lr if lr is None else lr
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        flat = [g for pair in grads for g in pair]
        for p, g, m, v in zip(self.params, flat, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= (lr / bc1) * m / (np.sqrt(v / bc2) + self.eps)


@dataclass
class TrainConfig:
    layer_sizes: list[int]
    task: Task = "classify_list"
    loss: Loss | None = None
    epochs: int = 300
    batch_size: int = 64
    learning_rate: float = 3e-3
    seed: int = 0
    restarts: int = 1
    final_learning_rate: float | None = None

    def __post_init__(self) -> None:
        expected = "bce" if self.task == "classify_list" else "mse"
        if self.task not in ("classify_list", "sort_vector"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.loss is None:
            self.loss = expected
        if self.loss != expected:
            raise ValueError(f"task {self.task} requires loss {expected}, got {self.loss}")

    @property
    def output_activation(self) -> str:
        return "sigmoid" if self.task == "classify_list" else "identity"


@dataclass
class TrainReport:
    final_train_loss: float
    train_accuracy: float
    test_accuracy: float
    parameter_count: int
    epochs_run: int
    restart_index: int = 0
    diverged: bool = False
    success: bool | None = None
    optimizer: str = OPTIMIZER
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


SORT_TOLERANCE = 0.01


def accuracy(net: DenseNetwork, X: np.ndarray, Y: np.ndarray, task: Task) -> float:
    """Classification: threshold at 0.5. Sorting: every output within 0.01."""
    out = net.forward(X)
    Y = np.asarray(Y).reshape(out.shape)
    if task == "classify_list":
        return float(np.mean((out >= 0.5) == (Y >= 0.5)))
    return float(np.mean(np.all(np.abs(out - Y) < SORT_TOLERANCE, axis=1)))


def train(cfg: TrainConfig, data: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]) -> TrainReport:
    """Fit a fresh He-initialised network on fixed train/test arrays.

    Runs ``cfg.restarts`` initialisations and keeps the one with the lowest
    final training loss.
    """
    X_tr, Y_tr, X_te, Y_te = (np.asarray(a, dtype=float) for a in data)
    if X_tr.shape[1] != cfg.layer_sizes[0]:
        raise ValueError(f"inputs have {X_tr.shape[1]} features, network expects {cfg.layer_sizes[0]}")
    best = None
    for r in range(cfg.restarts):
        report, _ = _train_once(cfg, X_tr, Y_tr, X_te, Y_te, r)
        if best is None or (not report.diverged and (best.diverged or report.final_train_loss < best.final_train_loss)):
            best = report
    return best


def _train_once(cfg: TrainConfig, X_tr, Y_tr, X_te, Y_te, restart: int) -> tuple[TrainReport, DenseNetwork]:
    seed = int(substream(cfg.seed, restart).integers(2**63))
    net = init_he(cfg.layer_sizes, seed, cfg.output_activation)
    opt = Adam(net, cfg.learning_rate)
    rng = substream(cfg.seed, restart, 1)
    m = len(X_tr)
    Y_tr = Y_tr.reshape(m, -1)
    epochs_run = 0
    diverged = False
    lr = cfg.learning_rate
    # per-epoch exponential decay towards final_learning_rate
    decay = 1.0 if cfg.final_learning_rate is None else (cfg.final_learning_rate / lr) ** (1.0 / max(cfg.epochs - 1, 1))
    for _ in range(cfg.epochs):
        order = rng.permutation(m)
        for start in range(0, m, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            value, grads = loss_and_grads(net, X_tr[idx], Y_tr[idx], cfg.loss)
            if not math.isfinite(value):
                diverged = True
                break
            opt.step(grads, lr)
        lr *= decay
        epochs_run += 1
        if diverged:
            break
    final = loss_value(net, X_tr, Y_tr, cfg.loss) if not diverged else float("nan")
    report = TrainReport(
        final_train_loss=final,
        train_accuracy=accuracy(net, X_tr, Y_tr, cfg.task) if not diverged else 0.0,
        test_accuracy=accuracy(net, X_te, Y_te, cfg.task) if not diverged else 0.0,
        parameter_count=net.parameter_count("weights_and_biases"),
        epochs_run=epochs_run,
        restart_index=restart,
        diverged=diverged,
    )
    return report, net


# -- learning to sort --------------------------------------------------------

STRICT_THRESHOLD = 1e-5
DEFAULT_THRESHOLD = 1e-4


@dataclass
class SortRunConfig:
    x: int
    layer_sizes: list[int]
    restarts: int = 100
    threshold: float = DEFAULT_THRESHOLD
    steps: int = 20_000
    batch_size: int = 128
    learning_rate: float = 1e-2
    final_learning_rate: float = 1e-4
    eval_every: int = 1000
    eval_size: int = 4096
    seed: int = 0
    stop_on_success: bool = True

    def __post_init__(self) -> None:
        if self.layer_sizes[0] != self.x or self.layer_sizes[-1] != self.x:
            raise ValueError(f"layer sizes must start and end with {self.x}")


def _sort_restart(cfg: SortRunConfig, restart: int) -> tuple[TrainReport, DenseNetwork]:
    init_seed = int(substream(cfg.seed, restart).integers(2**63))
    net = init_he(cfg.layer_sizes, init_seed, "identity")
    opt = Adam(net, cfg.learning_rate)
    data_rng = substream(cfg.seed, restart, 1)
    eval_rng = substream(cfg.seed, 2**32)  # one shared held-out set
    X_ev = eval_rng.random((cfg.eval_size, cfg.x))
    Y_ev = np.sort(X_ev, axis=1)
    decay = (cfg.final_learning_rate / cfg.learning_rate) ** (1.0 / max(cfg.steps - 1, 1))
    lr = cfg.learning_rate
    best_loss = float("inf")
    steps_run = 0
    diverged = False
    for step in range(1, cfg.steps + 1):
        X = data_rng.random((cfg.batch_size, cfg.x))
        value, grads = loss_and_grads(net, X, np.sort(X, axis=1), "mse")
        if not math.isfinite(value):
            diverged = True
            break
        opt.step(grads, lr)
        lr *= decay
        steps_run = step
        if step % cfg.eval_every == 0 or step == cfg.steps:
            ev = loss_value(net, X_ev, Y_ev, "mse")
            best_loss = min(best_loss, ev)
            if ev < cfg.threshold:
                break
    final = loss_value(net, X_ev, Y_ev, "mse") if not diverged else float("nan")
    report = TrainReport(
        final_train_loss=final,
        train_accuracy=accuracy(net, X_ev, Y_ev, "sort_vector") if not diverged else 0.0,
        test_accuracy=accuracy(net, X_ev, Y_ev, "sort_vector") if not diverged else 0.0,
        parameter_count=net.parameter_count("weights_and_biases"),
        epochs_run=steps_run,
        restart_index=restart,
        diverged=diverged,
        success=bool(final < cfg.threshold),
        extra={"best_eval_loss": best_loss},
    )
    return report, net


def _sort_restart_args(args):
    return _sort_restart(*args)


def learn_to_sort(
    x: int,
    layer_sizes: Sequence[int],
    restarts: int = 100,
    strict: bool = False,
    workers: int | None = None,
    **kwargs,
) -> TrainReport:
    """Train sorters from random data until one reaches the loss threshold.

    Every step draws a fresh batch of uniform vectors; the loss is checked on
    a fixed held-out set. Returns the best restart, with ``success`` telling
    whether it got under the threshold (1e-4, or 1e-5 with ``strict``).
    """
    if strict:
        kwargs.setdefault("threshold", STRICT_THRESHOLD)
    cfg = SortRunConfig(x, list(layer_sizes), restarts, **kwargs)
    workers = max_workers() if workers is None else workers
    reports: list[TrainReport] = []
    if workers <= 1:
        for r in range(restarts):
            reports.append(_sort_restart(cfg, r)[0])
            if cfg.stop_on_success and reports[-1].success:
                break
    else:
        with ProcessPoolExecutor(workers) as pool:
            for start in range(0, restarts, workers):
                batch = [(cfg, r) for r in range(start, min(start + workers, restarts))]
                reports.extend(rep for rep, _ in pool.map(_sort_restart_args, batch))
                if cfg.stop_on_success and any(r.success for r in reports):
                    break
    finite = [r for r in reports if not r.diverged]
    best = min(finite or reports, key=lambda r: (not r.success, r.final_train_loss if finite else 0.0))
    best.extra.update({"restarts_run": len(reports), "threshold": cfg.threshold, "successes": sum(bool(r.success) for r in reports)})
    return best


def learned_sorter(x: int, layer_sizes: Sequence[int], restart: int, **kwargs) -> DenseNetwork:
    """Re-run one restart deterministically and return its network."""
    cfg = SortRunConfig(x, list(layer_sizes), **kwargs)
    return _sort_restart(cfg, restart)[1]


# -- gradient checking -------------------------------------------------------


def _nudge_off_kinks(net: DenseNetwork, X: np.ndarray, margin: float, rng: np.random.Generator) -> np.ndarray:
    for _ in range(100):
        acts, _ = _forward_cache(net, X)
        pre = [a @ l.weights.T + l.biases for a, l in zip(acts, net.layers[:-1])]
        if all(np.all(np.abs(p) > margin) for p in pre):
            return X
        X = X + rng.normal(0.0, 10 * margin, size=X.shape)
    return X


def gradient_check(net: DenseNetwork, loss: Loss, X, Y, step: float = 1e-5, seed: int = 0) -> float:
    """Max relative error between backprop and central differences.

    Inputs are first nudged so no ReLU pre-activation sits within 10 steps of
    its kink, where finite differences are meaningless.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    X = _nudge_off_kinks(net, X, 10 * step, substream(seed, 0))
    _, grads = loss_and_grads(net, X, Y, loss)
    worst = 0.0
    for layer, (dW, db) in zip(net.layers, grads):
        for param, analytic in ((layer.weights, dW), (layer.biases, db)):
            it = np.nditer(param, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = param[idx]
                param[idx] = orig + step
                up = loss_value(net, X, Y, loss)
                param[idx] = orig - step
                down = loss_value(net, X, Y, loss)
                param[idx] = orig
                numeric = (up - down) / (2 * step)
                a = analytic[idx]
                denom = max(abs(a) + abs(numeric), 1e-8)
                worst = max(worst, abs(a - numeric) / denom)
    return worst
