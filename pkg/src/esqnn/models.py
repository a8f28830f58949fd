"""Hybrid model assembly and the training loop.

Two reference architectures are provided:

* ``build_model1``: two quantum layers. A 5-qubit layer fed by the three-round
  INPUT1 circuit (15 angles from a 5x3 pooled image) measures qubits 2-4;
  its outputs, multiplied by pi, drive a 3-qubit INPUT2 layer measuring
  qubits 1-2.
* ``build_model2``: Linear(784 -> 4, tanh) -> 4-qubit INPUT2 layer measuring
  every qubit -> Linear(4 -> 2).

Both use four ansatz blocks per quantum layer.
"""

from __future__ import annotations

import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .circuits import AnsatzSpec, EncoderSpec
from .exceptions import ConfigurationError
from .layers import (
    LinearLayer,
    QuantumLayer,
    linear_backward,
    linear_forward,
    make_es_configs,
    make_optimizer,
    mse_grad,
    mse_loss,
    quantum_backward,
    quantum_forward,
)
from .mnist import Dataset, pool_to_grid
from .sim import LocalZeroProjector

DEFAULT_SIGMA = np.pi / 24
MODEL1_GRID = (5, 3)


@dataclass
class Model:
    """Ordered stack of ``LinearLayer`` / ``QuantumLayer`` objects.

    ``preprocess`` maps raw dataset features (flattened images in [0, 1])
    to the first layer's input; ``None`` means features are used as-is.
    """

    layers: list
    name: str = "model"
    preprocess: Callable | None = None

    def __post_init__(self):
        if not self.layers:
            raise ConfigurationError("a model needs at least one layer")
        for k, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.output_dim != b.input_dim:
                raise ConfigurationError(
                    f"layer {k} outputs {a.output_dim} values but layer {k + 1} expects {b.input_dim}"
                )

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    def prepare(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        return features if self.preprocess is None else self.preprocess(features)


def pooled_angles(features) -> np.ndarray:
    """Model 1 preprocessing: 5x3 block-averaged image in [0, pi], row-major."""
    features = np.atleast_2d(features)
    return np.stack([pool_to_grid(f, *MODEL1_GRID) for f in features])


def _forward_layer(layer, x):
    if isinstance(layer, LinearLayer):
        return linear_forward(layer, x)
    return quantum_forward(layer, x)


def build_model1(seed=0, sigma: float = DEFAULT_SIGMA, lam: int | None = None) -> Model:
    """Two-quantum-layer model; ``lam=None`` applies the population-size rule."""
    rng = np.random.default_rng(seed)
    enc1 = EncoderSpec("input1", n_qubits=5, rounds=MODEL1_GRID[1])
    ans1 = AnsatzSpec(5, 4)
    es_p1, es_x1 = make_es_configs(enc1.input_dim, ans1.n_params, sigma, lam)
    layer1 = QuantumLayer(
        enc1, ans1, rng.uniform(0, 2 * np.pi, ans1.n_params),
        [LocalZeroProjector(q) for q in (2, 3, 4)], es_p1, es_x1,
    )
    enc2 = EncoderSpec("input2", n_qubits=3)
    ans2 = AnsatzSpec(3, 4)
    es_p2, es_x2 = make_es_configs(enc2.input_dim, ans2.n_params, sigma, lam)
    layer2 = QuantumLayer(
        enc2, ans2, rng.uniform(0, 2 * np.pi, ans2.n_params),
        [LocalZeroProjector(q) for q in (1, 2)], es_p2, es_x2, input_scale=np.pi,
    )
    return Model([layer1, layer2], name="model1", preprocess=pooled_angles)


def build_model2(seed=0, sigma: float = DEFAULT_SIGMA, lam: int | None = None, n_inputs: int = 784) -> Model:
    """Linear -> quantum -> linear model on flattened images."""
    rng = np.random.default_rng(seed)
    first = LinearLayer.init_uniform(n_inputs, 4, "tanh", rng)
    enc = EncoderSpec("input2", n_qubits=4)
    ans = AnsatzSpec(4, 4)
    es_p, es_x = make_es_configs(enc.input_dim, ans.n_params, sigma, lam)
    quantum = QuantumLayer(
        enc, ans, rng.uniform(0, 2 * np.pi, ans.n_params),
        [LocalZeroProjector(q) for q in range(4)], es_p, es_x,
    )
    last = LinearLayer.init_uniform(4, 2, "identity", rng)
    return Model([first, quantum, last], name="model2")


def model_forward(model: Model, x) -> np.ndarray:
    """Apply every layer in order; ``x`` may be one input or a batch (2-D)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.input_dim:
        raise ValueError(f"model expects input dimension {model.input_dim}, got {x.shape[-1]}")
    for layer in model.layers:
        x = _forward_layer(layer, x)
    return x


def model_backward(model: Model, x, y_target, rng=None, method: str = "es"):
    """Gradients of the squared-error loss for one sample.

    Quantum layers contribute ES (or parameter-shift) estimates for both
    their parameters and, except for the first layer, their inputs.

    Returns:
        ``(grads, y)``: one ``{param_name: gradient}`` dict per layer, and
        the forward output used to seed the backward pass.
    """
    x = np.asarray(x, dtype=float)
    inputs = []
    for layer in model.layers:
        inputs.append(x)
        x = _forward_layer(layer, x)
    y = x
    upstream = mse_grad(y, y_target)
    grads = [None] * len(model.layers)
    for k in reversed(range(len(model.layers))):
        layer = model.layers[k]
        if isinstance(layer, LinearLayer):
            gW, gb, upstream = linear_backward(layer, inputs[k], upstream)
            grads[k] = {"W": gW, "b": gb}
        else:
            g_theta, upstream = quantum_backward(layer, inputs[k], upstream, rng=rng, method=method, input_grad=k > 0)
            grads[k] = {"theta": g_theta}
    return grads, y


@dataclass(frozen=True)
class TrainConfig:
    """Training loop settings.

    ``lam=None`` uses the population-size rule per layer. ``gradient="psr"``
    swaps ES for exact parameter-shift gradients (oracle mode). ``seed`` is
    the master seed; repeat ``r`` derives its own streams from it, keyed
    additionally by ``cell`` when the run is one cell of a sweep.
    """

    eta: float
    epochs: int
    batch_size: int = 1
    repeats: int = 1
    optimizer: str = "adam"
    sigma: float = DEFAULT_SIGMA
    lam: int | None = None
    seed: int = 0
    gradient: str = "es"
    cell: int | None = None

    def __post_init__(self):
        if self.epochs < 1 or self.repeats < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs, repeats and batch_size must be >= 1")
        if self.eta < 0:
            raise ConfigurationError("eta must be non-negative")


@dataclass
class TrainHistory:
    """Per-repeat learning curves; arrays are ``(repeats, epochs)``.

    ``initial_*`` hold the values before the first update, ``batch_costs`` and
    ``batch_sizes`` the raw per-batch log of every repeat and epoch.
    """

    train_cost: np.ndarray
    val_cost: np.ndarray
    val_acc: np.ndarray
    initial_cost: np.ndarray
    initial_val_cost: np.ndarray
    initial_val_acc: np.ndarray
    batch_costs: list = field(default_factory=list)
    batch_sizes: list = field(default_factory=list)


def evaluate(model: Model, X, targets):
    """Mean squared-error cost and argmax accuracy of the deterministic forward pass."""
    if len(X) == 0:
        return float("nan"), float("nan")
    Y = model_forward(model, X)
    cost = float(np.mean([mse_loss(y, t) for y, t in zip(Y, targets)]))
    acc = float(np.mean(np.argmax(Y, axis=1) == np.argmax(targets, axis=1)))
    return cost, acc


def repeat_seeds(master_seed: int, repeat: int, cell: int | None = None):
    """``(model_seed, stream_generator)`` for one repeat, derived from the master seed."""
    key = (repeat,) if cell is None else (cell, repeat)
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=key)
    init, stream = ss.spawn(2)
    return int(init.generate_state(1)[0]), np.random.default_rng(stream)


def train_repeat(builder, train_set: Dataset, val_set: Dataset, cfg: TrainConfig, repeat: int) -> dict:
    """One repeat of the training loop; ``train`` documents the procedure."""
    model_seed, rng = repeat_seeds(cfg.seed, repeat, cfg.cell)
    model = builder(model_seed, sigma=cfg.sigma, lam=cfg.lam)
    X = model.prepare(train_set.features)
    T = train_set.targets
    Xv = model.prepare(val_set.features) if len(val_set) else np.zeros((0, model.input_dim))
    Tv = val_set.targets

    optimizers = {
        (k, name): make_optimizer(cfg.optimizer, cfg.eta)
        for k, layer in enumerate(model.layers)
        for name in layer.params
    }
    init_cost, _ = evaluate(model, X, T)
    init_vcost, init_vacc = evaluate(model, Xv, Tv)

    train_cost, val_cost, val_acc, batch_costs, batch_sizes = [], [], [], [], []
    n = len(X)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        costs, sizes = [], []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            total = None
            losses = []
            for i in idx:
                grads, y = model_backward(model, X[i], T[i], rng=rng, method=cfg.gradient)
                losses.append(mse_loss(y, T[i]))
                if total is None:
                    total = grads
                else:
                    for acc_g, g in zip(total, grads):
                        for name in acc_g:
                            acc_g[name] = acc_g[name] + g[name]
            for k, layer in enumerate(model.layers):
                for name, value in layer.params.items():
                    new = optimizers[k, name].step(value, total[k][name] / len(idx))
                    setattr(layer, name, new)
            costs.append(float(np.mean(losses)))
            sizes.append(len(idx))
        costs = np.array(costs)
        sizes = np.array(sizes)
        train_cost.append(float(np.sum(costs * sizes) / np.sum(sizes)))
        batch_costs.append(costs)
        batch_sizes.append(sizes)
        vc, va = evaluate(model, Xv, Tv)
        val_cost.append(vc)
        val_acc.append(va)
    return {
        "train_cost": train_cost, "val_cost": val_cost, "val_acc": val_acc,
        "initial": (init_cost, init_vcost, init_vacc),
        "batch_costs": batch_costs, "batch_sizes": batch_sizes,
    }


def train(builder: Callable, train_set: Dataset, val_set: Dataset, cfg: TrainConfig, workers: int = 1) -> TrainHistory:
    """Train ``cfg.repeats`` fresh models and collect their learning curves.

    Each repeat builds its model with ``builder(seed, sigma=..., lam=...)``,
    then runs ``cfg.epochs`` passes of shuffled mini-batch updates. The
    per-epoch training cost is the size-weighted mean of the per-batch mean
    losses (computed before each batch's update); validation cost and
    accuracy come from the deterministic forward pass after each epoch.

    With ``workers > 1`` repeats run in separate processes; results do not
    depend on the worker count.
    """
    if len(train_set) == 0:
        raise ConfigurationError("training set is empty")
    run = functools.partial(train_repeat, builder, train_set, val_set, cfg)
    if workers > 1 and cfg.repeats > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(cfg.repeats)))
    else:
        results = [run(r) for r in range(cfg.repeats)]
    return collect_history(results)


def collect_history(results: list) -> TrainHistory:
    """Stack ``train_repeat`` results (in repeat order) into a ``TrainHistory``."""
    return TrainHistory(
        train_cost=np.array([r["train_cost"] for r in results]),
        val_cost=np.array([r["val_cost"] for r in results]),
        val_acc=np.array([r["val_acc"] for r in results]),
        initial_cost=np.array([r["initial"][0] for r in results]),
        initial_val_cost=np.array([r["initial"][1] for r in results]),
        initial_val_acc=np.array([r["initial"][2] for r in results]),
        batch_costs=[r["batch_costs"] for r in results],
        batch_sizes=[r["batch_sizes"] for r in results],
    )


def model_builder(model_id: int):
    if model_id == 1:
        return build_model1
    if model_id == 2:
        return build_model2
    raise ConfigurationError(f"unknown model {model_id!r}; expected 1 or 2")


def parameter_vector(model: Model) -> np.ndarray:
    """All trainable parameters flattened in layer order (for inspection and tests)."""
    return np.concatenate([v.ravel() for layer in model.layers for v in layer.params.values()])

