"""Experiment drivers: learning-rate x population-size training sweeps and
the gradient-variance (barren plateau) sweep.

All randomness is derived from the master seed and the position of the work
item in the sweep, never from scheduling, so results do not depend on the
number of worker processes.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .circuits import AnsatzSpec, EncoderSpec
from .esgrad import EsConfig, es_gradient, lambda_rule, psr_gradient
from .exceptions import ConfigurationError
from .layers import QuantumLayer
from .mnist import load_mnist, make_binary_split
from .models import DEFAULT_SIGMA, TrainConfig, collect_history, model_builder, train_repeat
from .plotting import Series, emit_csv, emit_svg
from .sim import MAX_QUBITS, LocalZeroProjector

SUMMARY_COLUMNS = ("epoch", "cost_mean", "cost_min", "cost_max", "val_acc_mean")
RAW_COLUMNS = ("repeat", "epoch", "train_cost", "val_cost", "val_acc")
VARIANCE_COLUMNS = ("n", "L", "variance", "samples")
ESTIMATORS = ("es", "psr")
MIN_VARIANCE_SAMPLES = 30


def _map(fn, items, workers):
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


@dataclass(frozen=True)
class TrainExperiment:
    """A grid of training runs over learning rates and population sizes.

    ``lambdas`` entries are positive integers or ``None`` for the
    population-size rule. The validation and training sets are drawn once
    from ``data_dir`` with the master seed and shared by every cell.
    """

    model: int
    etas: Sequence[float]
    lambdas: Sequence[int | None] = (None,)
    epochs: int = 30
    repeats: int = 4
    train_n: int = 200
    val_n: int = 50
    batch_size: int = 1
    sigma: float = DEFAULT_SIGMA
    seed: int = 0
    optimizer: str = "adam"
    data_dir: str | Path = "data/mnist01"
    out: str | Path = "results"
    workers: int = 1

    def __post_init__(self):
        model_builder(self.model)
        if not self.etas or not self.lambdas:
            raise ConfigurationError("eta and lambda lists must be non-empty")
        for lam in self.lambdas:
            if lam is not None and (int(lam) != lam or lam < 1):
                raise ConfigurationError(f"lambda must be a positive integer or 'rule', got {lam!r}")

    def cells(self) -> list[tuple[float, int | None]]:
        return list(itertools.product(self.etas, self.lambdas))

    def cell_config(self, index: int) -> TrainConfig:
        eta, lam = self.cells()[index]
        return TrainConfig(
            eta=eta, epochs=self.epochs, batch_size=self.batch_size, repeats=self.repeats,
            optimizer=self.optimizer, sigma=self.sigma, lam=lam, seed=self.seed, cell=index,
        )


def cell_name(model: int, eta: float, lam: int | None) -> str:
    return f"model{model}_eta{eta!r}_lam{'rule' if lam is None else lam}"


def summarize_history(history) -> list[dict]:
    """Per-epoch mean/min/max training cost and mean validation accuracy.

    Row 0 holds the values before training; row ``e`` those after epoch ``e``.
    """
    cost = np.column_stack([history.initial_cost, history.train_cost])
    acc = np.column_stack([history.initial_val_acc, history.val_acc])
    return [
        {
            "epoch": e,
            "cost_mean": float(np.mean(cost[:, e])),
            "cost_min": float(np.min(cost[:, e])),
            "cost_max": float(np.max(cost[:, e])),
            "val_acc_mean": float(np.mean(acc[:, e])),
        }
        for e in range(cost.shape[1])
    ]


def raw_history(history) -> list[dict]:
    rows = []
    for r in range(history.train_cost.shape[0]):
        rows.append({
            "repeat": r, "epoch": 0, "train_cost": float(history.initial_cost[r]),
            "val_cost": float(history.initial_val_cost[r]), "val_acc": float(history.initial_val_acc[r]),
        })
        for e in range(history.train_cost.shape[1]):
            rows.append({
                "repeat": r, "epoch": e + 1, "train_cost": float(history.train_cost[r, e]),
                "val_cost": float(history.val_cost[r, e]), "val_acc": float(history.val_acc[r, e]),
            })
    return rows


def _run_train_item(args):
    builder, train_set, val_set, cfg, repeat = args
    return train_repeat(builder, train_set, val_set, cfg, repeat)


def run_training_experiment(spec: TrainExperiment) -> dict:
    """Train every (eta, lambda) cell and write its CSVs and SVG.

    Each cell produces ``<name>.csv`` (columns ``SUMMARY_COLUMNS``),
    ``<name>_raw.csv`` (one row per repeat and epoch) and ``<name>.svg``
    (mean cost with the min/max band over repeats).

    Returns:
        ``{cell_name: TrainHistory}``.
    """
    images, labels = load_mnist(spec.data_dir, "train")
    train_set, val_set = make_binary_split(images, labels, spec.train_n, spec.val_n, seed=spec.seed)
    builder = model_builder(spec.model)
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)

    cells = spec.cells()
    items = [
        (builder, train_set, val_set, spec.cell_config(c), r)
        for c in range(len(cells))
        for r in range(spec.repeats)
    ]
    results = _map(_run_train_item, items, spec.workers)

    histories = {}
    for c, (eta, lam) in enumerate(cells):
        history = collect_history(results[c * spec.repeats:(c + 1) * spec.repeats])
        name = cell_name(spec.model, eta, lam)
        rows = summarize_history(history)
        emit_csv(rows, out / f"{name}.csv", SUMMARY_COLUMNS)
        emit_csv(raw_history(history), out / f"{name}_raw.csv", RAW_COLUMNS)
        emit_svg(
            [Series(
                "training cost (mean, min-max band)",
                [r["epoch"] for r in rows], [r["cost_mean"] for r in rows],
                [r["cost_min"] for r in rows], [r["cost_max"] for r in rows],
            )],
            out / f"{name}.svg",
            title=f"Model {spec.model}, eta={eta!r}, lambda={'rule' if lam is None else lam}",
            xlabel="epoch", ylabel="cost",
        )
        histories[name] = history
    return histories


@dataclass(frozen=True)
class BpVarianceExperiment:
    """Variance of the first gradient component over random parameters.

    The cost is the mean of the single-qubit ``|0><0|`` projectors on every
    qubit, the circuit is the INPUT2 encoder at ``x = (pi/4, ..., pi/4)``
    followed by ``L`` ansatz blocks, and parameters are uniform on
    ``[0, 2 pi)``. ``lam=None`` applies the population-size rule to the
    parameter count.
    """

    qubits: Sequence[int] = (2, 3, 4, 5, 6, 7, 8)
    layers: Sequence[int] = (1, 2, 4, 8)
    samples: int = 500
    estimator: str = "psr"
    sigma: float = DEFAULT_SIGMA
    lam: int | None = None
    seed: int = 0
    out: str | Path = "results"
    workers: int = 1

    def __post_init__(self):
        if not self.qubits or not self.layers:
            raise ConfigurationError("qubit and layer lists must be non-empty")
        if self.samples < MIN_VARIANCE_SAMPLES:
            raise ConfigurationError(f"samples must be at least {MIN_VARIANCE_SAMPLES}, got {self.samples}")
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if any(not 1 <= n <= MAX_QUBITS for n in self.qubits):
            raise ConfigurationError(f"qubit counts must lie in 1..{MAX_QUBITS}")
        if any(L < 0 for L in self.layers):
            raise ConfigurationError("layer counts must be non-negative")


@dataclass(frozen=True)
class VarianceRecord:
    n: int
    L: int
    variance: float
    samples: int


def variance_cost_layer(n_qubits: int, n_blocks: int) -> QuantumLayer:
    enc, ans = EncoderSpec("input2", n_qubits), AnsatzSpec(n_qubits, n_blocks)
    cfg = EsConfig(DEFAULT_SIGMA, 2)  # placeholder; the sweep passes its own config
    return QuantumLayer(enc, ans, np.zeros(ans.n_params), [LocalZeroProjector(q) for q in range(n_qubits)], cfg, cfg)


def gradient_samples(
    n_qubits: int,
    n_blocks: int,
    samples: int,
    estimator: str = "psr",
    sigma: float = DEFAULT_SIGMA,
    lam: int | None = None,
    seed: int = 0,
) -> np.ndarray:
    """``dC/dtheta_1`` at ``samples`` random parameter vectors.

    Parameter draws depend only on ``(seed, n_qubits, n_blocks)``, so the two
    estimators see identical draws. With no ansatz parameters the cost is
    constant and every sample is 0.
    """
    layer = variance_cost_layer(n_qubits, n_blocks)
    p = layer.ansatz.n_params
    if p == 0:
        return np.zeros(samples)
    theta_ss, es_ss = np.random.SeedSequence(entropy=seed, spawn_key=(n_qubits, n_blocks)).spawn(2)
    thetas = np.random.default_rng(theta_ss).uniform(0, 2 * np.pi, (samples, p))
    angles = np.full(n_qubits, np.pi / 4)
    weights = np.full(n_qubits, 1.0 / n_qubits)

    def cost(t):
        return layer.evaluate(angles, t) @ weights

    if estimator == "psr":
        # only the first component is needed: shift it for every draw at once
        plus, minus = thetas.copy(), thetas.copy()
        plus[:, 0] += np.pi / 2
        minus[:, 0] -= np.pi / 2
        return (cost(plus) - cost(minus)) / 2
    cfg = EsConfig(sigma, lambda_rule(p) if lam is None else lam)
    rng = np.random.default_rng(es_ss)
    return np.array([es_gradient(cost, t, cfg, rng=rng, vectorized=True)[0] for t in thetas])


def compute_gradient_variance(n_qubits, n_blocks, samples, estimator="psr", sigma=DEFAULT_SIGMA, lam=None, seed=0):
    """Unbiased (``ddof=1``) sample variance of ``gradient_samples``."""
    g = gradient_samples(n_qubits, n_blocks, samples, estimator, sigma, lam, seed)
    return VarianceRecord(n_qubits, n_blocks, float(np.var(g, ddof=1)), samples)


def _run_variance_item(args):
    return compute_gradient_variance(*args)


def run_bp_variance(spec: BpVarianceExperiment) -> list[VarianceRecord]:
    """Sweep qubit and layer counts; write ``bp_variance_<estimator>.csv`` and ``.svg``."""
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    items = [
        (n, L, spec.samples, spec.estimator, spec.sigma, spec.lam, spec.seed)
        for L in spec.layers
        for n in spec.qubits
    ]
    records = _map(_run_variance_item, items, spec.workers)
    stem = out / f"bp_variance_{spec.estimator}"
    emit_csv([vars(r) for r in records], stem.with_suffix(".csv"), VARIANCE_COLUMNS)
    series = []
    for L in spec.layers:
        rows = [r for r in records if r.L == L and r.variance > 0]
        series.append(Series(f"L={L}", [r.n for r in rows], [float(np.log10(r.variance)) for r in rows]))
    emit_svg(
        series, stem.with_suffix(".svg"),
        title=f"Gradient variance ({spec.estimator.upper()}, {spec.samples} draws)",
        xlabel="qubits", ylabel="log10 Var[dC/dtheta_1]",
    )
    return records
