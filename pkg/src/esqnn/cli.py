"""Command-line driver for the training sweeps and the gradient-variance sweep.

Usage::

    esqnn train --model 2 --eta 0.0001 --lambda rule --epochs 30 --repeats 2 \\
        --data-dir data/mnist01 --out results
    esqnn bp-variance --qubits 2,4,6,8 --layers 4 --samples 500 --estimator psr --out results

Any flag may also come from ``--config FILE``, a text file of ``key = value``
lines (keys are flag names without the dashes; ``#`` starts a comment).
Flags given on the command line override the file.
"""

from __future__ import annotations

import argparse
import shlex
import sys
from pathlib import Path

from .exceptions import ConfigurationError, IdxFormatError, NumericalError
from .experiments import BpVarianceExperiment, TrainExperiment, run_bp_variance, run_training_experiment
from .models import DEFAULT_SIGMA


def _split(values, kind):
    items = []
    for v in values:
        items += [s for s in v.replace(",", " ").split() if s]
    try:
        return [kind(s) for s in items]
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse list {' '.join(values)!r}: {exc}") from None


def _lambdas(values):
    out = []
    for s in _split(values, str):
        if s == "rule":
            out.append(None)
        else:
            try:
                out.append(int(s))
            except ValueError:
                raise ConfigurationError(f"lambda must be 'rule' or an integer, got {s!r}") from None
    return out


def read_config(path) -> list[str]:
    """Turn a ``key = value`` file into equivalent command-line tokens."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}") from None
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        tokens += [f"--{key.replace('_', '-')}", *shlex.split(value)]
    return tokens


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esqnn", description="Hybrid quantum-classical network experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="learning-rate x lambda training sweep")
    tr.add_argument("--config", help="key = value file with defaults for these flags")
    tr.add_argument("--model", type=int, choices=(1, 2), required=True)
    tr.add_argument("--eta", nargs="+", default=["0.01,0.001,0.0001"], help="learning rates (comma list)")
    tr.add_argument("--lambda", dest="lam", nargs="+", default=["rule"], help="'rule' and/or integers")
    tr.add_argument("--epochs", type=int, default=30)
    tr.add_argument("--repeats", type=int, default=4)
    tr.add_argument("--train-n", type=int, default=200)
    tr.add_argument("--val-n", type=int, default=50)
    tr.add_argument("--batch", type=int, default=1)
    tr.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    tr.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--data-dir", default="data/mnist01")
    tr.add_argument("--out", default="results")
    tr.add_argument("--workers", type=int, default=1)

    bp = sub.add_parser("bp-variance", help="gradient variance versus qubit count")
    bp.add_argument("--config", help="key = value file with defaults for these flags")
    bp.add_argument("--qubits", nargs="+", default=["2,3,4,5,6,7,8"])
    bp.add_argument("--layers", nargs="+", default=["1,2,4,8"])
    bp.add_argument("--samples", type=int, default=500)
    bp.add_argument("--estimator", choices=("es", "psr"), default="psr")
    bp.add_argument("--lambda", dest="lam", default="rule", help="'rule' or an integer (ES only)")
    bp.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    bp.add_argument("--seed", type=int, default=0)
    bp.add_argument("--out", default="results")
    bp.add_argument("--workers", type=int, default=1)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # a config file contributes tokens placed before the real flags, so the flags win
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    if argv and known.config:
        argv = [argv[0], *read_config(known.config), *argv[1:]]
    return parser.parse_args(argv)


def run(args: argparse.Namespace) -> list[Path]:
    out = Path(args.out)
    if args.command == "train":
        spec = TrainExperiment(
            model=args.model, etas=_split(args.eta, float), lambdas=_lambdas(args.lam),
            epochs=args.epochs, repeats=args.repeats, train_n=args.train_n, val_n=args.val_n,
            batch_size=args.batch, sigma=args.sigma, seed=args.seed, optimizer=args.optimizer,
            data_dir=args.data_dir, out=out, workers=args.workers,
        )
        histories = run_training_experiment(spec)
        return [out / f"{name}{suffix}" for name in histories for suffix in (".csv", "_raw.csv", ".svg")]
    lam = _lambdas([args.lam])
    if len(lam) != 1:
        raise ConfigurationError("bp-variance takes a single lambda")
    spec = BpVarianceExperiment(
        qubits=_split(args.qubits, int), layers=_split(args.layers, int), samples=args.samples,
        estimator=args.estimator, sigma=args.sigma, lam=lam[0], seed=args.seed, out=out, workers=args.workers,
    )
    run_bp_variance(spec)
    stem = out / f"bp_variance_{spec.estimator}"
    return [stem.with_suffix(".csv"), stem.with_suffix(".svg")]


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        for path in run(args):
            print(path)
    except (ConfigurationError, IdxFormatError, NumericalError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"esqnn: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
