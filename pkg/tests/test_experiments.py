import re
from pathlib import Path

import numpy as np
import pytest

from esqnn.exceptions import ConfigurationError
from esqnn.experiments import (
    BpVarianceExperiment, TrainExperiment, cell_name, compute_gradient_variance, gradient_samples,
    run_bp_variance, run_training_experiment,
)
from esqnn.plotting import Series, emit_csv, emit_svg, read_csv

FIXTURE = Path(__file__).resolve().parent.parent / "data" / "mnist01"


def small_train(tmp_path, **kw):
    args = dict(model=1, etas=[0.01], lambdas=[None], epochs=2, repeats=2, train_n=6, val_n=4,
                data_dir=FIXTURE, out=tmp_path)
    args.update(kw)
    return TrainExperiment(**args)


# csv / svg

def test_empty_csv_is_header_only(tmp_path):
    path = emit_csv([], tmp_path / "e.csv", ["a", "b"])
    assert path.read_text() == "a,b\n"
    assert read_csv(path) == []


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    records = [{"n": i, "x": float(v), "name": f"s,{i}"} for i, v in enumerate(rng.normal(size=5))]
    path = emit_csv(records, tmp_path / "r.csv", ["n", "x", "name"])
    assert read_csv(path) == records
    assert '"s,0"' in path.read_text()


def test_csv_rejects_short_rows(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([[1]], tmp_path / "x.csv", ["a", "b"])


def test_csv_io_error_names_path(tmp_path):
    target = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        emit_csv([], target, ["a"])


def test_svg_single_point(tmp_path):
    text = emit_svg([Series("only", [1.0], [2.0])], tmp_path / "p.svg").read_text()
    polylines = re.findall(r'<polyline points="([^"]*)"', text)
    assert len(polylines) == 1
    assert len(polylines[0].split()) == 1 and len(polylines[0].split(",")) == 2
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")


def test_svg_band_and_legend(tmp_path):
    s = Series("cost & more", [0, 1, 2], [1.0, 0.5, 0.2], [0.9, 0.4, 0.1], [1.1, 0.7, 0.3])
    text = emit_svg([s, Series("other", [0, 1], [0.3, float("nan")])], tmp_path / "b.svg", title="t<1>").read_text()
    assert text.count("<polygon") == 1 and 'fill-opacity="0.2"' in text
    assert "cost &amp; more" in text and "t&lt;1&gt;" in text
    assert len(re.findall(r"<polyline", text)) == 2


# training sweep

def test_training_cells_write_files(tmp_path):
    spec = small_train(tmp_path, etas=[0.01, 0.0], lambdas=[None, 5], repeats=1)
    histories = run_training_experiment(spec)
    assert len(histories) == 4
    for eta in (0.01, 0.0):
        for lam in (None, 5):
            name = cell_name(1, eta, lam)
            rows = read_csv(tmp_path / f"{name}.csv")
            assert [r["epoch"] for r in rows] == [0, 1, 2]
            for r in rows:
                assert r["cost_min"] == r["cost_mean"] == r["cost_max"]
            assert (tmp_path / f"{name}.svg").exists()
    flat = read_csv(tmp_path / f"{cell_name(1, 0.0, None)}.csv")
    np.testing.assert_allclose([r["cost_mean"] for r in flat], flat[0]["cost_mean"], rtol=1e-12)


def test_training_aggregation_matches_raw(tmp_path):
    spec = small_train(tmp_path, repeats=3)
    run_training_experiment(spec)
    name = cell_name(1, 0.01, None)
    rows = read_csv(tmp_path / f"{name}.csv")
    raw = read_csv(tmp_path / f"{name}_raw.csv")
    for row in rows:
        costs = [r["train_cost"] for r in raw if r["epoch"] == row["epoch"]]
        accs = [r["val_acc"] for r in raw if r["epoch"] == row["epoch"]]
        assert len(costs) == 3
        assert row["cost_mean"] == pytest.approx(np.mean(costs), abs=1e-12)
        assert row["cost_min"] == pytest.approx(min(costs), abs=1e-12)
        assert row["cost_max"] == pytest.approx(max(costs), abs=1e-12)
        assert row["val_acc_mean"] == pytest.approx(np.mean(accs), abs=1e-12)


def test_training_sweep_deterministic_across_workers(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_training_experiment(small_train(a, lambdas=[None, 6]))
    run_training_experiment(small_train(b, lambdas=[None, 6], workers=3))
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_cells_use_distinct_streams(tmp_path):
    hist = run_training_experiment(small_train(tmp_path, etas=[0.01, 0.02], repeats=1))
    h1, h2 = hist.values()
    assert not np.array_equal(h1.initial_cost, h2.initial_cost)


def test_train_spec_validation(tmp_path):
    with pytest.raises(ConfigurationError):
        small_train(tmp_path, etas=[])
    with pytest.raises(ConfigurationError):
        small_train(tmp_path, lambdas=[0])
    with pytest.raises(ConfigurationError):
        small_train(tmp_path, model=5)
    with pytest.raises(FileNotFoundError):
        run_training_experiment(small_train(tmp_path, data_dir=tmp_path / "nothing"))


# gradient variance

def test_variance_single_qubit_analytic():
    # dC/dtheta = -sin(pi/4 + theta) / 2 with theta uniform: variance 1/8
    rec = compute_gradient_variance(1, 1, 4000, "psr", seed=1)
    g = gradient_samples(1, 1, 4000, "psr", seed=1)
    # standard error of the sample variance: sqrt((m4 - s^4) / N)
    m4 = np.mean((g - g.mean()) ** 4)
    se = np.sqrt((m4 - rec.variance**2) / len(g))
    assert abs(rec.variance - 1 / 8) <= 3 * se


def test_psr_samples_match_closed_form():
    g = gradient_samples(1, 1, 50, "psr", seed=2)
    theta = np.random.default_rng(np.random.SeedSequence(2, spawn_key=(1, 1)).spawn(2)[0]).uniform(0, 2 * np.pi, (50, 1))
    np.testing.assert_allclose(g, -np.sin(np.pi / 4 + theta[:, 0]) / 2, atol=1e-12)


def test_zero_layers_give_zero_variance():
    assert compute_gradient_variance(3, 0, 40, "psr").variance == 0.0
    assert compute_gradient_variance(3, 0, 40, "es").variance == 0.0


def test_es_and_psr_share_draws():
    psr = gradient_samples(2, 1, 40, "psr", seed=3)
    es = gradient_samples(2, 1, 40, "es", lam=20000, seed=3)
    # with a huge population the ES estimates track the exact values draw by draw
    assert np.corrcoef(psr, es)[0, 1] > 0.9


def test_bp_variance_outputs(tmp_path):
    spec = BpVarianceExperiment(qubits=[1, 2, 3], layers=[0, 2], samples=30, out=tmp_path)
    records = run_bp_variance(spec)
    rows = read_csv(tmp_path / "bp_variance_psr.csv")
    assert [(r["n"], r["L"]) for r in rows] == [(1, 0), (2, 0), (3, 0), (1, 2), (2, 2), (3, 2)]
    assert all(r["samples"] == 30 and r["variance"] >= 0 for r in rows)
    assert [r.variance for r in records] == [r["variance"] for r in rows]
    assert (tmp_path / "bp_variance_psr.svg").exists()


def test_bp_variance_deterministic_across_workers(tmp_path):
    kw = dict(qubits=[2, 3], layers=[1, 2], samples=30, estimator="es")
    run_bp_variance(BpVarianceExperiment(out=tmp_path / "a", **kw))
    run_bp_variance(BpVarianceExperiment(out=tmp_path / "b", workers=2, **kw))
    assert (tmp_path / "a" / "bp_variance_es.csv").read_bytes() == (tmp_path / "b" / "bp_variance_es.csv").read_bytes()


def test_bp_spec_validation():
    with pytest.raises(ConfigurationError):
        BpVarianceExperiment(samples=10)
    with pytest.raises(ConfigurationError):
        BpVarianceExperiment(estimator="fd")
    with pytest.raises(ConfigurationError):
        BpVarianceExperiment(qubits=[])
    with pytest.raises(ConfigurationError):
        BpVarianceExperiment(qubits=[40])
