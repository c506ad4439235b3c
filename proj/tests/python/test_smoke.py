import os
import subprocess

import numpy as np
import pytest

import crowdcertain as cc


def test_bundled_datasets_load():
    names = cc.bundled_datasets()
    assert set(names) == {"gaussian", "xor", "iris", "breast-cancer"}
    iris = cc.load_dataset("iris")
    assert iris["features"].shape[0] == 100
    assert int(iris["truth"].sum()) == 50


def test_simulate_and_majority_vote():
    ds = cc.load_dataset("gaussian")
    panel = cc.simulate(ds["truth"], workers=5, seed=1)
    z = panel["labels"]
    assert z.shape == (ds["truth"].shape[0], 5, 1)
    assert z.dtype == np.uint8
    assert np.all((panel["thresholds"] >= 0.4) & (panel["thresholds"] <= 1.0))
    mv = cc.baseline("mv", z)
    expected = (z.sum(axis=1) * 2 > z.shape[1]).astype(np.uint8)
    assert np.array_equal(mv["nu"], expected)


def test_perfect_workers_are_recovered():
    ds = cc.load_dataset("xor")
    z = np.repeat(ds["truth"][:, None, :], 4, axis=1)
    for method in cc.baseline_methods():
        r = cc.baseline(method, z, features=ds["features"], truth=ds["truth"])
        assert cc.accuracy(r["nu"], ds["truth"]) == 1.0, method


def test_crowd_certain_weights_and_confidence():
    ds = cc.load_dataset("gaussian")
    z = cc.simulate(ds["truth"], workers=4, seed=0)["labels"]
    n = ds["features"].shape[0]
    train, test = np.arange(0, n, 2), np.arange(1, n, 2)
    r = cc.crowd_certain(ds["features"][train], z[train], ds["features"][test])
    assert r["omega"].shape == (4, 1)
    assert abs(r["omega"].sum() - 1.0) < 1e-12
    assert r["nu"].shape == (len(test), 1)
    for key in ("f_freq", "f_beta"):
        assert np.all((r[key] >= 0.0) & (r[key] <= 1.0))
    assert 0.0 <= cc.accuracy(r["nu"], ds["truth"][test]) <= 1.0


def test_metric_examples():
    assert cc.beta_confidence(3, 2) == pytest.approx(0.3125)
    assert cc.f1(np.array([1, 1, 1, 0, 0]), np.array([1, 1, 0, 1, 0])) == pytest.approx(2 / 3)
    assert cc.auc_roc(np.array([0.9, 0.8, 0.3, 0.2]), np.array([1, 1, 0, 0])) == pytest.approx(1.0)
    assert cc.auc_roc(np.array([0.1, 0.2]), np.array([1, 1])) is None
    assert cc.brier(np.array([0.8, 0.4]), np.array([1, 0])) == pytest.approx(0.1)


def test_errors_surface_as_value_errors():
    with pytest.raises(ValueError):
        cc.load_dataset("no-such-dataset")
    with pytest.raises(cc.Error):
        cc.baseline("best", np.zeros((3, 3), dtype=np.uint8))


def test_run_benchmark(tmp_path):
    rows = cc.run_benchmark(["gaussian"], ["crowd-certain", "mv"], [3], [0], out=str(tmp_path / "run"))
    assert {r["method"] for r in rows} == {"crowd-certain", "mv"}
    assert all(r["n_rows"] == 5 for r in rows)
    assert (tmp_path / "run" / "results.csv").exists()


def test_cli_bench(tmp_path):
    cli = os.environ.get("CROWDCERTAIN_CLI")
    if not cli:
        pytest.skip("CROWDCERTAIN_CLI is not set")
    out = tmp_path / "cli"
    done = subprocess.run(
        [cli, "bench", "--dataset", "iris", "--methods", "mv,sheng", "--workers", "3", "--seeds", "1", "-q",
         "--out", str(out)],
        check=False,
    )
    assert done.returncode == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 5
