import csv

import numpy as np
import pytest
import yaml

from latentlasso.harness.bounds import bound_table
from latentlasso.harness.cli import main
from latentlasso.harness.config import ConfigError, ExperimentConfig, config_from_dict, load_config
from latentlasso.harness.illustrative import run_illustrative
from latentlasso.harness.io import DataError, fmt, ingest_csv_dataset, read_csv, write_csv
from latentlasso.harness.plots import emit_plots
from latentlasso.harness.sequential import removal_sequence, run_sequential_removal
from latentlasso.harness.simulation import CURVES_HEADER, run_main_simulation


def small_cfg(**kw):
    base = dict(reps=2, n=30, p_grid=(5, 60), psi_kinds=("identity", "block_toeplitz"),
                s_grid=(0.0, 0.5, 1.0), n_lambda=30)
    base.update(kw)
    return ExperimentConfig(**base)


def write_text(path, text):
    path.write_text(text)
    return path


# config --------------------------------------------------------------------

def test_config_defaults_and_validation():
    cfg = ExperimentConfig()
    assert cfg.reps == 100 and cfg.n == 100 and len(cfg.s_grid) == 51 and cfg.beta == (1.0, 1.0, 1.0)
    assert 100 not in cfg.p_grid
    with pytest.raises(ConfigError, match="p = n"):
        ExperimentConfig(p_grid=(50, 100))
    assert ExperimentConfig(p_grid=(50,), include_interpolation_point=True).cells_p == (50, 100)
    for bad in ({"reps": 0}, {"folds": 1}, {"beta": (1.0,)}, {"psi_kinds": ("nope",)},
                {"p_grid": (10, 5)}, {"scenario": "x"}):
        with pytest.raises(ConfigError):
            ExperimentConfig(**bad)


def test_yaml_round_trip(tmp_path):
    cfg = small_cfg(psi_params={"block_toeplitz": {"clip": (0.2, 2.0)}}, master_seed=7)
    path = write_text(tmp_path / "c.yaml", yaml.safe_dump(cfg.to_dict()))
    assert load_config(path) == cfg
    assert load_config(path, reps=5).reps == 5
    with pytest.raises(ConfigError, match="unknown config fields"):
        config_from_dict({"nonsense": 1})
    with pytest.raises(ConfigError):
        load_config(write_text(tmp_path / "bad.yaml", "reps: [1, 2"))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


# CSV -----------------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    vals = [0.1, 1 / 3, 1e-300, 123456789.123, -0.0, 2.0 ** 0.5]
    write_csv(tmp_path / "a.csv", ("k", "v", "b"), [(i, v, i % 2 == 0) for i, v in enumerate(vals)])
    header, rows = read_csv(tmp_path / "a.csv")
    assert header == ["k", "v", "b"]
    assert [float(r[1]) for r in rows] == vals
    assert [r[2] for r in rows] == ["1", "0"] * 3
    assert fmt(np.float64(0.1)) == "0.1" and fmt(float("nan")) == "nan" and fmt(np.int64(3)) == "3"
    assert b"\r" not in (tmp_path / "a.csv").read_bytes()
    with pytest.raises(ValueError):
        write_csv(tmp_path / "b.csv", ("a", "b"), [(1,)])


def test_ingest_toy_dataset(tmp_path):
    path = write_text(tmp_path / "d.csv", "x1,x2,y\n1,2,0\n3,5,1\n4,4,1\n")
    d = ingest_csv_dataset(path, "y")
    assert d.X.shape == (3, 2) and d.y.shape == (3,)
    np.testing.assert_array_equal(d.X[:, 1], [2, 5, 4])
    s = ingest_csv_dataset(path, "y", standardize=True)
    np.testing.assert_allclose(s.X.var(axis=0, ddof=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(s.X.mean(axis=0), 0.0, atol=1e-12)


@pytest.mark.parametrize("text,match", [
    ("x1,x2,y\n1,,0\n3,5,1\n", "row 2 column 'x2'"),
    ("x1,x1,y\n1,2,0\n", "duplicate"),
    ("x1,x2,y\n1,a,0\n3,5,1\n", "column 'x2' is not numeric"),
    ("x1,x2,z\n1,2,0\n", "response"),
    ("x1,x2,y\n", "no data rows"),
])
def test_ingest_errors(tmp_path, text, match):
    path = write_text(tmp_path / "bad.csv", text)
    with pytest.raises(DataError, match=match):
        ingest_csv_dataset(path, "y")


def test_ingest_constant_column_cannot_be_standardized(tmp_path):
    path = write_text(tmp_path / "c.csv", "x1,x2,y\n1,2,0\n1,5,1\n1,4,1\n")
    with pytest.raises(DataError):
        ingest_csv_dataset(path, "y", standardize=True)


# simulation ----------------------------------------------------------------

def test_simulation_outputs(tmp_path):
    cfg = small_cfg()
    res = run_main_simulation(cfg, tmp_path)
    header, rows = read_csv(res.files["curves"])
    assert tuple(header) == CURVES_HEADER
    assert len(rows) == cfg.reps * len(cfg.s_grid) * len(cfg.p_grid) * len(cfg.psi_kinds)
    assert all(np.isfinite(float(v)) for r in rows for v in r[2:])
    assert len(res.summary) == 4
    for d in res.diagnostics:
        assert d["n_kkt_pass"] == d["n_converged"] and d["support_ok"]


def test_simulation_deterministic_across_threads(tmp_path):
    a = run_main_simulation(small_cfg(threads=1), tmp_path / "a")
    b = run_main_simulation(small_cfg(threads=3), tmp_path / "b")
    for name in ("curves", "optimal", "summary", "diagnostics"):
        assert a.files[name].read_bytes() == b.files[name].read_bytes()
    c = run_main_simulation(small_cfg(master_seed=1), tmp_path / "c")
    assert c.files["curves"].read_bytes() != a.files["curves"].read_bytes()


def test_simulation_never_densifies_large_psi(tmp_path):
    from latentlasso.covariance import dense_audit
    cfg = small_cfg(reps=1, p_grid=(2500,), psi_kinds=("random_dense", "block_toeplitz"), dump_psi=True)
    with dense_audit() as seen:
        run_main_simulation(cfg, tmp_path)
    assert seen == []
    assert not list(tmp_path.glob("*.npy"))


# illustrative --------------------------------------------------------------

def test_illustrative_methods_coincide_at_zero(tmp_path):
    cfg = ExperimentConfig(scenario="illustrative", reps=3, illustrative_s_grid=(0.0, 0.5, 1.0))
    res = run_illustrative(cfg, tmp_path)
    for key in ("pred_err", "est_err"):
        assert res.curves["lasso"][key][0] == res.curves["enet"][key][0]
    _, rows = read_csv(res.files["curves"])
    assert len(rows) == 6
    big = run_illustrative(cfg.replace(test_points=50), tmp_path / "big")
    assert "curves_large_test" in big.files


# sequential removal --------------------------------------------------------

def test_removal_sets_disjoint(rng):
    X = rng.standard_normal((60, 120))
    y = X[:, :10] @ np.ones(10) + rng.standard_normal(60)
    cfg = ExperimentConfig(scenario="sequential", n_lambda=30)
    chosen = [c for _, _, _, c in removal_sequence(X, y, 4, 5, 0, 0.0, cfg)]
    assert len(chosen) >= 2
    for i in range(len(chosen)):
        for j in range(i):
            assert not set(chosen[i]) & set(chosen[j])


def test_removal_stops_when_columns_run_out(rng):
    X = rng.standard_normal((40, 3))
    y = X @ [1.0, 1.0, 1.0] + 0.1 * rng.standard_normal(40)
    cfg = ExperimentConfig(scenario="sequential", n_lambda=30)
    steps = list(removal_sequence(X, y, 5, 5, 0, 0.0, cfg))
    assert 1 <= len(steps) < 5
    assert sum(len(c) for *_, c in steps) <= 3


def test_sequential_single_step(tmp_path):
    cfg = ExperimentConfig(scenario="sequential", reps=2, steps=1, folds=5, seq_p=300, n_lambda=30)
    res = run_sequential_removal(cfg, out_dir=tmp_path)
    assert len(res.table) == 1 and res.table[0]["step"] == 1
    assert res.table[0]["removed_total"] == res.table[0]["active_set_size"]


def test_sequential_on_ingested_binary_data(tmp_path, rng):
    n, p = 60, 8
    X = rng.standard_normal((n, p))
    y = (X[:, 0] + 0.5 * rng.standard_normal(n) > 0).astype(int)
    path = tmp_path / "bin.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"g{j}" for j in range(p)] + ["case"])
        for i in range(n):
            w.writerow([repr(float(v)) for v in X[i]] + [int(y[i])])
    data = ingest_csv_dataset(path, "case", standardize=True)
    cfg = ExperimentConfig(scenario="sequential", steps=2, folds=5, splits=4, n_lambda=30)
    res = run_sequential_removal(cfg, data, tmp_path / "out")
    assert 0.5 < res.table[0]["auc"] <= 1.0


# bound table ---------------------------------------------------------------

def test_bound_table_only_for_p_at_least_n(tmp_path):
    cfg = ExperimentConfig(scenario="bound", p_grid=(50, 200, 1000), psi_kinds=("identity",), bound_reps=2)
    path, rows = bound_table(cfg, tmp_path)
    header, body = read_csv(path)
    ps = [int(r[header.index("p")]) for r in body]
    assert ps == [200, 1000]
    b = [float(r[header.index("bound")]) for r in body]
    assert all(v > 0 for v in b)


# plots ---------------------------------------------------------------------

def test_plots_from_simulation(tmp_path):
    res = run_main_simulation(small_cfg(), tmp_path)
    svgs = emit_plots(res.files["curves"])
    assert len(svgs) == 2 and all(s.suffix == ".svg" and s.stat().st_size > 0 for s in svgs)
    assert {s.stem for s in svgs} == {"curves_identity", "curves_block_toeplitz"}
    assert len(emit_plots(res.files["summary"])) == 1
    assert svgs[0].read_text().lstrip().startswith("<?xml")


def test_plot_errors(tmp_path):
    with pytest.raises(DataError, match="no data rows"):
        emit_plots(write_text(tmp_path / "e.csv", ",".join(CURVES_HEADER) + "\n"))
    with pytest.raises(DataError, match="unknown schema"):
        emit_plots(write_text(tmp_path / "u.csv", "a,b\n1,2\n"))


# CLI -----------------------------------------------------------------------

def test_cli_exit_codes(tmp_path, capsys):
    good = write_text(tmp_path / "ok.csv", "x1,y\n1,0\n2,1\n")
    assert main(["ingest-check", str(good), "--response", "y"]) == 0
    assert "n=2 p=1" in capsys.readouterr().out
    bad = write_text(tmp_path / "bad.csv", "x1,y\n1,\n2,1\n")
    assert main(["ingest-check", str(bad), "--response", "y"]) == 2
    assert main(["simulate", "--p", "100", "--reps", "1", "--out", str(tmp_path)]) == 1
    assert main(["simulate", "--bogus"]) == 1
    cfg = write_text(tmp_path / "c.yaml", "unknown_field: 3\n")
    assert main(["simulate", "--config", str(cfg)]) == 1
    assert main(["plot", str(write_text(tmp_path / "e.csv", "a,b\n"))]) == 2


def test_cli_simulate_with_plots(tmp_path, capsys):
    cfg = write_text(tmp_path / "c.yaml", yaml.safe_dump(
        {"n": 30, "p_grid": [60], "psi_kinds": ["identity"], "s_grid": [0.0, 0.5, 1.0], "n_lambda": 20}))
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--reps", "2", "--out", str(out)]) == 0
    assert (out / "curves.csv").exists() and (out / "summary.csv").exists()
    assert len(list(out.glob("*.svg"))) == 2
