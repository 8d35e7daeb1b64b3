import csv
import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

import mixcens as mc
from mixcens.cli import EXIT_ESTIMATION, EXIT_INVALID, EXIT_IO, EXIT_OK, main, read_curve, read_dataset


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


# -- simulate ---------------------------------------------------------------


def test_simulate_writes_dataset_and_sidecar(tmp_path):
    out = tmp_path / "s1.csv"
    assert main(["simulate", "--setting", "1", "--n", "100", "--seed", "1", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "u,delta,y" and len(lines) == 101
    meta = json.loads((tmp_path / "s1.csv.meta.json").read_text())
    assert meta["n"] == 100
    assert sum(meta["counts"].values()) == 100
    assert meta["config"]["seed"] == 1


def test_simulate_rerun_byte_identical(tmp_path):
    args = ["simulate", "--setting", "2", "--n", "300", "--seed", "9"]
    main(args + ["--out", str(tmp_path / "a.csv")])
    main(args + ["--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_simulate_rejects_zero_n_before_writing(tmp_path, capsys):
    out = tmp_path / "none.csv"
    assert main(["simulate", "--n", "0", "--out", str(out)]) == EXIT_INVALID
    assert list(tmp_path.iterdir()) == []
    assert "n must be at least 1" in capsys.readouterr().err


def test_simulate_round_trip(tmp_path):
    out = tmp_path / "rt.csv"
    main(["simulate", "--setting", "2", "--n", "400", "--seed", "3", "--replication", "2", "--out", str(out)])
    assert read_dataset(out) == mc.simulate_dataset(mc.setting(2, n=400, seed=3), 2)


def test_simulate_custom_model_flags(tmp_path):
    out = tmp_path / "c.csv"
    code = main(["simulate", "--n", "200", "--q-kind", "constant", "--q-param", "0", "--g-rate", "5",
                 "--out", str(out)])
    assert code == EXIT_OK
    meta = json.loads((tmp_path / "c.csv.meta.json").read_text())
    assert meta["counts"]["reported"] == 0
    assert meta["config"]["g"]["rate"] == 5.0


# -- fit ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def setting1_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "setting1.csv"
    main(["simulate", "--setting", "1", "--n", "2000", "--seed", "11", "--out", str(out)])
    return out


def test_fit_parametric_recovers_rates(setting1_file, tmp_path):
    out = tmp_path / "fit.json"
    assert main(["fit", str(setting1_file), "--method", "parametric", "--out", str(out)]) == EXIT_OK
    rec = json.loads(out.read_text())
    assert rec["gamma_hat"][0] == pytest.approx(10.0, rel=0.1)
    assert rec["theta_hat"][0] == pytest.approx(4.0, rel=0.15)
    assert rec["method"] == "parametric" and rec["n"] == 2000


def test_fit_nonparametric_curve_file(setting1_file, tmp_path):
    out = tmp_path / "curve.csv"
    assert main(["fit", str(setting1_file), "--method", "nonparametric", "--out", str(out)]) == EXIT_OK
    rows = _rows(out)
    assert list(rows[0]) == ["t", "survival", "survival_raw", "a_hat"]
    assert len(rows) == 200
    meta = json.loads((tmp_path / "curve.csv.meta.json").read_text())
    assert meta["method"] == "nonparametric" and meta["kernel"]["kernel"] == "epanechnikov"
    curve = read_curve(out)
    direct = mc.estimate_F(read_dataset(setting1_file))
    np.testing.assert_array_equal(curve.values, direct.values)


def test_fit_only_served_names_missing_category(tmp_path, capsys):
    data = _write(tmp_path / "c1.csv", "u,delta,y\n0.1,0,0\n0.2,0,0\n0.3,0,0\n")
    code = main(["fit", data, "--method", "nonparametric", "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_ESTIMATION
    assert "C3" in capsys.readouterr().err
    assert not (tmp_path / "x.csv").exists()


def test_fit_stratified_files(tmp_path):
    outputs = []
    for level, seed in (("emergency", 1), ("urgent", 2), ("semi-urgent", 3)):
        data = tmp_path / f"{level}.csv"
        main(["simulate", "--n", "500", "--seed", str(seed), "--out", str(data)])
        out = tmp_path / f"{level}-curve.csv"
        assert main(["fit", str(data), "--out", str(out)]) == EXIT_OK
        outputs.append(out)
    assert all(p.exists() for p in outputs)
    assert len({p.read_bytes() for p in outputs}) == 3


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("u,delta,y\n0.1,0,0\n0.2,0,1\n", "line 3"),
        ("u,delta,y\n0.1,0,0\n-0.2,1,1\n", "line 3"),
        ("u,delta,y\n0.1,0\n", "line 2"),
        ("u,delta,y\n0.1,2,0\n", "line 2"),
        ("t,d,y\n0.1,0,0\n", "line 1"),
        ("u,delta,y\nabc,0,0\n", "line 2"),
    ],
)
def test_fit_malformed_rows(tmp_path, capsys, body, fragment):
    data = _write(tmp_path / "bad.csv", body)
    assert main(["fit", data, "--method", "parametric", "--out", str(tmp_path / "o.json")]) == EXIT_INVALID
    assert fragment in capsys.readouterr().err


def test_fit_reports_violated_invariant(tmp_path, capsys):
    data = _write(tmp_path / "bad.csv", "u,delta,y\n0.1,0,0\n0.2,0,1\n")
    main(["fit", data, "--out", str(tmp_path / "o.csv")])
    assert "delta=0 with y=1" in capsys.readouterr().err


# -- reproduce-table1 -----------------------------------------------------------


def test_table1_smoke(tmp_path):
    out = tmp_path / "table.csv"
    start = time.perf_counter()
    assert main(["reproduce-table1", "--reps", "5", "--seed", "1", "--out", str(out)]) == EXIT_OK
    assert time.perf_counter() - start < 60
    rows = _rows(out)
    assert len(rows) == 20
    assert {(r["setting"], r["estimator"]) for r in rows} == {
        ("1", "parametric"), ("1", "nonparametric"), ("2", "parametric"), ("2", "nonparametric")}
    assert all(r["failures"] == "0" and r["reps"] == "5" for r in rows)
    assert float(rows[0]["mean_x1e3"]) == pytest.approx(1e3 * float(rows[0]["mean"]))


def test_table1_independent_of_workers(tmp_path):
    base = ["reproduce-table1", "--reps", "4", "--seed", "2", "--ns", "100,200"]
    main(base + ["--workers", "1", "--out", str(tmp_path / "w1.csv")])
    main(base + ["--workers", "2", "--out", str(tmp_path / "w2.csv")])
    assert (tmp_path / "w1.csv").read_bytes() == (tmp_path / "w2.csv").read_bytes()


def test_table1_bad_ns(tmp_path):
    assert main(["reproduce-table1", "--ns", "10,x", "--out", str(tmp_path / "t.csv")]) == EXIT_INVALID


# -- curves and eval-mse --------------------------------------------------------


def test_curves_three_series(tmp_path):
    out = tmp_path / "curves.csv"
    assert main(["curves", "--setting", "1", "--n", "500", "--seed", "4", "--out", str(out)]) == EXIT_OK
    rows = _rows(out)
    assert len(rows) == 600
    by_method = {}
    for r in rows:
        by_method.setdefault(r["method"], []).append((float(r["t"]), float(r["survival"])))
    assert set(by_method) == {"nonparametric", "parametric", "truth"}
    t, truth = np.array(by_method["truth"]).T
    assert np.array_equal(truth, np.array([float(format(x, ".16e")) for x in np.exp(-4 * t)]))
    data = mc.simulate_dataset(mc.setting(1, n=500, seed=4))
    theta = mc.fit_parametric(data).theta_hat[0]
    _, para = np.array(by_method["parametric"]).T
    np.testing.assert_allclose(para, np.exp(-theta * t), rtol=1e-15)


def test_eval_mse_stdout_and_file(setting1_file, tmp_path, capsys):
    curve = tmp_path / "curve.csv"
    main(["fit", str(setting1_file), "--out", str(curve)])
    capsys.readouterr()
    assert main(["eval-mse", str(curve), "--setting", "1"]) == EXIT_OK
    rec = json.loads(capsys.readouterr().out)
    assert rec["mse"] == pytest.approx(mc.mse(read_curve(curve), mc.exponential(4.0)), rel=1e-12)
    out = tmp_path / "mse.json"
    assert main(["eval-mse", str(curve), "--f-family", "weibull", "--f-rate", "4", "--f-shape", "2",
                 "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["f0"]["family"] == "weibull"


# -- configuration and errors -------------------------------------------------


def test_config_file_and_override(tmp_path):
    cfg = _write(tmp_path / "cfg.json", json.dumps({"setting": 2, "n": 50, "seed": 7, "out": str(tmp_path / "a.csv")}))
    assert main(["simulate", "--config", cfg]) == EXIT_OK
    assert len(read_dataset(tmp_path / "a.csv").u) == 50
    assert main(["simulate", "--config", cfg, "--n", "80", "--out", str(tmp_path / "b.csv")]) == EXIT_OK
    assert read_dataset(tmp_path / "b.csv") == mc.simulate_dataset(mc.setting(2, n=80, seed=7))


def test_config_unknown_key(tmp_path, capsys):
    cfg = _write(tmp_path / "cfg.json", json.dumps({"n": 50, "sede": 7, "out": "x.csv"}))
    assert main(["simulate", "--config", cfg]) == EXIT_INVALID
    assert "sede" in capsys.readouterr().err


def test_config_nested_distribution(tmp_path):
    cfg = _write(tmp_path / "cfg.json", json.dumps({"f": {"family": "weibull", "rate": 3, "shape": 1.5}, "n": 20}))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "w.csv")]) == EXIT_OK
    meta = json.loads((tmp_path / "w.csv.meta.json").read_text())
    assert meta["config"]["f"] == {"family": "weibull", "rate": 3.0, "shape": 1.5}


def test_missing_input_is_io_error(tmp_path):
    assert main(["fit", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "o.json")]) == EXIT_IO


def test_unwritable_output_is_io_error(tmp_path):
    assert main(["simulate", "--n", "5", "--out", str(tmp_path / "no" / "such" / "dir.csv")]) == EXIT_IO


def test_module_entry_point_respects_thread_env(tmp_path):
    outs = []
    for threads in ("1", "2"):
        out = tmp_path / f"t{threads}.csv"
        env = dict(os.environ, MIXCENS_THREADS=threads)
        proc = subprocess.run(
            [sys.executable, "-m", "mixcens", "reproduce-table1", "--reps", "3", "--ns", "100,200", "--seed", "5",
             "--out", str(out)],
            env=env, capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
