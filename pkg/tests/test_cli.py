import numpy as np
import pandas as pd
import pytest

from src.mvmatern.cli.commands import parse_lags
from src.mvmatern.errors import ModelConfigError
from src.mvmatern.io.dataset_io import write_dataset
from src.mvmatern.io.model_io import read_model
from src.mvmatern.main import main

SYMMETRIC_MODEL = """\
variant = SMM
d = 1
p = 2
nu.1 = 0.7
a.1 = 2
sigma.11 = 1
nu.2 = 0.7
a.2 = 2
sigma.22 = 1
re_sigma.12 = 0.3
im_sigma.12 = 0.5
"""


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "model.txt"
    path.write_text(SYMMETRIC_MODEL)
    return path


@pytest.fixture
def data_file(tmp_path, small_dataset):
    path = tmp_path / "data.csv"
    write_dataset(small_dataset, path)
    return path


def test_parse_lags():
    np.testing.assert_allclose(parse_lags("-1:1:5", 1), [-1.0, -0.5, 0.0, 0.5, 1.0])
    np.testing.assert_allclose(parse_lags("0.5, 2", 1), [0.5, 2.0])
    grid = parse_lags("0,1", 2)
    assert grid.shape == (4, 2)
    np.testing.assert_array_equal(grid[1], [0.0, 1.0])
    for bad in ("1:2", "a,b", ""):
        with pytest.raises(ModelConfigError):
            parse_lags(bad, 1)


def test_covgrid(tmp_path, model_file):
    out = tmp_path / "cov.csv"
    assert main(["covgrid", "--model", str(model_file), "--lags", "-2:2:5", "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["h1", "j", "k", "value", "backend"]
    assert len(frame) == 20
    diag = frame[(frame.j == 1) & (frame.k == 1) & (frame.h1 == 0.0)]
    assert diag["value"].iloc[0] == pytest.approx(1.0)
    assert set(frame["backend"]) == {"closed"}
    c12 = frame[(frame.j == 1) & (frame.k == 2)].set_index("h1")["value"]
    c21 = frame[(frame.j == 2) & (frame.k == 1)].set_index("h1")["value"]
    assert c12.loc[1.0] == pytest.approx(c21.loc[-1.0], rel=1e-12)


def test_covgrid_backends_agree(tmp_path, model_file):
    values = {}
    for backend in ("closed", "fft"):
        out = tmp_path / f"{backend}.csv"
        argv = ["covgrid", "--model", str(model_file), "--lags", "-3:3:61", "--backend", backend, "--out", str(out)]
        assert main(argv) == 0
        frame = pd.read_csv(out)
        assert set(frame["backend"]) == {backend}
        values[backend] = frame["value"].to_numpy()
    assert np.max(np.abs(values["closed"] - values["fft"])) <= 1e-5


def test_missing_model_file_exits_with_code(tmp_path, capsys):
    status = main(["covgrid", "--model", str(tmp_path / "none.txt"), "--lags", "0,1", "--out", str(tmp_path / "o.csv")])
    assert status == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert err[-1].startswith("ERROR E_CONFIG: ")


def test_invalid_thread_count(model_file, tmp_path, capsys):
    assert main(["--threads", "0", "covgrid", "--model", str(model_file), "--lags", "0", "--out", str(tmp_path / "o.csv")]) == 2
    assert "E_CONFIG" in capsys.readouterr().err


def test_simulate_command(tmp_path, model_file):
    points = tmp_path / "points.csv"
    points.write_text("x1\n0.0\n0.5\n1.0\n")
    out = tmp_path / "sim.csv"
    argv = ["simulate", "--model", str(model_file), "--points", str(points), "--replicates", "2", "--seed", "4",
            "--out", str(out)]
    assert main(argv) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["replicate", "x1", "var", "value"]
    assert len(frame) == 12
    first = frame["value"].to_numpy()
    assert main(argv) == 0
    np.testing.assert_array_equal(pd.read_csv(out)["value"].to_numpy(), first)


def test_fit_command(tmp_path, model_file, data_file):
    out, est = tmp_path / "fit.txt", tmp_path / "est.txt"
    argv = ["fit", "--model", str(model_file), "--data", str(data_file), "--preset", "IM", "--backend", "closed",
            "--starts", "1", "--out", str(out), "--out-model", str(est)]
    assert main(argv) == 0
    summary = dict(line.split(" = ") for line in out.read_text().splitlines())
    assert summary["variant"] == "IM"
    assert summary["n_params"] == "6"
    assert np.isfinite(float(summary["loglik"]))
    assert read_model(est).sigma(0, 1) == 0


def test_fit_and_test_imag_row_output(tmp_path, model_file, data_file):
    row = tmp_path / "fit_row.csv"
    argv = ["fit", "--model", str(model_file), "--data", str(data_file), "--preset", "IM", "--backend", "closed",
            "--starts", "1", "--out", str(tmp_path / "fit.txt"), "--row-out", str(row)]
    assert main(argv) == 0
    frame = pd.read_csv(row)
    assert len(frame) == 1
    assert frame["variant"].iloc[0] == "IM" and frame["n_params"].iloc[0] == 6

    row = tmp_path / "lrt_row.csv"
    argv = ["test-imag", "--model", str(model_file), "--data", str(data_file), "--preset", "SMM-0", "--backend", "closed",
            "--starts", "1", "--out", str(tmp_path / "lrt.txt"), "--row-out", str(row)]
    assert main(argv) == 0
    frame = pd.read_csv(row)
    assert len(frame) == 1
    assert frame["df"].iloc[0] == 1
    assert {"lambda", "p_value", "fit0.loglik", "fit1.loglik", "fit1.im_sigma.12"} <= set(frame.columns)


def test_predict_command(tmp_path, model_file, data_file, capsys):
    points = tmp_path / "targets.csv"
    points.write_text("x1\n0.25\n0.75\n")
    out = tmp_path / "pred.csv"
    base = ["predict", "--model", str(model_file), "--data", str(data_file), "--points", str(points), "--out", str(out)]
    assert main(base + ["--var", "2"]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["x1", "var", "mean", "variance"]
    assert (frame["var"] == 2).all()
    assert (frame["variance"] >= 0).all()
    assert main(base + ["--var", "3"]) == 2
    assert "ERROR E_DATA" in capsys.readouterr().err


def test_cv_command_writes_cokriging_table(tmp_path, model_file, data_file):
    out = tmp_path / "cv.csv"
    assert main(["cv", "--model", str(model_file), "--data", str(data_file), "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["model", "variable", "5f-both", "5f-univariate", "nf-both",
                                   "nf-univariate", "other", "zero"]
    assert list(frame["variable"]) == [1, 2]
    assert set(frame["model"]) == {"SMM"}
    assert frame.drop(columns=["model", "variable"]).notna().all().all()
    assert (frame["nf-both"] > 0).all()


def test_validate_single_check(tmp_path, capsys):
    out = tmp_path / "checks.csv"
    assert main(["validate", "--check", "schoenberg_mixture_vs_matern", "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame["name"]) == ["schoenberg_mixture_vs_matern"]
    assert bool(frame["passed"].iloc[0])
    assert "schoenberg_mixture_vs_matern" in capsys.readouterr().out


def test_data_with_wrong_dimension(tmp_path, model_file, capsys):
    data = tmp_path / "d2.csv"
    data.write_text("x1,x2,var,value\n0,0,1,1.0\n")
    status = main(["fit", "--model", str(model_file), "--data", str(data), "--out", str(tmp_path / "f.txt")])
    assert status == 2
    assert capsys.readouterr().err.strip().splitlines()[-1].startswith("ERROR E_DATA: line 1:")
