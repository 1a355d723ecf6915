import numpy as np
import pandas as pd
import pytest

from src.mvmatern.errors import ConvergenceError, FitError
from src.mvmatern.models.request_dto import SimStudyConfig
from src.mvmatern.tasks import sim_study, validation
from src.mvmatern.tasks.benchmark import run_benchmark
from src.mvmatern.tasks.validation import Check, run_validation


def test_benchmark_accuracy():
    frame = run_benchmark()
    assert list(frame.columns) == ["method", "n_points", "wall_time_s", "mse"]
    assert list(frame["method"]) == ["direct", "bessel_k", "fft", "fft", "fft", "whittaker", "quadrature"]
    mse = {(m, n): v for m, n, v in zip(frame["method"], frame["n_points"], frame["mse"])}
    assert mse[("direct", 100)] == 0.0
    assert mse[("bessel_k", 100)] <= 1e-20
    assert mse[("fft", 2 ** 10)] <= 1e-6
    assert mse[("fft", 2 ** 12)] <= 1e-9
    assert mse[("fft", 2 ** 14)] <= 1e-10
    assert mse[("whittaker", 100)] <= 1e-10
    assert mse[("quadrature", 100)] <= 1e-12
    assert (frame["wall_time_s"] >= 0).all()


def test_selected_checks_pass():
    frame = run_validation(["schoenberg_mixture_vs_matern", "matern_density_mass", "fft_vs_closed_d1"])
    assert list(frame["name"]) == ["schoenberg_mixture_vs_matern", "matern_density_mass", "fft_vs_closed_d1"]
    assert frame["passed"].all()
    assert (frame["error"] <= frame["tolerance"]).all()


@pytest.mark.parametrize("name,tolerance", [
    ("hilbert_numeric_vs_imag_closed", 1e-4),
    ("fft_axis_d2_struve_law", 1e-2),
    ("tangent_process_fbm_gap", 2e-2),
])
def test_identity_checks_pass_at_their_tolerance(name, tolerance):
    frame = run_validation([name])
    assert frame["tolerance"].iloc[0] == tolerance
    assert frame["passed"].iloc[0], frame.to_string()


def test_raising_check_is_reported(monkeypatch):
    def broken():
        raise ConvergenceError("series did not settle")

    monkeypatch.setattr(validation, "CHECKS", [Check("broken", 1e-3, broken), Check("fine", 1e-3, lambda: 0.0)])
    frame = run_validation()
    assert list(frame["passed"]) == [False, True]
    assert np.isinf(frame["error"].iloc[0])


@pytest.mark.slow
def test_full_validation_suite():
    frame = run_validation()
    assert len(frame) == len(validation.CHECKS)
    assert frame["passed"].all(), frame.to_string()


def test_truth_models():
    d1 = sim_study.truth_model(SimStudyConfig(design="lrt-d1", truth="imag"))
    assert d1.dim == 1
    assert d1.sigma(0, 1) == 0.4j
    assert [pp.nu for pp in d1.processes] == [0.5, 0.75]
    d2 = sim_study.truth_model(SimStudyConfig(design="lrt-d2", truth="complex", axis="diag"))
    assert d2.dim == 2
    np.testing.assert_allclose(d2.geometry.theta_star_im, [np.sqrt(0.5), np.sqrt(0.5)])


def test_fit_config_by_design():
    assert sim_study.fit_config(SimStudyConfig(design="est-d1", estimate_axes=True)).estimate_axes is False
    d2 = sim_study.fit_config(SimStudyConfig(design="lrt-d2", estimate_axes=True))
    assert d2.estimate_axes and d2.backend == "auto" and d2.mean_handling == "zero"


def test_failed_replicates_keep_a_row(monkeypatch):
    def failing(*args, **kwargs):
        raise FitError("every start failed to reach a finite likelihood")

    monkeypatch.setattr(sim_study, "lrt_imag", failing)
    frame, summary = sim_study.run_sim_study(SimStudyConfig(design="lrt-d1", reps=3, n=10, seed=2))
    assert list(frame["status"]) == ["failed"] * 3
    assert frame["error"].iloc[0].startswith("E_FIT: ")
    assert summary == {"design": "lrt-d1", "truth": "real", "reps": 3, "failed": 3}


def test_summarize_rates_and_means():
    cfg = SimStudyConfig(design="pred-d1", level=0.05)
    frame = pd.DataFrame({
        "status": ["ok", "ok", "ok", "failed"],
        "p_value": [0.01, 0.2, 0.04, np.nan],
        "real.re_sigma12": [0.4, 0.5, 0.3, np.nan],
        "complex.re_sigma12": [0.4, 0.4, 0.4, np.nan],
        "complex.im_sigma12": [0.1, 0.3, 0.2, np.nan],
        "real.rmse.1": [1.0, 2.0, 3.0, np.nan],
    })
    summary = sim_study.summarize(cfg, frame)
    assert summary["failed"] == 1
    assert summary["rejection_rate"] == pytest.approx(2.0 / 3.0)
    assert summary["complex.im_sigma12.mean"] == pytest.approx(0.2)
    assert summary["complex.re_sigma12.sd"] == pytest.approx(0.0, abs=1e-12)
    assert summary["real.rmse.1.mean"] == pytest.approx(2.0)
    assert "ks_uniform_p_value" in summary


@pytest.mark.slow
def test_small_lrt_design_runs():
    cfg = SimStudyConfig(design="lrt-d1", reps=2, n=40, seed=1, truth="imag")
    frame, summary = sim_study.run_sim_study(cfg)
    assert len(frame) == 2
    ok = frame[frame["status"] == "ok"]
    assert (ok["lambda"] >= 0).all()
    assert summary["reps"] == 2


@pytest.mark.slow
def test_lrt_size_at_reduced_scale():
    cfg = SimStudyConfig(design="lrt-d1", reps=100, n=100, seed=0, truth="real", threads=4)
    _, summary = sim_study.run_sim_study(cfg)
    assert 0.0 <= summary["rejection_rate"] <= 0.12
