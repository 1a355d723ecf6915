import numpy as np
import pandas as pd
import pytest

from src.mvmatern.errors import DatasetError, ModelConfigError, ModelValidationError
from src.mvmatern.io.dataset_io import read_dataset, read_points, write_dataset
from src.mvmatern.io.model_io import format_model, parse_model, read_model, write_model
from src.mvmatern.io.results_io import fit_summary, fmt, model_fields, write_key_values, write_rows
from src.mvmatern.models.fit_dto import FitResult
from src.mvmatern.models.model_spec import ModelSpec, Variant
from src.mvmatern.models.process import DirectionalGeometry, ProcessParams

MODEL_TEXT = """\
# bivariate exponential / Matérn 3/4
variant = SMM
d = 1
p = 2
nu.1 = 0.5
a.1 = 8
sigma.11 = 1
nu.2 = 0.75
a.2 = 12
sigma.22 = 1
re_sigma.12 = 0.4
im_sigma.12 = 0.4
"""


def test_read_dataset(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("x1,var,value\n0.1,1,0.5\n0.2,2,-1.5\n0.3,1,2.0\n")
    dataset = read_dataset(path, d=1, p=2)
    assert dataset.n == 3
    np.testing.assert_array_equal(dataset.var, [0, 1, 0])
    assert dataset.counts() == {0: 2, 1: 1}


@pytest.mark.parametrize("body,line", [
    ("x1,var,value\n0.1,1,0.5\n0.2,x,1.0\n", 3),
    ("x1,var,value\n0.1,1,0.5\n0.2,0,1.0\n", 3),
    ("x1,var,value\n0.1,1,0.5\n0.2,1.5,1.0\n", 3),
    ("x1,var,value\n0.1,1,nan\n", 2),
    ("x1,var,value\n0.1,3,1.0\n", 2),
    ("x1,value\n0.1,1.0\n", 1),
    ("x2,var,value\n0.1,1,1.0\n", 1),
])
def test_dataset_errors_carry_line_numbers(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(DatasetError) as info:
        read_dataset(path, d=1, p=2)
    assert info.value.line == line
    assert info.value.code == "E_DATA"


def test_dataset_dimension_mismatch(tmp_path):
    path = tmp_path / "d2.csv"
    path.write_text("x1,x2,var,value\n0.1,0.2,1,0.5\n")
    with pytest.raises(DatasetError):
        read_dataset(path, d=1)
    assert read_dataset(path, d=2).d == 2


def test_missing_dataset_file(tmp_path):
    with pytest.raises(DatasetError):
        read_dataset(tmp_path / "absent.csv")


def test_write_then_read_dataset(tmp_path, small_dataset):
    path = tmp_path / "out.csv"
    write_dataset(small_dataset, path)
    back = read_dataset(path, d=1, p=2)
    np.testing.assert_array_equal(back.value, small_dataset.value)
    np.testing.assert_array_equal(back.var, small_dataset.var)
    assert path.read_text().splitlines()[0] == "x1,var,value"


def test_read_points(tmp_path):
    path = tmp_path / "points.csv"
    path.write_text("x1,x2,label\n0,1,a\n2,3,b\n")
    np.testing.assert_array_equal(read_points(path, d=2), [[0.0, 1.0], [2.0, 3.0]])
    with pytest.raises(DatasetError):
        read_points(path, d=1)


def test_parse_model():
    model = parse_model(MODEL_TEXT)
    assert model.variant == Variant.SMM
    assert model.p == 2 and model.dim == 1
    assert model.sigma(0, 1) == 0.4 + 0.4j
    assert model.processes[1].nu == 0.75
    assert model.processes[0].nugget == 0.0


def test_model_file_round_trip(tmp_path):
    pp = ProcessParams(nu=0.1 + 0.2, a=1.0 / 3.0, sigma=2.5, nugget=1e-3)
    model = ModelSpec.build("SMM", [pp, pp], {(0, 1): 0.3 - 0.7j}, dim=2,
                            geometry=DirectionalGeometry.from_angles(0.3, 1.1))
    path = tmp_path / "model.txt"
    write_model(model, path)
    assert read_model(path) == model
    assert format_model(read_model(path)) == format_model(model)


@pytest.mark.parametrize("text,key", [
    (MODEL_TEXT.replace("variant = SMM\n", ""), "variant"),
    (MODEL_TEXT.replace("a.2 = 12\n", ""), "a.2"),
    (MODEL_TEXT + "colour = red\n", "colour"),
    (MODEL_TEXT + "nu.3 = 1.0\n", "nu.3"),
    (MODEL_TEXT + "re_sigma.21 = 0.1\n", "re_sigma.21"),
    (MODEL_TEXT.replace("nu.1 = 0.5", "nu.1 = half"), "nu.1"),
    (MODEL_TEXT.replace("variant = SMM", "variant = XYZ"), "variant"),
])
def test_model_config_errors(text, key):
    with pytest.raises(ModelConfigError) as info:
        parse_model(text)
    assert info.value.key == key
    assert info.value.code == "E_CONFIG"


def test_lenient_parsing_skips_unknown_keys():
    assert parse_model(MODEL_TEXT + "colour = red\n", strict=False).p == 2


def test_invalid_model_file_reports_violations():
    with pytest.raises(ModelValidationError):
        parse_model(MODEL_TEXT.replace("variant = SMM", "variant = IM"))
    with pytest.raises(ModelValidationError):
        parse_model(MODEL_TEXT.replace("re_sigma.12 = 0.4", "re_sigma.12 = 1.4"))


def test_fmt_and_key_values(tmp_path):
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(True) == "true"
    assert fmt(3) == "3"
    path = tmp_path / "kv.txt"
    write_key_values({"loglik": -1.5, "converged": False}, path)
    assert path.read_text() == "loglik = -1.5\nconverged = false\n"


def test_write_rows(tmp_path):
    path = tmp_path / "rows.csv"
    frame = write_rows([{"b": 1, "a": 0.25}], path, columns=["a", "b"])
    assert list(frame.columns) == ["a", "b"]
    assert list(pd.read_csv(path).columns) == ["a", "b"]


def test_fit_summary_flattens_estimates(smm_pair):
    result = FitResult(estimates=smm_pair, loglik=-3.0, aic=22.0, n_params=8, converged=True,
                       iterations=12, backend_used="fft")
    summary = fit_summary(result, "fit1.")
    assert summary["fit1.im_sigma.12"] == pytest.approx(0.4)
    assert summary["fit1.nu.2"] == 0.75
    assert np.isnan(summary["fit1.condition_number"])


def test_planar_model_fields_carry_both_axes():
    pp = ProcessParams(nu=0.5, a=1.0, sigma=1.0)
    model = ModelSpec.build("SMM", [pp, pp], {(0, 1): 0.2 + 0.3j}, dim=2,
                            geometry=DirectionalGeometry.from_angles(0.3, 1.2))
    fields = model_fields(model)
    assert fields["axis_angle_im"] == pytest.approx(0.3)
    assert fields["axis_angle_phi"] == pytest.approx(1.2)
    assert "axis_angle_im" not in model_fields(model.model_copy(update={"dim": 1, "geometry": DirectionalGeometry.default(1)}))
