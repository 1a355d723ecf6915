import numpy as np
import pytest

from src.mvmatern.models.fit_dto import FitConfig, preset
from src.mvmatern.models.model_spec import ModelSpec, Variant
from src.mvmatern.models.process import DirectionalGeometry, ProcessParams
from src.mvmatern.stats.params import ParamVector, adapt_to_variant


def test_layout_for_complex_pair(smm_pair):
    pv = ParamVector(smm_pair, FitConfig())
    assert pv.names == ["log_nu.1", "log_a.1", "log_nu.2", "log_a.2", "log_sigma.11", "log_sigma.22", "u.12", "v.12"]
    assert pv.n_params == 8


def test_real_only_and_nugget_layouts(smm_pair):
    pv = ParamVector(smm_pair, FitConfig(estimate_im=False, estimate_nugget=True))
    assert "v.12" not in pv.names
    assert pv.names[-3:] == ["log_nugget.1", "log_nugget.2", "u.12"]


def test_decode_recovers_encoded_model(smm_pair):
    pv = ParamVector(smm_pair, FitConfig())
    model = pv.decode(pv.encode(smm_pair))
    assert model.sigma(0, 1) == pytest.approx(0.4 + 0.4j, rel=1e-12)
    for got, want in zip(model.processes, smm_pair.processes):
        assert got.nu == pytest.approx(want.nu, rel=1e-12)
        assert got.a == pytest.approx(want.a, rel=1e-12)


def test_every_decoded_pair_is_valid(smm_pair):
    pv = ParamVector(smm_pair, FitConfig())
    rng = np.random.default_rng(0)
    lo, hi = np.array(pv.bounds()).T
    for _ in range(50):
        model = pv.decode(rng.uniform(lo, hi))
        sigma = model.sigma_matrix()
        assert abs(sigma[0, 1]) ** 2 < sigma[0, 0].real * sigma[1, 1].real


def test_shared_shape_for_scf():
    pp = ProcessParams(nu=0.9, a=1.1, sigma=1.0)
    model = ModelSpec.build("SCF", [pp, pp], {(0, 1): 0.3})
    pv = ParamVector(model, preset("SCF"))
    assert pv.names[:2] == ["log_nu.shared", "log_a.shared"]
    decoded = pv.decode(pv.encode(model))
    assert decoded.processes[0].nu == decoded.processes[1].nu


def test_im_has_no_cross_parameters(smm_pair):
    im = adapt_to_variant(smm_pair, preset("IM"))
    pv = ParamVector(im, preset("IM"))
    assert not any(name.startswith(("u.", "v.", "rho")) for name in pv.names)
    assert pv.decode(pv.encode(im)).sigma(0, 1) == 0


def test_three_processes_use_box_bounds():
    pp = ProcessParams(nu=0.7, a=1.0, sigma=2.0)
    model = ModelSpec.build("SMM", [pp, pp, pp], {(0, 1): 0.4 + 0.2j, (1, 2): -0.6})
    pv = ParamVector(model, FitConfig())
    assert "rho_im.23" in pv.names
    decoded = pv.decode(pv.encode(model))
    assert decoded.sigma(1, 2) == pytest.approx(-0.6, rel=1e-12)
    assert decoded.sigma(0, 1) == pytest.approx(0.4 + 0.2j, rel=1e-12)


def _planar_pair(angle_im, angle_phi, nu2=0.75):
    return ModelSpec.build("SMM", [ProcessParams(nu=0.5, a=8.0, sigma=1.0), ProcessParams(nu=nu2, a=12.0, sigma=1.0)],
                           {(0, 1): 0.4 + 0.4j}, dim=2, geometry=DirectionalGeometry.from_angles(angle_im, angle_phi))


def test_axis_angles_only_in_two_dimensions(smm_pair):
    names = ParamVector(smm_pair, FitConfig(estimate_axes=True)).names
    assert not [name for name in names if name.startswith("axis_angle")]
    model = _planar_pair(0.5, 0.5)
    real = ParamVector(model, preset("SMM-R"))
    assert real.names[-1] == "axis_angle"
    assert real.encode(model)[-1] == pytest.approx(0.5)


def test_complex_preset_frees_both_axes():
    model = _planar_pair(0.3, 1.2)
    complex_pv = ParamVector(model, preset("SMM-C"))
    real_pv = ParamVector(model, preset("SMM-R"))
    assert complex_pv.n_params == real_pv.n_params + 2
    assert complex_pv.names[-2:] == ["axis_angle_im", "axis_angle_phi"]
    decoded = complex_pv.decode(complex_pv.encode(model))
    np.testing.assert_allclose(decoded.geometry.theta_star_im, model.geometry.theta_star_im, atol=1e-12)
    np.testing.assert_allclose(decoded.geometry.theta_star_phi, model.geometry.theta_star_phi, atol=1e-12)
    assert decoded.sigma(0, 1) == pytest.approx(0.4 + 0.4j, rel=1e-9)


def test_real_preset_keeps_imaginary_axis():
    model = _planar_pair(0.3, 1.2)
    pv = ParamVector(model, preset("SMM-R"))
    theta = pv.encode(model)
    theta[-1] = -0.7
    decoded = pv.decode(theta)
    np.testing.assert_allclose(decoded.geometry.theta_star_im, model.geometry.theta_star_im, atol=1e-12)
    np.testing.assert_allclose(decoded.geometry.theta_star_phi, [np.cos(-0.7), np.sin(-0.7)], atol=1e-12)


def test_fixed_imaginary_axis_adds_one_parameter():
    model = _planar_pair(0.3, 1.2)
    fixed = ParamVector(model, preset("SMM-C", fix_im_axis=True))
    assert fixed.n_params == ParamVector(model, preset("SMM-R")).n_params + 1
    assert "axis_angle_im" not in fixed.names


def test_scale_bounds_follow_data_extent(smm_pair):
    pv = ParamVector(smm_pair, FitConfig(), length_scale=10.0)
    lo, hi = pv.bounds()[pv.names.index("log_a.1")]
    assert np.exp(lo) == pytest.approx(0.01)
    assert np.exp(hi) == pytest.approx(100.0)


def test_decode_checks_length(smm_pair):
    pv = ParamVector(smm_pair, FitConfig())
    with pytest.raises(ValueError):
        pv.decode(np.zeros(3))


def test_adapt_to_variant(smm_pair):
    real = adapt_to_variant(smm_pair, preset("SMM-0"))
    assert real.sigma(0, 1) == pytest.approx(0.4)
    scf = adapt_to_variant(smm_pair, preset("SCF"))
    assert scf.variant == Variant.SCF
    assert scf.processes[0].nu == scf.processes[1].nu == pytest.approx(0.625)
    assert scf.processes[0].a == pytest.approx(np.sqrt(96.0))


def test_unknown_preset():
    with pytest.raises(KeyError):
        preset("SMM-X")
