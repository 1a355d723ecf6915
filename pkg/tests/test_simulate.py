import numpy as np
import pytest

from src.mvmatern.errors import ModelValidationError
from src.mvmatern.models.model_spec import ModelSpec
from src.mvmatern.models.process import ProcessParams
from src.mvmatern.models.request_dto import SimRequest
from src.mvmatern.numerics.covariance import cov_matrix
from src.mvmatern.stats.simulate import as_dataset, simulate, stacked_dataset

POINTS = np.array([0.0, 0.1, 0.35, 0.6, 1.0])


def test_output_shape_and_seed_determinism(symmetric_pair):
    req = SimRequest.on_points(symmetric_pair, POINTS, n_replicates=4, seed=12)
    first = simulate(req)
    assert first.shape == (4, 10)
    np.testing.assert_array_equal(first, simulate(req))
    other = simulate(req.model_copy(update={"seed": 13}))
    assert not np.allclose(first, other)


def test_replicates_do_not_depend_on_thread_count(symmetric_pair):
    req = SimRequest.on_points(symmetric_pair, POINTS, n_replicates=6, seed=5)
    np.testing.assert_array_equal(simulate(req, max_workers=1), simulate(req, max_workers=3))


def test_replicate_prefix_is_stable(symmetric_pair):
    few = simulate(SimRequest.on_points(symmetric_pair, POINTS, n_replicates=2, seed=9))
    many = simulate(SimRequest.on_points(symmetric_pair, POINTS, n_replicates=5, seed=9))
    assert few.shape == (2, 10)
    np.testing.assert_array_equal(few, many[:2])


def test_exact_empirical_covariance(smm_pair):
    reps = 20000
    draws = simulate(SimRequest.on_points(smm_pair, POINTS, n_replicates=reps, seed=1))
    gamma = cov_matrix(smm_pair, stacked_dataset(smm_pair, POINTS[:, None]))
    empirical = draws.T @ draws / reps
    assert np.linalg.norm(empirical - gamma) <= 5.0 * np.linalg.norm(gamma) / np.sqrt(reps)


def test_spectral_method_moments(symmetric_pair):
    req = SimRequest.on_points(symmetric_pair, [0.0], n_replicates=2000, seed=3, method="spectral", n_frequencies=512)
    draws = simulate(req)
    assert draws.shape == (2000, 2)
    empirical = draws.T @ draws / draws.shape[0]
    assert empirical[0, 0] == pytest.approx(1.0, rel=0.15)
    assert empirical[1, 1] == pytest.approx(1.0, rel=0.15)
    assert empirical[0, 1] == pytest.approx(0.3, abs=0.1)


def test_nugget_is_added_only_when_requested():
    pp = ProcessParams(nu=0.5, a=1.0, sigma=1.0, nugget=0.5)
    model = ModelSpec.build("SMM", [pp, pp], {(0, 1): 0.2}, dim=1)
    noisy = simulate(SimRequest.on_points(model, POINTS, n_replicates=4000, seed=2))
    latent = simulate(SimRequest.on_points(model, POINTS, n_replicates=4000, seed=2, include_nugget=False))
    assert np.var(noisy[:, 0]) == pytest.approx(1.5, rel=0.1)
    assert np.var(latent[:, 0]) == pytest.approx(1.0, rel=0.1)


def test_invalid_model_is_refused():
    pp = ProcessParams(nu=0.5, a=1.0, sigma=1.0)
    model = ModelSpec.build("SMM", [pp, pp], {(0, 1): 1.5}, dim=1)
    with pytest.raises(ModelValidationError):
        simulate(SimRequest.on_points(model, POINTS))
    with pytest.raises(ModelValidationError):
        simulate(SimRequest.on_points(model, POINTS, method="spectral"))


def test_two_dimensional_points():
    pp = ProcessParams(nu=0.75, a=5.0, sigma=1.0)
    model = ModelSpec.build("SMM", [pp, pp], {(0, 1): 0.4j}, dim=2)
    points = np.random.default_rng(0).uniform(size=(6, 2))
    draws = simulate(SimRequest.on_points(model, points, n_replicates=2, seed=4))
    assert draws.shape == (2, 12)
    assert np.all(np.isfinite(draws))


def test_as_dataset_layout(symmetric_pair):
    row = np.arange(10, dtype=float)
    dataset = as_dataset(symmetric_pair, POINTS, row)
    assert dataset.n == 10
    np.testing.assert_array_equal(dataset.var, [0] * 5 + [1] * 5)
    np.testing.assert_array_equal(dataset.coords[:, 0], np.concatenate([POINTS, POINTS]))
    assert dataset.value[7] == 7.0
