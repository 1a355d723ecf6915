import math

import numpy as np
import pytest

from src.mvmatern.errors import DatasetError, FitError
from src.mvmatern.models.dataset import Dataset
from src.mvmatern.models.fit_dto import FitConfig, preset
from src.mvmatern.models.model_spec import ModelSpec
from src.mvmatern.models.process import ProcessParams
from src.mvmatern.stats.inference import aic, check_dataset_against_model, fit, loglik, loglik_detail, lrt_imag
from src.mvmatern.stats.params import adapt_to_variant


def test_single_record_likelihood():
    model = ModelSpec.build("IM", [ProcessParams(nu=0.5, a=1.0, sigma=2.0)])
    dataset = Dataset(coords=[0.3], var=[0], value=[1.0], p=1)
    expected = -0.5 * (math.log(2 * math.pi) + math.log(2.0) + 0.5)
    assert loglik(model, dataset, mean_handling="zero") == pytest.approx(expected, rel=1e-12)


def test_independent_variables_add_up():
    pa, pb = ProcessParams(nu=0.5, a=1.0, sigma=1.0), ProcessParams(nu=1.5, a=2.0, sigma=0.5)
    joint = ModelSpec.build("IM", [pa, pb])
    dataset = Dataset(coords=[0.0, 0.4, 0.1, 0.9], var=[0, 0, 1, 1], value=[0.2, -0.1, 0.5, 0.3], p=2)
    first = loglik(ModelSpec.build("IM", [pa]), Dataset(coords=[0.0, 0.4], var=[0, 0], value=[0.2, -0.1], p=1), "zero")
    second = loglik(ModelSpec.build("IM", [pb]), Dataset(coords=[0.1, 0.9], var=[0, 0], value=[0.5, 0.3], p=1), "zero")
    assert loglik(joint, dataset, "zero") == pytest.approx(first + second, rel=1e-12)


def test_invalid_model_scores_minus_infinity(small_dataset):
    pp = ProcessParams(nu=0.5, a=1.0, sigma=1.0)
    model = ModelSpec.build("SMM", [pp, pp], {(0, 1): 1.5})
    value, violations = loglik_detail(model, small_dataset)
    assert value == -np.inf
    assert violations
    assert loglik(model, small_dataset) == -np.inf


def test_aic():
    assert aic(-10.0, 3) == 26.0


def test_dataset_checks(smm_pair):
    two_d = Dataset(coords=[[0.0, 0.0]], var=[0], value=[1.0], p=2)
    with pytest.raises(DatasetError):
        check_dataset_against_model(smm_pair, two_d)
    duplicated = Dataset(coords=[0.5, 0.5], var=[1, 1], value=[1.0, 2.0], p=2)
    with pytest.raises(DatasetError) as info:
        check_dataset_against_model(smm_pair, duplicated)
    assert info.value.line == 3
    noisy = smm_pair.model_copy(update={"processes": tuple(pp.model_copy(update={"nugget": 0.1})
                                                            for pp in smm_pair.processes)})
    check_dataset_against_model(noisy, duplicated)


def test_fit_independent_model(small_dataset, smm_pair):
    config = preset("IM", backend="closed", n_starts=2, seed=1)
    initial = adapt_to_variant(smm_pair, config)
    result = fit(initial, small_dataset, config, max_workers=1)
    assert result.n_params == 6
    assert result.aic == pytest.approx(2 * 6 - 2 * result.loglik)
    assert result.loglik >= loglik(initial, small_dataset) - 1e-8
    assert len(result.starts) == 2
    assert result.backend_used == "closed"
    assert result.estimates.sigma(0, 1) == 0


def test_fit_is_reproducible(small_dataset, symmetric_pair):
    initial = adapt_to_variant(symmetric_pair, preset("SCF", backend="closed"))
    config = preset("SCF", backend="closed", n_starts=2, seed=4)
    first = fit(initial, small_dataset, config, max_workers=1)
    second = fit(initial, small_dataset, config, max_workers=2)
    assert first.loglik == second.loglik


def test_lrt_needs_two_variables():
    pp = ProcessParams(nu=0.5, a=1.0, sigma=1.0)
    model = ModelSpec.build("SMM", [pp, pp, pp])
    dataset = Dataset(coords=[0.0, 0.5, 1.0], var=[0, 1, 2], value=[0.1, 0.2, 0.3], p=3)
    with pytest.raises(FitError):
        lrt_imag(dataset, model)


@pytest.mark.slow
def test_lrt_on_small_dataset(small_dataset, smm_pair):
    result = lrt_imag(small_dataset, smm_pair, FitConfig(n_starts=1, mean_handling="zero"), max_workers=1)
    assert result.lambda_ >= 0.0
    assert result.df == 1
    assert 0.0 <= result.p_value <= 1.0
    assert result.fit0.estimates.sigma(0, 1).imag == 0.0
    assert result.fit1.loglik >= result.fit0.loglik - 1e-6
