import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from src.mvmatern.errors import PoleError, SpecialFunctionDomainError, SpecialFunctionOverflowError
from src.mvmatern.numerics import specfun

mpmath.mp.dps = 40


def test_gamma_known_values():
    assert specfun.gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)
    assert specfun.gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert specfun.gamma_fn(5.0) == pytest.approx(24.0, rel=1e-14)


def test_gamma_pole_and_overflow():
    with pytest.raises(PoleError):
        specfun.gamma_fn(-2.0)
    with pytest.raises(PoleError):
        specfun.gamma_fn(0.0)
    with pytest.raises(SpecialFunctionOverflowError):
        specfun.gamma_fn(200.0)


def test_bessel_k_half_integer_forms():
    k_half = math.sqrt(math.pi / 2.0) * math.exp(-1.0)
    assert specfun.bessel_k(0.5, 1.0) == pytest.approx(k_half, rel=1e-14)
    k_half_2 = math.sqrt(math.pi / 4.0) * math.exp(-2.0)
    assert specfun.bessel_k(1.5, 2.0) == pytest.approx(k_half_2 * 1.5, rel=1e-13)


@pytest.mark.parametrize("nu,z", [(0.75, 0.3), (0.0, 2.0), (3.3, 1e-3), (9.5, 40.0)])
def test_bessel_k_against_mpmath(nu, z):
    assert specfun.bessel_k(nu, z) == pytest.approx(float(mpmath.besselk(nu, z)), rel=1e-10)


def test_bessel_k_domain():
    with pytest.raises(SpecialFunctionDomainError):
        specfun.bessel_k(0.5, 0.0)
    with pytest.raises(SpecialFunctionDomainError):
        specfun.bessel_k(0.5, np.array([1.0, -1.0]))


def test_bessel_i_series_start():
    assert specfun.bessel_i(0.0, 0.0) == 1.0
    assert specfun.bessel_i(0.75, 0.0) == 0.0
    assert specfun.bessel_i(0.75, 2.0) == pytest.approx(float(mpmath.besseli(0.75, 2.0)), rel=1e-12)


@given(st.floats(min_value=0.01, max_value=30.0))
@hyp_settings(max_examples=40, deadline=None)
def test_bessel_i_half_order_is_elementary(z):
    expected = math.sqrt(2.0 / (math.pi * z)) * math.sinh(z)
    assert specfun.bessel_i(0.5, z) == pytest.approx(expected, rel=1e-10)


def test_struve_l_series():
    assert specfun.struve_l(0.75, 0.0) == 0.0
    assert specfun.struve_l(-0.75, 1.0) == pytest.approx(float(mpmath.struvel(-0.75, 1.0)), rel=1e-12)
    assert specfun.struve_l(-0.5, 2.0) == pytest.approx(float(mpmath.struvel(-0.5, 2.0)), rel=1e-12)


def test_struve_l_pole():
    with pytest.raises(PoleError):
        specfun.struve_l(-1.5, 1.0)


@pytest.mark.parametrize("nu,z", [(0.7, 1.5), (0.3, 15.0), (0.7, 30.0), (1.3, 45.0)])
def test_struve_bessel_difference_matches_high_precision(nu, z):
    expected = float(mpmath.struvel(-nu, z) - mpmath.besseli(nu, z))
    assert specfun.struve_bessel_difference(nu, z) == pytest.approx(expected, rel=1e-7)


def test_whittaker_reduces_to_bessel_k():
    # W_{0,1/2}(2) = sqrt(2/pi) K_{1/2}(1) = e^{-1}
    assert specfun.whittaker_w(0.0, 0.5, 2.0) == pytest.approx(math.exp(-1.0), rel=1e-10)


@pytest.mark.parametrize("nu", [0.3, 0.5, 1.2])
@pytest.mark.parametrize("z", [0.5, 2.0, 10.0])
def test_whittaker_bessel_identity(nu, z):
    lhs = specfun.whittaker_w(0.0, nu, 2.0 * z)
    rhs = math.sqrt(2.0 * z / math.pi) * float(mpmath.besselk(nu, z))
    assert lhs == pytest.approx(rhs, rel=1e-8)


def test_whittaker_against_mpmath():
    assert specfun.whittaker_w(0.25, 0.75, 3.0) == pytest.approx(float(mpmath.whitw(0.25, 0.75, 3.0)), rel=1e-9)


def test_whittaker_quadrature_path_agrees():
    fast = specfun.whittaker_w(0.1, 0.9, 1.7)
    slow = specfun.whittaker_w(0.1, 0.9, 1.7, method="quadrature")
    assert fast == pytest.approx(slow, rel=1e-8)


@given(st.floats(-1.0, 0.5), st.floats(0.05, 2.5), st.floats(0.05, 20.0))
@hyp_settings(max_examples=30, deadline=None)
def test_whittaker_even_in_mu(kappa, mu, z):
    assert specfun.whittaker_w(kappa, mu, z) == pytest.approx(specfun.whittaker_w(kappa, -mu, z), rel=1e-9)


def test_whittaker_large_argument_limit():
    kappa, mu, z = 0.25, 0.75, 80.0
    ratio = specfun.whittaker_w(kappa, mu, z) / (math.exp(-0.5 * z) * z ** kappa)
    assert ratio == pytest.approx(1.0, abs=0.02)


def test_log_whittaker_matches_log():
    assert specfun.log_whittaker_w(-0.2, 1.1, 4.0) == pytest.approx(math.log(specfun.whittaker_w(-0.2, 1.1, 4.0)), rel=1e-12)


def test_whittaker_domain():
    with pytest.raises(SpecialFunctionDomainError):
        specfun.whittaker_w(0.0, 0.5, 0.0)


def test_exponential_integrals():
    assert specfun.expint_e1(1.0) == pytest.approx(0.2193839343955203, rel=1e-12)
    assert specfun.expint_ei(-1.0) == pytest.approx(-0.2193839343955203, rel=1e-12)
    assert specfun.expint_e1(40.0) == pytest.approx(math.exp(-40.0) / 40.0, rel=0.03)
    with pytest.raises(SpecialFunctionDomainError):
        specfun.expint_e1(0.0)
    with pytest.raises(SpecialFunctionDomainError):
        specfun.expint_ei(0.0)


@pytest.mark.parametrize("x", [0.5, 20.0, 60.0, 300.0])
def test_scaled_exponential_integrals(x):
    assert specfun.scaled_e1(x) == pytest.approx(float(mpmath.exp(x) * mpmath.e1(x)), rel=1e-10)
    assert specfun.scaled_ei(x) == pytest.approx(float(mpmath.exp(-x) * mpmath.ei(x)), rel=1e-10)


def test_dawson():
    assert specfun.dawson(0.0) == 0.0
    assert specfun.dawson(-1.3) == pytest.approx(-specfun.dawson(1.3), rel=1e-15)
    expected = float(mpmath.exp(-1) * mpmath.quad(lambda t: mpmath.exp(t * t), [0, 1]))
    assert specfun.dawson(1.0) == pytest.approx(expected, rel=1e-12)


def test_vectorized_inputs_keep_shape():
    z = np.linspace(0.1, 3.0, 7)
    assert specfun.bessel_k(1.2, z).shape == (7,)
    assert specfun.struve_l(-0.3, z).shape == (7,)
    assert isinstance(specfun.bessel_k(1.2, 1.0), float)
