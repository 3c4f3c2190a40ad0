import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special, stats

from steinpairs.limitdist import (BaseLaw, GFunction, LimitDistribution, build_cw_limit,
                                  check_conditions, classify_type, cumulants_from_moments,
                                  cw_c2, moments_from_cumulants, normalize)


def test_normal_constant(normal01):
    assert normal01.c1 == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-10)
    z = np.linspace(-8, 8, 33)
    assert np.allclose(normal01.cdf(z), stats.norm.cdf(z), atol=1e-13)
    assert normal01.second_moment() == pytest.approx(1.0, rel=1e-9)


def test_scaled_normal():
    d = normalize(GFunction.linear(0.5))
    assert d.c1 == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-10)
    assert d.second_moment() == pytest.approx(2.0, rel=1e-9)
    assert float(d.cdf(1.3)) == pytest.approx(stats.norm.cdf(1.3, scale=math.sqrt(2)), abs=1e-12)


def test_quartic_constant(quartic):
    # int exp(-x^4/12) dx = 12^{1/4} Gamma(1/4) / 2
    assert quartic.c1 == pytest.approx(2 / (12**0.25 * special.gamma(0.25)), rel=1e-9)


def test_cdf_against_quadrature(quartic):
    for z in (-2.0, 0.3, 1.7, 4.0):
        val, _ = integrate.quad(lambda t: quartic.pdf(t), -np.inf, z, epsabs=1e-13)
        assert float(quartic.cdf(z)) == pytest.approx(val, abs=1e-10)


def test_far_tail_no_underflow(normal01):
    z = 30.0
    assert float(normal01.logsf(z)) == pytest.approx(special.log_ndtr(-z), rel=1e-10)
    assert normal01.tail_ratio(np.array([30.0]))[0] == pytest.approx(
        1 / 30 * (1 - 1 / 900 + 3 / 900**2), rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 3.0), st.sampled_from([1.0, 3.0, 5.0]))
def test_cdf_monotone_and_symmetric(scale, alpha):
    d = normalize(GFunction.power(alpha, scale) if alpha > 1 else GFunction.linear(scale))
    z = np.linspace(-6, 6, 61)
    F = d.cdf(z)
    assert np.all(np.diff(F) >= -1e-15)
    assert np.allclose(F + d.cdf(-z), 1.0, atol=1e-13)


def test_serialization_round_trip(quartic):
    again = LimitDistribution.from_dict(quartic.to_dict())
    assert again.c1 == quartic.c1
    assert set(quartic.to_dict()) == {"g_kind", "params", "c1", "x_max", "quad_tol"}


def test_sampler(quartic, rng):
    x = quartic.sample(rng, 20_000)
    assert stats.kstest(x, quartic.cdf).pvalue > 1e-3


def test_bad_drift():
    with pytest.raises(ValueError):
        GFunction.power(0.5)
    with pytest.raises(ValueError):
        normalize(GFunction.linear(1.0), tol=0)


def test_conditions_pass_for_supported_drifts(normal01, quartic):
    for d in (normal01, quartic):
        assert check_conditions(d.g, d).all_passed
        assert check_conditions(d.g, d, closed_form=False).all_passed


def test_k_tau():
    assert GFunction.linear().k_tau == 2.0
    assert GFunction.power(3, 1 / 3).k_tau == 8.0


def test_cumulant_recursion_exact():
    mu = BaseLaw.rademacher().moments(6)
    kappa = cumulants_from_moments(mu)
    # cumulants of Rademacher: log cosh t = t^2/2 - t^4/12 + t^6/45
    assert kappa == [0, 1, 0, -2, 0, 16]
    assert moments_from_cumulants(kappa) == mu
    normal = cumulants_from_moments([0, 1, 0, 3, 0, 15, 0, 105])
    assert normal == [0, 1, 0, 0, 0, 0, 0, 0]


def test_classification_and_c2():
    rad = BaseLaw.rademacher()
    t = classify_type(rad)
    assert t.k == 2 and t.lambda_rho == 2
    assert cw_c2(rad, 2) == Fraction(1, 12)
    # a symmetric three-point law with E x^4 = 3 is of type 3
    three = BaseLaw.finite([-math.sqrt(3), 0, math.sqrt(3)], [1 / 6, 2 / 3, 1 / 6])
    assert classify_type(three).k == 3
    with pytest.raises(ValueError):
        classify_type(BaseLaw.normal())


def test_build_cw_limit_rademacher():
    d = build_cw_limit(BaseLaw.rademacher())
    assert d.g.alpha == 3 and d.g.scale == pytest.approx(1 / 3)


def test_law_validation():
    with pytest.raises(ValueError):
        BaseLaw.finite([0, 1], [0.5, 0.5])
    with pytest.raises(ValueError):
        BaseLaw.finite([-1, 1], [0.3, 0.3])
    assert BaseLaw.uniform().moment(4) == Fraction(9, 5)


@pytest.mark.parametrize("law", [BaseLaw.rademacher(), BaseLaw.normal(), BaseLaw.uniform()])
def test_log_mgf_and_signed_square(law, rng):
    x = law.sample(rng, 400_000)
    for t in (0.3, 1.0):
        assert float(law.log_mgf(t)) == pytest.approx(math.log(np.mean(np.exp(t * x))), abs=5e-3)
    c = 0.7
    mc = np.mean((c - x) * np.abs(c - x))
    assert float(law.signed_sq_expect(c)) == pytest.approx(mc, abs=1e-2)
