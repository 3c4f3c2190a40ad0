import math

import numpy as np
import pytest

from steinpairs.limitdist import GFunction, normalize
from steinpairs.paircore import (CondMoments, PairModel, _terms, empirical_error_profile,
                                 estimate_bound_terms, exchangeability_check, rate_summary)
from steinpairs.quadform import QuadFormModel, tridiagonal


class Shifted(PairModel):
    """W ~ N(0,1) with W' = W + shift."""
    lam = 0.5
    g = GFunction.linear(1.0)

    def __init__(self, shift):
        self.shift = shift

    def sample_states(self, rng, size):
        return rng.standard_normal(size)

    def statistic(self, s):
        return s

    def sample_coupled(self, s, rng):
        return s + self.shift

    def cond_moments(self, s, rng):
        d = -self.shift * np.ones_like(s)
        return CondMoments(d1=d, d2=d * d, dds=d * np.abs(d))


def test_identity_coupling():
    b = estimate_bound_terms(Shifted(0.0), 1600, seed=1)
    assert (b.t1, b.t2) == (1.0, 0.0)
    # R = E(Delta|X)/lambda - g(W) = -W
    assert b.t3 == pytest.approx(math.sqrt(2 / math.pi), rel=0.1)
    assert b.certificate == b.t1 + b.t2 + b.t3


def test_unit_shift():
    b = estimate_bound_terms(Shifted(1.0), 1600, seed=1)
    assert b.t1 == pytest.approx(0.0)  # 1 - 1/(2 * 0.5)
    assert b.t2 == pytest.approx(2.0)  # |E Delta Delta*| / lambda
    assert b.mean_dds == -1.0


def test_minimum_samples():
    with pytest.raises(ValueError):
        estimate_bound_terms(Shifted(0.0), 50, seed=0)


def test_jackknife_removes_inner_noise(rng):
    # true E(Delta Delta* | X) = 0, estimated from m noisy draws
    B, m = 20_000, 50
    draws = rng.standard_normal((B, m))
    dds = draws.mean(axis=1)
    var = draws.var(axis=1, ddof=1) / m
    zero = np.zeros(B)
    naive = _terms(1.0, np.full(B, 2.0), dds, zero, zero, zero)[1]
    fixed = _terms(1.0, np.full(B, 2.0), dds, zero, zero, var)[1]
    assert naive == pytest.approx(1 / math.sqrt(m), rel=0.05)
    assert fixed < 0.25 * naive


def test_exchangeability():
    assert not exchangeability_check(Shifted(1.0), 16_000, seed=2).passed
    model = QuadFormModel(tridiagonal(20))
    rep = exchangeability_check(model, 32_000, seed=2)
    assert rep.passed, rep


def test_error_profile_normal(rng, normal01):
    w = rng.standard_normal(10_000)
    prof = empirical_error_profile(w, normal01, np.linspace(-4, 4, 81))
    assert prof.raw_err.max() < prof.dkw_band
    assert np.allclose(prof.weight2_err, prof.raw_err * (1 + np.abs(prof.z_grid)) ** 2)


def test_rate_summary_quadform():
    normal = normalize(GFunction.linear(1.0))
    seen = []
    summary = rate_summary(lambda n: QuadFormModel(tridiagonal(n)), [16, 32, 64],
                           lambda n: normal, 3200, np.linspace(-4, 4, 81), seed=3,
                           on_size=lambda run, model, dist: seen.append(run.size))
    assert seen == [16, 32, 64]
    assert summary.slope("certificate", use_all=True) == pytest.approx(-0.5, abs=0.1)
    assert [r.bound.t3 for r in summary.runs] == [0.0] * 3
    with pytest.raises(ValueError):
        rate_summary(None, [1, 2], None, 100, [0.0], 0)
