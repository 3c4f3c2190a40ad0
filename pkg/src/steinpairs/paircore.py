"""Exchangeable-pair models and Monte Carlo estimates of the bound terms.

For a pair (W, W') with Delta = W - W' and E(Delta | X) = lambda (g(W) + R),
the non-uniform bound is controlled by

    t1 = sqrt(E (1 - E(Delta^2 | X) / (2 lambda))^2)
    t2 = (1/lambda) sqrt(E E(Delta Delta* | X)^2)
    t3 = E |R|

with Delta* = |Delta| by default. Their sum is reported as the rate
certificate; the multiplicative constant is never estimated.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from . import mcengine
from .mcengine import EmpiricalCdf, RateFitError, dkw_band, fit_rate, ks_distance, weighted_sup


@dataclass
class CondMoments:
    """Conditional moments given the state, one entry per replicate.

    ``d2_var``/``dds_var`` are the sampling variances of nested-MC estimates
    (``None`` when exact); ``resid`` is R when the model knows it exactly.
    """
    d1: np.ndarray
    d2: np.ndarray
    dds: np.ndarray
    method: str = "exact"
    se: np.ndarray = None
    d2_var: np.ndarray = None
    dds_var: np.ndarray = None
    resid: np.ndarray = None
    d1_mc: np.ndarray = None
    failures: int = 0


class PairModel(ABC):
    """A model W = phi(X) with an exchangeable partner W'.

    Methods are vectorised over a batch of states; ``rng`` is a
    :class:`numpy.random.Generator`.
    """
    lam: float
    g: object
    chunk_size: int = 4096
    delta_star_policy: str = "abs_delta"

    @abstractmethod
    def sample_states(self, rng, size):
        ...

    @abstractmethod
    def statistic(self, states):
        ...

    @abstractmethod
    def sample_coupled(self, states, rng):
        ...

    @abstractmethod
    def cond_moments(self, states, rng):
        ...

    def residual(self, states, cm):
        w = self.statistic(states)
        if cm.resid is not None:
            return cm.resid
        return cm.d1 / self.lam - self.g(w)


@dataclass(frozen=True)
class BoundEstimate:
    t1: float
    t2: float
    t3: float
    se_t1: float
    se_t2: float
    se_t3: float
    n_samples: int
    mean_dds: float = 0.0
    se_mean_dds: float = 0.0
    failure_rate: float = 0.0

    @property
    def certificate(self):
        return self.t1 + self.t2 + self.t3

    def to_dict(self):
        d = {k: float(getattr(self, k)) for k in
             ("t1", "t2", "t3", "se_t1", "se_t2", "se_t3", "mean_dds", "se_mean_dds",
              "failure_rate")}
        d["n_samples"] = int(self.n_samples)
        d["certificate"] = float(self.certificate)
        return d


def _terms(lam, d2, dds, resid, d2_var, dds_var):
    # jackknife-corrected squares: E[Ybar^2] - Var(Ybar) is unbiased for (EY)^2
    q1 = np.mean((1.0 - d2 / (2.0 * lam)) ** 2 - d2_var / (4.0 * lam * lam))
    q2 = np.mean(dds**2 - dds_var)
    return (math.sqrt(max(q1, 0.0)), math.sqrt(max(q2, 0.0)) / lam, float(np.mean(np.abs(resid))))


def bound_terms_from(result, lam, max_failure_rate=1e-3):
    """Bound terms and batch-means standard errors from a :class:`BatchResult`."""
    failure_rate = result.failures / result.n
    if failure_rate > max_failure_rate:
        raise RuntimeError(f"nested-MC failure rate {failure_rate:.2%} exceeds "
                           f"{max_failure_rate:.2%}")
    t = _terms(lam, result.d2, result.dds, result.resid, result.d2_var, result.dds_var)
    nb = int(result.batch.max()) + 1
    per_batch = np.array([
        _terms(lam, result.d2[m], result.dds[m], result.resid[m], result.d2_var[m],
               result.dds_var[m])
        for m in (result.batch == b for b in range(nb))])
    se = per_batch.std(axis=0, ddof=1) / math.sqrt(nb)
    mdds, se_dds = mcengine.mean_se(result.dds, result.batch)
    return BoundEstimate(*t, *map(float, se), n_samples=result.n, mean_dds=mdds,
                         se_mean_dds=se_dds, failure_rate=failure_rate)


def estimate_bound_terms(model, n, seed, batches=16, workers=1, keys=()):
    """Monte Carlo estimates of (t1, t2, t3) over ``n`` independent states."""
    if n < 100:
        raise ValueError("need at least 100 samples")
    n = n - n % batches
    res = mcengine.run_batches(model, n, batches=batches, seed=seed, keys=keys,
                               workers=workers)
    return bound_terms_from(res, model.lam)


@dataclass(frozen=True)
class ErrorProfile:
    z_grid: np.ndarray
    F_hat: np.ndarray
    F: np.ndarray
    raw_err: np.ndarray
    weighted_err: np.ndarray
    weight2_err: np.ndarray
    dkw_band: float
    n_samples: int

    def to_dict(self):
        return {"z": self.z_grid.tolist(), "F_hat": self.F_hat.tolist(), "F": self.F.tolist(),
                "raw_err": self.raw_err.tolist(), "weighted_g_err": self.weighted_err.tolist(),
                "weighted_z2_err": self.weight2_err.tolist(), "dkw_band": self.dkw_band,
                "n_samples": self.n_samples}


def empirical_error_profile(w_samples, dist, z_grid, alpha=0.05):
    """|F_hat - F| on ``z_grid``, raw and weighted by (1+|g(z)|) and (1+|z|)^2."""
    ecdf = EmpiricalCdf.from_samples(w_samples)
    z = np.asarray(z_grid, dtype=float)
    Fh = ecdf(z).astype(float)
    F = np.asarray(dist.cdf(z), dtype=float) if z.size else np.empty(0)
    raw = np.abs(Fh - F)
    return ErrorProfile(z_grid=z, F_hat=Fh, F=F, raw_err=raw,
                        weighted_err=raw * (1.0 + np.abs(dist.g(z))),
                        weight2_err=raw * (1.0 + np.abs(z)) ** 2,
                        dkw_band=dkw_band(ecdf.n, alpha), n_samples=ecdf.n)


@dataclass(frozen=True)
class SymmetryReport:
    mean_delta: float
    se_delta: float
    mean_delta_sum: float
    se_delta_sum: float
    ks_stat: float
    ks_threshold: float
    flags: tuple = ()

    @property
    def passed(self):
        return not self.flags


def exchangeability_check(model, n, seed, batches=16, alpha=0.001):
    """Symmetry statistics of (W, W'): mean Delta, mean Delta (W + W'), and KS(W, W')."""
    if n < 10_000:
        raise ValueError("exchangeability check needs n >= 1e4")
    n = n - n % batches
    res = mcengine.run_batches(model, n, batches=batches, seed=seed, moments=False,
                               coupled=True)
    w, wp = res.w, res.w_prime
    delta = w - wp
    m1, s1 = mcengine.mean_se(delta, res.batch)
    m2, s2 = mcengine.mean_se(delta * (w + wp), res.batch)
    from scipy.stats import ks_2samp
    # lattice-valued W and W' reach the same atom by different float paths
    ks = float(ks_2samp(np.round(w, 10), np.round(wp, 10)).statistic)
    thr = 2.0 * dkw_band(n, alpha / 2.0)
    flags = []
    if abs(m1) > 4.0 * s1:
        flags.append("mean_delta")
    if abs(m2) > 4.0 * s2:
        flags.append("mean_delta_sum")
    if ks > thr:
        flags.append("ks")
    return SymmetryReport(m1, s1, m2, s2, ks, thr, tuple(flags))


@dataclass
class SizeRun:
    size: int
    result: object
    bound: BoundEstimate
    profile: ErrorProfile
    ks: float
    weighted_g_sup: float
    weighted_z2_sup: float
    point_err: dict = field(default_factory=dict)
    point_floor: dict = field(default_factory=dict)


@dataclass
class RateSummary:
    runs: list
    fits: dict
    fits_all: dict
    refused: dict

    def slope(self, name, use_all=False):
        f = (self.fits_all if use_all else self.fits).get(name)
        return None if f is None else f.slope


def _fits(sizes, series, floors):
    fits, fits_all, refused = {}, {}, {}
    for name, errs in series.items():
        try:
            fits_all[name] = fit_rate(sizes, errs)
        except RateFitError as exc:
            refused[name] = str(exc)
            continue
        try:
            fits[name] = fit_rate(sizes, errs, floors.get(name))
        except RateFitError as exc:
            refused[name] = str(exc)
    return fits, fits_all, refused


def rate_summary(model_factory, sizes, dist_factory, n_mc, z_grid, seed, alpha=0.05,
                 batches=16, workers=1, fixed_z=(0.0, 1.0, 2.5), on_size=None):
    """Run each size and fit log-log slopes of the error summaries.

    Sup-type errors use the DKW band as noise floor; fixed-z errors use the
    pointwise binomial standard error. ``on_size(run, model, dist)`` is called
    after each size completes.
    """
    sizes = list(sizes)
    if len(sizes) < 3:
        raise ValueError("need at least 3 sizes")
    runs = []
    for size in sizes:
        model = model_factory(size)
        dist = dist_factory(size)
        n = n_mc - n_mc % batches
        res = mcengine.run_batches(model, n, batches=batches, seed=seed, keys=(size,),
                                   workers=workers)
        bound = bound_terms_from(res, model.lam)
        prof = empirical_error_profile(res.w, dist, z_grid, alpha)
        ks = ks_distance(res.w, dist.cdf)
        wg = weighted_sup(res.w, dist.cdf, lambda z: 1.0 + np.abs(dist.g(z)), z_grid)
        wz = weighted_sup(res.w, dist.cdf, lambda z: (1.0 + np.abs(z)) ** 2, z_grid)
        ecdf = EmpiricalCdf.from_samples(res.w)
        perr, pfloor = {}, {}
        for z0 in fixed_z:
            F0 = float(dist.cdf(z0))
            e = abs(float(ecdf(z0)) - F0)
            perr[z0] = e
            pfloor[z0] = math.sqrt(F0 * (1.0 - F0) / n)
        runs.append(SizeRun(size, res, bound, prof, ks, wg, wz, perr, pfloor))
        if on_size is not None:
            on_size(runs[-1], model, dist)

    band = [r.profile.dkw_band for r in runs]
    series = {"ks": [r.ks for r in runs],
              "weighted_g": [r.weighted_g_sup for r in runs],
              "weighted_z2": [r.weighted_z2_sup for r in runs],
              "certificate": [r.bound.certificate for r in runs]}
    floors = {"ks": band,
              "weighted_g": [b * (1.0 + float(np.max(np.abs(dist_factory(s).g(z_grid)))))
                             for b, s in zip(band, sizes)],
              "weighted_z2": [b * (1.0 + float(np.max(np.abs(z_grid)))) ** 2 for b in band],
              "certificate": None}
    for z0 in fixed_z:
        w2 = (1.0 + abs(z0)) ** 2
        series[f"z={z0:g}"] = [r.point_err[z0] * w2 for r in runs]
        floors[f"z={z0:g}"] = [r.point_floor[z0] * w2 for r in runs]
    fits, fits_all, refused = _fits(sizes, series, floors)
    return RateSummary(runs, fits, fits_all, refused)
