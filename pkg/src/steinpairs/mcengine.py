"""Seeded batch driver, empirical CDFs and log-log rate fits.

Every batch draws from its own Philox stream keyed by ``(seed, *keys, batch,
chunk)``, so the samples never depend on how batches are spread across
worker processes.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np


def batch_rng(seed, *keys):
    """Counter-based generator for one stream identified by ``(seed, *keys)``."""
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return np.random.Generator(np.random.Philox(ss))


def dkw_band(n, alpha=0.05):
    """Half-width of the DKW confidence band at level ``1 - alpha``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def dkw_alpha(n, eps):
    """Inverse of :func:`dkw_band`: the level whose band half-width is ``eps``."""
    return 2.0 * math.exp(-2.0 * n * eps * eps)


@dataclass(frozen=True)
class EmpiricalCdf:
    sorted_samples: np.ndarray

    @classmethod
    def from_samples(cls, samples):
        x = np.sort(np.asarray(samples, dtype=float))
        if x.size == 0:
            raise ValueError("empirical CDF needs at least one sample")
        return cls(x)

    @property
    def n(self):
        return self.sorted_samples.size

    def __call__(self, z):
        # right-continuous: counts samples <= z
        idx = np.searchsorted(self.sorted_samples, z, side="right")
        return idx / self.n

    def left_limit(self, z):
        return np.searchsorted(self.sorted_samples, z, side="left") / self.n


def ks_distance(samples, cdf):
    """Exact sup_z |F_hat(z) - F(z)| for a continuous ``cdf``.

    The supremum of a step function against a continuous CDF is attained at a
    jump, either at the jump value or as its left limit.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    vals, counts = np.unique(x, return_counts=True)
    upper = np.cumsum(counts) / x.size
    lower = upper - counts / x.size
    F = np.asarray(cdf(vals), dtype=float)
    return float(max(np.max(np.abs(upper - F)), np.max(np.abs(F - lower))))


def weighted_sup(samples, cdf, weight, z_grid):
    """sup of ``weight(z) * |F_hat(z) - F(z)|`` over the grid and all jump points."""
    ecdf = EmpiricalCdf.from_samples(samples)
    vals = np.unique(ecdf.sorted_samples)
    pts = np.concatenate([np.asarray(z_grid, dtype=float), vals])
    best = np.max(weight(pts) * np.abs(ecdf(pts) - cdf(pts)))
    left = np.max(weight(vals) * np.abs(ecdf.left_limit(vals) - cdf(vals)))
    return float(max(best, left))


class RateFitError(ValueError):
    pass


@dataclass(frozen=True)
class RateFit:
    sizes: list
    errors: list
    slope: float
    intercept: float
    r_squared: float
    excluded_points: list = field(default_factory=list)

    def predict(self, size):
        return self.intercept + self.slope * np.log(size)

    def to_dict(self):
        return {
            "sizes": [int(s) for s in self.sizes],
            "errors": [float(e) for e in self.errors],
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "excluded_points": [int(s) for s in self.excluded_points],
        }


def fit_rate(sizes, errors, noise_floors=None, min_points=3):
    """OLS fit of log(error) against log(size).

    Points whose error is below twice their noise floor are excluded and
    listed. Raises :class:`RateFitError` when fewer than ``min_points`` remain.
    """
    sizes = np.asarray(sizes, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = errors > 0
    if noise_floors is not None:
        keep &= errors >= 2.0 * np.asarray(noise_floors, dtype=float)
    excluded = [int(s) for s in sizes[~keep]]
    if keep.sum() < min_points:
        raise RateFitError(
            f"only {int(keep.sum())} usable points above the noise floor "
            f"(excluded sizes {excluded})")
    lx, ly = np.log(sizes[keep]), np.log(errors[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (intercept + slope * lx)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)
    return RateFit(sizes=[int(s) for s in sizes[keep]], errors=list(map(float, errors[keep])),
                   slope=float(slope), intercept=float(intercept), r_squared=r2,
                   excluded_points=excluded)


@dataclass
class BatchResult:
    """Per-replicate outputs concatenated in batch order."""
    w: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    dds: np.ndarray
    resid: np.ndarray
    d2_var: np.ndarray
    dds_var: np.ndarray
    batch: np.ndarray
    w_prime: np.ndarray = None
    failures: int = 0

    @property
    def n(self):
        return self.w.size


_FIELDS = ("w", "d1", "d2", "dds", "resid", "d2_var", "dds_var")


def _run_one_batch(model, n_batch, seed, keys, batch, moments, coupled):
    chunk = int(getattr(model, "chunk_size", 4096))
    out = {k: [] for k in _FIELDS}
    wp = []
    failures = 0
    done, c = 0, 0
    while done < n_batch:
        size = min(chunk, n_batch - done)
        rng = batch_rng(seed, *keys, batch, c)
        states = model.sample_states(rng, size)
        w = np.asarray(model.statistic(states), dtype=float)
        out["w"].append(w)
        if moments:
            cm = model.cond_moments(states, rng)
            out["d1"].append(cm.d1)
            out["d2"].append(cm.d2)
            out["dds"].append(cm.dds)
            resid = cm.resid if cm.resid is not None else cm.d1 / model.lam - model.g(w)
            out["resid"].append(resid)
            zeros = np.zeros_like(w)
            out["d2_var"].append(zeros if cm.d2_var is None else cm.d2_var)
            out["dds_var"].append(zeros if cm.dds_var is None else cm.dds_var)
            failures += int(cm.failures)
        if coupled:
            wp.append(np.asarray(model.sample_coupled(states, rng), dtype=float))
        failures += int(getattr(states, "failures", 0) or 0)
        done += size
        c += 1
    res = {k: (np.concatenate(v) if v else np.empty(0)) for k, v in out.items()}
    res["w_prime"] = np.concatenate(wp) if coupled else None
    res["failures"] = failures
    return res


def run_batches(model, n_total, batches=16, seed=0, keys=(), workers=1,
                moments=True, coupled=False):
    """Simulate ``n_total`` independent replicates of ``model``.

    The output is identical for any ``workers`` value: batch ``b`` always uses
    the streams keyed by ``(seed, *keys, b, chunk)`` and results are merged in
    batch order.
    """
    if n_total % batches:
        raise ValueError("n_total must be divisible by batches")
    n_batch = n_total // batches
    args = [(model, n_batch, seed, tuple(keys), b, moments, coupled) for b in range(batches)]
    if workers <= 1:
        parts = [_run_one_batch(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [ex.submit(_run_one_batch, *a) for a in args]
            parts = []
            for b, f in enumerate(futures):
                try:
                    parts.append(f.result())
                except Exception as exc:
                    raise RuntimeError(f"batch {b} failed: {exc}") from exc
    empty = np.empty(0)
    merged = {}
    for k in _FIELDS:
        merged[k] = np.concatenate([p[k] for p in parts]) if moments or k == "w" else empty
    wp = np.concatenate([p["w_prime"] for p in parts]) if coupled else None
    batch = np.repeat(np.arange(batches), n_batch)
    return BatchResult(batch=batch, w_prime=wp,
                       failures=sum(p["failures"] for p in parts), **merged)


def batch_means(values, batch, nbatch=None):
    """Means of ``values`` per batch label, in label order."""
    nbatch = int(batch.max()) + 1 if nbatch is None else nbatch
    sums = np.bincount(batch, weights=values, minlength=nbatch)
    counts = np.bincount(batch, minlength=nbatch)
    return sums / counts


def mean_se(values, batch=None):
    """Mean and batch-means standard error (plain SE when ``batch`` is None)."""
    values = np.asarray(values, dtype=float)
    m = float(np.mean(values))
    if batch is None:
        return m, float(np.std(values, ddof=1) / math.sqrt(values.size))
    bm = batch_means(values, batch)
    return m, float(np.std(bm, ddof=1) / math.sqrt(bm.size))
