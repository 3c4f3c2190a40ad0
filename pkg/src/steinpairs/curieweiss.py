"""General Curie-Weiss model dP ~ exp(beta S^2 / 2n) prod dL(x_i) for finite-support L.

States are stored as occupation counts over the support of L (the model is
exchangeable, so counts are a sufficient statistic); :func:`expand_state`
recovers an explicit spin vector when one is needed.
"""

import itertools
import math

import numpy as np
from scipy.special import gammaln, logsumexp

from .limitdist import BaseLaw, GFunction, classify_type, cw_c2
from .paircore import CondMoments, PairModel

T_GRID = 4096
T_DEPTH = 60.0  # nats below the maximum kept in the t-table


class TDensityTable:
    """Tabulated inverse CDF of the mixing variable t.

    exp(beta S^2/2n) = E_t exp(t S sqrt(beta/n)) for t ~ N(0,1), so t has
    density proportional to exp(-t^2/2) M(t sqrt(beta/n))^n.
    """

    def __init__(self, law, n, beta):
        self.h_scale = math.sqrt(beta / n)
        logd = lambda t: -0.5 * t * t + n * law.log_mgf(t * self.h_scale)
        R = 4.0
        while True:
            t = np.linspace(-R, R, T_GRID + 1)
            ld = logd(t)
            top = ld.max()
            if ld[0] < top - T_DEPTH and ld[-1] < top - T_DEPTH:
                break
            R *= 2.0
            if R > 1e7:
                raise OverflowError("t-density does not decay")
        keep = np.nonzero(ld >= top - T_DEPTH)[0]
        lo = t[max(keep[0] - 1, 0)]
        hi = t[min(keep[-1] + 1, t.size - 1)]
        self.t = np.linspace(lo, hi, T_GRID)
        dens = np.exp(logd(self.t) - top)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(self.t))])
        self.cdf = cum / cum[-1]

    def sample(self, rng, size):
        return np.interp(rng.random(size), self.cdf, self.t)


def _sequential_multinomial(rng, n, probs):
    """One multinomial(n, probs[b]) draw per row of ``probs`` via chained binomials."""
    size, K = probs.shape
    counts = np.zeros((size, K), dtype=np.int64)
    remaining = np.full(size, n, dtype=np.int64)
    tail = np.ones(size)
    for j in range(K - 1):
        p = np.clip(probs[:, j] / np.maximum(tail, 1e-300), 0.0, 1.0)
        c = rng.binomial(remaining, p)
        counts[:, j] = c
        remaining -= c
        tail = tail - probs[:, j]
    counts[:, K - 1] = remaining
    return counts


class CurieWeissModel(PairModel):
    """Heat-bath pair: resample one uniformly chosen site from its conditional law."""

    def __init__(self, n, beta, law=None, k=None, sampler="exact", burn_in=50,
                 chunk_size=8192):
        law = BaseLaw.rademacher() if law is None else law
        if not law.is_finite:
            raise ValueError("Curie-Weiss model needs a finite-support base law")
        if not 0.0 < beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")
        if n < 1:
            raise ValueError("n must be >= 1")
        if sampler not in ("exact", "glauber"):
            raise ValueError("sampler must be 'exact' or 'glauber'")
        self.n, self.beta, self.law = int(n), float(beta), law
        self.points = law.support
        self.logL = np.log(law.weights)
        self.sampler, self.burn_in, self.chunk_size = sampler, burn_in, chunk_size
        if beta < 1.0:
            self.k = None
            self.scaling = "sqrt_n"
            self.scale = self.n ** -0.5
            self.lam = 1.0 / self.n
            self.g = GFunction.linear(1.0 - beta)
        else:
            self.k = classify_type(law).k if k is None else int(k)
            self.c2 = float(cw_c2(law, self.k))
            self.scaling = "n_pow"
            self.scale = self.n ** -(1.0 - 1.0 / (2 * self.k))
            self.lam = self.n ** (-2.0 + 1.0 / self.k)
            self.g = GFunction.power(2 * self.k - 1, 2 * self.k * self.c2)
        self._table = None

    @property
    def table(self):
        if self._table is None:
            self._table = TDensityTable(self.law, self.n, self.beta)
        return self._table

    # -- single-site conditional law ------------------------------------
    def _site_logits(self, s_minus):
        """Unnormalised log-probabilities of the resampled site given S_{-i}."""
        x = self.points
        b, n = self.beta, self.n
        return self.logL + b * np.multiply.outer(s_minus, x) / n + b * x * x / (2.0 * n)

    def _site_probs(self, s_minus):
        lg = self._site_logits(s_minus)
        return np.exp(lg - logsumexp(lg, axis=-1, keepdims=True))

    def site_sums(self, counts):
        return np.asarray(counts) @ self.points

    # -- PairModel --------------------------------------------------------
    def sample_states(self, rng, size):
        if self.sampler == "glauber":
            counts = _sequential_multinomial(rng, self.n, np.tile(self.law.weights, (size, 1)))
            return glauber_sweeps(self, counts, rng, self.burn_in)
        t = self.table.sample(rng, size)
        h = t * self.table.h_scale
        lg = self.logL + np.multiply.outer(h, self.points)
        probs = np.exp(lg - logsumexp(lg, axis=-1, keepdims=True))
        return _sequential_multinomial(rng, self.n, probs)

    def statistic(self, counts):
        return self.site_sums(counts) * self.scale

    def _choose_site(self, counts, rng):
        counts = np.atleast_2d(counts)
        cum = np.cumsum(counts, axis=1)
        u = rng.integers(0, self.n, size=counts.shape[0])
        return np.argmax(cum > u[:, None], axis=1)

    def sample_pair(self, counts, rng):
        """(W, W', Delta, index of the replaced value, index of the new value)."""
        counts = np.atleast_2d(counts)
        S = self.site_sums(counts)
        j = self._choose_site(counts, rng)
        s_minus = S - self.points[j]
        q = self._site_probs(s_minus)
        new = np.argmax(np.cumsum(q, axis=1) > rng.random(q.shape[0])[:, None], axis=1)
        Sp = s_minus + self.points[new]
        w, wp = S * self.scale, Sp * self.scale
        return w, wp, w - wp, j, new

    def sample_coupled(self, counts, rng):
        return self.sample_pair(counts, rng)[1]

    def cond_moments(self, counts, rng=None):
        counts = np.atleast_2d(counts).astype(float)
        S = self.site_sums(counts)
        x = self.points
        q = self._site_probs(S[:, None] - x[None, :])        # (B, j, x')
        diff = x[None, :, None] - x[None, None, :]              # v_j - x'
        frac = counts / self.n
        e1 = np.sum(q * diff, axis=2)
        e2 = np.sum(q * diff**2, axis=2)
        es = np.sum(q * diff * np.abs(diff), axis=2)
        d1 = self.scale * np.sum(frac * e1, axis=1)
        d2 = self.scale**2 * np.sum(frac * e2, axis=1)
        dds = self.scale**2 * np.sum(frac * es, axis=1)
        return CondMoments(d1=d1, d2=d2, dds=dds, method="exact")

    def site_conditional_means(self, counts):
        """m_j = E(X'_i | rest) for a site currently holding support value j."""
        counts = np.atleast_2d(counts)
        S = self.site_sums(counts)
        q = self._site_probs(S[:, None] - self.points[None, :])
        return q @ self.points


def glauber_sweeps(model, counts, rng, sweeps=1):
    """Apply ``sweeps * n`` random-site heat-bath updates to each state."""
    counts = np.array(counts, dtype=np.int64, copy=True)
    rows = np.arange(counts.shape[0])
    for _ in range(int(sweeps) * model.n):
        _, _, _, j, new = model.sample_pair(counts, rng)
        counts[rows, j] -= 1
        counts[rows, new] += 1
    return counts


def expand_state(model, counts, rng=None):
    """Spin vector with the given counts; shuffled when ``rng`` is given."""
    x = np.repeat(model.points, np.asarray(counts, dtype=np.int64))
    if rng is not None:
        rng.shuffle(x)
    return x


def cw_sample_exact(model, rng, size=None):
    counts = model.sample_states(rng, 1 if size is None else size)
    return counts[0] if size is None else counts


def cw_sample_pair(model, counts, rng):
    w, wp, d, _, _ = model.sample_pair(counts, rng)
    if np.ndim(counts) == 1:
        return float(w[0]), float(wp[0]), float(d[0])
    return w, wp, d


def cw_cond_moments(model, counts):
    return model.cond_moments(counts)


def cw_exact_law(model, max_states=2_000_000):
    """All count vectors with their exact probabilities under dP_{n,beta}."""
    K, n = len(model.points), model.n
    n_states = math.comb(n + K - 1, K - 1)
    if n_states > max_states:
        raise ValueError(f"{n_states} states exceed the enumeration limit")
    if K == 2:
        c0 = np.arange(n + 1)
        counts = np.stack([c0, n - c0], axis=1)
    else:
        counts = np.array([c for c in itertools.product(range(n + 1), repeat=K - 1)
                           if sum(c) <= n])
        counts = np.hstack([counts, n - counts.sum(axis=1, keepdims=True)])
    S = counts @ model.points
    logw = (gammaln(n + 1) - gammaln(counts + 1).sum(axis=1) + counts @ model.logL
            + model.beta * S * S / (2.0 * n))
    p = np.exp(logw - logsumexp(logw))
    return counts, p


def cw_exact_expectation(model, fn):
    """E fn(counts) under the exact law, by enumeration."""
    counts, p = cw_exact_law(model)
    return float(np.sum(p * fn(counts)))


def check_mgf_conditions(law, beta, k=None, b0=1.0, t_max=50.0, num=20001):
    """Grid check of the sub-Gaussian mgf dominance conditions.

    beta < 1: largest b with log M(t) <= t^2/(2b) on the grid; passes if b > beta.
    beta = 1: b1 = min (t^2/2 - log M)/t^{2k} on |t| <= b0 and
    b2 = min t^2/(2 log M) on |t| > b0; passes if b1 > 0 and b2 > 1.
    """
    t = np.linspace(-t_max, t_max, num)
    t = t[t != 0]
    lm = law.log_mgf(t)
    if beta < 1.0:
        pos = lm > 0
        b = float(np.min(t[pos] ** 2 / (2.0 * lm[pos]))) if pos.any() else math.inf
        return {"b": b, "passed": bool(b > beta)}
    k = classify_type(law).k if k is None else k
    inner = np.abs(t) <= b0
    b1 = float(np.min((0.5 * t[inner] ** 2 - lm[inner]) / t[inner] ** (2 * k)))
    outer = (~inner) & (lm > 0)
    b2 = float(np.min(t[outer] ** 2 / (2.0 * lm[outer]))) if outer.any() else math.inf
    return {"b0": b0, "b1": b1, "b2": b2, "passed": bool(b1 > 0 and b2 > 1)}
