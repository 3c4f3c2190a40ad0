"""Sum-of-squared-correlations independence statistic W_{n,p}.

Data are p rows (variables) of n observations each. With u_i the centred,
unit-norm version of row i, r_ij = <u_i, u_j>, t = sum_{i<j} r_ij^2 and
W = c_np (t - p(p-1)/(2(n-1))).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .limitdist import BaseLaw, GFunction
from .paircore import CondMoments, PairModel

_DEGENERATE = 1e-12


def normalized_residuals(X):
    """u_ik = (X_ik - mean_i) / ||X_i - mean_i||, row-wise over the last axis."""
    X = np.asarray(X, dtype=float)
    C = X - X.mean(axis=-1, keepdims=True)
    norm = np.sqrt(np.sum(C * C, axis=-1, keepdims=True))
    if np.any(norm <= _DEGENERATE):
        raise ValueError("row with zero sample variance")
    return C / norm


def c_np(n, p):
    return n * math.sqrt(n + 2) / math.sqrt(p * (p - 1) * (n - 1))


def centering(n, p):
    return p * (p - 1) / (2.0 * (n - 1))


@dataclass
class CorrState:
    """Batch of data sets with cached per-row sums sum_{j != i} r_ij^2."""
    X: np.ndarray
    U: np.ndarray
    R2sums: np.ndarray
    t: np.ndarray
    W: np.ndarray
    failures: int = 0

    def __len__(self):
        return self.W.size


class IndepModel(PairModel):
    """Pair: replace row theta (uniform over p rows) by a fresh i.i.d. row.

    E(W - W* | X) = (2/p) W, so g(x) = x, lambda = 2/p and R = 0.
    """

    def __init__(self, n, p, law=None, inner=200, chunk_size=None):
        if n < 4 or p < 2:
            raise ValueError("need n >= 4 and p >= 2")
        if inner < 1:
            raise ValueError("inner sample size must be positive")
        self.n, self.p = int(n), int(p)
        self.law = BaseLaw.uniform() if law is None else law
        if not math.isfinite(float(self.law.moment(6))):
            raise ValueError("entry law needs a finite sixth moment")
        self.inner = int(inner)
        self.c = c_np(n, p)
        self.center = centering(n, p)
        self.lam = 2.0 / p
        self.g = GFunction.linear(1.0)
        if chunk_size is None:
            chunk_size = max(8, min(4096, 4_000_000 // (self.p * self.n * max(self.inner, self.p))))
        self.chunk_size = chunk_size

    def _fresh_rows(self, rng, shape):
        """i.i.d. rows of length n, redrawing any with zero sample variance."""
        X = self.law.sample(rng, (*shape, self.n))
        redraws = 0
        while True:
            C = X - X.mean(axis=-1, keepdims=True)
            norm = np.sqrt(np.sum(C * C, axis=-1))
            bad = norm <= _DEGENERATE
            if not bad.any():
                return X, C / norm[..., None], redraws
            idx = np.nonzero(bad)
            redraws += idx[0].size
            X[idx] = self.law.sample(rng, (idx[0].size, self.n))

    def state_from_data(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 2
        X = X[None] if single else X
        if X.shape[-2:] != (self.p, self.n):
            raise ValueError(f"data shape {X.shape[-2:]} != (p, n) = {(self.p, self.n)}")
        return self._state(X, normalized_residuals(X))

    def _state(self, X, U, failures=0):
        G = U @ np.swapaxes(U, -1, -2)
        diag = np.einsum("...ii->...i", G)
        R2 = np.sum(G * G, axis=-1) - diag * diag
        t = 0.5 * R2.sum(axis=-1)
        return CorrState(X, U, R2, t, self.c * (t - self.center), failures)

    def sample_states(self, rng, size):
        X, U, redraws = self._fresh_rows(rng, (size, self.p))
        return self._state(X, U, redraws)

    def statistic(self, state):
        return state.W

    def _coupled_t(self, state, theta, ustar):
        """t* for replacement rows ``ustar`` (B, m, n) at rows ``theta`` (B, m)."""
        r = ustar @ np.swapaxes(state.U, -1, -2)                 # (B, m, p)
        r_self = np.take_along_axis(r, theta[..., None], axis=-1)[..., 0]
        s = np.sum(r * r, axis=-1) - r_self**2
        old = np.take_along_axis(state.R2sums, theta, axis=-1)
        return state.t[:, None] - old + s

    def sample_pair(self, state, rng):
        """(W, W*, Delta, theta) for each state."""
        B = len(state)
        theta = rng.integers(0, self.p, size=(B, 1))
        _, ustar, _ = self._fresh_rows(rng, (B, 1))
        tstar = self._coupled_t(state, theta, ustar)[:, 0]
        wstar = self.c * (tstar - self.center)
        return state.W, wstar, state.W - wstar, theta[:, 0]

    def sample_coupled(self, state, rng):
        return self.sample_pair(state, rng)[1]

    def cond_moments(self, state, rng):
        B, m = len(state), self.inner
        theta = rng.integers(0, self.p, size=(B, m))
        _, ustar, redraws = self._fresh_rows(rng, (B, m))
        delta = self.c * (state.t[:, None] - self._coupled_t(state, theta, ustar))
        sq = delta * delta
        sgn = delta * np.abs(delta)
        d2, dds = sq.mean(axis=1), sgn.mean(axis=1)
        if m > 1:
            d2_var = sq.var(axis=1, ddof=1) / m
            dds_var = sgn.var(axis=1, ddof=1) / m
        else:
            d2_var = dds_var = np.zeros(B)
        finite = np.isfinite(d2) & np.isfinite(dds)
        return CondMoments(d1=self.lam * state.W, d2=d2, dds=dds, method=f"nested_mc({m})",
                           se=np.sqrt(dds_var), d2_var=d2_var, dds_var=dds_var,
                           resid=np.zeros(B), d1_mc=delta.mean(axis=1),
                           failures=int((~finite).sum()))


def it_statistic(model, X):
    return model.state_from_data(X)


def it_sample_pair(model, state, rng):
    return model.sample_pair(state, rng)


def it_cond_moments(model, state, rng, m=None):
    if m is not None and m != model.inner:
        model = IndepModel(model.n, model.p, model.law, inner=m, chunk_size=model.chunk_size)
    if model.inner < 100:
        raise ValueError("inner sample size m must be >= 100")
    return model.cond_moments(state, rng)


def analyze_data(X):
    """W_{n,p} for a p x n data matrix (rows = variables) and its normal tail areas."""
    X = np.asarray(X, dtype=float)
    p, n = X.shape
    model = IndepModel(n, p, inner=1)
    st = model.state_from_data(X)
    w = float(st.W[0])
    return {"n": n, "p": p, "t": float(st.t[0]), "W": w,
            "p_value_upper": float(ndtr(-w)), "p_value_two_sided": float(2 * ndtr(-abs(w)))}
