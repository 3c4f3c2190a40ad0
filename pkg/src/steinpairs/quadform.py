"""Quadratic forms W = (1/sigma_n) sum_{i != j} a_ij X_i X_j of i.i.d. variables."""

import math
import os

import numpy as np
from scipy import sparse

from .limitdist import BaseLaw, GFunction
from .paircore import CondMoments, PairModel


class QuadFormModel(PairModel):
    """Pair: replace X_theta by an independent copy, theta uniform on {1..n}.

    Then E(Delta | X) = (2/n) W, so g(x) = x, lambda = 2/n and R = 0.
    """
    delta_star_policy = "abs_delta"

    def __init__(self, A, x_law=None, chunk_size=4096):
        A = sparse.csr_matrix(A, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if abs(A - A.T).max() > 0:
            raise ValueError("A must be symmetric")
        if np.any(A.diagonal() != 0):
            raise ValueError("A must have a zero diagonal")
        A.eliminate_zeros()
        self.A = A
        self.n = A.shape[0]
        self.x_law = BaseLaw.rademacher() if x_law is None else x_law
        self.sigma_n = math.sqrt(2.0 * float(A.multiply(A).sum()))
        if self.sigma_n == 0:
            raise ValueError("A = 0 gives sigma_n = 0")
        self.lam = 2.0 / self.n
        self.g = GFunction.linear(1.0)
        self.chunk_size = chunk_size

    def _ax(self, X):
        return np.asarray((self.A @ X.T).T)

    def sample_states(self, rng, size):
        return self.x_law.sample(rng, (size, self.n))

    def statistic(self, X):
        X = np.atleast_2d(X)
        return np.sum(X * self._ax(X), axis=1) / self.sigma_n

    def sample_pair(self, X, rng):
        """(W, W', Delta, theta, X'_theta) for each state row."""
        X = np.atleast_2d(X)
        ax = self._ax(X)
        w = np.sum(X * ax, axis=1) / self.sigma_n
        rows = np.arange(X.shape[0])
        theta = rng.integers(0, self.n, size=X.shape[0])
        xnew = self.x_law.sample(rng, X.shape[0])
        row = ax[rows, theta]
        wp = w - 2.0 / self.sigma_n * row * X[rows, theta] + 2.0 / self.sigma_n * row * xnew
        return w, wp, w - wp, theta, xnew

    def sample_coupled(self, X, rng):
        return self.sample_pair(X, rng)[1]

    def cond_moments(self, X, rng=None):
        X = np.atleast_2d(X)
        ax = self._ax(X)
        w = np.sum(X * ax, axis=1) / self.sigma_n
        d1 = self.lam * w
        s2 = self.sigma_n**2
        d2 = 4.0 / (self.n * s2) * np.sum(ax**2 * (X**2 + 1.0), axis=1)
        c = 2.0 / self.sigma_n * ax
        dds = np.mean(c * np.abs(c) * self.x_law.signed_sq_expect(X), axis=1)
        return CondMoments(d1=d1, d2=d2, dds=dds, method="exact", resid=np.zeros_like(w))


def qf_statistic(model, X):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != model.n:
        raise ValueError(f"state has length {X.shape[-1]}, model has n = {model.n}")
    w = model.statistic(X)
    return float(w[0]) if X.ndim == 1 else w


def qf_sample_pair(model, X, rng):
    X = np.asarray(X, dtype=float)
    out = model.sample_pair(X, rng)
    if X.ndim == 1:
        return tuple(v[0].item() for v in out)
    return out


def qf_cond_moments(model, X):
    return model.cond_moments(np.asarray(X, dtype=float))


def qf_theoretical_rhs(model):
    """E X^4 / sigma_n^2 * (sqrt(sum_i (sum_j a_ij^2)^2) + sqrt(sum_{i,j} sum_k (a_ik a_jk)^2))."""
    B = model.A.multiply(model.A).tocsr()
    row = np.asarray(B.sum(axis=1)).ravel()
    col = np.asarray(B.sum(axis=0)).ravel()
    # sum_{i,j} sum_k a_ik^2 a_jk^2 = sum_k (sum_i a_ik^2)(sum_j a_jk^2)
    term = math.sqrt(float(np.sum(row**2))) + math.sqrt(float(np.sum(col * col)))
    return float(model.x_law.moment(4)) / model.sigma_n**2 * term


def tridiagonal(n):
    """a_{i,i+1} = a_{i+1,i} = 1."""
    off = np.ones(n - 1)
    return sparse.diags([off, off], [-1, 1], shape=(n, n), format="csr")


def read_matrix(path):
    """Dense CSV (``.csv``) or whitespace triplets ``i j value`` with 0-based indices.

    Triplet files may list one triangle only; missing mirror entries are filled in.
    """
    if os.path.splitext(path)[1].lower() == ".csv":
        return sparse.csr_matrix(np.loadtxt(path, delimiter=",", ndmin=2))
    data = np.loadtxt(path, ndmin=2)
    i, j, v = data[:, 0].astype(int), data[:, 1].astype(int), data[:, 2]
    n = int(max(i.max(), j.max())) + 1
    M = sparse.coo_matrix((v, (i, j)), shape=(n, n)).tocsr()
    if abs(M - M.T).max() > 0:
        upper_only = sparse.triu(M).nnz == M.nnz or sparse.tril(M).nnz == M.nnz
        if not upper_only:
            raise ValueError("triplet matrix is neither symmetric nor triangular")
        M = M + M.T
    return M


def write_triplets(A, path):
    C = sparse.coo_matrix(A)
    with open(path, "w") as fh:
        for i, j, v in zip(C.row, C.col, C.data):
            fh.write(f"{i} {j} {float(v)!r}\n")
