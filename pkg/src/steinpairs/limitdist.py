"""Limit laws with density ``c1 * exp(-G(x))`` and the drift ``g = G'`` behind them.

Only odd drifts ``g(x) = scale * sgn(x) |x|**alpha`` are supported, which
covers the normal family (``alpha = 1``) and the critical Curie-Weiss limits
(``alpha = 2k - 1``). Their densities are symmetric, so every tail quantity is
computed on the positive half-line and mirrored.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_TAIL_PANELS = 16
_TAIL_DEPTH = 70.0  # nats; truncation of the tail integral at exp(-70)


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class GFunction:
    """Drift ``g(x) = scale * sgn(x) * |x|**alpha`` with its antiderivative."""
    kind: str = "linear"
    scale: float = 1.0
    alpha: float = 1.0
    tau: float = 0.5

    @classmethod
    def linear(cls, scale=1.0, tau=0.5):
        return cls("linear", float(scale), 1.0, tau)

    @classmethod
    def power(cls, alpha, scale=1.0, tau=0.5):
        if alpha < 1:
            raise ValueError("alpha must be >= 1")
        return cls("power", float(scale), float(alpha), tau)

    @property
    def k_tau(self):
        return self.tau ** (-self.alpha)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.alpha == 1.0:
            return self.scale * x
        return self.scale * np.sign(x) * np.abs(x) ** self.alpha

    eval = __call__

    def deriv1(self, x):
        x = np.asarray(x, dtype=float)
        if self.alpha == 1.0:
            return np.full_like(x, self.scale)
        return self.scale * self.alpha * np.abs(x) ** (self.alpha - 1.0)

    def deriv2(self, x):
        x = np.asarray(x, dtype=float)
        if self.alpha == 1.0:
            return np.zeros_like(x)
        a = self.alpha
        return self.scale * a * (a - 1.0) * np.sign(x) * np.abs(x) ** (a - 2.0)

    def antideriv(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * np.abs(x) ** (self.alpha + 1.0) / (self.alpha + 1.0)

    def to_dict(self):
        return {"g_kind": self.kind, "params": {"scale": self.scale, "alpha": self.alpha,
                                               "tau": self.tau}}

    @classmethod
    def from_dict(cls, d):
        p = d["params"]
        return cls(d["g_kind"], float(p["scale"]), float(p.get("alpha", 1.0)),
                   float(p.get("tau", 0.5)))


def adaptive_simpson(f, a, b, tol):
    """Adaptive Simpson quadrature of a scalar function by interval bisection."""
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = simpson(fa, fm, fb, a, b)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        diff = left + right - whole
        if abs(diff) <= 15.0 * eps or depth >= 50:
            if depth >= 50:
                raise QuadratureError("adaptive Simpson did not converge")
            total += left + right + diff / 15.0
        else:
            stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
            stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
    return total


def _default_x_max(g, depth=60.0):
    """Smallest x with G(x) >= depth, by doubling then bisection."""
    hi = 1.0
    while g.antideriv(hi) < depth:
        hi *= 2.0
        if hi > 1e8:
            raise QuadratureError("G does not grow; density is not normalizable")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if g.antideriv(mid) >= depth:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class LimitDistribution:
    g: GFunction
    c1: float
    x_max: float
    quad_tol: float
    tail_mass: float = field(default=0.0, repr=False)

    def logpdf(self, x):
        return math.log(self.c1) - self.g.antideriv(x)

    def pdf(self, x):
        return self.c1 * np.exp(-self.g.antideriv(x))

    def tail_ratio(self, x):
        """(1 - F(x)) / p(x) for x >= 0, i.e. the integral of exp(G(x) - G(t)) over t > x.

        Integrated on [0, L] where G(x + L) - G(x) reaches 70 nats, so no
        density value ever underflows.
        """
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("tail_ratio is defined for x >= 0")
        G = self.g.antideriv
        gx = G(x)
        hi = np.ones_like(x)
        while True:
            short = (G(x + hi) - gx) < _TAIL_DEPTH
            if not short.any():
                break
            hi = np.where(short, 2.0 * hi, hi)
        lo = np.zeros_like(x)
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            big = (G(x + mid) - gx) >= _TAIL_DEPTH
            hi = np.where(big, mid, hi)
            lo = np.where(big, lo, mid)
        L = hi
        width = L / _TAIL_PANELS
        panel = np.arange(_TAIL_PANELS)[:, None]
        s = (panel + 0.5 + 0.5 * _GL_X[None, :]) * width[..., None, None]
        vals = np.exp(-(G(x[..., None, None] + s) - gx[..., None, None]))
        return 0.5 * width * np.einsum("...pk,k->...", vals, _GL_W)

    def sf(self, z):
        z = np.asarray(z, dtype=float)
        az = np.abs(z)
        upper = self.c1 * np.exp(-self.g.antideriv(az)) * self.tail_ratio(az)
        return np.where(z >= 0, upper, 1.0 - upper)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return self.sf(-z)

    __call__ = cdf

    def logsf(self, z):
        z = np.asarray(z, dtype=float)
        az = np.abs(z)
        log_upper = math.log(self.c1) - self.g.antideriv(az) + np.log(self.tail_ratio(az))
        return np.where(z >= 0, log_upper, np.log1p(-np.exp(log_upper)))

    def logcdf(self, z):
        return self.logsf(-np.asarray(z, dtype=float))

    def second_moment(self):
        # symmetric: 2 * c1 * int_0^inf x^2 exp(-G)
        f = lambda x: x * x * math.exp(-float(self.g.antideriv(x)))
        return 2.0 * self.c1 * adaptive_simpson(f, 0.0, self.x_max, self.quad_tol)

    def sample(self, rng, size):
        """Inverse-CDF draws: table interpolation refined by two Newton steps."""
        grid = np.linspace(-self.x_max, self.x_max, 8193)
        Fg = self.cdf(grid)
        u = rng.random(size)
        x = np.interp(u, Fg, grid)
        for _ in range(2):
            x = x - (self.cdf(x) - u) / np.maximum(self.pdf(x), 1e-300)
            x = np.clip(x, -self.x_max, self.x_max)
        return x

    def to_dict(self):
        d = self.g.to_dict()
        d.update({"c1": self.c1, "x_max": self.x_max, "quad_tol": self.quad_tol})
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return normalize(GFunction.from_dict(d), x_max=d.get("x_max"),
                         tol=d.get("quad_tol", 1e-10))


def normalize(g, x_max=None, tol=1e-10):
    """Build the limit law of ``g``: c1 = 1 / integral of exp(-G)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if x_max is None:
        x_max = _default_x_max(g)
    gx = float(g(x_max))
    if not gx > 0:
        raise QuadratureError("g(x_max) <= 0: tail majorant unusable")
    f = lambda x: math.exp(-float(g.antideriv(x)))
    inner = adaptive_simpson(f, 0.0, x_max, tol * 1e-2)
    tail = math.exp(-float(g.antideriv(x_max))) / gx  # majorant of the mass beyond x_max
    total = 2.0 * (inner + tail)
    if not math.isfinite(total) or total <= 0:
        raise QuadratureError("normalizing integral is not finite")
    return LimitDistribution(g=g, c1=1.0 / total, x_max=float(x_max), quad_tol=tol,
                             tail_mass=2.0 * tail / total)


def standard_normal(tol=1e-10):
    return normalize(GFunction.linear(1.0), tol=tol)


# ---------------------------------------------------------------- base laws

def _normal_moment(j):
    if j % 2:
        return 0
    return math.prod(range(1, j, 2))


def _exact(v):
    return isinstance(v, (int, Fraction))


@dataclass(frozen=True)
class BaseLaw:
    """Single-site law: mean 0, variance 1."""
    kind: str
    points: tuple = ()
    probs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("rademacher", "finite", "normal", "uniform"):
            raise ValueError(f"unknown law kind {self.kind!r}")
        if self.kind == "finite":
            if len(self.points) != len(self.probs) or not self.points:
                raise ValueError("points and probs must have equal, non-zero length")
            if any(p < 0 for p in self.probs):
                raise ValueError("negative probability")
            total = sum(self.probs) if all(map(_exact, self.probs)) else math.fsum(self.probs)
            if abs(total - 1) > 1e-12:
                raise ValueError(f"probabilities sum to {float(total)}, not 1")
        if abs(float(self.moment(1))) > 1e-9 or abs(float(self.moment(2)) - 1) > 1e-9:
            raise ValueError("law must have mean 0 and variance 1")

    @classmethod
    def rademacher(cls):
        return cls("rademacher", (-1, 1), (Fraction(1, 2), Fraction(1, 2)))

    @classmethod
    def finite(cls, points, probs):
        return cls("finite", tuple(points), tuple(probs))

    @classmethod
    def normal(cls):
        return cls("normal")

    @classmethod
    def uniform(cls):
        """Continuous uniform on [-sqrt(3), sqrt(3)]."""
        return cls("uniform")

    @property
    def is_finite(self):
        return self.kind in ("rademacher", "finite")

    @property
    def support(self):
        return np.array([float(p) for p in self.points])

    @property
    def weights(self):
        return np.array([float(p) for p in self.probs])

    def moment(self, j):
        """Raw moment E xi^j; exact (int or Fraction) whenever the law allows it."""
        if self.is_finite:
            terms = [p * x**j for x, p in zip(self.points, self.probs)]
            if all(map(_exact, self.points)) and all(map(_exact, self.probs)):
                return sum(terms, Fraction(0))
            return math.fsum(float(t) for t in terms)
        if self.kind == "normal":
            return _normal_moment(j)
        if j % 2:
            return 0
        return Fraction(3 ** (j // 2), j + 1)

    def moments(self, m):
        return [self.moment(j) for j in range(1, m + 1)]

    def sample(self, rng, size):
        if self.kind == "rademacher":
            return 2.0 * rng.integers(0, 2, size=size) - 1.0
        if self.kind == "finite":
            return rng.choice(self.support, size=size, p=self.weights)
        if self.kind == "normal":
            return rng.standard_normal(size)
        a = math.sqrt(3.0)
        return rng.uniform(-a, a, size=size)

    def log_mgf(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_finite:
            return logsumexp(np.multiply.outer(t, self.support), b=self.weights, axis=-1)
        if self.kind == "normal":
            return 0.5 * t * t
        at = math.sqrt(3.0) * np.abs(t)
        safe = np.where(at > 0, at, 1.0)
        # log(sinh(at)/at), stable for large at
        val = safe + np.log1p(-np.exp(-2.0 * safe)) - math.log(2.0) - np.log(safe)
        return np.where(at > 1e-4, val, at * at / 6.0)

    def signed_sq_expect(self, c):
        """E[(c - xi) |c - xi|] for each entry of ``c``."""
        c = np.asarray(c, dtype=float)
        if self.is_finite:
            d = c[..., None] - self.support
            return np.sum(self.weights * d * np.abs(d), axis=-1)
        if self.kind == "normal":
            from scipy.special import ndtr
            phi = np.exp(-0.5 * c * c) / math.sqrt(2 * math.pi)
            return (c * c + 1.0) * (2.0 * ndtr(c) - 1.0) + 2.0 * c * phi
        a = math.sqrt(3.0)
        return (np.abs(c + a) ** 3 - np.abs(c - a) ** 3) / (6.0 * a)

    def to_dict(self):
        if self.kind == "finite":
            return {"kind": "finite", "points": [float(x) for x in self.points],
                    "probs": [float(p) for p in self.probs]}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind", "finite")
        if kind == "finite":
            return cls.finite(d["points"], d["probs"])
        return {"rademacher": cls.rademacher, "normal": cls.normal,
                "uniform": cls.uniform}[kind]()

    @classmethod
    def from_name(cls, name):
        """``rademacher``, ``normal``, ``uniform`` or a path to a JSON law file."""
        if name in ("rademacher", "normal", "uniform"):
            return getattr(cls, name)()
        with open(name) as fh:
            return cls.from_dict(json.load(fh))


# ---------------------------------------------------------------- cumulants

def cumulants_from_moments(moments):
    """Cumulants k_1..k_m from raw moments mu_1..mu_m.

    Uses k_m = mu_m - sum_{j=1}^{m-1} C(m-1, j-1) k_j mu_{m-j}; exact when the
    inputs are Fractions.
    """
    mu = list(moments)
    if not mu:
        raise ValueError("need at least one moment")
    kappa = []
    for m in range(1, len(mu) + 1):
        k = mu[m - 1]
        for j in range(1, m):
            k -= math.comb(m - 1, j - 1) * kappa[j - 1] * mu[m - j - 1]
        kappa.append(k)
    return kappa


def moments_from_cumulants(cumulants):
    """Inverse of :func:`cumulants_from_moments`."""
    kappa = list(cumulants)
    if not kappa:
        raise ValueError("need at least one cumulant")
    mu = []
    for m in range(1, len(kappa) + 1):
        v = kappa[m - 1]
        for j in range(1, m):
            v += math.comb(m - 1, j - 1) * kappa[j - 1] * mu[m - j - 1]
        mu.append(v)
    return mu


@dataclass(frozen=True)
class TypeClassification:
    k: int
    lambda_rho: float
    matched_orders: tuple


def classify_type(law, k_max=6, tol=1e-9):
    """Smallest k such that moments match N(0,1) through order 2k-1 but not 2k."""
    matched = []
    for j in range(1, 2 * k_max + 1):
        diff = _normal_moment(j) - law.moment(j)
        if abs(float(diff)) > tol:
            if j % 2:
                raise ValueError(f"odd moment of order {j} differs from the normal one; "
                                 "law has no type")
            return TypeClassification(j // 2, diff, tuple(matched))
        matched.append(j)
    raise ValueError(f"law matches normal moments through order {2 * k_max}; no type found")


def cw_c2(law, k):
    """Leading coefficient c2 = H^(2k)(0)/(2k)! = -kappa_2k/(2k)!."""
    kappa = cumulants_from_moments(law.moments(2 * k))
    return -kappa[2 * k - 1] / math.factorial(2 * k)


def build_cw_limit(law, k=None, tol=1e-10):
    """Limit law of the critical (beta = 1) Curie-Weiss model for a type-k base law."""
    cls = classify_type(law)
    if k is None:
        k = cls.k
    elif k != cls.k:
        raise ValueError(f"law is of type {cls.k}, not {k}")
    c2 = float(cw_c2(law, k))
    if c2 <= 0:
        raise ValueError(f"c2 = {c2} <= 0: density exp(-c2 x^{2 * k}) is not normalizable")
    g = GFunction.power(2 * k - 1, 2 * k * c2)
    return normalize(g, tol=tol)


# ---------------------------------------------------------------- conditions

@dataclass(frozen=True)
class ConditionCheck:
    passed: bool
    margin: float
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ConditionReport:
    a1: ConditionCheck
    a2: ConditionCheck
    a3: ConditionCheck
    a4: ConditionCheck
    G: ConditionCheck

    @property
    def all_passed(self):
        return all(c.passed for c in (self.a1, self.a2, self.a3, self.a4, self.G))

    def to_dict(self):
        return {name: {"passed": bool(c.passed), "margin": float(c.margin),
                       **{k: float(v) for k, v in c.detail.items()}}
                for name, c in (("A1", self.a1), ("A2", self.a2), ("A3", self.a3),
                                ("A4", self.a4), ("G", self.G))}


def _fd_derivs(g, x):
    h = 1e-5 * (1.0 + np.abs(x))
    d1 = (g(x + h) - g(x - h)) / (2 * h)
    d2 = (g(x + h) - 2 * g(x) + g(x - h)) / (h * h)
    return d1, d2


def check_conditions(g, dist=None, grid=None, closed_form=True):
    """Grid check of (A1)-(A4); (A3) only looks at the grid extremes.

    (A3) needs the paired distribution; without one it is reported as passed
    with margin ``nan``.
    """
    if grid is None:
        xm = dist.x_max if dist is not None else 10.0
        grid = np.linspace(-xm, xm, 2001)
    x = np.asarray(grid, dtype=float)
    gx = g(x)

    a1_margin = float(min(np.min(x * gx), np.min(np.diff(gx)) if x.size > 1 else 0.0))
    a1 = ConditionCheck(a1_margin >= 0.0, a1_margin)

    if closed_form:
        d1, d2 = g.deriv1(x), g.deriv2(x)
    else:
        d1, d2 = _fd_derivs(g, x)
    a2_vals = 2.0 * d1**2 - gx * d2
    a2_margin = float(np.min(a2_vals))
    a2_tol = 0.0 if closed_form else 1e-4 * float(np.max(np.abs(2.0 * d1**2)) + 1.0)
    a2 = ConditionCheck(a2_margin >= -a2_tol, a2_margin)

    if dist is not None:
        ends = np.array([x[0], x[-1]])
        decay = float(np.max(np.abs(g(ends) * dist.pdf(ends))))
        a3 = ConditionCheck(decay < dist.quad_tol, dist.quad_tol - decay, {"g_p_at_ends": decay})
    else:
        a3 = ConditionCheck(True, float("nan"))

    gt = g(g.tau * x)
    nz = gt != 0
    ratio = float(np.max(gx[nz] / gt[nz])) if nz.any() else float("nan")
    a4_margin = g.k_tau - ratio
    a4 = ConditionCheck(a4_margin >= -1e-12 * g.k_tau, a4_margin,
                        {"tau": g.tau, "k_tau": g.k_tau, "ratio": ratio})

    Gx = g.antideriv(x)
    convex = float(np.min(np.diff(Gx, 2))) if x.size > 2 else 0.0
    g0 = float(g.antideriv(0.0))
    G_ok = ConditionCheck(g0 == 0.0 and convex >= -1e-12, convex, {"G0": g0})
    return ConditionReport(a1, a2, a3, a4, G_ok)
