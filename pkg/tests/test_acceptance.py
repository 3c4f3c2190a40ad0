"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

The preset runs are full scale and take several minutes in total on one core.
"""

import math
import time

import numpy as np
import pytest

from conftest import CRITERIA
from steinpairs.curieweiss import CurieWeissModel, cw_exact_law, cw_sample_exact
from steinpairs.experiment import acceptance_checks, preset_config, run_experiment
from steinpairs.indeptest import IndepModel, normalized_residuals
from steinpairs.limitdist import BaseLaw, GFunction, normalize
from steinpairs.quadform import QuadFormModel, qf_cond_moments, qf_statistic, tridiagonal
from steinpairs.steinsolve import stein_f, stein_fprime

pytestmark = pytest.mark.slow


def verdict(number, failures, detail=""):
    ok = not failures
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" | {detail}"
    if failures:
        line += " | " + "; ".join(failures)
    print(line)
    CRITERIA.append(line)
    assert ok, line


# ------------------------------------------------------------ criterion 1

def test_criterion_1_stein_machinery():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    dists = [normalize(GFunction.linear(1.0)), normalize(GFunction.linear(0.5)),
             normalize(GFunction.power(3, 1 / 3))]
    failures = []
    worst = {"B1": np.inf, "B2": np.inf, "B3": np.inf, "B4": np.inf, "ode": 0.0}
    pick = rng.integers(0, 3, 1000)
    zs = rng.uniform(-4, 4, 1000)
    xs = rng.uniform(-8, 8, 1000)
    for k, d in enumerate(dists):
        sel = pick == k
        z, x = zs[sel], xs[sel]
        f = stein_f(d, z, x)
        fp = stein_fprime(d, z, x)
        gf = d.g(x) * f
        Fz = d.cdf(z)
        worst["B1"] = min(worst["B1"], np.min(f), np.min(1 / d.c1 - f))
        worst["B2"] = min(worst["B2"], np.min(1 - np.abs(fp)))
        worst["B3"] = min(worst["B3"], np.min(gf - (Fz - 1)), np.min(Fz - gf))
        step = 1e-3
        gf2 = d.g(x + step) * stein_f(d, z, x + step)
        worst["B4"] = min(worst["B4"], np.min(gf2 - gf))
        h = 1e-6 * (1 + np.abs(x))
        away = np.abs(x - z) >= 10 * h
        num = (stein_f(d, z, x + h) - stein_f(d, z, x - h)) / (2 * h)
        worst["ode"] = max(worst["ode"], float(np.max(np.abs(num - fp)[away])))
        # normalization and tail inequality
        from scipy import integrate
        mass = 2 * integrate.quad(lambda t: float(d.pdf(t)), 0, np.inf, epsabs=1e-13)[0]
        if abs(mass - 1) > 1e-9:
            failures.append(f"mass {mass}")
        zz = np.linspace(0.05, d.x_max, 400)
        if np.any(d.sf(zz) > d.pdf(zz) / d.g(zz) + d.quad_tol):
            failures.append("tail inequality")
    for b in ("B1", "B2", "B3", "B4"):
        if worst[b] < -1e-10:
            failures.append(f"{b} margin {worst[b]:.3g}")
    if worst["ode"] > 1e-5:
        failures.append(f"ode residual {worst['ode']:.3g}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 10:
        failures.append(f"runtime {elapsed:.1f}s")
    verdict(1, failures, f"margins {', '.join(f'{k}={v:.2g}' for k, v in worst.items())}, "
                         f"{elapsed:.1f}s")


# ------------------------------------------------------------ criterion 2

def test_criterion_2_exact_oracles():
    import itertools
    failures = []
    A = np.zeros((3, 3))
    A[0, 1] = A[1, 0] = 1.0
    m = QuadFormModel(A)
    for x in itertools.product((-1.0, 1.0), repeat=3):
        x = np.array(x)
        w = qf_statistic(m, x)
        deltas = []
        for theta in range(3):
            for xp in (-1.0, 1.0):
                y = x.copy()
                y[theta] = xp
                deltas.append(w - qf_statistic(m, y))
        deltas = np.array(deltas)
        cm = qf_cond_moments(m, x)
        if abs(deltas.mean() - 2 / 3 * w) > 1e-12 or abs(cm.d1[0] - 2 / 3 * w) > 1e-12:
            failures.append(f"E(Delta|X) at {x}")
        if abs(cm.d2[0] - 4 / 3) > 1e-12 or abs(np.mean(deltas**2) - 4 / 3) > 1e-12:
            failures.append(f"d2 at {x}")

    beta = 0.8
    cw = CurieWeissModel(2, beta)
    counts, p = cw_exact_law(cw)
    S = counts @ cw.points
    z = 2 * math.exp(beta) + 2
    expect = {-2: math.exp(beta) / z, 0: 2 / z, 2: math.exp(beta) / z}
    N = 1_000_000
    Ss = cw.site_sums(cw_sample_exact(cw, np.random.default_rng(2), N))
    for s, e in expect.items():
        if abs(p[S == s].sum() - e) > 1e-12:
            failures.append(f"enumeration P(S={s})")
        if abs(np.mean(Ss == s) - e) > 4 * math.sqrt(e * (1 - e) / N):
            failures.append(f"sampler P(S={s})")

    U = normalized_residuals(np.random.default_rng(3).uniform(-1, 1, (10_000, 20)))
    dev = max(np.max(np.abs(U.sum(axis=1))), np.max(np.abs((U * U).sum(axis=1) - 1)))
    if dev > 1e-12:
        failures.append(f"row identities {dev:.2g}")
    verdict(2, failures, f"row identity deviation {dev:.2g}")


# ------------------------------------------------------------ criterion 3

def _within(est, se, target, k=4.0):
    return abs(est - target) <= k * se


def test_criterion_3_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    law = BaseLaw.uniform()
    failures, notes = [], []

    # E(u_ik u_ik') at n = 5 over 1e6 rows
    U = normalized_residuals(law.sample(rng, (1_000_000, 5)))
    prod = U[:, 0] * U[:, 1]
    est, se = prod.mean(), prod.std() / 1000
    if not _within(est, se, -1 / 20):
        failures.append(f"E u u' = {est:.5f}")
    notes.append(f"Euu'={est:.5f}")

    # E(r_ij^2 | X_i) at n = 6: 100 fixed rows, 1e5 partners each
    n = 6
    rows = normalized_residuals(law.sample(rng, (100, n)))
    bad = 0
    for u in rows:
        v = normalized_residuals(law.sample(rng, (100_000, n)))
        r2 = (v @ u) ** 2
        bad += not _within(r2.mean(), r2.std() / math.sqrt(r2.size), 1 / (n - 1))
    if bad > 2:  # 4-SE bands over 100 rows: more than 2 misses is not chance
        failures.append(f"E(r^2|X_i): {bad}/100 rows outside 4 SE")
    notes.append(f"r2 misses={bad}")

    # E t at (n, p) = (10, 5)
    m = IndepModel(10, 5, law, inner=1)
    ts = np.concatenate([m.sample_states(rng, 100_000).t for _ in range(10)])
    if not _within(ts.mean(), ts.std() / 1000, 5 * 4 / (2 * 9)):
        failures.append(f"E t = {ts.mean():.5f}")
    notes.append(f"Et={ts.mean():.4f}")

    # E r^4 at n = 200
    n = 200
    a = normalized_residuals(law.sample(rng, (200_000, n)))
    b = normalized_residuals(law.sample(rng, (200_000, n)))
    r4 = np.mean(np.sum(a * b, axis=1) ** 4)
    if abs(r4 / (3 / n**2) - 1) > 0.10:
        failures.append(f"E r^4 ratio {r4 * n * n / 3:.3f}")
    notes.append(f"Er4*n^2/3={r4 * n * n / 3:.3f}")

    # E Delta Delta* = 0 for all three models
    models = {"quadform": QuadFormModel(tridiagonal(64)),
              "curieweiss": CurieWeissModel(64, 1.0),
              "indeptest": IndepModel(10, 10, law, inner=1)}
    for name, model in models.items():
        st = model.sample_states(rng, 200_000 if name != "indeptest" else 50_000)
        d = model.sample_pair(st, rng)[2]
        dds = d * np.abs(d)
        z = dds.mean() / (dds.std() / math.sqrt(dds.size))
        if abs(z) > 4:
            failures.append(f"{name} E Delta Delta* z-score {z:.2f}")
        notes.append(f"{name} z={z:.2f}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 300:
        failures.append(f"runtime {elapsed:.0f}s")
    verdict(3, failures, ", ".join(notes) + f", {elapsed:.0f}s")


# ------------------------------------------------------- preset runs (4-9)

@pytest.fixture(scope="module")
def preset_runs(tmp_path_factory):
    out = {}
    for name in ("thm4.1", "cw-beta05", "cw-beta1", "thm4.4"):
        cfg = preset_config(name, output_dir=str(tmp_path_factory.mktemp(name)))
        t0 = time.perf_counter()
        report = run_experiment(cfg)
        out[name] = (cfg, report, time.perf_counter() - t0)
    return out


def _preset_verdict(number, preset, runs, limit_s, exclude=("certificate_slope",)):
    cfg, report, elapsed = runs[preset]
    checks = [c for c in acceptance_checks(preset, report) if c.name not in exclude]
    failures = [f"{c.name}: {c.detail}" for c in checks if not c.passed]
    if elapsed > limit_s:
        failures.append(f"runtime {elapsed:.0f}s > {limit_s}s")
    passed = "; ".join(c.detail for c in checks if c.passed)
    verdict(number, failures, f"{preset} {elapsed:.0f}s; {passed}")


def test_criterion_4_quadform_rate(preset_runs):
    _preset_verdict(4, "thm4.1", preset_runs, 15 * 60)


def test_criterion_5_curie_weiss_subcritical(preset_runs):
    _preset_verdict(5, "cw-beta05", preset_runs, 10 * 60)


def test_criterion_6_curie_weiss_critical(preset_runs):
    _preset_verdict(6, "cw-beta1", preset_runs, 10 * 60)


def test_criterion_7_independence_rate(preset_runs):
    _preset_verdict(7, "thm4.4", preset_runs, 30 * 60)


def test_criterion_8_certificate_slopes(preset_runs):
    failures, notes = [], []
    for preset, (cfg, report, _) in preset_runs.items():
        (c,) = [c for c in acceptance_checks(preset, report) if c.name == "certificate_slope"]
        notes.append(f"{preset} {c.detail}")
        if not c.passed:
            failures.append(preset)
    verdict(8, failures, "; ".join(notes))


def test_criterion_9_reproducibility(preset_runs, tmp_path):
    failures = []
    for preset in ("cw-beta05", "thm4.4"):
        cfg, _, _ = preset_runs[preset]
        first = open(f"{cfg.output_dir}/report.json", "rb").read()
        again = preset_config(preset, output_dir=str(tmp_path / preset), workers=2)
        run_experiment(again)
        if (tmp_path / preset / "report.json").read_bytes() != first:
            failures.append(preset)
    verdict(9, failures, "workers=1 vs workers=2 reports compared byte-for-byte")
