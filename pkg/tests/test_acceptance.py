"""Acceptance gate: the twelve criteria at their stated tolerances.

Each test prints one ``criterion k: PASS|FAIL`` line, repeated in the
terminal summary.  Seeds are fixed, so the verdicts are reproducible.
"""

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from haarstein.distance import dkw_radius, ks_distance, normal_density, sphere_marginal_density, tv_quadrature
from haarstein.linear import preset, project_theta, sample_statistic_batch
from haarstein.moments import CATALOG, default_cases, evaluate_identity, mc_estimate, ot2s_bound, quadrature_check
from haarstein.pairs import check_conditions, orth_bound, orth_e_bound, quadratic_condition, sample_pairs
from haarstein.rng import RngStream
from haarstein.stein import test_family, verify_stein_bounds

from conftest import record_criterion

pytestmark = pytest.mark.slow

SAMPLES = 100_000
PRESETS = ("identity", "spike", "random-diag")
ORTH_GRID = (10, 20, 50)


@pytest.fixture(scope="module")
def orth_grid():
    """``orth_e_bound`` (with its W draws) for every (A, n) of criteria 3 and 4."""
    out = {}
    for k, name in enumerate(PRESETS):
        for n in ORTH_GRID:
            t0 = time.perf_counter()
            res = orth_e_bound(preset(name, n, "orthogonal", seed=17), SAMPLES, RngStream(3, 100 * k + n))
            res["seconds"] = time.perf_counter() - t0
            out[name, n] = res
    return out


@pytest.fixture(scope="module")
def condition_reports():
    return {
        g: check_conditions(preset("identity", 20, g), samples=SAMPLES, rng=RngStream(5, i))
        for i, g in enumerate(("orthogonal", "unitary"))
    }


def test_criterion_01_sphere_tv_exact():
    t0 = time.perf_counter()
    reps = {n: tv_quadrature(sphere_marginal_density(n), normal_density()) for n in (5, 10, 25, 100)}
    elapsed = time.perf_counter() - t0
    ok = all(r.value <= orth_bound(n) and r.error <= 1e-8 for n, r in reps.items()) and elapsed < 5
    detail = ", ".join(f"n={n}: {r.value:.6f} <= {orth_bound(n):.4f}" for n, r in reps.items())
    record_criterion(1, ok, f"{detail}; max quad err {max(r.error for r in reps.values()):.1e}; {elapsed:.2f}s")
    assert ok


def test_criterion_02_order_sharpness():
    ns = (10, 25, 50, 100)
    scaled = [(n - 1) * tv_quadrature(sphere_marginal_density(n), normal_density()).value for n in ns]
    ratios = [b / a for a, b in zip(scaled, scaled[1:])]
    ok = all(0.1 <= s <= 2 for s in scaled) and all(0.8 <= r <= 1.25 for r in ratios)
    record_criterion(2, ok, f"(n-1)TV = {[round(s, 4) for s in scaled]}, ratios {[round(r, 4) for r in ratios]}")
    assert ok


def test_criterion_03_orthogonal_e_bound(orth_grid):
    parts, ok = [], True
    for (name, n), r in orth_grid.items():
        good = r["value"] <= r["bound"] + 4 * r["stderr"] and r["seconds"] < 120
        ok &= good
        parts.append(f"{name}/{n}: {r['value']:.4f} <= {r['bound']:.4f}")
    record_criterion(3, ok, "; ".join(parts))
    assert ok


def test_criterion_04_ks(orth_grid):
    parts, ok = [], True
    for (name, n), r in orth_grid.items():
        rep = ks_distance(r["w"].real, normal_density().cdf, bound=orth_bound(n))
        good = rep.value <= rep.bound + rep.error
        ok &= good
        parts.append(f"{name}/{n}: {rep.value:.4f}")
    record_criterion(4, ok, f"KS vs 2sqrt3/(n-1) + DKW({SAMPLES}); " + "; ".join(parts))
    assert ok


def test_criterion_05_lambda(condition_reports):
    vals = {g: r.checks()["lambda"] for g, r in condition_reports.items()}
    ok = all(v["abs_error"] <= 0.05 for v in vals.values())
    record_criterion(5, ok, "; ".join(f"{g}: n*lambda = {v['n_lambda_hat']:.4f}" for g, v in vals.items()))
    assert ok


def test_criterion_06_quadratic(condition_reports):
    parts, ok = [], True
    for g, r in condition_reports.items():
        c = r.checks()
        ok &= c["quadratic_global"]["pass"] and c["quadratic_bins"]["pass"]
        parts.append(f"{g}: z = {c['quadratic_global']['z']:.2f}, max bin z = {c['quadratic_bins']['max_abs_z']:.2f}")
    # denser bin-wise check of the orthogonal closed form
    big = quadratic_condition(batch=sample_pairs(preset("identity", 10, "orthogonal"), 1_000_000, RngStream(10)))
    c = big.checks()
    ok &= c["quadratic_global"]["pass"] and c["quadratic_bins"]["pass"]
    parts.append(f"orthogonal n=10 (1e6): max bin z = {c['quadratic_bins']['max_abs_z']:.2f}")
    record_criterion(6, ok, "; ".join(parts))
    assert ok


def test_criterion_07_third_moment(condition_reports):
    parts, ok = [], True
    for g, r in condition_reports.items():
        ratios = r.third_moment["ratios"]
        ok &= all(1.6 <= x <= 2.4 for x in ratios)
        parts.append(f"{g}: ratios {[round(x, 3) for x in ratios]}")
    record_criterion(7, ok, "; ".join(parts))
    assert ok


def test_criterion_08_moment_suite():
    failures, count = [], 0
    for key, ident in sorted(CATALOG.items()):
        for n in (3, 5, 10):
            for case in default_cases(key, n):
                r = mc_estimate(key, n, case["indices"], SAMPLES, RngStream(8, n), case["coeffs"])
                count += 1
                if not r.passed:
                    failures.append((key, n, r.indices, r.z))
        small = 2 if ident.group == "orthogonal" else 1
        for case in default_cases(key, small):
            q = quadrature_check(key, small, case["indices"], case["coeffs"])
            count += 1
            if not q["pass"]:
                failures.append((key, small, q["indices"], q["abs_error"]))
    ok = not failures
    record_criterion(8, ok, f"{count} Monte Carlo and quadrature checks, failures: {failures}")
    assert ok


def test_criterion_09_fourth_moment_bound():
    rng = random.Random(909)
    n, worst = 10, Fraction(0)
    for _ in range(20):
        raw = [Fraction(rng.randint(1, 10**6), rng.randint(1, 10**6)) for _ in range(n)]
        sq = [x * n / sum(raw) for x in raw]
        worst = max(worst, evaluate_identity("OT2S", n, coeffs=sq))
    ok = worst <= ot2s_bound(n)
    record_criterion(9, ok, f"max exact value {float(worst):.6f} <= {float(ot2s_bound(n)):.6f}")
    assert ok


def test_criterion_10_stein_solver():
    reps = [verify_stein_bounds(g) for g in test_family()]
    worst = max(r.max_residual for r in reps)
    ok = len(reps) == 10 and worst <= 1e-6 and all(r.passed for r in reps)
    margin = min(min(r.margins) for r in reps)
    record_criterion(10, ok, f"max residual {worst:.1e}, smallest bound margin {margin:.3e}")
    assert ok


def test_criterion_11_unitary_constant():
    parts, ok = [], True
    target = normal_density(0.5).cdf
    for n in (8, 16, 32):
        w = sample_statistic_batch(preset("identity", n, "unitary"), SAMPLES, RngStream(11, n)).values
        dkw = dkw_radius(SAMPLES)
        ks = {k: ks_distance(project_theta(w, k * math.pi / 6), target).value for k in range(7)}
        spread = max(abs(v - ks[0]) for v in ks.values())
        good = n * ks[0] <= 4 + n * dkw and spread <= 2 * dkw
        ok &= good
        parts.append(f"n={n}: n*KS = {n * ks[0]:.3f}, theta spread {spread:.4f} <= {2 * dkw:.4f}")
    record_criterion(11, ok, "; ".join(parts))
    assert ok


def test_criterion_12_complex_limit():
    n = 50
    w = sample_statistic_batch(preset("identity", n, "unitary"), SAMPLES, RngStream(12)).values
    x, y = w.real - w.real.mean(), w.imag - w.imag.mean()
    N = x.size
    terms = {"var_re": (x * x, 0.5), "var_im": (y * y, 0.5), "cov": (x * y, 0.0)}
    zs = {k: (v.mean() - t) / (v.std(ddof=1) / math.sqrt(N)) for k, (v, t) in terms.items()}
    corr = float(np.corrcoef(x, y)[0, 1])
    corr_se = (1 - corr**2) / math.sqrt(N - 1)
    ok = all(abs(z) <= 4 for z in zs.values()) and abs(corr) <= 4 * corr_se
    detail = ", ".join(f"{k} z = {z:.2f}" for k, z in zs.items())
    record_criterion(12, ok, f"{detail}, corr = {corr:.4f} (4 SE = {4 * corr_se:.4f})")
    assert ok
