"""Acceptance criteria at their full stated sizes and tolerances.

Each test records one PASS/FAIL line (shown in the terminal summary) and
then asserts the same condition.
"""

from __future__ import annotations

import io
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import brentq

from acceptance_log import record
from oracles import enumerate_tail, naive_weights
from randinterp import cli
from randinterp.bounds import (
    closed_form_bound, log_generating_function, overflow_probability,
    paper_bound_hardy, uncrowded_road_probability,
)
from randinterp.carleson import (
    DyadicWindow, capacity_estimate, generation_layer_counts, one_box_constant,
    window_layer_counts, window_mass,
)
from randinterp.disk_geometry import kernel_value, pseudo_distance, separation_quantity
from randinterp.montecarlo import (
    TrialPlan, ZeroCoveragePlan, classify_empirical, interval_measures, overflow_frequency,
    separation_trend, tail_table, uncrowded_road_frequency, zero_coverage,
)
from randinterp.profiles import RadiiProfile, classify, counterexample_profile
from randinterp.sampler import Configuration

pytestmark = pytest.mark.acceptance


def _disk(rng, n, rmax=1.0):
    r = rmax * np.sqrt(rng.random(n))
    return r * np.exp(2j * np.pi * rng.random(n))


def _finish(number, ok, detail, elapsed, limit):
    timely = elapsed < limit
    record(number, ok and timely, f"{detail}; {elapsed:.1f}s (limit {limit:.0f}s)")
    assert ok, detail
    assert timely, f"took {elapsed:.1f}s, limit {limit}s"


def test_c01_metric_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    z, w = _disk(rng, 10**6), _disk(rng, 10**6)
    err = np.abs(pseudo_distance(z, w) ** 2 + separation_quantity(z, w) - 1.0)
    worst = float(err.max())
    _finish(1, worst < 1e-12, f"max |rho^2 + sep - 1| = {worst:.2e} over 1e6 pairs",
            time.perf_counter() - t0, 5)


def test_c02_kernel_series_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    z, w = _disk(rng, 10**4, 0.9), _disk(rng, 10**4, 0.9)
    u = np.conj(z) * w
    series = np.zeros_like(u)
    power = np.ones_like(u)
    for k in range(40):
        series += power / (k + 1)
        power = power * u
    err = np.abs(kernel_value(1.0, z, w) - series)
    worst = float(err.max())
    frac = float(np.mean(err > 1e-10))
    _finish(2, worst < 1e-10,
            f"max |k - 40-term series| = {worst:.2e}, {frac:.1%} of pairs above 1e-10 "
            f"(max |z w| = {np.abs(u).max():.3f})", time.perf_counter() - t0, 2)


def _random_configuration(rng, depth):
    P = int(rng.integers(0, 10**4 + 1)) if rng.random() < 0.25 else int(rng.integers(0, 2000))
    r = 1 - 2.0 ** -rng.uniform(0, depth + 1, P)
    return Configuration.from_points(r, rng.uniform(0, 2 * math.pi, P), max_n=depth)


def test_c03_dyadic_aggregation_matches_brute_force():
    t0 = time.perf_counter()
    rng = np.random.default_rng(103)
    bad = []
    for c in range(200):
        depth = int(rng.integers(0, 11))
        conf = _random_configuration(rng, depth)
        alpha = float(rng.choice([0.0, 0.25, 0.5, 0.75, 1.0]))
        t = conf.angle / (2 * math.pi)
        w = naive_weights(conf, alpha)
        best = 0.0
        for n in range(depth + 1):
            fast_counts = generation_layer_counts(conf, n)
            for k in range(2 ** n):
                mask = (conf.annulus >= n) & (t >= k / 2 ** n) & (t < (k + 1) / 2 ** n)
                ref = np.bincount(conf.annulus[mask], minlength=depth + 1)
                win = DyadicWindow(n, k)
                if window_layer_counts(conf, win) != ref.tolist():
                    bad.append(("counts", c, n, k))
                if not np.array_equal(fast_counts[k], ref):
                    bad.append(("generation counts", c, n, k))
                m_ref = math.fsum(w[mask].tolist())
                if abs(window_mass(conf, alpha, win) - m_ref) > 1e-12 * max(1, m_ref):
                    bad.append(("mass", c, n, k))
                best = max(best, m_ref / capacity_estimate(alpha, 2.0 ** -n))
        got = one_box_constant(conf, alpha).one_box_constant
        if abs(got - best) > 1e-12 * max(1.0, best):
            bad.append(("one_box", c, got, best))
    _finish(3, not bad, f"200 configurations, mismatches: {bad[:3]}",
            time.perf_counter() - t0, 60)


def test_c04_markov_bound_validity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(104)
    weights = {"hardy": (lambda n, m: 2.0 ** (n - m), None),
               "dalpha": (lambda n, m: 2.0 ** (0.5 * (n - m)), 0.5),
               "dirichlet": (lambda n, m: max(n, 1) / max(m, 1), None)}
    grid = np.geomspace(1.05, 64.0, 24)
    violations, equalities, checks = 0, 0, 0
    for _ in range(50):
        size = int(rng.integers(2, 8))
        counts = rng.integers(0, 4, size).tolist()
        while sum(counts) > 12:
            counts[counts.index(max(counts))] -= 1
        n = int(rng.integers(1, min(3, size - 1) + 1))
        A = float(rng.choice([0.5, 1.0, 1.5, 2.0, 3.0]))
        for regime, (wfun, alpha) in weights.items():
            exact = enumerate_tail(counts, wfun, n, A)
            for s in grid:
                b = math.exp(log_generating_function(counts, regime, n, float(s), alpha)
                             - A * math.log(s))
                checks += 1
                violations += exact > b * (1 + 1e-12)
                equalities += exact == b
    _finish(4, violations == 0 and equalities == 0,
            f"{checks} (profile, regime, s) checks, {violations} violations, "
            f"{equalities} equalities", time.perf_counter() - t0, 30)


def test_c05_paper_tail_chain():
    t0 = time.perf_counter()
    T, ns = 10**5, list(range(6, 15))
    failures = []
    hardy = RadiiProfile.power(1, 0.5, max_n=22)
    rows = tail_table(TrialPlan(hardy, 0.0, 22, T, 105), ns, 8.0)
    for r in rows:
        cf = paper_bound_hardy(0.5, r.n).paper_closed_form
        if not r.within(cf):
            failures.append(("hardy", r.n, r.empirical.estimate, cf))
    const = RadiiProfile.constant(1, max_n=22)
    for alpha, regime, A in ((0.5, "dalpha", 8.0), (1.0, "dirichlet", 4.0)):
        rows = tail_table(TrialPlan(const, alpha, 22, T, 105), ns, A)
        for r in rows:
            cf = closed_form_bound(regime, r.n, const, alpha if regime == "dalpha" else None,
                                   22).paper_closed_form
            if not r.within(cf):
                failures.append((regime, r.n, r.empirical.estimate, cf))
    _finish(5, not failures, f"27 rows at 1e5 trials, rows above bound + 3 sigma: {failures}",
            time.perf_counter() - t0, 600)


def test_c06_uncrowded_road():
    t0 = time.perf_counter()
    T, bad, worst = 10**6, [], 0.0
    for i, N in enumerate((2, 3, 8, 32)):
        for j, g in enumerate((0.001, 0.01, 1 / (2 * N))):
            p = uncrowded_road_probability(N, g).probability
            est = uncrowded_road_frequency(N, g, T, 106, trial_offset=(3 * i + j) * T).estimate
            sig = math.sqrt(p * (1 - p) / T)
            z = abs(est - p) / sig if sig else (0.0 if est == p else math.inf)
            worst = max(worst, z)
            if z > 3:
                bad.append((N, g, est, p))
    _finish(6, not bad, f"12 cells at 1e6 trials, worst |z| = {worst:.2f}, misses {bad}",
            time.perf_counter() - t0, 120)


def test_c07_counterexample_decay_exponent():
    t0 = time.perf_counter()
    gamma, ns = 2.0, np.arange(8, 17)
    prof = counterexample_profile(gamma, 17)
    lines, ok = [], True
    for N in (0, 1):
        freq = [overflow_frequency(prof, int(n), N, 10**6, 107 + N).estimate for n in ns]
        exact = [overflow_probability(prof, int(n), N) for n in ns]
        slope = float(np.polyfit(np.log(ns), np.log(freq), 1)[0])
        exact_slope = float(np.polyfit(np.log(ns), np.log(exact), 1)[0])
        target = -(2 ** (N + 1)) * gamma
        ok &= abs(slope - target) <= 0.15 * abs(target)
        lines.append(f"N={N}: slope {slope:.2f} vs target {target:.0f} "
                     f"(exact-probability slope {exact_slope:.2f})")
    _finish(7, ok, "; ".join(lines), time.perf_counter() - t0, 900)


def test_c08_separation_trend_dichotomy():
    t0 = time.perf_counter()
    depths = [6, 10, 14]
    conv = separation_trend(RadiiProfile.constant(1), "pseudohyperbolic", 0.05, depths, 2000, 108)
    div = separation_trend(RadiiProfile.power(1, 0.5), "pseudohyperbolic", 0.05, depths, 2000, 108)
    first, last = conv[0], conv[-1]
    drop = first.estimate - last.estimate
    sig = math.sqrt(first.sigma() ** 2 + last.sigma() ** 2)
    stable = all(s.estimate >= 0.9 for s in conv) and not (drop > 3 * sig and drop > 0)
    decays = div[-1].estimate < 0.1
    _finish(8, stable and decays,
            f"constant(1): {[s.estimate for s in conv]}; power(1,0.5): "
            f"{[s.estimate for s in div]} (needs < 0.1 at depth 14)",
            time.perf_counter() - t0, 300)


def test_c09_zero_coverage_dichotomy():
    t0 = time.perf_counter()
    grid = 1 << 16
    div = zero_coverage(ZeroCoveragePlan(0.5, L=10**4, grid=grid), RadiiProfile.power(1, 0.75),
                        100, 109)
    frac = div.fraction_of_trials(4, 0.99)
    # convergent: N_n = 1 for n >= 2, exponent tuned so the L intervals sum to 1/2
    L = 12
    prof = RadiiProfile.from_table([0, 0] + [1] * L)
    alpha = brentq(lambda a: interval_measures(prof, a, L).sum() - 0.5, 0.01, 0.5, xtol=1e-15)
    conv = zero_coverage(ZeroCoveragePlan(alpha, L=L, grid=grid), prof, 100, 109)
    quantum = L / grid
    top = max(conv.final_covered)
    ok = frac >= 0.95 and top <= 0.5 + quantum
    _finish(9, ok, f"divergent: {frac:.0%} of trials with multiplicity-4 coverage >= 0.99; "
            f"convergent (sum {conv.total_measure:.12f}): max coverage {top:.6f} "
            f"<= 0.5 + {quantum:.2e}", time.perf_counter() - t0, 180)


GRID_PROFILES = [
    RadiiProfile.constant(1), RadiiProfile.power(0.5, 0.25), RadiiProfile.power(0.5, 0.4),
    RadiiProfile.power(1, 0.5), RadiiProfile.power(1, 0.6), RadiiProfile.power(1, 0.75),
    RadiiProfile.power(1, 0.9), RadiiProfile.power(2, 0.75), counterexample_profile(2),
    RadiiProfile.polylog(2, 0.8, 1),
    RadiiProfile.from_table([0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1]),
    RadiiProfile.from_table([0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0]),
]


def test_c10_classification_consistency():
    t0 = time.perf_counter()
    zoub_bad, trend_bad, decided = [], [], 0
    for prof in GRID_PROFILES:
        for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
            rep = classify(prof, alpha)
            other = rep.separated if alpha < 0.5 else rep.zero_set
            if rep.interpolating != other:
                zoub_bad.append((prof.descriptor, alpha))
            emp = classify_empirical(prof, alpha, trials=1000, seed=3)
            if emp.agrees is not None:
                decided += 1
                if not emp.agrees:
                    trend_bad.append((prof.descriptor, alpha, emp.trend, rep.interpolating))
    _finish(10, not zoub_bad and not trend_bad,
            f"60 cells, {decided} decided; equality breaks {zoub_bad}; trend mismatches "
            f"{trend_bad}", time.perf_counter() - t0, 1200)


def _cli_bytes(argv, out: Path) -> bytes:
    code = cli.run([str(a) for a in argv] + ["--out", str(out)], io.StringIO(), io.StringIO())
    assert code == 0, argv
    return out.read_bytes()


def test_c11_reproducibility_across_workers(tmp_path):
    t0 = time.perf_counter()
    prof = tmp_path / "profile.json"
    prof.write_text(json.dumps(RadiiProfile.power(1, 0.6, max_n=12).to_dict()))
    base = ["--profile", prof, "--seed", 2024]
    experiments = {
        "sample": ["sample", *base, "--trials", 4],
        "carleson": ["carleson", *base, "--alpha", 0.5],
        "tail": ["tail", *base, "--alpha", 0.5, "--trials", 20000],
        "separation": ["separation", *base, "--trials", 300],
        "dsep": ["dsep-event", *base, "--k", 8, "--gamma", 0.6, "--trials", 20000],
        "overflow": ["overflow", "--gamma", 2, "--seed", 2024, "--ns", "6,8,10", "--N", 1,
                     "--trials", 5000],
        "zeros": ["zeros", *base, "--alpha", 0.5, "--L", 2000, "--grid", 1 << 14, "--trials", 8],
        "report": ["report", *base, "--alpha", 0.25, "--trials", 200],
    }
    differ = []
    for name, argv in experiments.items():
        for fmt in ("json", "csv"):
            outs = {w: _cli_bytes(argv + ["--format", fmt, "--workers", w],
                                  tmp_path / f"{name}.{w}.{fmt}") for w in (1, 4, 16)}
            rerun = _cli_bytes(argv + ["--format", fmt, "--workers", 1], tmp_path / "again")
            if not (outs[1] == outs[4] == outs[16] == rerun):
                differ.append(f"{name}/{fmt}")
    _finish(11, not differ, f"{len(experiments)} experiments x json/csv x workers 1/4/16; "
            f"differing: {differ}", time.perf_counter() - t0, math.inf)
