"""Seeded Monte Carlo experiments.

Trials are cut into fixed-size chunks; every chunk draws its uniforms from
the counter-based generator keyed by (seed, trial index, point counter), so
results do not depend on how many worker threads evaluate the chunks.
Chunk results are reduced in chunk order.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng
from .bounds import (exact_tail_probability, generating_function_bound,
                     uncrowded_road_probability)
from .carleson import one_box_constant
from .disk_geometry import (TWO_PI, check_alpha, circle_distance, min_separation_points,
                            pair_distance)
from .profiles import RadiiProfile, annulus_counts, classify
from .sampler import Configuration, ResourceError, sample_steinhaus, to_turns

EXPERIMENTS = ("tail", "separation", "dsep_event", "overflow", "zero_coverage",
               "classify_empirical")
Z95 = 1.959963984540054
DEFAULT_CHUNK = 4096


@dataclass(frozen=True)
class TrialPlan:
    profile: RadiiProfile
    alpha: float
    max_n: int
    trials: int
    seed: int
    experiment: str = "tail"
    workers: int = 1

    def __post_init__(self):
        check_alpha(self.alpha)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    den = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class EventStats:
    successes: int
    trials: int
    estimate: float
    wilson_95: tuple[float, float]
    flag: str | None = None

    @classmethod
    def of(cls, successes: int, trials: int, flag: str | None = None) -> "EventStats":
        successes, trials = int(successes), int(trials)
        return cls(successes, trials, successes / trials if trials else 0.0,
                   wilson_interval(successes, trials), flag)

    def sigma(self, p: float | None = None) -> float:
        """Binomial standard error at `p` (default: the estimate)."""
        p = self.estimate if p is None else p
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials) if self.trials else 0.0

    def to_dict(self) -> dict:
        return {"successes": self.successes, "trials": self.trials,
                "estimate": self.estimate, "wilson_95": list(self.wilson_95),
                "flag": self.flag}


def run_chunks(fn: Callable[[int, int], object], trials: int, workers: int = 1,
               chunk: int = DEFAULT_CHUNK, first_trial: int = 0) -> list:
    """fn(trial_start, n_trials) over fixed chunks, results in chunk order."""
    starts = list(range(first_trial, first_trial + trials, chunk))
    sizes = [min(chunk, first_trial + trials - s) for s in starts]
    if workers <= 1 or len(starts) == 1:
        return [fn(s, z) for s, z in zip(starts, sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, starts, sizes))


def _chunk_for(points_per_trial: int, budget: int = 1 << 22) -> int:
    return max(1, min(DEFAULT_CHUNK, budget // max(points_per_trial, 1)))


def annulus_turns(profile: RadiiProfile, seed: int, trial_start: int, n_trials: int,
                  m: int) -> np.ndarray:
    """(n_trials, N_m) turns of annulus m, identical to the sampler's angles."""
    counts = annulus_counts(profile, m)
    off = sum(counts[:m])
    u = rng.uniform_block(seed, trial_start, n_trials, off, counts[m])
    return to_turns(TWO_PI * u)


def _regime(alpha: float) -> str:
    return "hardy" if alpha == 0 else ("dirichlet" if alpha == 1 else "dalpha")


def _y_weight(alpha: float, n: int, m: int) -> float:
    if alpha == 1:
        return max(n, 1) / max(m, 1)
    return 2.0 ** ((1.0 - alpha) * (n - m))


# ---------------------------------------------------------------------------
# tail of the window statistic

def window_statistics(plan: TrialPlan, n: int, k: int, trial_start: int,
                      n_trials: int) -> np.ndarray:
    """Layer-variant Y of window (n, k) for a block of trials."""
    y = np.zeros(n_trials)
    lo, hi = k * 2.0 ** -n, (k + 1) * 2.0 ** -n
    counts = annulus_counts(plan.profile, plan.max_n)
    for m in range(n, plan.max_n + 1):
        if not counts[m]:
            continue
        t = annulus_turns(plan.profile, plan.seed, trial_start, n_trials, m)
        x = np.count_nonzero((t >= lo) & (t < hi), axis=1)
        y += x * _y_weight(plan.alpha, n, m)
    return y


def estimate_tail(plan: TrialPlan, window, A: float) -> EventStats:
    """Frequency of {Y_{n,k} >= A} for the plan's regime."""
    if plan.experiment != "tail":
        raise ValueError("estimate_tail needs a plan with experiment 'tail'")
    n, k = window.n, window.k
    counts = annulus_counts(plan.profile, plan.max_n)
    per = max(1, sum(counts[n:]))

    def work(s, z):
        return int(np.count_nonzero(window_statistics(plan, n, k, s, z) >= A))

    hits = run_chunks(work, plan.trials, plan.workers, _chunk_for(per))
    return EventStats.of(sum(hits), plan.trials)


@dataclass(frozen=True)
class TailRow:
    n: int
    A: float
    empirical: EventStats
    gf_bound: float
    closed_form: float | None

    def within(self, bound: float, nsigma: float = 3.0) -> bool:
        sig = math.sqrt(max(bound * (1 - bound), 0.0) / self.empirical.trials)
        return self.empirical.estimate <= bound + nsigma * sig

    def to_dict(self) -> dict:
        return {"n": self.n, "A": self.A, "empirical": self.empirical.to_dict(),
                "gf_bound": self.gf_bound, "closed_form": self.closed_form,
                "within_3sigma": self.within(self.gf_bound)}


def window0_level(t: np.ndarray) -> np.ndarray:
    """Largest n with t < 2^-n, i.e. the deepest first window holding turn t."""
    _, e = np.frexp(t)
    return np.where(t > 0, -e, np.iinfo(np.int32).max)


def tail_table(plan: TrialPlan, ns: Sequence[int], A: float | Callable[[int], float],
               closed_form: Callable[[int], float | None] | None = None) -> list[TailRow]:
    """Empirical tail of Y_{n,0} next to the generating-function bound, per n.

    Every row is estimated from the same trials: one pass per annulus
    places each point at its deepest first-window generation.
    """
    ns = list(ns)
    regime = _regime(plan.alpha)
    a_arr = np.array([A(n) if callable(A) else A for n in ns], dtype=float)
    counts = annulus_counts(plan.profile, plan.max_n)
    lo = min(ns) if ns else 0
    per = max(1, sum(counts[lo:]))

    def work(s, z):
        ys = np.zeros((z, len(ns)))
        for m in range(lo, plan.max_n + 1):
            if not counts[m]:
                continue
            lev = window0_level(annulus_turns(plan.profile, plan.seed, s, z, m))
            for j, n in enumerate(ns):
                if n <= m:
                    ys[:, j] += np.count_nonzero(lev >= n, axis=1) * _y_weight(plan.alpha, n, m)
        return np.count_nonzero(ys >= a_arr, axis=0)

    hits = np.sum(run_chunks(work, plan.trials, plan.workers, _chunk_for(per)), axis=0)
    rows = []
    for j, n in enumerate(ns):
        gf = generating_function_bound(counts, regime, n, float(a_arr[j]),
                                       alpha=plan.alpha if regime == "dalpha" else None)
        rows.append(TailRow(n, float(a_arr[j]), EventStats.of(int(hits[j]), plan.trials),
                            gf.bound, closed_form(n) if closed_form else None))
    return rows


def tail_csv(rows: Sequence[TailRow]) -> str:
    buf = io.StringIO(newline="")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["n", "A", "empirical", "sigma", "gf_bound", "closed_form", "within_3sigma"])
    for r in rows:
        sig = math.sqrt(max(r.gf_bound * (1 - r.gf_bound), 0.0) / r.empirical.trials)
        wr.writerow([r.n, repr(r.A), repr(r.empirical.estimate), repr(sig), repr(r.gf_bound),
                     "" if r.closed_form is None else repr(r.closed_form), int(r.within(r.gf_bound))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# separation

def _quick_unseparated(pts: np.ndarray, metric: str, delta: float) -> bool:
    """True if an obvious candidate pair is already closer than delta."""
    if pts.size < 2:
        return False
    ang = np.angle(pts)
    order = np.argsort(ang, kind="stable")
    i, j = order, np.roll(order, -1)
    rad_order = np.argsort(np.abs(pts), kind="stable")
    i = np.concatenate([i, rad_order[:-1]])
    j = np.concatenate([j, rad_order[1:]])
    keep = i != j
    d = np.asarray(pair_distance(metric, pts[i[keep]], pts[j[keep]]))
    return bool(d.size and d.min() < delta)


def is_separated(config: Configuration, metric: str, delta: float) -> bool:
    pts = config.complex_points()
    if _quick_unseparated(pts, metric, delta):
        return False
    return min_separation_points(pts, metric, delta).separated


def _trend(stats: Sequence[EventStats], degenerate: bool = False) -> str:
    if degenerate:
        return "degenerate"
    first, last = stats[0], stats[-1]
    se = math.sqrt(first.sigma() ** 2 + last.sigma() ** 2)
    drop = first.estimate - last.estimate
    if last.estimate < 0.5 or (se > 0 and drop > 3 * se) or (se == 0 and drop > 0):
        return "decaying"
    return "stable"


def separation_trend(profile: RadiiProfile, metric: str, delta: float,
                     depths: Sequence[int], trials: int, seed: int,
                     workers: int = 1) -> list[EventStats]:
    """Per depth, the frequency of {min separation >= delta} over fresh trials."""
    if list(depths) != sorted(set(depths)):
        raise ValueError("depths must be strictly increasing")
    out = []
    for i, d in enumerate(depths):
        def work(s, z, d=d):
            return sum(is_separated(sample_steinhaus(profile, d, seed, t), metric, delta)
                       for t in range(s, s + z))
        hits = run_chunks(work, trials, workers, 64, first_trial=i * trials)
        out.append(EventStats.of(sum(hits), trials))
    return out


def uncrowded_road_frequency(N: int, gap_fraction: float, trials: int, seed: int,
                             workers: int = 1, counter_offset: int = 0,
                             trial_offset: int = 0) -> EventStats:
    """Frequency of {some pair of N uniform angles within 2pi * gap_fraction}."""
    if N < 2:
        return EventStats.of(0, trials, flag="impossible: fewer than two points")

    def work(s, z):
        u = rng.uniform_block(seed, s, z, counter_offset, N)
        u = np.sort(u, axis=1)
        gaps = np.diff(u, axis=1, append=u[:, :1] + 1.0)
        return int(np.count_nonzero(gaps.min(axis=1) <= gap_fraction))

    hits = run_chunks(work, trials, workers, _chunk_for(N), first_trial=trial_offset)
    return EventStats.of(sum(hits), trials)


def dsep_event_frequency(profile: RadiiProfile, k: int, gamma: float, trials: int,
                         seed: int, workers: int = 1) -> tuple[EventStats, float]:
    """Frequency of two annulus-k points within angle pi 2^(-gamma k), with the
    closed-form value it should match."""
    if not (0.5 < gamma < 1):
        raise ValueError("gamma must lie in (1/2, 1)")
    counts = annulus_counts(profile, k)
    N = counts[k]
    g = 2.0 ** (-gamma * k - 1)
    if N < 2:
        return EventStats.of(0, trials, flag="impossible: N_k < 2"), 0.0
    closed = uncrowded_road_probability(N, g)
    stats = uncrowded_road_frequency(N, g, trials, seed, workers, counter_offset=sum(counts[:k]))
    if not closed.valid:
        stats = EventStats.of(stats.successes, stats.trials, flag="crowded: N_k g > 1")
    return stats, closed.probability


# ---------------------------------------------------------------------------
# overflow of the counterexample

def overflow_frequency(profile: RadiiProfile, n: int, N: int, trials: int, seed: int,
                       k: int | None = None, workers: int = 1) -> EventStats:
    """Frequency of {X_{n,m,k} >= 2^(m-n) for all m in n..n+N}.

    With k=None every window of generation n in a trial counts as one
    observation, so the estimate covers trials * 2^n window samples.
    """
    counts = annulus_counts(profile, n + N)
    if any(counts[m] < (1 << (m - n)) for m in range(n, n + N + 1)):
        return EventStats.of(0, trials * (1 if k is not None else 1 << n),
                             flag="impossible: too few points")
    scale = 1 << n
    per = sum(counts[n:n + N + 1])

    def work(s, z):
        keep = None
        for m in range(n, n + N + 1):
            t = annulus_turns(profile, seed, s, z, m)
            w = (t * scale).astype(np.int64)
            key = (np.arange(z, dtype=np.int64)[:, None] * scale + w).ravel()
            if k is not None:
                key = key[(w.ravel() == k)]
            uniq, cnt = np.unique(key, return_counts=True)
            good = uniq[cnt >= (1 << (m - n))]
            keep = good if keep is None else np.intersect1d(keep, good, assume_unique=True)
            if keep.size == 0:
                break
        return int(keep.size)

    hits = run_chunks(work, trials, workers, _chunk_for(per, 1 << 21))
    return EventStats.of(sum(hits), trials * (1 if k is not None else scale))


def decay_slope(ns: Sequence[int], freqs: Sequence[float]) -> float:
    """Least-squares slope of log(freq) against log(n)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(freqs, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------------------
# zero-set interval coverage

class ResolutionError(ValueError):
    """Grid cells are coarser than the smallest interval."""


@dataclass(frozen=True)
class ZeroCoveragePlan:
    alpha: float
    kappa: float = 2.0
    L: int = 10_000
    grid: int = 1 << 16
    multiplicities: tuple[int, ...] = (1, 2, 4, 8)
    checkpoints: tuple[int, ...] | None = None

    def __post_init__(self):
        if not (0 < self.alpha < 1):
            raise ValueError("alpha must lie in (0, 1)")
        if self.kappa <= 1:
            raise ValueError("kappa must exceed 1")
        if self.grid < 1 << 10:
            raise ValueError("grid must be at least 2^10")
        if self.L < 1:
            raise ValueError("L must be >= 1")


@dataclass(frozen=True)
class CoverageResult:
    plan: ZeroCoveragePlan
    total_measure: float
    checkpoints: tuple[int, ...]
    mean_covered: tuple[float, ...]
    mean_multi: dict[int, tuple[float, ...]]
    final_covered: tuple[float, ...]
    final_multi: dict[int, tuple[float, ...]]

    def fraction_of_trials(self, M: int, level: float) -> float:
        vals = self.final_multi[M]
        return sum(v >= level for v in vals) / len(vals)

    def curve_csv(self) -> str:
        buf = io.StringIO(newline="")
        wr = csv.writer(buf, lineterminator="\n")
        Ms = sorted(self.mean_multi)
        wr.writerow(["L", "covered"] + [f"multiplicity_ge_{M}" for M in Ms])
        for i, L in enumerate(self.checkpoints):
            wr.writerow([L, repr(self.mean_covered[i])] + [repr(self.mean_multi[M][i]) for M in Ms])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "schema": "v1", "type": "zero_coverage", "alpha": self.plan.alpha,
            "kappa": self.plan.kappa, "L": self.plan.L, "grid": self.plan.grid,
            "total_measure": self.total_measure,
            "checkpoints": list(self.checkpoints),
            "mean_covered": list(self.mean_covered),
            "mean_multiplicity": {str(M): list(v) for M, v in self.mean_multi.items()},
            "trials": len(self.final_covered),
        }


def interval_measures(profile: RadiiProfile, alpha: float, L: int,
                      cap: int = 10**8) -> np.ndarray:
    """(1 - rho_l)^(1 - alpha) for the first L points in radius order."""
    from .disk_geometry import annulus_midpoint
    out, n, total = [], 0, 0
    while total < L:
        c = profile.count(n)
        if profile.kind == "table" and n >= len(profile.table):
            break
        take = min(c, L - total)
        if take:
            out.append(np.full(take, (1.0 - annulus_midpoint(n)) ** (1.0 - alpha)))
        total += take
        n += 1
        if n > 2000 or total > cap:
            raise ResourceError("profile too sparse or too large for the requested L")
    return np.minimum(np.concatenate(out) if out else np.zeros(0), 1.0)


def _cover_counts(lo: np.ndarray, hi: np.ndarray, G: int) -> np.ndarray:
    """Multiplicity per cell centre for half-open arcs [lo, hi) in turns."""
    diff = np.zeros(G + 1, dtype=np.int64)
    full = (hi - lo) >= 1.0
    mult_base = int(np.count_nonzero(full))
    lo, hi = lo[~full], hi[~full]
    js = np.ceil(lo * G - 0.5).astype(np.int64)
    je = np.ceil(hi * G - 0.5).astype(np.int64)
    # shift so the start lies in [0, G)
    shift = np.floor_divide(js, G)
    js -= shift * G
    je -= shift * G
    inside = je <= G
    np.add.at(diff, js[inside], 1)
    np.add.at(diff, je[inside], -1)
    wrap = ~inside
    np.add.at(diff, js[wrap], 1)
    diff[G] -= int(np.count_nonzero(wrap))
    diff[0] += int(np.count_nonzero(wrap))
    np.add.at(diff, je[wrap] - G, -1)
    return np.cumsum(diff[:G]) + mult_base


def zero_coverage(plan: ZeroCoveragePlan, profile: RadiiProfile, trials: int, seed: int,
                  workers: int = 1) -> CoverageResult:
    """Random rotations F_l of arcs of measure (1 - rho_l)^(1 - alpha); coverage
    of their union and of multiplicity >= M, per checkpoint L."""
    meas = interval_measures(profile, plan.alpha, plan.L)
    L = meas.size
    if L == 0:
        raise ValueError("profile has no points")
    if meas.min() * plan.grid < 1:
        raise ResolutionError(f"smallest arc {meas.min():.3g} is below the grid quantum "
                              f"1/{plan.grid}; raise the grid")
    if plan.checkpoints is None:
        cps = sorted({min(L, int(round(v))) for v in np.geomspace(1, L, 9)})
    else:
        cps = sorted({min(L, c) for c in plan.checkpoints})
    G = plan.grid
    Ms = plan.multiplicities

    def one_trial(t):
        u = rng.uniform(seed, t, np.arange(L))
        centre = to_turns(TWO_PI * u)
        lo = centre - meas / 2
        hi = centre + meas / 2
        cov, multi = [], {M: [] for M in Ms}
        mult = np.zeros(G, dtype=np.int64)
        prev = 0
        for c in cps:
            mult += _cover_counts(lo[prev:c], hi[prev:c], G)
            prev = c
            cov.append(np.count_nonzero(mult >= 1) / G)
            for M in Ms:
                multi[M].append(np.count_nonzero(mult >= M) / G)
        return cov, multi

    def work(s, z):
        return [one_trial(t) for t in range(s, s + z)]

    res = [r for chunk in run_chunks(work, trials, workers, 4) for r in chunk]
    mean_cov = tuple(float(np.mean([r[0][i] for r in res])) for i in range(len(cps)))
    mean_multi = {M: tuple(float(np.mean([r[1][M][i] for r in res])) for i in range(len(cps)))
                  for M in Ms}
    return CoverageResult(plan, float(meas.sum()), tuple(cps), mean_cov, mean_multi,
                          tuple(r[0][-1] for r in res),
                          {M: tuple(r[1][M][-1] for r in res) for M in Ms})


# ---------------------------------------------------------------------------
# empirical classification

@dataclass(frozen=True)
class TrendReport:
    profile_id: str
    alpha: float
    depths: tuple[int, ...]
    delta: float
    C: float
    per_depth: tuple[EventStats, ...]
    trend: str
    symbolic_interpolating: str
    agrees: bool | None
    flags: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {"schema": "v1", "type": "trend", "profile_id": self.profile_id,
                "alpha": self.alpha, "depths": list(self.depths), "delta": self.delta,
                "C": self.C, "per_depth": [s.to_dict() for s in self.per_depth],
                "trend": self.trend, "symbolic_interpolating": self.symbolic_interpolating,
                "agrees": self.agrees, "flags": list(self.flags)}

    def curve_csv(self) -> str:
        buf = io.StringIO(newline="")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["depth", "estimate", "wilson_lo", "wilson_hi", "trials"])
        for d, s in zip(self.depths, self.per_depth):
            wr.writerow([d, repr(s.estimate), repr(s.wilson_95[0]), repr(s.wilson_95[1]), s.trials])
        return buf.getvalue()


def trend_agrees(trend: str, symbolic: str) -> bool | None:
    if symbolic == "undecided" or trend == "degenerate":
        return None
    return (trend == "stable") == (symbolic == "as_yes")


def joint_event(config: Configuration, alpha: float, delta: float, C: float) -> bool:
    metric = "dirichlet" if alpha == 1 else "pseudohyperbolic"
    if one_box_constant(config, alpha).one_box_constant > C:
        return False
    return is_separated(config, metric, delta)


def classify_empirical(profile: RadiiProfile, alpha: float, depths: Sequence[int] = (6, 10, 14),
                       delta: float = 0.05, C: float = 8.0, trials: int = 200, seed: int = 0,
                       workers: int = 1) -> TrendReport:
    """Joint frequency of {separated at delta and one-box constant <= C} per
    depth, its trend, and the symbolic verdict next to it."""
    alpha = check_alpha(alpha)
    depths = tuple(depths)
    symbolic = classify(profile, alpha).interpolating
    if sum(annulus_counts(profile, max(depths))) == 0:
        stats = tuple(EventStats.of(trials, trials) for _ in depths)
        return TrendReport(profile.descriptor, alpha, depths, delta, C, stats, "degenerate",
                           symbolic, None, ("empty profile",))
    per = []
    for i, d in enumerate(depths):
        def work(s, z, d=d):
            return sum(joint_event(sample_steinhaus(profile, d, seed, t), alpha, delta, C)
                       for t in range(s, s + z))
        hits = run_chunks(work, trials, workers, 16, first_trial=i * trials)
        per.append(EventStats.of(sum(hits), trials))
    trend = _trend(per)
    return TrendReport(profile.descriptor, alpha, depths, delta, C, tuple(per), trend,
                       symbolic, trend_agrees(trend, symbolic))


def enumerated_tail(profile_counts: Sequence[int], n: int, A: float, alpha: float) -> float:
    """Exact P(Y_{n,k} >= A) for a small profile (binomial convolution)."""
    regime = _regime(alpha)
    return exact_tail_probability(profile_counts, regime, n, A,
                                  alpha if regime == "dalpha" else None)
