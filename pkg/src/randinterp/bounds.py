"""Closed-form probability tools: generating-function (Markov) tail bounds
for the three window statistics, the closed forms obtained by loosening
them, the uncrowded-road probability and the Poisson approximation of
small binomial probabilities."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import binom

from .profiles import RadiiProfile, annulus_counts

REGIMES = ("hardy", "dalpha", "dirichlet")


class PreconditionError(ValueError):
    """A closed-form bound was requested outside the range where it holds."""


@dataclass(frozen=True)
class TailBound:
    regime: str
    param: float | None
    n: int
    A: float
    s_used: float
    bound: float
    log_bound: float
    paper_closed_form: float | None = None
    truncation: int | None = None

    def to_dict(self) -> dict:
        return {"regime": self.regime, "param": self.param, "n": self.n, "A": self.A,
                "s": self.s_used, "bound": self.bound, "log_bound": self.log_bound,
                "closed_form": self.paper_closed_form, "truncation": self.truncation}


def layer_weight(regime: str, n: int, m, alpha: float | None = None):
    """Weight of one point of annulus m in the statistic of a generation-n window."""
    m = np.asarray(m, dtype=float)
    if regime == "hardy":
        return np.exp2(n - m)
    if regime == "dalpha":
        return np.exp2((1.0 - alpha) * (n - m))
    if regime == "dirichlet":
        return max(n, 1) / np.maximum(m, 1.0)
    raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")


def regime_alpha(regime: str, param: float | None) -> float:
    """Space parameter matching a regime (hardy: 0, dirichlet: 1)."""
    return {"hardy": 0.0, "dirichlet": 1.0}.get(regime, param)


def default_s_grid(n: int, size: int = 64) -> np.ndarray:
    """Geometric grid from 2^(1/4) to 2^(2n)."""
    return np.geomspace(2 ** 0.25, 2.0 ** max(2 * n, 0.5), size)


def log_generating_function(counts: Sequence[int], regime: str, n: int, s: float,
                            alpha: float | None = None) -> float:
    """log E[s^Y] for the truncated statistic of a generation-n window."""
    if s <= 1:
        raise ValueError(f"s must exceed 1, got {s}")
    p = math.ldexp(1.0, -n)
    log_s = math.log(s)
    terms = []
    for m in range(n, len(counts)):
        N = counts[m]
        if N:
            w = float(layer_weight(regime, n, m, alpha))
            terms.append(N * math.log1p(p * math.expm1(w * log_s)))
    return math.fsum(terms)


def generating_function_bound(profile: RadiiProfile | Sequence[int], regime: str, n: int,
                              A: float, s_grid: Sequence[float] | None = None,
                              alpha: float | None = None,
                              max_n: int | None = None) -> TailBound:
    """min over s of E[s^Y] / s^A, a Markov bound on P(Y >= A)."""
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    if regime == "dalpha" and not (alpha is not None and 0 < alpha < 1):
        raise ValueError("dalpha regime needs alpha in (0, 1)")
    if A <= 0:
        raise ValueError("A must be positive")
    if isinstance(profile, RadiiProfile):
        counts = annulus_counts(profile, max_n)
    else:
        counts = list(profile)
    grid = default_s_grid(n) if s_grid is None else np.asarray(s_grid, dtype=float)
    if np.any(grid <= 1):
        raise ValueError("every s in the grid must exceed 1")
    best_log, best_s = math.inf, float(grid[0])
    for s in grid:
        lb = log_generating_function(counts, regime, n, float(s), alpha) - A * math.log(s)
        if lb < best_log:
            best_log, best_s = lb, float(s)
    return TailBound(regime, alpha if regime == "dalpha" else None, n, float(A), best_s,
                     math.exp(min(best_log, 0.0)), best_log, None, len(counts) - 1)


def paper_bound_hardy(epsilon: float, n: int) -> TailBound:
    """P(Y >= 4/eps) <= exp(2^eps/(2^eps - 1) * 2^(-eps n/2)) * 2^(-2n),
    valid when N_m <= 2^((1-eps) m) for m >= n; s = 2^(eps n/2)."""
    if not (0 < epsilon < 1):
        raise ValueError("epsilon must lie in (0, 1)")
    q = 2 ** epsilon
    log_b = q / (q - 1) * 2.0 ** (-epsilon * n / 2) - 2 * n * math.log(2)
    return TailBound("hardy", epsilon, n, 4 / epsilon, 2.0 ** (epsilon * n / 2),
                     math.exp(min(log_b, 0.0)), log_b, math.exp(log_b))


def remainder_sum(profile: RadiiProfile | Sequence[int], n: int, alpha: float,
                  max_n: int | None = None) -> float:
    """c_n = sum_{m >= n} 2^(-(1-alpha) m) N_m over the materialized counts."""
    counts = annulus_counts(profile, max_n) if isinstance(profile, RadiiProfile) else list(profile)
    return math.fsum(2.0 ** (-(1 - alpha) * m) * counts[m] for m in range(n, len(counts)))


def dirichlet_tail(profile: RadiiProfile | Sequence[int], n: int,
                   max_n: int | None = None) -> float:
    """sum_{m >= n} N_m / m over the materialized counts."""
    counts = annulus_counts(profile, max_n) if isinstance(profile, RadiiProfile) else list(profile)
    return math.fsum(counts[m] / max(m, 1) for m in range(n, len(counts)))


def paper_bound_dalpha(alpha: float, n: int, c_n: float) -> TailBound:
    """P(Y^alpha >= 4/alpha) <= e * 2^(-2n) with s = 2^(alpha n), needs c_n <= 1."""
    if not (0 < alpha < 1):
        raise ValueError("alpha must lie in (0, 1)")
    if c_n > 1:
        raise PreconditionError(f"remainder c_n = {c_n} exceeds 1; the closed form does not apply")
    log_b = 1 - 2 * n * math.log(2)
    return TailBound("dalpha", alpha, n, 4 / alpha, 2.0 ** (alpha * n),
                     math.exp(min(log_b, 0.0)), log_b, math.exp(log_b))


def paper_bound_dirichlet(n: int, tail: float) -> TailBound:
    """P(Y >= 4) <= exp(n 2^(-n/2) tail) 2^(-2n) with s = 2^(n/2)."""
    if tail < 0:
        raise ValueError("tail sum must be nonnegative")
    log_b = n * 2.0 ** (-n / 2) * tail - 2 * n * math.log(2)
    return TailBound("dirichlet", None, n, 4.0, 2.0 ** (n / 2),
                     math.exp(min(log_b, 0.0)), log_b, math.exp(log_b))


def closed_form_bound(regime: str, n: int, profile: RadiiProfile, param: float | None = None,
                      max_n: int | None = None) -> TailBound:
    """The closed form for a regime, with its profile-dependent inputs filled in."""
    if regime == "hardy":
        return paper_bound_hardy(param, n)
    if regime == "dalpha":
        return paper_bound_dalpha(param, n, remainder_sum(profile, n, param, max_n))
    return paper_bound_dirichlet(n, dirichlet_tail(profile, n, max_n))


def exact_tail_probability(counts: Sequence[int], regime: str, n: int, A: float,
                           alpha: float | None = None) -> float:
    """P(Y >= A) by convolving the independent binomial layers exactly.

    Feasible for small profiles only (the support grows multiplicatively).
    """
    p = math.ldexp(1.0, -n)
    dist = {0.0: 1.0}
    for m in range(n, len(counts)):
        N = counts[m]
        if not N:
            continue
        w = float(layer_weight(regime, n, m, alpha))
        pmf = binom.pmf(np.arange(N + 1), N, p)
        new: dict[float, float] = {}
        for y, py in dist.items():
            for x in range(N + 1):
                key = y + x * w
                new[key] = new.get(key, 0.0) + py * pmf[x]
        dist = new
    return math.fsum(pr for y, pr in dist.items() if y >= A)


class UncrowdedRoad(NamedTuple):
    probability: float
    valid: bool


def uncrowded_road_probability(N: int, gap_fraction: float) -> UncrowdedRoad:
    """Probability that some pair among N uniform angles lies within circle
    distance 2 pi * gap_fraction: 1 - (1 - N g)^(N-1).  When N g > 1 a
    collision is certain and the result is flagged as outside the formula's
    range."""
    if N < 2:
        raise ValueError("N must be at least 2")
    if gap_fraction < 0:
        raise ValueError("gap_fraction must be nonnegative")
    x = N * gap_fraction
    if x > 1:
        return UncrowdedRoad(1.0, False)
    # 1 - (1-x)^(N-1) without cancellation
    return UncrowdedRoad(-math.expm1((N - 1) * math.log1p(-x)) if x < 1 else 1.0, True)


def poisson_small_prob(p: float, N: int, s: int) -> tuple[float, float]:
    """(P(X = s) for X ~ B(N, p), its Poisson-regime approximation (pN)^s / s!)."""
    if not (0 < p < 1):
        raise ValueError("p must lie in (0, 1)")
    if s < 0 or N < 0:
        raise ValueError("N and s must be nonnegative")
    if s > N:
        exact = 0.0
    else:
        exact = math.exp(math.lgamma(N + 1) - math.lgamma(s + 1) - math.lgamma(N - s + 1)
                         + s * math.log(p) + (N - s) * math.log1p(-p))
    return exact, (p * N) ** s / math.factorial(s)


def overflow_probability(profile: RadiiProfile, n: int, N: int) -> float:
    """Exact P(X_{n,m,k} >= 2^(m-n) for every m in n..n+N)."""
    prob = 1.0
    for m in range(n, n + N + 1):
        prob *= float(binom.sf((1 << (m - n)) - 1, float(profile.count(m)), math.ldexp(1.0, -n)))
    return prob


def overflow_poisson_approximation(profile: RadiiProfile, n: int, N: int) -> float:
    """Product of the Poisson-regime factors (N_m 2^-n)^j / j!, j = 2^(m-n)."""
    prob = 1.0
    for m in range(n, n + N + 1):
        j = 1 << (m - n)
        prob *= (profile.count(m) * math.ldexp(1.0, -n)) ** j / math.factorial(j)
    return prob


def elementary_inequality_holds(x: float, a: float) -> bool:
    """x (a^(1/x) - 1) <= a for x >= 1, a > 0."""
    return x * math.expm1(math.log(a) / x) <= a * (1 + 1e-12)


def bounds_table(profile: RadiiProfile, regime: str, ns: Sequence[int], param=None,
                 max_n: int | None = None) -> list[TailBound]:
    """Closed form next to the generating-function bound at the same (A, s)."""
    rows = []
    for n in ns:
        cf = closed_form_bound(regime, n, profile, param, max_n)
        gf = generating_function_bound(profile, regime, n, cf.A, [cf.s_used],
                                       alpha=param if regime == "dalpha" else None,
                                       max_n=max_n)
        rows.append(replace(gf, param=param, paper_closed_form=cf.paper_closed_form))
    return rows


def bounds_csv(rows: Sequence[TailBound]) -> str:
    buf = io.StringIO(newline="")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["n", "regime", "A", "s", "bound", "closed_form"])
    for r in rows:
        wr.writerow([r.n, r.regime, repr(r.A), repr(r.s_used), repr(r.bound),
                     "" if r.paper_closed_form is None else repr(r.paper_closed_form)])
    return buf.getvalue()
