"""Dyadic Carleson windows, layered counts X_{n,m,k}, window masses and
one-box constants.

Window (n, k) is the box over the arc of turns [k 2^-n, (k+1) 2^-n) holding
every point of annulus >= n.  Two mass variants exist:

* ``exact``: each point weighs 1 / ||k_lambda||^2 at its true radius and
  the box mass is divided by the capacity estimate of the arc;
* ``layer``: each point weighs by its annulus only, giving exactly the
  statistics Y_{n,k} of the tail estimates.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .disk_geometry import check_alpha, kernel_norm_sq
from .sampler import Configuration

VARIANTS = ("exact", "layer")


@dataclass(frozen=True, order=True)
class DyadicWindow:
    n: int
    k: int

    def __post_init__(self):
        if self.n < 0 or not (0 <= self.k < (1 << self.n)):
            raise ValueError(f"invalid dyadic window (n={self.n}, k={self.k})")

    @property
    def length(self) -> float:
        return math.ldexp(1.0, -self.n)

    def children(self) -> tuple["DyadicWindow", "DyadicWindow"]:
        return DyadicWindow(self.n + 1, 2 * self.k), DyadicWindow(self.n + 1, 2 * self.k + 1)

    def contains_turns(self, t) -> np.ndarray:
        t = np.asarray(t)
        return (t >= self.k * self.length) & (t < (self.k + 1) * self.length)


def capacity_estimate(alpha: float, length: float) -> float:
    """|I| for alpha = 0, |I|^(1-alpha) for 0 < alpha < 1,
    1 / log(e / |I|) for alpha = 1 (unit equivalence constants)."""
    alpha = check_alpha(alpha)
    if not (0 < length <= 1):
        raise ValueError(f"arc length must lie in (0, 1], got {length}")
    if alpha == 1:
        return 1.0 / (1.0 - math.log(length))
    return length ** (1.0 - alpha)


def _slice_bounds(annulus: np.ndarray) -> np.ndarray:
    """start offsets of each annulus block in a (annulus, angle)-sorted config."""
    top = int(annulus.max()) + 1 if annulus.size else 1
    return np.searchsorted(annulus, np.arange(top + 1), side="left")


def window_layer_counts(config: Configuration, window: DyadicWindow) -> list[int]:
    """X_{n,m,k} for m = 0..max_n (entries m < n are zero).

    Uses a binary search on each annulus block, which is angle-sorted.
    """
    top = max(config.max_n, int(config.annulus.max()) if len(config) else 0)
    out = [0] * (top + 1)
    if len(config) == 0:
        return out
    bounds = _slice_bounds(config.annulus)
    lo_t, hi_t = window.k * window.length, (window.k + 1) * window.length
    t = config.turns
    for m in range(window.n, len(bounds) - 1):
        a, b = bounds[m], bounds[m + 1]
        if a == b:
            continue
        seg = t[a:b]
        out[m] = int(np.searchsorted(seg, hi_t, "left") - np.searchsorted(seg, lo_t, "left"))
    return out


def point_weights(config: Configuration, alpha: float, variant: str = "exact") -> np.ndarray:
    alpha = check_alpha(alpha)
    if variant == "exact":
        return 1.0 / np.asarray(kernel_norm_sq(alpha, config.radius), dtype=float)
    if variant == "layer":
        m = config.annulus.astype(float)
        if alpha == 1:
            return 1.0 / np.maximum(m, 1.0)
        return np.exp2(-(1.0 - alpha) * m)
    raise ValueError(f"variant must be one of {VARIANTS}")


def normalizer(alpha: float, n: int, variant: str = "exact") -> float:
    """Factor turning the raw box sum of generation n into the normalized mass."""
    if variant == "exact":
        return 1.0 / capacity_estimate(alpha, math.ldexp(1.0, -n))
    if alpha == 1:
        return float(max(n, 1))
    return 2.0 ** ((1.0 - alpha) * n)


def window_mass(config: Configuration, alpha: float, window: DyadicWindow,
                variant: str = "exact") -> float:
    """Sum of point weights inside the Carleson box."""
    if len(config) == 0:
        return 0.0
    w = point_weights(config, alpha, variant)
    inside = (config.annulus >= window.n) & window.contains_turns(config.turns)
    return float(np.sum(w[inside]))


def normalized_window_mass(config: Configuration, alpha: float, window: DyadicWindow,
                           variant: str = "exact") -> float:
    return window_mass(config, alpha, window, variant) * normalizer(alpha, window.n, variant)


def layer_statistic(layer_counts, n: int, alpha: float) -> float:
    """Y for a window of generation n from its layer counts (index m)."""
    alpha = check_alpha(alpha)
    total = 0.0
    for m in range(n, len(layer_counts)):
        x = layer_counts[m]
        if not x:
            continue
        if alpha == 1:
            total += x * max(n, 1) / max(m, 1)
        else:
            total += x * 2.0 ** ((1.0 - alpha) * (n - m))
    return total


@dataclass(frozen=True)
class WindowStats:
    window: DyadicWindow
    layer_counts: tuple[int, ...]
    y_hardy: float
    y_alpha: float
    alpha: float
    y_dirichlet: float


def window_stats(config: Configuration, window: DyadicWindow, alpha: float = 0.5) -> WindowStats:
    lc = window_layer_counts(config, window)
    return WindowStats(window, tuple(lc), layer_statistic(lc, window.n, 0.0),
                       layer_statistic(lc, window.n, alpha), alpha,
                       layer_statistic(lc, window.n, 1.0))


@dataclass(frozen=True)
class CarlesonReport:
    alpha: float
    max_depth: int
    variant: str
    one_box_constant: float
    worst_window: DyadicWindow | None
    per_generation_max: tuple[float, ...]
    per_generation_argmax: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "schema": "v1",
            "type": "carleson",
            "alpha": self.alpha,
            "max_depth": self.max_depth,
            "variant": self.variant,
            "one_box_constant": self.one_box_constant,
            "worst_window": None if self.worst_window is None
            else {"n": self.worst_window.n, "k": self.worst_window.k},
            "per_generation_max": list(self.per_generation_max),
            "per_generation_argmax": list(self.per_generation_argmax),
        }

    def generations_csv(self) -> str:
        buf = io.StringIO(newline="")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["generation", "max_normalized_mass", "argmax_k"])
        for n, (v, k) in enumerate(zip(self.per_generation_max, self.per_generation_argmax)):
            wr.writerow([n, repr(v), k])
        return buf.getvalue()


def generation_masses(config: Configuration, alpha: float, max_depth: int,
                      variant: str = "exact") -> list[np.ndarray]:
    """Raw box sums for every window of generations 0..max_depth.

    One weighted bincount per annulus at its own generation, then children
    are folded into parents from the deepest generation up: O(P + 2^depth).
    """
    D = max_depth
    w = point_weights(config, alpha, variant) if len(config) else np.zeros(0)
    ann = config.annulus
    t = config.turns
    acc = np.zeros(1 << D)
    deep = ann >= D
    if np.any(deep):
        acc += np.bincount((t[deep] * (1 << D)).astype(np.int64), weights=w[deep],
                           minlength=1 << D)
    out = [acc]
    for n in range(D - 1, -1, -1):
        acc = acc.reshape(-1, 2).sum(axis=1)
        sel = ann == n
        if np.any(sel):
            acc = acc + np.bincount((t[sel] * (1 << n)).astype(np.int64), weights=w[sel],
                                    minlength=1 << n)
        out.append(acc)
    out.reverse()
    return out


def generation_layer_counts(config: Configuration, n: int) -> np.ndarray:
    """(2^n, max_n + 1) integer array of X_{n,m,k} for every window of generation n."""
    top = max(config.max_n, int(config.annulus.max()) if len(config) else 0)
    out = np.zeros((1 << n, top + 1), dtype=np.int64)
    sel = config.annulus >= n
    k = (config.turns[sel] * (1 << n)).astype(np.int64)
    np.add.at(out, (k, config.annulus[sel]), 1)
    return out


def one_box_constant(config: Configuration, alpha: float, max_depth: int | None = None,
                     variant: str = "exact") -> CarlesonReport:
    """Largest normalized window mass over all dyadic windows of depth <= max_depth."""
    alpha = check_alpha(alpha)
    max_depth = config.max_n if max_depth is None else max_depth
    if max_depth > config.max_n:
        raise ValueError("max_depth may not exceed the configuration's max_n")
    masses = generation_masses(config, alpha, max_depth, variant)
    best, worst = 0.0, None
    gmax, gargmax = [], []
    for n, m in enumerate(masses):
        vals = m * normalizer(alpha, n, variant)
        k = int(np.argmax(vals))
        v = float(vals[k])
        gmax.append(v)
        gargmax.append(k)
        if v > best:
            best, worst = v, DyadicWindow(n, k)
    return CarlesonReport(alpha, max_depth, variant, best, worst, tuple(gmax), tuple(gargmax))
