"""Exact geometry of the open unit disk.

Points are handled as complex numbers (scalars or numpy arrays); the
`DiskPoint` dataclass is the validated scalar form used at API boundaries.
Every metric here is symmetric bit-for-bit under argument swap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal, Union

import numpy as np

if TYPE_CHECKING:
    from .sampler import Configuration

TWO_PI = 2.0 * math.pi

Metric = Literal["pseudohyperbolic", "dirichlet"]
METRICS = ("pseudohyperbolic", "dirichlet")

# below this |conj(z) w| the log kernel switches to its Taylor polynomial
_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class DiskPoint:
    radius: float
    angle: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.radius < 1.0):
            raise ValueError(f"radius must lie in [0, 1), got {self.radius}")
        object.__setattr__(self, "angle", normalize_angle(self.angle))

    @property
    def z(self) -> complex:
        return self.radius * complex(math.cos(self.angle), math.sin(self.angle))

    @classmethod
    def from_complex(cls, z: complex) -> "DiskPoint":
        return cls(abs(z), math.atan2(z.imag, z.real))


PointLike = Union[DiskPoint, complex, float, np.ndarray]


def normalize_angle(theta):
    """Reduce an angle (or array of angles) into [0, 2*pi)."""
    t = np.mod(theta, TWO_PI)
    # mod can return exactly 2*pi for tiny negative inputs
    t = np.where(t >= TWO_PI, 0.0, t)
    return float(t) if np.ndim(t) == 0 else t


def circle_distance(a, b):
    """Angular distance on the circle, in [0, pi]."""
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), TWO_PI))
    d = np.minimum(d, TWO_PI - d)
    return float(d) if np.ndim(d) == 0 else d


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def _c(z: PointLike):
    if isinstance(z, DiskPoint):
        return z.z
    return np.asarray(z, dtype=complex) if isinstance(z, np.ndarray) else complex(z)


def _conj_mul(z, w):
    """conj(z) * w from real products, so scalar and array inputs round alike
    (numpy's vectorized complex multiply may fuse operations)."""
    a, b = np.real(z), np.imag(z)
    c, d = np.real(w), np.imag(w)
    return (a * c + b * d) + 1j * (a * d - b * c)


def _canonical_product(z, w):
    # conj(z)*w and conj(w)*z are exact conjugates; folding onto the upper
    # half-plane makes every |f(conj(z) w)| independent of argument order
    u = _conj_mul(z, w)
    return np.where(np.imag(u) < 0, np.conj(u), u)


def _scalar(x):
    return x.item() if isinstance(x, np.ndarray) and x.ndim == 0 else x


def pseudo_distance(z: PointLike, w: PointLike):
    """|z - w| / |1 - conj(z) w|."""
    z, w = _c(z), _c(w)
    u = _canonical_product(z, w)
    return _scalar(np.abs(z - w) / np.abs(1.0 - u))


def separation_quantity(z: PointLike, w: PointLike):
    """(1-|z|^2)(1-|w|^2) / |1 - conj(z) w|^2, which equals 1 - rho^2."""
    z, w = _c(z), _c(w)
    u = _canonical_product(z, w)
    num = (1.0 - np.abs(z) ** 2) * (1.0 - np.abs(w) ** 2)
    return _scalar(num / np.abs(1.0 - u) ** 2)


def _log_kernel(u):
    """(1/u) log(1/(1-u)) with the removable singularity at u = 0 filled."""
    u = np.asarray(u, dtype=complex)
    small = np.abs(u) < _SERIES_CUTOFF
    safe = np.where(small, 0.5, u)
    x, y = safe.real, safe.imag
    # log(1 - u) from its modulus and argument; numpy's complex log1p
    # loses relative accuracy for small |u|
    log_1mu = 0.5 * np.log1p(x * (x - 2.0) + y * y) + 1j * np.arctan2(-y, 1.0 - x)
    direct = -log_1mu / safe
    series = 1.0 + u * (1 / 2 + u * (1 / 3 + u * (1 / 4 + u / 5)))
    return np.where(small, series, direct)


def kernel_value(alpha: float, z: PointLike, w: PointLike):
    """Reproducing kernel of the weighted Dirichlet space D_alpha at (z, w).

    For alpha < 1 this is (1 - conj(z) w)^-(1 - alpha) on the principal
    branch; for alpha = 1 it is (1/(conj(z) w)) log(1/(1 - conj(z) w)).
    """
    alpha = check_alpha(alpha)
    u = _conj_mul(_c(z), _c(w))
    if alpha < 1.0:
        out = (1.0 - u) ** (-(1.0 - alpha))
    else:
        out = _log_kernel(u)
    return _scalar(out)


def kernel_norm_sq(alpha: float, z: PointLike):
    """Squared norm of the kernel at z as used for the weights of mu_Lambda.

    alpha < 1: (1 - |z|^2)^-(1 - alpha).  alpha = 1: log(1/(1 - |z|^2)),
    which vanishes at the origin.
    """
    alpha = check_alpha(alpha)
    t = 1.0 - np.abs(_c(z)) ** 2
    if alpha < 1.0:
        out = t ** (-(1.0 - alpha))
    else:
        out = -np.log(t)
    return _scalar(out)


def dirichlet_distance(z: PointLike, w: PointLike):
    """sqrt(1 - |k_w(z)|^2 / (k_z(z) k_w(w))) for the alpha = 1 kernel."""
    z, w = _c(z), _c(w)
    u = _canonical_product(z, w)
    kzw = np.abs(_log_kernel(u))
    kzz = np.real(_log_kernel(np.abs(z) ** 2))
    kww = np.real(_log_kernel(np.abs(w) ** 2))
    val = 1.0 - kzw * kzw / (kzz * kww)
    val = np.where(np.asarray(z) == np.asarray(w), 0.0, val)
    return _scalar(np.sqrt(np.clip(val, 0.0, 1.0)))


def annulus_index(radius):
    """Dyadic annulus index n with 1 - 2^-n <= radius < 1 - 2^-(n+1).

    Computed from the binary exponent of 1 - radius, which is exact for
    radius >= 1/2.
    """
    r = np.asarray(radius, dtype=float)
    if np.any((r < 0) | (r >= 1)):
        raise ValueError("radius must lie in [0, 1)")
    mant, expo = np.frexp(1.0 - r)
    n = -expo + (mant == 0.5)
    n = n.astype(np.int64)
    return int(n) if n.ndim == 0 else n


def annulus_midpoint(n):
    """Radius 1 - 3 * 2^-(n+2), the midpoint of annulus n."""
    return 1.0 - 3.0 * np.ldexp(1.0, -np.asarray(n) - 2)


@dataclass(frozen=True)
class SeparationReport:
    metric: str
    min_distance: float
    argmin_pair: tuple[int, int] | None
    delta_threshold: float
    separated: bool

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "min_distance": self.min_distance,
            "argmin_pair": list(self.argmin_pair) if self.argmin_pair else None,
            "delta_threshold": self.delta_threshold,
            "separated": self.separated,
        }


def pair_distance(metric: str, z, w):
    if metric == "pseudohyperbolic":
        return pseudo_distance(z, w)
    if metric == "dirichlet":
        return dirichlet_distance(z, w)
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def _block_min(metric, pts, i_idx, j_idx, best, best_pair):
    if i_idx.size == 0:
        return best, best_pair
    d = np.asarray(pair_distance(metric, pts[i_idx], pts[j_idx]))
    m = d.min()
    if m < best:
        best, best_pair = m, None
    if m == best:
        hits = np.flatnonzero(d == m)
        cand = min(zip(i_idx[hits].tolist(), j_idx[hits].tolist()))
        cand = (min(cand), max(cand))
        if best_pair is None or cand < best_pair:
            best_pair = cand
    return best, best_pair


def min_separation_points(pts: np.ndarray, metric: str = "pseudohyperbolic",
                          delta: float = 0.0) -> SeparationReport:
    """Exact minimum pairwise distance of an array of complex points.

    The pseudohyperbolic metric is pruned with the radial lower bound
    rho(z, w) >= rho(|z|, |w|); the Dirichlet metric is scanned in full.
    Ties resolve to the lexicographically smallest index pair.
    """
    pts = np.asarray(pts, dtype=complex)
    P = pts.size
    if P < 2:
        return SeparationReport(metric, 1.0, None, float(delta), True)
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    best, best_pair = math.inf, None
    if metric == "pseudohyperbolic" and P > 64:
        radii = np.abs(pts)
        order = np.argsort(radii, kind="stable")
        rs = radii[order]
        # cheap upper bound from neighbours in radius and in angle
        ang = np.angle(pts)
        aord = np.argsort(ang, kind="stable")
        seed_i = np.concatenate([order[:-1], aord])
        seed_j = np.concatenate([order[1:], np.roll(aord, -1)])
        best, best_pair = _block_min(metric, pts, seed_i, seed_j, best, best_pair)
        d = min(best * (1 + 1e-9), 1.0)
        r_hi = (rs + d) / (1.0 + d * rs)
        j_end = np.searchsorted(rs, r_hi, side="right")
        counts = j_end - np.arange(P) - 1
        counts = np.maximum(counts, 0)
        ii = np.repeat(np.arange(P), counts)
        offs = np.arange(ii.size) - np.repeat(np.cumsum(counts) - counts, counts)
        jj = ii + 1 + offs
        step = 1 << 22
        for s in range(0, ii.size, step):
            best, best_pair = _block_min(metric, pts, order[ii[s:s + step]],
                                         order[jj[s:s + step]], best, best_pair)
    else:
        best, best_pair = _full_scan(metric, pts)
    return SeparationReport(metric, float(best), best_pair, float(delta),
                            bool(best >= delta))


def _full_scan(metric, pts):
    best, best_pair = math.inf, None
    P = pts.size
    rows = max(1, (1 << 21) // P)
    for a in range(0, P, rows):
        i_idx, j_idx = [], []
        for i in range(a, min(a + rows, P)):
            j = np.arange(i + 1, P)
            i_idx.append(np.full(j.size, i))
            j_idx.append(j)
        best, best_pair = _block_min(metric, pts, np.concatenate(i_idx),
                                     np.concatenate(j_idx), best, best_pair)
    return best, best_pair


def min_separation(config: "Configuration", metric: str = "pseudohyperbolic",
                   delta: float = 0.05) -> SeparationReport:
    return min_separation_points(config.complex_points(), metric, delta)


def dirichlet_neighborhood_contains(center: DiskPoint, eta: float, a: float,
                                    z: DiskPoint) -> bool:
    """Membership in the tangential neighbourhood T of `center`:
    (1-|c|)^eta <= 1-r <= (1-|c|)^(1/eta) and |theta - t| <= (1-r)^a."""
    if eta <= 1:
        raise ValueError("eta must exceed 1")
    if not (0 < a < 1):
        raise ValueError("a must lie in (0, 1)")
    h = 1.0 - center.radius
    t = 1.0 - z.radius
    if not (h ** eta <= t <= h ** (1.0 / eta)):
        return False
    return circle_distance(center.angle, z.angle) <= t ** a
