"""Steinhaus configurations: fixed radii from a profile, independent uniform
angles from the counter-based generator."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import rng
from .disk_geometry import TWO_PI, annulus_index, annulus_midpoint
from .profiles import RadiiProfile, annulus_counts

DEFAULT_POINT_CAP = 10**8


class ResourceError(RuntimeError):
    """A requested experiment exceeds the configured resource caps."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def to_turns(angle):
    """angle / 2pi as a fraction of a turn, kept strictly below 1."""
    t = np.asarray(angle, dtype=float) / TWO_PI
    return np.minimum(t, np.nextafter(1.0, 0.0))


@dataclass(frozen=True, eq=False)
class Configuration:
    """One sampled realization.  Points are sorted by (annulus, angle);
    `index` holds each point's generator counter."""

    index: np.ndarray
    annulus: np.ndarray
    radius: np.ndarray
    angle: np.ndarray
    profile_id: str
    seed: int
    trial_index: int
    max_n: int

    def __post_init__(self):
        for name in ("index", "annulus", "radius", "angle"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def __len__(self) -> int:
        return int(self.radius.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.to_json() == other.to_json()

    @cached_property
    def turns(self) -> np.ndarray:
        return _frozen(to_turns(self.angle))

    def complex_points(self) -> np.ndarray:
        return self.radius * np.exp(1j * self.angle)

    # -- serialization --------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        buf.write("index,annulus,radius,angle\n")
        for i, n, r, a in zip(self.index.tolist(), self.annulus.tolist(),
                              self.radius.tolist(), self.angle.tolist()):
            buf.write(f"{i},{n},{r!r},{a!r}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "schema": "v1",
            "type": "configuration",
            "profile_id": self.profile_id,
            "seed": self.seed,
            "trial_index": self.trial_index,
            "max_n": self.max_n,
            "points": [
                {"index": i, "annulus": n, "radius": r, "angle": a}
                for i, n, r, a in zip(self.index.tolist(), self.annulus.tolist(),
                                      self.radius.tolist(), self.angle.tolist())
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Configuration":
        pts = d["points"]
        return cls(
            index=np.array([p["index"] for p in pts], dtype=np.int64),
            annulus=np.array([p["annulus"] for p in pts], dtype=np.int64),
            radius=np.array([p["radius"] for p in pts], dtype=float),
            angle=np.array([p["angle"] for p in pts], dtype=float),
            profile_id=d["profile_id"], seed=int(d["seed"]),
            trial_index=int(d["trial_index"]), max_n=int(d["max_n"]),
        )

    @classmethod
    def from_points(cls, radius, angle, max_n: int | None = None,
                    profile_id: str = "explicit") -> "Configuration":
        """Build a configuration from explicit polar coordinates."""
        radius = np.asarray(radius, dtype=float).ravel()
        angle = np.mod(np.asarray(angle, dtype=float).ravel(), TWO_PI)
        ann = annulus_index(radius) if radius.size else np.zeros(0, np.int64)
        ann = np.atleast_1d(ann)
        order = np.lexsort((angle, ann))
        if max_n is None:
            max_n = int(ann.max()) if ann.size else 0
        return cls(np.arange(radius.size)[order], ann[order], radius[order],
                   angle[order], profile_id, 0, 0, max_n)


def layout(profile: RadiiProfile, max_n: int | None = None,
           cap: int = DEFAULT_POINT_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Annulus index and radius of every generator counter, in counter order."""
    max_n = profile.max_n if max_n is None else max_n
    counts = annulus_counts(profile, max_n)
    total = sum(counts)
    if total > cap:
        raise ResourceError(f"profile needs {total} points up to n={max_n}, cap is {cap}")
    ann = np.repeat(np.arange(max_n + 1, dtype=np.int64), counts)
    return ann, annulus_midpoint(ann)


def sample_steinhaus(profile: RadiiProfile, max_n: int | None = None, seed: int = 0,
                     trial_index: int = 0, cap: int = DEFAULT_POINT_CAP) -> Configuration:
    """Sample one configuration: N_n points at radius 1 - 3 * 2^-(n+2), the
    i-th point's angle 2pi * U(seed, trial_index, i)."""
    max_n = profile.max_n if max_n is None else max_n
    if max_n < 0:
        raise ValueError("max_n must be >= 0")
    ann, rad = layout(profile, max_n, cap)
    u = rng.uniform(seed, trial_index, np.arange(ann.size))
    angle = TWO_PI * u
    order = np.lexsort((angle, ann))
    return Configuration(order.astype(np.int64), ann[order], rad[order], angle[order],
                         profile.descriptor, int(seed), int(trial_index), int(max_n))


def empirical_annulus_counts(config: Configuration) -> list[int]:
    if len(config) == 0:
        return [0] * (config.max_n + 1)
    ann = annulus_index(config.radius)
    size = max(config.max_n, int(np.max(ann))) + 1
    return np.bincount(np.atleast_1d(ann), minlength=size).tolist()
