"""Radii profiles, the convergence criteria on annulus counts N_n, and the
0-1 classification of Steinhaus sequences.

A law profile materializes N_n = ceil(c * 2^(a n) / n^g).  Its symbolic
verdicts are taken on the materialized sequence: for c > 0 the ceiling keeps
N_n >= 1, so a law whose real values tend to 0 behaves like N_n = 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .disk_geometry import check_alpha

LAW_FORMS = ("power", "polylog", "constant")
CRITERIA = ("hardy_beta", "cochran", "zero_alpha", "zero_dirichlet",
            "dsep_gamma", "dalpha_carleson")
STATUSES = ("as_yes", "as_no", "undecided")


class ProfileError(ValueError):
    """Malformed or out-of-range profile description."""


@dataclass(frozen=True)
class RadiiProfile:
    kind: str
    form: str | None = None
    c: float = 1.0
    a: float = 0.0
    g: float = 0.0
    table: tuple[int, ...] | None = None
    max_n: int = 16

    def __post_init__(self):
        if self.kind == "law":
            if self.form not in LAW_FORMS:
                raise ProfileError(f"law.form must be one of {LAW_FORMS}, got {self.form!r}")
            if not (self.c > 0 and math.isfinite(self.c)):
                raise ProfileError(f"law.c must be a positive finite number, got {self.c}")
            if not (math.isfinite(self.a) and math.isfinite(self.g)):
                raise ProfileError("law.a and law.g must be finite")
            if self.form == "constant" and (self.a != 0 or self.g != 0):
                raise ProfileError("constant law takes no exponents")
            if self.form == "power" and self.g != 0:
                raise ProfileError("power law takes no polylog exponent g")
        elif self.kind == "table":
            if self.table is None:
                raise ProfileError("table profile needs a 'table' list")
            tab = tuple(int(v) for v in self.table)
            if any(v != t for v, t in zip(tab, self.table)):
                raise ProfileError("table entries must be integers")
            if any(v < 0 for v in tab):
                raise ProfileError("table entries must be >= 0")
            object.__setattr__(self, "table", tab)
        else:
            raise ProfileError(f"kind must be 'law' or 'table', got {self.kind!r}")
        if int(self.max_n) != self.max_n or self.max_n < 0:
            raise ProfileError(f"max_n must be a nonnegative integer, got {self.max_n}")

    # -- constructors ---------------------------------------------------
    @classmethod
    def power(cls, c: float, a: float, max_n: int = 16) -> "RadiiProfile":
        return cls("law", "power", c=c, a=a, max_n=max_n)

    @classmethod
    def polylog(cls, c: float, a: float, g: float, max_n: int = 16) -> "RadiiProfile":
        return cls("law", "polylog", c=c, a=a, g=g, max_n=max_n)

    @classmethod
    def constant(cls, c: float, max_n: int = 16) -> "RadiiProfile":
        return cls("law", "constant", c=c, max_n=max_n)

    @classmethod
    def from_table(cls, table: Sequence[int], max_n: int | None = None) -> "RadiiProfile":
        table = tuple(table)
        return cls("table", table=table, max_n=len(table) - 1 if max_n is None else max_n)

    # -- materialization ------------------------------------------------
    def count(self, n: int) -> int:
        if n < 0:
            return 0
        if self.kind == "table":
            return self.table[n] if n < len(self.table) else 0
        if self.form == "constant":
            return math.ceil(self.c)
        if self.form == "power":
            return math.ceil(self.c * 2.0 ** (self.a * n))
        if n == 0:
            return 0
        return math.ceil(self.c * 2.0 ** (self.a * n) / n ** self.g)

    @property
    def descriptor(self) -> str:
        if self.kind == "table":
            return "table[" + ",".join(map(str, self.table)) + "]"
        if self.form == "constant":
            return f"constant({self.c:g})"
        if self.form == "power":
            return f"power({self.c:g},{self.a:g})"
        return f"polylog({self.c:g},{self.a:g},{self.g:g})"

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind, "max_n": self.max_n}
        if self.kind == "law":
            law = {"form": self.form, "c": self.c}
            if self.form in ("power", "polylog"):
                law["a"] = self.a
            if self.form == "polylog":
                law["g"] = self.g
            d["law"] = law
        else:
            d["table"] = list(self.table)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RadiiProfile":
        if not isinstance(d, dict):
            raise ProfileError("profile must be a JSON object")
        unknown = set(d) - {"kind", "law", "table", "max_n"}
        if unknown:
            raise ProfileError(f"unknown profile field(s): {sorted(unknown)}")
        kind = d.get("kind")
        max_n = d.get("max_n", 16)
        if not isinstance(max_n, int) or isinstance(max_n, bool):
            raise ProfileError("field 'max_n' must be an integer")
        if kind == "law":
            law = d.get("law")
            if not isinstance(law, dict):
                raise ProfileError("field 'law' must be an object for kind 'law'")
            unknown = set(law) - {"form", "c", "a", "g"}
            if unknown:
                raise ProfileError(f"unknown law field(s): {sorted(unknown)}")
            for key in ("c", "a", "g"):
                if key in law and (not isinstance(law[key], (int, float)) or isinstance(law[key], bool)):
                    raise ProfileError(f"field 'law.{key}' must be a number")
            return cls("law", law.get("form"), c=float(law.get("c", 1.0)),
                       a=float(law.get("a", 0.0)), g=float(law.get("g", 0.0)), max_n=max_n)
        if kind == "table":
            tab = d.get("table")
            if not isinstance(tab, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in tab):
                raise ProfileError("field 'table' must be a list of integers")
            return cls("table", table=tuple(tab), max_n=max_n)
        raise ProfileError(f"field 'kind' must be 'law' or 'table', got {kind!r}")


def load_profile(path: str | Path) -> RadiiProfile:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ProfileError(f"profile is not valid JSON: {exc}") from exc
    return RadiiProfile.from_dict(data)


def annulus_counts(profile: RadiiProfile, max_n: int | None = None,
                   with_flag: bool = False):
    """N_0..N_max_n.  With `with_flag`, also report whether a table had to
    be zero-padded."""
    max_n = profile.max_n if max_n is None else max_n
    if max_n < 0:
        raise ProfileError("max_n must be >= 0")
    counts = [profile.count(n) for n in range(max_n + 1)]
    padded = profile.kind == "table" and len(profile.table) < max_n + 1
    return (counts, padded) if with_flag else counts


def counterexample_profile(g: float, max_n: int = 16) -> RadiiProfile:
    """N_n = ceil(2^n / n^g) for n >= 1, N_0 = 0: sum 2^-n N_n converges
    while windows overflow infinitely often."""
    if not g > 1:
        raise ProfileError(f"exponent g must exceed 1, got {g}")
    return RadiiProfile.polylog(1.0, 1.0, g, max_n=max_n)


# ---------------------------------------------------------------------------
# criteria

@dataclass(frozen=True)
class CriterionVerdict:
    kind: str
    param: float | None
    partial_sums: tuple[float, ...]
    verdict: str
    decision_basis: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "param": self.param,
                "partial_sums": list(self.partial_sums),
                "verdict": self.verdict, "decision_basis": self.decision_basis}


def _check_param(kind: str, param: float | None) -> float | None:
    if kind not in CRITERIA:
        raise ProfileError(f"unknown criterion {kind!r}; expected one of {CRITERIA}")
    if kind == "hardy_beta":
        if param is None or not param >= 1:
            raise ProfileError(f"hardy_beta needs beta >= 1, got {param}")
    elif kind in ("zero_alpha",):
        if param is None or not (0 <= param < 1):
            raise ProfileError(f"zero_alpha needs alpha in [0, 1), got {param}")
    elif kind == "dalpha_carleson":
        if param is None or not (0 < param < 1):
            raise ProfileError(f"dalpha_carleson needs alpha in (0, 1), got {param}")
    elif kind == "dsep_gamma":
        if param is None or not (0.5 < param < 1):
            raise ProfileError(f"dsep_gamma needs gamma in (1/2, 1), got {param}")
    else:
        param = None
    return param


def _series_shape(kind: str, param: float | None):
    """Term = 2^(-b n) * n^(-h) * N_n^p, returned as (p, b, h, n_start)."""
    if kind == "hardy_beta":
        return param, 1.0, 0.0, 1
    if kind == "cochran":
        return 2.0, 1.0, 0.0, 0
    if kind in ("zero_alpha", "dalpha_carleson"):
        return 1.0, 1.0 - param, 0.0, 0
    if kind == "zero_dirichlet":
        return 1.0, 0.0, 1.0, 1
    return 2.0, param, 0.0, 0  # dsep_gamma


def _terms(profile: RadiiProfile, kind: str, param, max_n: int) -> list[float]:
    p, b, h, start = _series_shape(kind, param)
    out = []
    for n in range(max_n + 1):
        if n < start:
            out.append(0.0)
            continue
        N = profile.count(n)
        if N == 0:
            out.append(0.0)
            continue
        try:
            t = float(N) ** p * 2.0 ** (-b * n) * (float(n) ** -h if h else 1.0)
        except OverflowError:
            t = math.exp(p * math.log(N) - b * n * math.log(2) - (h * math.log(n) if h else 0.0))
        out.append(t)
    return out


def effective_growth(profile: RadiiProfile) -> tuple[float, float]:
    """(a', g') with N_n comparable to 2^(a' n) n^(-g') for large n."""
    if profile.form == "constant":
        return 0.0, 0.0
    a, g = profile.a, (profile.g if profile.form == "polylog" else 0.0)
    if a > 0 or (a == 0 and g < 0):
        return a, g
    return 0.0, 0.0


def _symbolic(profile: RadiiProfile, kind: str, param) -> str:
    p, b, h, _ = _series_shape(kind, param)
    a, g = effective_growth(profile)
    e = p * a - b
    if abs(e) > 1e-12:
        return "converges" if e < 0 else "diverges"
    return "converges" if p * g + h > 1 else "diverges"


def _heuristic(terms: list[float]) -> str:
    tail = terms[-10:]
    if all(t == 0 for t in tail):
        return "converges"
    nz = [t for t in tail if t > 0]
    if len(nz) < 2:
        return "undecided"
    ratio = (nz[-1] / nz[0]) ** (1.0 / (len(nz) - 1))
    if ratio < 0.95:
        return "converges"
    if ratio >= 1.0:
        return "diverges"
    return "undecided"


def criterion_sum(profile: RadiiProfile, kind: str, param: float | None = None,
                  max_n: int | None = None) -> CriterionVerdict:
    """Partial sums of one of the convergence criteria plus a verdict."""
    param = _check_param(kind, param)
    max_n = profile.max_n if max_n is None else max_n
    terms = _terms(profile, kind, param, max_n)
    partial, acc = [], []
    for t in terms:
        acc.append(t)
        partial.append(math.fsum(acc))
    if profile.kind == "law":
        verdict, basis = _symbolic(profile, kind, param), "symbolic"
    else:
        verdict, basis = _heuristic(terms), "heuristic"
    return CriterionVerdict(kind, param, tuple(partial), verdict, basis)


# ---------------------------------------------------------------------------
# classification

@dataclass(frozen=True)
class ClassificationReport:
    alpha: float
    interpolating: str
    separated: str
    zero_set: str
    carleson: str
    basis: dict[str, str]
    criteria_used: tuple[CriterionVerdict, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "interpolating": self.interpolating,
                "separated": self.separated, "zero_set": self.zero_set,
                "carleson": self.carleson, "basis": dict(self.basis),
                "criteria_used": [c.to_dict() for c in self.criteria_used]}


def _yes_no(v: CriterionVerdict) -> str:
    return {"converges": "as_yes", "diverges": "as_no"}.get(v.verdict, "undecided")


def _sufficient(v: CriterionVerdict) -> str:
    return "as_yes" if v.verdict == "converges" else "undecided"


def _dirichlet_separation(profile: RadiiProfile, max_n: int):
    """Separation in D: a.s. yes iff some gamma in (1/2, 1) gives a
    convergent sum 2^(-gamma n) N_n^2."""
    if profile.kind == "law":
        a, _ = effective_growth(profile)
        gamma = max(0.75, (1 + 2 * a) / 2) if 2 * a < 1 else 0.999
        v = criterion_sum(profile, "dsep_gamma", gamma, max_n)
        if 2 * a < 1:
            return "as_yes", v
        return "as_no", v
    # tables: probe a gamma close to 1
    v = criterion_sum(profile, "dsep_gamma", 0.99, max_n)
    return _yes_no(v), v


def classify(profile: RadiiProfile, alpha: float,
             max_n: int | None = None) -> ClassificationReport:
    alpha = check_alpha(alpha)
    max_n = profile.max_n if max_n is None else max_n
    used: list[CriterionVerdict] = []
    basis: dict[str, str] = {}

    if alpha < 1:
        coch = criterion_sum(profile, "cochran", None, max_n)
        zero = criterion_sum(profile, "zero_alpha", alpha, max_n)
        used += [coch, zero]
        separated, basis["separated"] = _yes_no(coch), "Cochran"
        zero_set, basis["zero_set"] = _yes_no(zero), "alphazero"
        if alpha == 0:
            hardy = criterion_sum(profile, "hardy_beta", _best_beta(profile), max_n)
            used.append(hardy)
            carleson = _sufficient(hardy)
            basis["carleson"] = "Hardy1"
            if carleson == "undecided" and separated == "as_yes":
                carleson, basis["carleson"] = "as_yes", "Cochran"
            interpolating, basis["interpolating"] = separated, "Cochran"
        else:
            dc = criterion_sum(profile, "dalpha_carleson", alpha, max_n)
            used.append(dc)
            carleson, basis["carleson"] = _sufficient(dc), "CarlAlpha1"
            if alpha < 0.5:
                interpolating, basis["interpolating"] = separated, "CoroThm5(i)"
            else:
                interpolating, basis["interpolating"] = zero_set, "CoroThm5(ii)"
    else:
        separated, dsep = _dirichlet_separation(profile, max_n)
        zd = criterion_sum(profile, "zero_dirichlet", None, max_n)
        used += [dsep, zd]
        basis["separated"] = "Dsepare"
        zero_set, basis["zero_set"] = _yes_no(zd), "sintD"
        carleson, basis["carleson"] = _sufficient(zd), "sintD"
        interpolating, basis["interpolating"] = zero_set, "sintD"
    return ClassificationReport(alpha, interpolating, separated, zero_set,
                                carleson, basis, tuple(used))


def _best_beta(profile: RadiiProfile) -> float:
    """A beta > 1 for which the Hardy criterion converges, when one exists."""
    if profile.kind == "law":
        a, _ = effective_growth(profile)
        if 0 < a < 1:
            return (1 + 1 / a) / 2
    return 1.5


def criterion_terms(profile: RadiiProfile, kind: str, param=None, max_n=None) -> np.ndarray:
    """Individual series terms (for diagnostics and plotting)."""
    param = _check_param(kind, param)
    return np.array(_terms(profile, kind, param, profile.max_n if max_n is None else max_n))
